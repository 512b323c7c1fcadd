#pragma once

// Convenience include for the whole library.

#include "gaitvel/csv.hpp"
#include "gaitvel/dates.hpp"
#include "gaitvel/error.hpp"
#include "gaitvel/evaluation.hpp"
#include "gaitvel/events.hpp"
#include "gaitvel/features.hpp"
#include "gaitvel/groundtruth.hpp"
#include "gaitvel/manifest.hpp"
#include "gaitvel/model_io.hpp"
#include "gaitvel/report.hpp"
#include "gaitvel/simulator.hpp"
#include "gaitvel/stats.hpp"
#include "gaitvel/svr.hpp"
#include "gaitvel/transitions.hpp"
