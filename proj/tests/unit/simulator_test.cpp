#include <catch2/catch_amalgamated.hpp>

#include "gaitvel/groundtruth.hpp"
#include "gaitvel/simulator.hpp"
#include "gaitvel/stats.hpp"
#include "gaitvel/transitions.hpp"

#include "naive.hpp"
#include "runner.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

using namespace gaitvel;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

// Two rooms 4 m apart with every stochastic knob switched off: at 100 cm/s a
// move takes exactly 4 s and a line traversal hits each element on the beat.
HouseholdConfig quiet_house(std::uint64_t seed) {
    HouseholdConfig cfg;
    cfg.participant = "nf01";
    cfg.rooms = {"hall", "study"};
    cfg.adjacency_m[{"hall", "study"}] = 4.0;
    cfg.adjacency_m[{"study", "hall"}] = 4.0;
    cfg.line_room = "study";
    cfg.p_contaminate = 0.0;
    cfg.travel_sigma = 0.0;
    cfg.line_stall_prob = 0.0;
    cfg.line_jitter_sd_s = 0.0;
    cfg.velocity_profile = {{0.0, 100.0}};
    cfg.moves_per_day = 40;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("household validation names the offending field", "[simulator]") {
    auto broken = [](auto mutate) {
        HouseholdConfig cfg = default_household();
        mutate(cfg);
        return cfg;
    };

    REQUIRE_NOTHROW(validate_household(default_household()));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.participant.clear(); })),
        ContainsSubstring("participant"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.refractory_s = -1; })),
        ContainsSubstring("refractory_s"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.rooms = {"solo"}; })),
        ContainsSubstring("rooms"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.rooms.push_back("living"); })),
        ContainsSubstring("duplicates"));
    REQUIRE_THROWS_WITH(validate_household(broken(
                            [](HouseholdConfig& c) { c.adjacency_m[{"living", "garage"}] = 2; })),
                        ContainsSubstring("unknown room 'garage'"));
    REQUIRE_THROWS_WITH(validate_household(broken(
                            [](HouseholdConfig& c) { c.adjacency_m[{"living", "living"}] = 2; })),
                        ContainsSubstring("pairs a room with itself"));
    REQUIRE_THROWS_WITH(validate_household(broken(
                            [](HouseholdConfig& c) { c.adjacency_m[{"living", "kitchen"}] = 0; })),
                        ContainsSubstring("distance"));
    REQUIRE_THROWS_WITH(validate_household(broken([](HouseholdConfig& c) {
                            c.rooms.push_back("attic"); // never a source of any edge
                        })),
                        ContainsSubstring("no adjacency entries"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.p_contaminate = 1.5; })),
        ContainsSubstring("p_contaminate"));
    REQUIRE_THROWS_WITH(validate_household(broken([](HouseholdConfig& c) {
                            c.default_remainder.sigma_log = -0.1;
                        })),
                        ContainsSubstring("sigma_log"));
    REQUIRE_THROWS_WITH(validate_household(broken([](HouseholdConfig& c) {
                            c.room_remainder["garage"] = c.default_remainder;
                        })),
                        ContainsSubstring("dwell override"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.line_room = "garage"; })),
        ContainsSubstring("line room"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.line_positions_m = {0.0}; })),
        ContainsSubstring(">= 2 elements"));
    REQUIRE_THROWS_WITH(validate_household(broken(
                            [](HouseholdConfig& c) { c.line_positions_m = {0.0, 2.0, 2.0}; })),
                        ContainsSubstring("strictly increasing"));
    REQUIRE_THROWS_WITH(validate_household(broken(
                            [](HouseholdConfig& c) { c.line_positions_m = {-1.0, 2.0}; })),
                        ContainsSubstring(">= 0"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.line_stall_prob = 2; })),
        ContainsSubstring("stall_prob"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.line_jitter_sd_s = -1; })),
        ContainsSubstring("jitter_sd_s"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.velocity_profile.clear(); })),
        ContainsSubstring("velocity profile"));
    REQUIRE_THROWS_WITH(validate_household(broken(
                            [](HouseholdConfig& c) { c.velocity_profile = {{0.0, 0.0}}; })),
                        ContainsSubstring("velocity"));
    REQUIRE_THROWS_WITH(validate_household(broken(
                            [](HouseholdConfig& c) { c.velocity_profile = {{0.0, 500.0}}; })),
                        ContainsSubstring("(0, 500)"));
    REQUIRE_THROWS_WITH(validate_household(broken([](HouseholdConfig& c) {
                            c.velocity_profile = {{5.0, 90.0}, {5.0, 80.0}};
                        })),
                        ContainsSubstring("strictly increasing"));
    REQUIRE_THROWS_WITH(validate_household(broken([](HouseholdConfig& c) {
                            c.active_start_hour = 20;
                            c.active_end_hour = 8;
                        })),
                        ContainsSubstring("active hours"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.moves_per_day = -1; })),
        ContainsSubstring("moves_per_day"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.travel_sigma = -0.5; })),
        ContainsSubstring("travel_sigma"));
    REQUIRE_THROWS_WITH(
        validate_household(broken([](HouseholdConfig& c) { c.clinic_noise_sd = -2; })),
        ContainsSubstring("clinic_noise_sd"));
}

TEST_CASE("velocity profile interpolates between control points", "[simulator]") {
    HouseholdConfig cfg = default_household();
    cfg.velocity_profile = {{0.0, 100.0}, {10.0, 80.0}, {30.0, 60.0}};

    CHECK(velocity_at(cfg, -5.0) == 100.0);
    CHECK(velocity_at(cfg, 0.0) == 100.0);
    CHECK(velocity_at(cfg, 5.0) == Approx(90.0));
    CHECK(velocity_at(cfg, 10.0) == Approx(80.0));
    CHECK(velocity_at(cfg, 20.0) == Approx(70.0));
    CHECK(velocity_at(cfg, 30.0) == 60.0);
    CHECK(velocity_at(cfg, 1000.0) == 60.0);

    const HouseholdConfig dflt = default_household(730);
    CHECK(velocity_at(dflt, 0.0) == 100.0);
    CHECK(velocity_at(dflt, 729.0) == 60.0);
    CHECK(velocity_at(dflt, 364.5) == Approx(80.0));
}

TEST_CASE("noise-free household walks at exactly the configured speed", "[simulator]") {
    const HouseholdConfig cfg = quiet_house(7);
    const SimResult result = simulate(cfg, 20);

    REQUIRE(result.truth.records.size() > 100);
    std::size_t clean = 0;
    for (const RecordTruth& r : result.truth.records) {
        if (r.contaminated) continue;
        ++clean;
        REQUIRE(r.seconds == 4.0); // 4 m at 1 m/s, no noise
    }
    CHECK(static_cast<double>(clean) / result.truth.records.size() > 0.9);

    for (const DailyTruth& d : result.truth.daily) REQUIRE(d.velocity_cmps == 100.0);

    // Every line traversal replays the configured element spacing exactly.
    const auto walks = assemble_line_walks(result.events, line_geometry(cfg));
    REQUIRE(walks.size() > 20);
    for (const LineWalk& walk : walks) {
        const VelocityEstimate est = estimate_line_velocity(walk);
        REQUIRE(est.velocity_cmps == Approx(100.0).margin(1e-6));
    }
}

TEST_CASE("sensor refractory holds per sensor", "[simulator]") {
    HouseholdConfig cfg = default_household();
    cfg.seed = 3;
    const SimResult result = simulate(cfg, 90);

    REQUIRE(result.events.size() > 1000);
    std::int64_t prev_ms = std::numeric_limits<std::int64_t>::min();
    std::map<std::string, std::int64_t> last_by_sensor;
    const std::int64_t refractory_ms = std::llround(cfg.refractory_s * 1000.0);
    for (const SensorEvent& ev : result.events) {
        REQUIRE(ev.time.ms >= prev_ms); // stream is chronological
        prev_ms = ev.time.ms;
        const auto it = last_by_sensor.find(ev.sensor_id);
        if (it != last_by_sensor.end()) REQUIRE(ev.time.ms - it->second >= refractory_ms);
        last_by_sensor[ev.sensor_id] = ev.time.ms;
    }
}

TEST_CASE("simulation is deterministic and diverges across seeds", "[simulator]") {
    HouseholdConfig cfg = default_household();
    cfg.seed = 11;
    const SimResult a = simulate(cfg, 30);
    const SimResult b = simulate(cfg, 30);

    CHECK(serialize_events(a.events) == serialize_events(b.events));
    CHECK(serialize_truth_records(a.truth.records) == serialize_truth_records(b.truth.records));
    CHECK(serialize_truth_daily(a.truth.daily) == serialize_truth_daily(b.truth.daily));

    cfg.seed = 12;
    const SimResult c = simulate(cfg, 30);
    CHECK(serialize_events(a.events) != serialize_events(c.events));
}

TEST_CASE("exported dataset round trips through the ingest parsers", "[simulator]") {
    HouseholdConfig cfg = default_household();
    cfg.seed = 21;
    const SimResult result = simulate(cfg, 15);

    testkit::TempDir dir;
    export_simulation(result, cfg, dir.str());

    for (const char* name :
         {"events.csv", "truth_daily.csv", "truth_records.csv", "clinic.csv", "line.csv"})
        REQUIRE(std::filesystem::exists(dir.sub(name)));

    {
        std::ifstream in(dir.sub("events.csv"));
        const auto parsed = parse_event_csv(in);
        REQUIRE(parsed.size() == result.events.size());
        CHECK(serialize_events(parsed) == serialize_events(result.events));
    }
    {
        std::ifstream in(dir.sub("truth_daily.csv"));
        const auto parsed = parse_truth_daily_csv(in);
        REQUIRE(parsed.size() == result.truth.daily.size());
        CHECK(serialize_truth_daily(parsed) == serialize_truth_daily(result.truth.daily));
    }
    {
        std::ifstream in(dir.sub("truth_records.csv"));
        const auto parsed = parse_truth_records_csv(in);
        REQUIRE(parsed.size() == result.truth.records.size());
        CHECK(serialize_truth_records(parsed) ==
              serialize_truth_records(result.truth.records));
    }
    {
        std::ifstream in(dir.sub("clinic.csv"));
        const auto parsed = parse_clinic_csv(in);
        CHECK(serialize_clinic(parsed) == serialize_clinic(result.truth.clinic));
    }
    {
        std::ifstream in(dir.sub("line.csv"));
        const LineGeometry geo = parse_line_geometry_csv(in);
        CHECK(geo.positions_m == cfg.line_positions_m);
    }
}

TEST_CASE("truth tables align with the study calendar", "[simulator]") {
    HouseholdConfig cfg = default_household(400);
    cfg.moves_per_day = 0; // calendar only
    const SimResult result = simulate(cfg, 400);

    REQUIRE(result.truth.daily.size() == 400);
    for (int d = 0; d < 400; ++d) {
        const DailyTruth& row = result.truth.daily[static_cast<std::size_t>(d)];
        CHECK(row.date == civil_from_days(days_from_civil(CivilDate{2010, 1, 1}) + d));
        CHECK(row.velocity_cmps == velocity_at(cfg, d + 0.5));
    }

    REQUIRE(result.truth.clinic.size() == 1); // one probe per completed year
    CHECK(result.truth.clinic[0].date == CivilDate{2010, 12, 31});
    CHECK(result.truth.clinic[0].velocity_cmps == Approx(velocity_at(cfg, 364.5)));

    CHECK(simulate(default_household(364), 364).truth.clinic.empty());
    CHECK(simulate(default_household(730), 730).truth.clinic.size() == 2);
}

TEST_CASE("record truth matches what transition extraction recovers", "[simulator]") {
    HouseholdConfig cfg = default_household();
    cfg.seed = 5;
    const SimResult result = simulate(cfg, 60);

    const auto extracted = extract_transitions(split_days(result.events, 0));
    REQUIRE(extracted.size() == result.truth.records.size());
    for (std::size_t i = 0; i < extracted.size(); ++i) {
        const TransitionRecord& e = extracted[i];
        const RecordTruth& t = result.truth.records[i];
        REQUIRE(e.participant == t.participant);
        REQUIRE(e.date == t.date);
        REQUIRE(e.from_room == t.from_room);
        REQUIRE(e.to_room == t.to_room);
        REQUIRE(e.seconds == t.seconds);
    }
}

TEST_CASE("dwell contamination inflates and skews measured durations", "[simulator]") {
    int chain_ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::map<double, std::vector<double>> seconds_by_p;
        std::map<double, double> flagged_by_p;
        for (double p : {0.0, 0.2, 0.5}) {
            HouseholdConfig cfg = quiet_house(seed);
            cfg.travel_sigma = 0.1; // base spread so skewness is defined
            cfg.moves_per_day = 60;
            cfg.p_contaminate = p;
            const SimResult result = simulate(cfg, 40);
            std::vector<double>& secs = seconds_by_p[p];
            std::size_t flagged = 0;
            for (const RecordTruth& r : result.truth.records) {
                secs.push_back(r.seconds);
                flagged += r.contaminated;
            }
            REQUIRE(secs.size() > 1500);
            flagged_by_p[p] = static_cast<double>(flagged) / secs.size();
        }

        const double m0 = naive::mean(seconds_by_p[0.0]);
        const double m2 = naive::mean(seconds_by_p[0.2]);
        const double m5 = naive::mean(seconds_by_p[0.5]);
        REQUIRE(m0 < m2);
        REQUIRE(m2 < m5);

        const double s0 = sample_skewness(seconds_by_p[0.0]);
        const double s2 = sample_skewness(seconds_by_p[0.2]);
        const double s5 = sample_skewness(seconds_by_p[0.5]);
        REQUIRE(s0 < s5);
        chain_ok += (s0 < s2 && s2 < s5);

        CHECK(flagged_by_p[0.0] < 0.05);
        CHECK(flagged_by_p[0.2] == Approx(0.2).margin(0.05));
        CHECK(flagged_by_p[0.5] == Approx(0.5).margin(0.05));
    }
    CHECK(chain_ok >= 7);
}

TEST_CASE("contamination remainders follow the configured distribution", "[simulator]") {
    HouseholdConfig cfg = quiet_house(19);
    cfg.p_contaminate = 1.0;
    cfg.refractory_s = 0.0; // keep every firing so each move yields a record
    cfg.moves_per_day = 60;
    const SimResult result = simulate(cfg, 120);

    // Clean travel is exactly 4 s here, so the measured excess of a
    // contaminated record is one draw from the remainder distribution.
    // Records whose brackets were scrambled by an early origin firing show
    // minutes-scale excess; the 60 s cut drops those few without touching
    // the distribution body.
    std::vector<double> remainder, log_remainder;
    for (const RecordTruth& r : result.truth.records) {
        REQUIRE(r.contaminated);
        const double excess = r.seconds - 4.0;
        if (excess <= 0 || excess >= 60.0) continue;
        remainder.push_back(excess);
        log_remainder.push_back(std::log(excess));
    }
    REQUIRE(remainder.size() > 5000);

    const double mu = cfg.default_remainder.mu_log;
    const double sigma = cfg.default_remainder.sigma_log;
    CHECK(naive::percentile(remainder, 0.5) ==
          Approx(std::exp(mu)).epsilon(0.05));
    CHECK(naive::percentile(remainder, 0.9) ==
          Approx(std::exp(mu + sigma * normal_quantile(0.9))).epsilon(0.05));
    CHECK(naive::mean(log_remainder) == Approx(mu).margin(0.05));
    CHECK(naive::sd(log_remainder) == Approx(sigma).margin(0.06));
}

TEST_CASE("household config text round trips", "[simulator]") {
    HouseholdConfig cfg = default_household(730);
    cfg.participant = "casa09";
    cfg.seed = 42;
    cfg.room_remainder["kitchen"] = {std::log(0.8), 0.9};
    cfg.clinic_noise_sd = 1.5;
    cfg.velocity_profile = {{0.0, 110.0}, {200.0, 95.0}, {729.0, 62.0}};

    const std::string text = format_household_config(cfg);
    std::istringstream in(text);
    const HouseholdConfig back = parse_household_config(in);

    CHECK(format_household_config(back) == text);
    CHECK(back.participant == cfg.participant);
    CHECK(back.seed == cfg.seed);
    CHECK(back.refractory_s == cfg.refractory_s);
    CHECK(back.rooms == cfg.rooms);
    CHECK(back.adjacency_m == cfg.adjacency_m);
    CHECK(back.p_contaminate == cfg.p_contaminate);
    CHECK(back.default_remainder.mu_log == cfg.default_remainder.mu_log);
    CHECK(back.default_remainder.sigma_log == cfg.default_remainder.sigma_log);
    REQUIRE(back.room_remainder.count("kitchen") == 1);
    CHECK(back.room_remainder.at("kitchen").mu_log == Approx(std::log(0.8)));
    CHECK(back.line_room == cfg.line_room);
    CHECK(back.line_positions_m == cfg.line_positions_m);
    CHECK(back.line_stall_prob == cfg.line_stall_prob);
    CHECK(back.line_jitter_sd_s == cfg.line_jitter_sd_s);
    REQUIRE(back.velocity_profile.size() == cfg.velocity_profile.size());
    for (std::size_t i = 0; i < cfg.velocity_profile.size(); ++i) {
        CHECK(back.velocity_profile[i].day == cfg.velocity_profile[i].day);
        CHECK(back.velocity_profile[i].cmps == cfg.velocity_profile[i].cmps);
    }
    CHECK(back.active_start_hour == cfg.active_start_hour);
    CHECK(back.active_end_hour == cfg.active_end_hour);
    CHECK(back.moves_per_day == cfg.moves_per_day);
    CHECK(back.travel_sigma == cfg.travel_sigma);
    CHECK(back.clinic_noise_sd == cfg.clinic_noise_sd);
}

TEST_CASE("sparse config files fall back to defaults", "[simulator]") {
    std::istringstream in(
        "# weekend cottage\n"
        "[household]\n"
        "participant = casa  # short id\n"
        "seed = 9\n"
        "\n"
        "[rooms]\n"
        "hall\n"
        "porch\n"
        "\n"
        "[adjacency]\n"
        "hall porch 3.25\n"
        "\n"
        "[line]\n"
        "room = hall\n");
    const HouseholdConfig cfg = parse_household_config(in);

    CHECK(cfg.participant == "casa");
    CHECK(cfg.seed == 9);
    CHECK(cfg.rooms == std::vector<std::string>{"hall", "porch"});
    CHECK(cfg.adjacency_m.at({"hall", "porch"}) == 3.25);
    CHECK(cfg.adjacency_m.at({"porch", "hall"}) == 3.25); // loader mirrors edges
    CHECK(cfg.line_room == "hall");
    CHECK(cfg.line_positions_m == std::vector<double>{0.0, 0.875, 1.75, 2.625, 3.5});
    REQUIRE(cfg.velocity_profile.size() == 2);
    CHECK(cfg.velocity_profile[0].cmps == 100.0);
    CHECK(cfg.velocity_profile[1].day == 729.0);
    CHECK(cfg.p_contaminate == 0.3);
    CHECK(cfg.refractory_s == 6.0);
}

TEST_CASE("config parser reports malformed input with line numbers", "[simulator]") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_household_config(in);
    };

    REQUIRE_THROWS_WITH(parse("[garage]\n"), ContainsSubstring("unknown section"));
    REQUIRE_THROWS_WITH(parse("participant = x\n"),
                        ContainsSubstring("content before any [section]"));
    REQUIRE_THROWS_WITH(parse("[adjacency]\nhall porch\n"),
                        ContainsSubstring("adjacency wants"));
    REQUIRE_THROWS_WITH(parse("[velocity]\n0 100 extra\n"),
                        ContainsSubstring("velocity wants"));
    REQUIRE_THROWS_WITH(parse("[household]\nparticipant\n"),
                        ContainsSubstring("expected 'key = value'"));
    REQUIRE_THROWS_WITH(parse("[household]\ncolor = blue\n"),
                        ContainsSubstring("unknown [household] key"));
    REQUIRE_THROWS_WITH(parse("[dwell]\nroom.hall.median = 2\n"),
                        ContainsSubstring("unknown [dwell] key"));
    REQUIRE_THROWS_WITH(parse("[line]\nshape = zigzag\n"),
                        ContainsSubstring("unknown [line] key"));
    REQUIRE_THROWS_WITH(parse("[schedule]\nnaps_per_day = 2\n"),
                        ContainsSubstring("unknown [schedule] key"));
    REQUIRE_THROWS_WITH(parse("[rooms]\nhall\n[household]\nrefractory_s = fast\n"),
                        ContainsSubstring("line 4"));
    // Parsed form must still survive full validation.
    REQUIRE_THROWS_WITH(parse("[household]\nparticipant = x\n[rooms]\nhall\n"
                              "[adjacency]\nhall hall 1\n"),
                        ContainsSubstring("rooms"));
}

TEST_CASE("simulate rejects a non-positive horizon", "[simulator]") {
    REQUIRE_THROWS_WITH(simulate(default_household(), 0), ContainsSubstring("n_days"));
}
