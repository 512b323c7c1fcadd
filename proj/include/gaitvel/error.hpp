#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace gaitvel {

// All recoverable failures surface as this type; the CLI maps it to exit 1.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

namespace detail {
inline void format_parts(std::ostringstream&) {}

template <typename T, typename... Rest>
void format_parts(std::ostringstream& os, const T& head, const Rest&... rest) {
    os << head;
    format_parts(os, rest...);
}
} // namespace detail

template <typename... Parts>
[[noreturn]] void raise(const Parts&... parts) {
    std::ostringstream os;
    detail::format_parts(os, parts...);
    throw Error(os.str());
}

template <typename... Parts>
void require(bool cond, const Parts&... parts) {
    if (!cond) raise(parts...);
}

} // namespace gaitvel
