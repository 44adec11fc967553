#pragma once

#include <charconv>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "ctxrec/error.hpp"
#include "ctxrec/io.hpp"

namespace ctxrec::detail {

/// File position for parse errors.
struct LineError {
    std::filesystem::path file;
    std::size_t line = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(fmt::format("{}:{}: {}", file.filename().string(), line, what));
    }
};

inline std::optional<long long> parse_integer(std::string_view s) {
    s = io::trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<double> parse_real(std::string_view s) {
    s = io::trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace ctxrec::detail
