#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

namespace s2sim {

// One virtual-clock tick is 0.1 ms. The profile tables carry latencies with
// one decimal (417.1 ms and friends); tenths keep every sum exact, so the
// latency tables come out of integer arithmetic with no float drift.
struct Duration {
    std::int64_t tenths = 0;

    constexpr double ms() const { return static_cast<double>(tenths) / 10.0; }

    constexpr auto operator<=>(const Duration&) const = default;
    constexpr Duration operator+(Duration o) const { return {tenths + o.tenths}; }
    constexpr Duration operator-(Duration o) const { return {tenths - o.tenths}; }
    constexpr Duration& operator+=(Duration o) { tenths += o.tenths; return *this; }
};

constexpr Duration duration_from_tenths(std::int64_t t) { return Duration{t}; }
constexpr Duration duration_from_ms(std::int64_t m) { return Duration{m * 10}; }
inline Duration duration_from_ms(double m) { return Duration{std::llround(m * 10.0)}; }

constexpr Duration operator""_ms(unsigned long long m) {
    return Duration{static_cast<std::int64_t>(m) * 10};
}
constexpr Duration operator""_ms(long double m) {
    // constexpr-friendly round-to-nearest; inputs carry at most one decimal
    long double t = m * 10.0L;
    return Duration{static_cast<std::int64_t>(t + (t < 0 ? -0.5L : 0.5L))};
}

// Milliseconds since simulation start, in tenths. Monotone per run.
struct VirtualTime {
    std::int64_t tenths = 0;

    constexpr double ms() const { return static_cast<double>(tenths) / 10.0; }

    constexpr auto operator<=>(const VirtualTime&) const = default;
    constexpr VirtualTime operator+(Duration d) const { return {tenths + d.tenths}; }
    constexpr Duration operator-(VirtualTime o) const { return {tenths - o.tenths}; }
};

constexpr VirtualTime time_from_tenths(std::int64_t t) { return VirtualTime{t}; }
constexpr VirtualTime time_from_ms(std::int64_t m) { return VirtualTime{m * 10}; }
inline VirtualTime time_from_ms(double m) { return VirtualTime{std::llround(m * 10.0)}; }

// "2638.7" / "-3.5" / "600"-style rendering with at most one decimal.
inline std::string format_ms(std::int64_t tenths) {
    std::string sign = tenths < 0 ? "-" : "";
    std::int64_t a = tenths < 0 ? -tenths : tenths;
    std::string out = sign + std::to_string(a / 10);
    if (a % 10 != 0) out += "." + std::to_string(a % 10);
    return out;
}
inline std::string format_ms(Duration d) { return format_ms(d.tenths); }
inline std::string format_ms(VirtualTime t) { return format_ms(t.tenths); }

}  // namespace s2sim
