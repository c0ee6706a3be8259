#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsr {

// Raised for malformed scenario/config documents. Carries the 1-based line
// number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Raised when a well-formed document violates a semantic invariant
// (dangling bus reference, negative impedance, ...).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_f64(std::string_view s) {
  double v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_i64(std::string_view s) {
  long long v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Shortest round-trip-exact decimal form of a double. Used everywhere a
// float is persisted so that re-runs are byte-identical.
inline std::string fmt_f64(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// True when every id character is a decimal digit; such ids order
// numerically, everything else lexicographically after them.
inline bool is_numeric_id(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline bool id_less(std::string_view a, std::string_view b) {
  const bool na = is_numeric_id(a), nb = is_numeric_id(b);
  if (na != nb) return na;
  if (na && nb) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;  // equal width, lexicographic == numeric
  }
  return a < b;
}

}  // namespace dsr
