#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "pp/error.hpp"

namespace pp {

using u128 = unsigned __int128;

inline constexpr u128 kU128Max = ~u128{0};

inline std::string to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {s.rbegin(), s.rend()};
}

inline u128 parse_u128(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("parse_u128: empty string");
  u128 v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw std::invalid_argument("parse_u128: not a decimal integer: " + s);
    if (__builtin_mul_overflow(v, u128{10}, &v) || __builtin_add_overflow(v, u128(c - '0'), &v))
      throw std::out_of_range("parse_u128: value exceeds 128 bits: " + s);
  }
  return v;
}

inline u128 checked_add(u128 a, u128 b, const char* what = "addition") {
  u128 r;
  if (__builtin_add_overflow(a, b, &r)) throw coefficient_overflow(std::string(what) + " exceeds 128 bits");
  return r;
}

inline u128 checked_mul(u128 a, u128 b, const char* what = "multiplication") {
  u128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw coefficient_overflow(std::string(what) + " exceeds 128 bits");
  return r;
}

inline double to_double(u128 v) { return static_cast<double>(v); }

}  // namespace pp
