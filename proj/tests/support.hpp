#pragma once

#include "doctest.h"
#include "isofem/core.hpp"

#include <random>

// Checks that `expr` throws isofem::Error carrying `expected_code`.
#define CHECK_THROWS_CODE(expr, expected_code)                            \
  do {                                                                    \
    bool thrown_ = false;                                                 \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const isofem::Error& e_) {                                   \
      thrown_ = true;                                                     \
      CHECK_MESSAGE(e_.code() == (expected_code), e_.what());             \
    }                                                                     \
    CHECK_MESSAGE(thrown_, "expected isofem::Error from " #expr);         \
  } while (0)

namespace test {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240607);
  return engine;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

/// Uniform point of the reference triangle.
inline isofem::Point reference_point() {
  double a = uniform(0, 1), b = uniform(0, 1);
  if (a + b > 1) {
    a = 1 - a;
    b = 1 - b;
  }
  return {a, b};
}

}  // namespace test
