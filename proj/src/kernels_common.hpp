#pragma once

#include <stdexcept>
#include <string>

#include "bisparse/matrix.hpp"

namespace bisparse::detail {

inline void require_inner_dims(std::size_t lhs, std::size_t rhs, const char* what) {
  if (lhs != rhs) {
    throw std::invalid_argument(std::string(what) + ": inner dimensions " +
                                std::to_string(lhs) + " and " + std::to_string(rhs) +
                                " differ");
  }
}

inline void require_nonnegative_threshold(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("soft_threshold: alpha must be >= 0");
}

inline double shrink(double v, double alpha) noexcept {
  if (v > alpha) return v - alpha;
  if (v < -alpha) return v + alpha;
  return 0.0;
}

}  // namespace bisparse::detail
