#pragma once

#include <cmath>

#include "mfcert/errors.hpp"

namespace mfcert::sim {

/// Uniform sampling grid over [0, t_end], endpoints included.
struct TimeGrid {
  double t_end;
  int points;

  TimeGrid(double t_end_, int points_) : t_end(t_end_), points(points_) {
    if (!(t_end > 0.0) || !std::isfinite(t_end))
      throw ConfigError("grid t_end must be positive and finite");
    if (points < 2) throw ConfigError("grid needs at least 2 points");
  }

  double dt() const { return t_end / (points - 1); }

  double time(int i) const {
    return t_end * (static_cast<double>(i) / (points - 1));
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t_end == b.t_end && a.points == b.points;
  }
};

}  // namespace mfcert::sim
