#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "types.hpp"

namespace epsteer {

enum class ScheduleMethod { Uniform, Stable, Optimized };

inline std::string to_string(ScheduleMethod m) {
  switch (m) {
    case ScheduleMethod::Uniform: return "uniform";
    case ScheduleMethod::Stable: return "stable";
    case ScheduleMethod::Optimized: return "optimized";
  }
  return "unknown";
}

inline ScheduleMethod parse_schedule_method(const std::string& s) {
  if (s == "uniform") return ScheduleMethod::Uniform;
  if (s == "stable") return ScheduleMethod::Stable;
  if (s == "optimized") return ScheduleMethod::Optimized;
  throw InputError("unknown schedule method '" + s + "'");
}

/// Dwell times, one per loop interval, in traversal order.
///
/// dwells[j] is spent under the Hamiltonian of point j+1 after jumping there;
/// a zero entry is an instantaneous jump.
class Schedule {
 public:
  Schedule() = default;
  Schedule(std::vector<double> dwells, ScheduleMethod method)
      : dwells_(std::move(dwells)), method_(method) {
    for (size_t j = 0; j < dwells_.size(); ++j)
      if (!std::isfinite(dwells_[j]) || dwells_[j] < 0.0)
        throw InputError("dwell " + std::to_string(j) + " must be finite and >= 0");
    total_ = std::accumulate(dwells_.begin(), dwells_.end(), 0.0);
  }

  const std::vector<double>& dwells() const { return dwells_; }
  ScheduleMethod method() const { return method_; }
  double total_time() const { return total_; }
  int size() const { return static_cast<int>(dwells_.size()); }
  double operator[](int j) const { return dwells_[j]; }

  int support() const {
    return static_cast<int>(std::count_if(dwells_.begin(), dwells_.end(), [](double d) { return d > 0.0; }));
  }

 private:
  std::vector<double> dwells_;
  ScheduleMethod method_ = ScheduleMethod::Uniform;
  double total_ = 0.0;
};

/// The dwell vector as consumed by a traversal: CW reads the intervals in
/// reverse, so each physical interval keeps its dwell in both directions.
inline std::vector<double> dwells_for(const std::vector<double>& shared, Direction direction) {
  if (direction == Direction::CCW) return shared;
  return {shared.rbegin(), shared.rend()};
}

inline Schedule for_direction(const Schedule& s, Direction direction) {
  return Schedule(dwells_for(s.dwells(), direction), s.method());
}

inline Schedule uniform_schedule(int n_intervals, double total_time) {
  if (n_intervals < 1) throw InputError("uniform schedule needs at least one interval");
  if (!(total_time > 0.0) || !std::isfinite(total_time))
    throw InputError("uniform schedule needs a positive finite total time");
  return Schedule(std::vector<double>(n_intervals, total_time / n_intervals), ScheduleMethod::Uniform);
}

}  // namespace epsteer
