#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace epsteer {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default exclusion radius around exceptional points, in parameter distance.
inline constexpr double kDefaultEpRadius = 1e-6;

// Error hierarchy. Everything thrown by the library derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : Error {
  using Error::Error;
};
struct DegeneracyError : Error {
  using Error::Error;
};
struct StepError : Error {
  using Error::Error;
};
struct InvalidStateError : Error {
  using Error::Error;
};

struct ParameterPoint {
  double x = 0.0;
  double y = 0.0;

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
  friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;
};

inline double distance(const ParameterPoint& a, const ParameterPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline std::string to_string(const ParameterPoint& p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

enum class Direction { CCW, CW };
enum class Mode { A, B };

inline std::string to_string(Direction d) { return d == Direction::CCW ? "ccw" : "cw"; }
inline std::string to_string(Mode m) { return m == Mode::A ? "A" : "B"; }

inline Direction parse_direction(const std::string& s) {
  if (s == "ccw" || s == "CCW") return Direction::CCW;
  if (s == "cw" || s == "CW") return Direction::CW;
  throw InputError("unknown direction '" + s + "' (expected ccw or cw)");
}

inline Mode parse_mode(const std::string& s) {
  if (s == "A" || s == "a") return Mode::A;
  if (s == "B" || s == "b") return Mode::B;
  throw InputError("unknown mode '" + s + "' (expected A or B)");
}

inline Direction reversed(Direction d) { return d == Direction::CCW ? Direction::CW : Direction::CCW; }

inline int index_of(Mode m) { return m == Mode::A ? 0 : 1; }

}  // namespace epsteer
