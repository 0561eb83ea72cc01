#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace psgld {

using ParamVector = Eigen::VectorXd;

// Raised for violated preconditions and numerical failures alike; callers
// that need to distinguish can catch the subclasses below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class StreamExhausted : public Error {
 public:
  StreamExhausted(const std::string& what, long long consumed)
      : Error(what), consumed_(consumed) {}
  long long consumed() const noexcept { return consumed_; }

 private:
  long long consumed_;
};

inline bool all_finite(const ParamVector& x) { return x.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

inline void require_finite(const ParamVector& x, const char* what) {
  if (!x.allFinite()) throw Error(std::string(what) + ": non-finite coordinate");
}

inline ParamVector make_vector(std::initializer_list<double> v) {
  ParamVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace psgld
