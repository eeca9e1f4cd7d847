#include "crloc/rng.hpp"

#include <cmath>

namespace crloc {

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0,1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double mag = std::sqrt(-2.0 * std::log(u1));
  double ang = 2.0 * M_PI * u2;
  cached_ = mag * std::sin(ang);
  has_cached_ = true;
  return mag * std::cos(ang);
}

double Rng::exponential(double scale) {
  double u = 1.0 - uniform();
  return -scale * std::log(u);
}

}  // namespace crloc
