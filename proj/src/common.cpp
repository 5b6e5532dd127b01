#include "gconv/common.hpp"

#include <cmath>
#include <numbers>

namespace gconv {

std::pair<double, double> SymTensor::eigen_range(int dim) const {
  if (dim == 1) return {xx, xx};
  const double mean = 0.5 * (xx + yy);
  const double rad = std::hypot(0.5 * (xx - yy), xy);
  return {mean - rad, mean + rad};
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  do {
    u = uniform();
  } while (u <= 0.0);
  const double v = uniform();
  const double r = std::sqrt(-2.0 * std::log(u));
  spare_ = r * std::sin(2.0 * std::numbers::pi * v);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * v);
}

}  // namespace gconv
