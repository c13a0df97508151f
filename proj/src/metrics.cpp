#include "sgnav/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sgnav/common.hpp"

namespace sgnav {

namespace {

double efficiency(double path, double optimal) {
  if (optimal < 0 || path < 0) throw ValidationError("path lengths must be non-negative");
  double denom = std::max(path, optimal);
  return denom > 0 ? optimal / denom : 1.0;
}

}  // namespace

double spl(bool success, double path, double optimal) {
  double e = efficiency(path, optimal);
  return success ? e : 0.0;
}

double soft_spl(double d_start, double d_final, double path, double optimal) {
  if (!(d_start > 0)) throw ValidationError("soft_spl needs d_start > 0");
  double progress = std::max(0.0, 1.0 - d_final / d_start);
  return progress * efficiency(path, optimal);
}

}  // namespace sgnav
