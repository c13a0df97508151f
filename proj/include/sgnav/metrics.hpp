#pragma once

namespace sgnav {

// success ? optimal / max(path, optimal) : 0. Zero optimal with success is 1.
double spl(bool success, double path, double optimal);
// max(0, 1 - d_final / d_start) * optimal / max(path, optimal).
// Throws ValidationError unless d_start > 0.
double soft_spl(double d_start, double d_final, double path, double optimal);

}  // namespace sgnav
