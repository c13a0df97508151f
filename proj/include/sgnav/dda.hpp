#pragma once

#include <cmath>

#include "sgnav/common.hpp"

namespace sgnav {

// Amanatides-Woo walk in cell units from (x0,y0) toward (x1,y1); x is the
// column axis. visit(row, col, t_enter) is called for each cell in order,
// with t in [0,1] along the segment; return false to stop.
template <class F>
void dda_walk(double x0, double y0, double x1, double y1, F&& visit) {
  int c = static_cast<int>(std::floor(x0));
  int r = static_cast<int>(std::floor(y0));
  const int c_end = static_cast<int>(std::floor(x1));
  const int r_end = static_cast<int>(std::floor(y1));
  const double dx = x1 - x0, dy = y1 - y0;
  const int sc = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sr = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double tdx = sc != 0 ? std::fabs(1.0 / dx) : kInf;
  const double tdy = sr != 0 ? std::fabs(1.0 / dy) : kInf;
  double tmx = sc > 0 ? (c + 1 - x0) * tdx : (sc < 0 ? (x0 - c) * tdx : kInf);
  double tmy = sr > 0 ? (r + 1 - y0) * tdy : (sr < 0 ? (y0 - r) * tdy : kInf);
  double t = 0.0;
  int guard = std::abs(c_end - c) + std::abs(r_end - r) + 2;
  while (true) {
    if (!visit(r, c, t)) return;
    if ((r == r_end && c == c_end) || --guard < 0) return;
    if (tmx < tmy) {
      t = tmx;
      if (t > 1.0) return;
      c += sc;
      tmx += tdx;
    } else {
      t = tmy;
      if (t > 1.0) return;
      r += sr;
      tmy += tdy;
    }
  }
}

}  // namespace sgnav
