#include "sgnav/common.hpp"

#include <charconv>

namespace sgnav {

const char* action_name(Action a) {
  switch (a) {
    case Action::Stop: return "STOP";
    case Action::MoveForward: return "MOVE_FORWARD";
    case Action::TurnLeft: return "TURN_LEFT";
    case Action::TurnRight: return "TURN_RIGHT";
    case Action::LookUp: return "LOOK_UP";
    case Action::LookDown: return "LOOK_DOWN";
  }
  return "STOP";
}

Action action_from_name(const std::string& s) {
  for (Action a : {Action::Stop, Action::MoveForward, Action::TurnLeft, Action::TurnRight,
                   Action::LookUp, Action::LookDown})
    if (s == action_name(a)) return a;
  throw ValidationError("unknown action: " + s);
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return splitmix64(h);
}

double hash_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  if (hi <= lo) return lo;
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // rejection keeps it unbiased
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % span);
  std::uint64_t v;
  do {
    v = eng_();
  } while (v >= limit);
  return lo + static_cast<int>(v % span);
}

std::size_t Rng::weighted(const std::vector<double>& w) {
  double total = 0;
  for (double x : w) total += std::max(0.0, x);
  if (total <= 0) return w.empty() ? 0 : static_cast<std::size_t>(uniform_int(0, static_cast<int>(w.size()) - 1));
  double u = uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    u -= std::max(0.0, w[i]);
    if (u < 0) return i;
  }
  return w.size() - 1;
}

std::string py_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  double av = std::fabs(v);
  if (av != 0.0 && (av < 1e-4 || av >= 1e16)) {
    res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific);
    s.assign(buf, res.ptr);
    return s;
  }
  if (s.find('e') != std::string::npos) {
    res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    s.assign(buf, res.ptr);
  }
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

}  // namespace sgnav
