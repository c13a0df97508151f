#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgnav {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Grid index: row follows world y, column follows world x.
struct Cell {
  int r = 0;
  int c = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class Action { Stop, MoveForward, TurnLeft, TurnRight, LookUp, LookDown };

const char* action_name(Action a);
Action action_from_name(const std::string& s);

// Heading is counter-clockwise from +x, radians.
struct AgentPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double z = 0.0;
  int floor = 0;

  Vec2 xy() const { return {x, y}; }
};

double wrap_angle(double a);

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfBoundsError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct MissingFlagsError : Error {
  using Error::Error;
};
struct SchemaError : Error {
  SchemaError(const std::string& field, const std::string& what)
      : Error("schema error at '" + field + "': " + what), field(field) {}
  std::string field;
};
struct UnreachableError : Error {
  using Error::Error;
};
struct TransportError : Error {
  using Error::Error;
};
struct GenerationError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_string(const std::string& s);
// Uniform in [0,1) from a hash.
double hash_unit(std::uint64_t h);

// Portable stream: the mapping to doubles and ranges is ours, not the
// standard library's distributions, so sequences match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(splitmix64(seed)) {}
  std::uint64_t next() { return eng_(); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive range.
  int uniform_int(int lo, int hi);
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t weighted(const std::vector<double>& w);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

// Shortest round-trip repr in the style of Python floats ("1.0", "0.25").
std::string py_float(double v);

}  // namespace sgnav
