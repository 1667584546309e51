#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace blfmm {

// Points and frequency nodes live in at most two dimensions; the active
// dimension count d travels alongside wherever it matters.
using Pt = std::array<double, 2>;

inline double dot(int d, const Pt& a, const Pt& b) {
  double s = a[0] * b[0];
  if (d == 2) s += a[1] * b[1];
  return s;
}

inline double dist(int d, const Pt& a, const Pt& b) {
  double dx = a[0] - b[0];
  double s = dx * dx;
  if (d == 2) {
    double dy = a[1] - b[1];
    s += dy * dy;
  }
  return std::sqrt(s);
}

// Thrown when an adaptive quadrature cannot meet the requested tolerance;
// carries the error estimate it did achieve.
class accuracy_error : public std::runtime_error {
 public:
  accuracy_error(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

// Counter-based RNG: every draw is a pure function of (seed, counter), so
// parallel and replayed runs see identical streams without shared state.
inline std::uint64_t hash64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = hash64(seed ^ hash64(counter));
  return (z >> 11) * 0x1.0p-53;  // 53 mantissa bits -> [0,1)
}

}  // namespace blfmm
