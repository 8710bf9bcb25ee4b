#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace krd {

// All numerics are 64-bit; row-major storage so tensors serialize without
// a transpose step.
using Scalar = double;
using Index = Eigen::Index;

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mat = MatX<Scalar>;

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}
inline std::string shape_str(const Mat& m) { return shape_str(m.rows(), m.cols()); }

// Contract violation: operand shapes do not conform for the requested op.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, const Mat& a, const Mat& b)
      : std::invalid_argument(op + ": shapes " + shape_str(a) + " vs " + shape_str(b) +
                              " do not conform") {}
  ShapeError(const std::string& op, const std::string& detail)
      : std::invalid_argument(op + ": " + detail) {}
};

// Value outside an op's numeric domain (e.g. log of a nonpositive entry).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic RNG. Wraps mt19937_64 but derives all variates from raw
// 64-bit draws so streams do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return state_(); }

  // uniform in [0, 1)
  Scalar uniform() { return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53; }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n >= 1; unbiased via rejection
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(Scalar p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

 private:
  std::mt19937_64 state_;
};

// splitmix64; used to derive independent per-epoch / per-purpose seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used for config hashes embedded in artifacts.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace krd
