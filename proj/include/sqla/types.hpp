#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace sqla {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using index_t = std::size_t;

// 64-bit seeded engine; every random choice in the library goes through one of these.
using Rng = std::mt19937_64;

enum class ErrorKind {
  Validation,
  ZeroNorm,
  Unsupported,
  InvariantViolation,
  Exhausted,
  Degenerate,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorKind::Validation, msg);
}

inline void require(bool cond, ErrorKind k, const std::string& msg) {
  if (!cond) fail(k, msg);
}

// [0,1) with 53 random bits, independent of the standard library's distribution code
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline index_t uniform_index(Rng& rng, index_t n) {
  return std::min<index_t>(static_cast<index_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
}

inline double abs2(cplx z) { return std::norm(z); }

// splitmix64 step, used to derive independent child seeds
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(seed ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace sqla
