#pragma once

// Small-vector linear algebra aliases and shared utilities. All state-space
// dimensions in this library are tiny (n <= 4), so vectors and matrices use
// fixed-capacity Eigen types that live entirely on the stack: no heap traffic
// in the per-step loops.

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace splitsens {

inline constexpr int kMaxDim = 4;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Thrown for invalid or inconsistent run configuration; the CLI maps it to
// exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a numerical procedure fails (divergence, singular system,
// failed root solve); the CLI maps it to exit code 3. Messages name the
// component and step index where the failure occurred.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64: the standard 64-bit mix used to derive independent stream and
// per-sample seeds from one master seed. Deterministic fan-out keeps parallel
// and serial sample loops bit-identical.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ (0x517cc1b727220a95ULL * (stream + 1))) + index);
}

// QR with the R diagonal forced positive by column sign flips. Makes log R
// well-defined for Lyapunov sums and the frames reproducible up to a global
// convention instead of per-run sign noise. A is n x m with m <= n; returns
// the thin Q and the diagonal of R.
struct ThinQR {
  Mat Q;
  Vec r_diag;
};

inline ThinQR qr_positive(const Mat& A) {
  const auto n = A.rows();
  const auto m = A.cols();
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ() * Mat::Identity(n, m);
  Mat R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  Vec d(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double rjj = R(j, j);
    if (rjj < 0) {
      Q.col(j) = -Q.col(j);
      rjj = -rjj;
    }
    d(j) = rjj;
  }
  return {Q, d};
}

}  // namespace splitsens
