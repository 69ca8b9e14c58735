#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ellg {

using Index = int;
using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr const char* version = "0.1.0";

/// Raised when an input violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot produce a result (solver
/// breakdown, non-SPD pivot, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of worker threads for assembly loops. ELLG_THREADS caps it;
/// values < 1 or unparsable fall back to 1.
inline int thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("ELLG_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1;
    return static_cast<int>(std::min<long>(v, hw));
  }
  return hw;
}

/// Runs body(i) for i in [0, n). Iterations are interleaved across threads
/// (i mod nthreads), so any body that only writes state owned by i gives the
/// same result for every thread count.
template <class Body>
void parallel_for(Index n, Body&& body, int threads = thread_count()) {
  threads = std::max(1, std::min<int>(threads, n));
  if (threads == 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (Index i = t; i < n; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline double max_abs(const DenseMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

}  // namespace ellg
