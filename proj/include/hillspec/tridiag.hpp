#pragma once

// Complex tridiagonal LU with partial pivoting (the gttrf/gttrs scheme).

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace hillspec::detail {

class TridiagLU {
 public:
  using cplx = std::complex<double>;

  /// sub[i] = A(i+1,i), diag[i] = A(i,i), sup[i] = A(i,i+1).
  TridiagLU(std::vector<cplx> sub, std::vector<cplx> diag, std::vector<cplx> sup,
            double tiny_pivot)
      : dl_(std::move(sub)), d_(std::move(diag)), du_(std::move(sup)) {
    const std::size_t n = d_.size();
    du2_.assign(n > 2 ? n - 2 : 0, cplx{});
    swapped_.assign(n > 0 ? n - 1 : 0, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        if (d_[i] == cplx{}) d_[i] = tiny_pivot;
        const cplx fact = dl_[i] / d_[i];
        dl_[i] = fact;
        d_[i + 1] -= fact * du_[i];
      } else {
        const cplx fact = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = fact;
        const cplx temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - fact * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -fact * du_[i + 1];
        }
        swapped_[i] = true;
      }
    }
    if (n > 0 && d_[n - 1] == cplx{}) d_[n - 1] = tiny_pivot;
  }

  Eigen::VectorXcd solve(Eigen::VectorXcd b) const {
    const auto n = static_cast<Eigen::Index>(d_.size());
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!swapped_[k]) {
        b(i + 1) -= dl_[k] * b(i);
      } else {
        const cplx temp = b(i);
        b(i) = b(i + 1);
        b(i + 1) = temp - dl_[k] * b(i);
      }
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      const auto k = static_cast<std::size_t>(i);
      cplx s = b(i);
      if (i + 1 < n) s -= du_[k] * b(i + 1);
      if (i + 2 < n) s -= du2_[k] * b(i + 2);
      b(i) = s / d_[k];
    }
    return b;
  }

 private:
  std::vector<cplx> dl_, d_, du_, du2_;
  std::vector<bool> swapped_;
};

}  // namespace hillspec::detail
