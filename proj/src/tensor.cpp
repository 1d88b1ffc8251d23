#include "csner/tensor.hpp"

#include <algorithm>

#include "csner/error.hpp"

namespace csner {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, "tensor data size does not match shape");
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add(const Tensor& other) {
  require(same_shape(other), "tensor add: shape mismatch");
  const double* src = other.data();
  double* dst = data();
  for (std::size_t i = 0; i < data_.size(); ++i) dst[i] += src[i];
}

void gemm(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& c,
          bool accumulate) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  require(k == kb, "gemm: inner dimensions differ");
  if (!accumulate || c.rows() != m || c.cols() != n) {
    require(!accumulate, "gemm: accumulator has wrong shape");
    c = Tensor(m, n);
  }
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();

  if (!trans_a && !trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = pc + i * n;
      const double* arow = pa + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const double* brow = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (trans_a && !trans_b) {
    // a is k x m
    for (std::size_t p = 0; p < k; ++p) {
      const double* arow = pa + p * m;
      const double* brow = pb + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double av = arow[i];
        if (av == 0.0) continue;
        double* crow = pc + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!trans_a && trans_b) {
    // b is n x k
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = pa + i * k;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = pb + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        crow[j] += s;
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += pa[p * m + i] * pb[j * k + p];
        pc[i * n + j] += s;
      }
    }
  }
}

}  // namespace csner
