#pragma once

// Scaled dot-product attention, softmax(Q K^T / sqrt(d_k)) V, and its
// reverse-mode derivative. Rows are tokens.

#include <cmath>

#include <Eigen/Core>

#include "xrec/error.hpp"

namespace xrec {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Row-wise softmax with the row maximum subtracted first.
template <class Derived>
Mat<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> out = scores;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return out;
}

template <class DQ, class DK, class DV>
Mat<typename DQ::Scalar> scaled_dot_attention(const Eigen::MatrixBase<DQ>& q,
                                              const Eigen::MatrixBase<DK>& k,
                                              const Eigen::MatrixBase<DV>& v,
                                              Mat<typename DQ::Scalar>* weights = nullptr) {
  using Scalar = typename DQ::Scalar;
  if (q.cols() == 0) throw ValidationError("attention: d_k must be positive");
  if (q.cols() != k.cols()) throw ValidationError("attention: Q and K widths differ");
  if (k.rows() != v.rows()) throw ValidationError("attention: K and V row counts differ");
  if (q.rows() != k.rows()) throw ValidationError("attention: Q and K row counts differ");
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  Mat<Scalar> a = softmax_rows((q * k.transpose()) * scale);
  Mat<Scalar> out = a * v;
  if (weights) *weights = std::move(a);
  return out;
}

template <class Scalar>
struct AttentionGrad {
  Mat<Scalar> dq, dk, dv;
};

/// Given the forward inputs, the attention weights it produced, and dL/dOut.
template <class Scalar>
AttentionGrad<Scalar> scaled_dot_attention_backward(const Mat<Scalar>& q, const Mat<Scalar>& k,
                                                    const Mat<Scalar>& v,
                                                    const Mat<Scalar>& weights,
                                                    const Mat<Scalar>& d_out) {
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  AttentionGrad<Scalar> g;
  g.dv = weights.transpose() * d_out;
  const Mat<Scalar> d_weights = d_out * v.transpose();
  const auto row_dot = (d_weights.array() * weights.array()).rowwise().sum();
  Mat<Scalar> d_scores = weights.array() * (d_weights.array().colwise() - row_dot);
  d_scores *= scale;
  g.dq = d_scores * k;
  g.dk = d_scores.transpose() * q;
  return g;
}

}  // namespace xrec
