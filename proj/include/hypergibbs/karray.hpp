#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace hypergibbs {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Largest entry count a dense KArray may hold.
inline constexpr std::size_t kMaxKArrayEntries = std::size_t{1} << 20;

inline std::size_t checked_power(std::size_t base, int exponent, std::size_t cap) {
  std::size_t out = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && out > cap / base) throw std::length_error("KArray exceeds the dense entry cap");
    out *= base;
  }
  return out;
}

/// Dense order-k array over an n-dimensional index set: entries a(i_1, ..., i_k)
/// with each i in [0, n). Storage is row-major with i_1 most significant.
template <typename Scalar>
class KArray {
 public:
  KArray() = default;
  KArray(std::size_t dim, int order, Scalar fill = Scalar(0))
      : dim_(dim), order_(order) {
    if (order < 1) throw std::invalid_argument("KArray order must be positive");
    if (dim < 1) throw std::invalid_argument("KArray dimension must be positive");
    data_ = Vector<Scalar>::Constant(
        static_cast<Eigen::Index>(checked_power(dim, order, kMaxKArrayEntries)), fill);
  }

  std::size_t dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t i : idx) f = f * dim_ + i;
    return f;
  }
  void unravel(std::size_t flat, std::span<std::size_t> idx) const {
    for (int k = order_ - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = flat % dim_;
      flat /= dim_;
    }
  }

  Scalar& operator[](std::size_t flat) { return data_[static_cast<Eigen::Index>(flat)]; }
  const Scalar& operator[](std::size_t flat) const { return data_[static_cast<Eigen::Index>(flat)]; }
  Scalar& operator()(std::span<const std::size_t> idx) { return (*this)[flat_index(idx)]; }
  const Scalar& operator()(std::span<const std::size_t> idx) const { return (*this)[flat_index(idx)]; }

  const Vector<Scalar>& data() const { return data_; }
  Vector<Scalar>& data() { return data_; }

  Scalar max_coeff() const { return data_.maxCoeff(); }
  Scalar min_coeff() const { return data_.minCoeff(); }

  /// The order-2 case viewed as an n x n matrix.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> as_matrix() const {
    if (order_ != 2) throw std::invalid_argument("as_matrix requires an order-2 array");
    const auto n = static_cast<Eigen::Index>(dim_);
    return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data_.data(), n, n);
  }

  static KArray from_matrix(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("from_matrix requires a square matrix");
    KArray out(static_cast<std::size_t>(m.rows()), 2);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) out.data_[i * m.cols() + j] = m(i, j);
    return out;
  }

 private:
  std::size_t dim_ = 0;
  int order_ = 0;
  Vector<Scalar> data_;
};

namespace detail {

// Contract the last index of a (rows*dim)-long row-major block with y.
template <typename Scalar, typename Derived>
Vector<Scalar> contract_last(const Vector<Scalar>& block, std::size_t dim,
                             const Eigen::MatrixBase<Derived>& y) {
  const auto n = static_cast<Eigen::Index>(dim);
  const Eigen::Index rows = block.size() / n;
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      block.data(), rows, n);
  return m * y.template cast<Scalar>();
}

}  // namespace detail

/// Tensor product of r order-k arrays of common dimension n: an order-k array of
/// dimension n^r whose entry at slots ((i^1_1..i^r_1), ..., (i^1_k..i^r_k)) is
/// prod_l A_l(i^l_1, ..., i^l_k). Slot indices combine with replica 1 most significant.
template <typename Scalar>
KArray<Scalar> tensor_product(std::span<const KArray<Scalar>> arrays) {
  if (arrays.empty()) throw std::invalid_argument("tensor_product needs at least one array");
  const std::size_t n = arrays.front().dim();
  const int k = arrays.front().order();
  for (const auto& a : arrays)
    if (a.dim() != n || a.order() != k) throw std::invalid_argument("tensor_product shape mismatch");
  const int r = static_cast<int>(arrays.size());
  const std::size_t big = checked_power(n, r, kMaxKArrayEntries);
  KArray<Scalar> out(big, k);

  const auto ku = static_cast<std::size_t>(k);
  std::vector<std::size_t> slot(ku), sub(ku);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unravel(flat, slot);
    Scalar prod(1);
    std::vector<std::size_t> rem = slot;
    // Replica l is digit l of each slot index in base n (replica 1 most significant).
    for (int l = r - 1; l >= 0; --l) {
      for (std::size_t s = 0; s < ku; ++s) {
        sub[s] = rem[s] % n;
        rem[s] /= n;
      }
      prod *= arrays[static_cast<std::size_t>(l)](sub);
      if (prod == Scalar(0)) break;
    }
    out[flat] = prod;
  }
  return out;
}

/// <y, A> = sum over index tuples of y_{i_1} ... y_{i_k} a(i_1, ..., i_k).
template <typename Scalar, typename Derived>
Scalar multilinear_form(const KArray<Scalar>& a, const Eigen::MatrixBase<Derived>& y) {
  if (static_cast<std::size_t>(y.size()) != a.dim())
    throw std::invalid_argument("multilinear_form length mismatch");
  Vector<Scalar> block = a.data();
  for (int step = 0; step < a.order(); ++step) block = detail::contract_last<Scalar>(block, a.dim(), y);
  return block(0);
}

/// Second derivative of t -> <y + t d, A> at t = 0, from the exact degree-2
/// truncation of the polynomial contraction.
template <typename Scalar, typename DerivedY, typename DerivedD>
Scalar second_directional_derivative(const KArray<Scalar>& a, const Eigen::MatrixBase<DerivedY>& y,
                                     const Eigen::MatrixBase<DerivedD>& d) {
  if (static_cast<std::size_t>(y.size()) != a.dim() || static_cast<std::size_t>(d.size()) != a.dim())
    throw std::invalid_argument("second_directional_derivative length mismatch");
  Vector<Scalar> c0 = a.data();
  Vector<Scalar> c1 = Vector<Scalar>::Zero(c0.size());
  Vector<Scalar> c2 = Vector<Scalar>::Zero(c0.size());
  for (int step = 0; step < a.order(); ++step) {
    Vector<Scalar> n0 = detail::contract_last<Scalar>(c0, a.dim(), y);
    Vector<Scalar> n1 = detail::contract_last<Scalar>(c1, a.dim(), y) + detail::contract_last<Scalar>(c0, a.dim(), d);
    Vector<Scalar> n2 = detail::contract_last<Scalar>(c2, a.dim(), y) + detail::contract_last<Scalar>(c1, a.dim(), d);
    c0 = std::move(n0);
    c1 = std::move(n1);
    c2 = std::move(n2);
  }
  return Scalar(2) * c2(0);
}

}  // namespace hypergibbs
