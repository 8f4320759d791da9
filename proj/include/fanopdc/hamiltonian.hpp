#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fanopdc/error.hpp"

namespace fanopdc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::ptrdiff_t>;
using Triplet = Eigen::Triplet<double, std::ptrdiff_t>;
using cvec = Eigen::VectorXcd;

// Real symmetric Hamiltonian in units of hbar kappa, stored with both
// triangles so the matrix-vector product needs no transposed pass.
struct DiscreteHamiltonian {
    std::vector<std::string> labels;
    SparseMatrix matrix;

    std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
    double entry(std::size_t i, std::size_t j) const {
        return matrix.coeff(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j));
    }
};

// Assembles a symmetric matrix from upper-or-diagonal triplets; each
// off-diagonal entry is mirrored so the result is symmetric bit for bit.
inline SparseMatrix symmetric_from_upper(std::size_t dim, const std::vector<Triplet>& upper) {
    std::vector<Triplet> all;
    all.reserve(2 * upper.size());
    for (const auto& t : upper) {
        require(t.row() <= t.col(), "symmetric_from_upper: entry below the diagonal");
        all.push_back(t);
        if (t.row() != t.col()) all.emplace_back(t.col(), t.row(), t.value());
    }
    auto n = static_cast<std::ptrdiff_t>(dim);
    SparseMatrix m(n, n);
    m.setFromTriplets(all.begin(), all.end());
    m.makeCompressed();
    return m;
}

inline double hermiticity_residual(const SparseMatrix& m) {
    SparseMatrix t = m.transpose();
    return (m - t).norm();
}

}  // namespace fanopdc
