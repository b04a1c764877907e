#pragma once

#include "qssa/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <functional>
#include <vector>

namespace qssa::algebra {

using Complex = std::complex<Real>;
using ResidualFn = std::function<Vector(const Vector&)>;

/// Central-difference step for variable value v.
[[nodiscard]] inline Real fd_step(Real v) { return std::max(1e-6, 1e-6 * std::abs(v)); }

/// Central finite-difference Jacobian of `fn` at `at`.
[[nodiscard]] inline Matrix fd_jacobian(const ResidualFn& fn, const Vector& at, Eigen::Index rows) {
    Matrix jac(rows, at.size());
    Vector probe = at;
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        const Real h = fd_step(at[j]);
        probe[j] = at[j] + h;
        const Vector up = fn(probe);
        probe[j] = at[j] - h;
        const Vector down = fn(probe);
        probe[j] = at[j];
        jac.col(j) = (up - down) / (2.0 * h);
    }
    if (!jac.allFinite()) {
        throw SolverError(SolverFailure::NonFiniteEntry, "non-finite entry in finite-difference Jacobian");
    }
    return jac;
}

/// LU factorization that reports a pivot below `pivot_tol` as singular.
class CheckedLu {
public:
    CheckedLu() = default;
    explicit CheckedLu(const Matrix& a, Real pivot_tol = 1e-12) { compute(a, pivot_tol); }

    void compute(const Matrix& a, Real pivot_tol = 1e-12) {
        if (a.rows() != a.cols()) throw SolverError(SolverFailure::SingularJacobian, "non-square matrix");
        if (!a.allFinite()) throw SolverError(SolverFailure::NonFiniteEntry, "non-finite matrix entry");
        n_ = a.rows();
        if (n_ == 0) return;
        lu_.compute(a);
        const Real scale = std::max<Real>(1.0, a.cwiseAbs().maxCoeff());
        min_pivot_ = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (min_pivot_ < pivot_tol * scale) {
            throw SolverError(SolverFailure::SingularJacobian,
                              "pivot " + format_real(min_pivot_) + " below tolerance");
        }
    }

    [[nodiscard]] Vector solve(const Vector& b) const {
        if (n_ == 0) return Vector(0);
        return lu_.solve(b);
    }

    [[nodiscard]] Matrix solve(const Matrix& b) const {
        if (n_ == 0) return Matrix(0, b.cols());
        return lu_.solve(b);
    }

    /// Sign of the determinant (+1/-1); +1 for an empty matrix.
    [[nodiscard]] int det_sign() const {
        if (n_ == 0) return 1;
        const Real d = lu_.determinant();
        return d >= 0.0 ? 1 : -1;
    }

    [[nodiscard]] Real min_pivot() const { return min_pivot_; }

private:
    Eigen::PartialPivLU<Matrix> lu_;
    Eigen::Index n_ = 0;
    Real min_pivot_ = 0.0;
};

struct EigenPairs {
    std::vector<Complex> values;
    Eigen::MatrixXcd vectors;  // column i pairs with values[i]
};

/// Full spectrum of a real square matrix, sorted by real part then imaginary part.
[[nodiscard]] inline EigenPairs eigen_decompose(const Matrix& m, bool with_vectors = true) {
    if (m.rows() != m.cols()) throw SolverError(SolverFailure::NoConvergence, "non-square matrix");
    if (!m.allFinite()) throw SolverError(SolverFailure::NonFiniteEntry, "non-finite matrix entry");
    EigenPairs out;
    if (m.rows() == 0) return out;
    Eigen::EigenSolver<Matrix> es(m, with_vectors);
    if (es.info() != Eigen::Success) {
        throw SolverError(SolverFailure::NoConvergence, "QR iteration did not converge");
    }
    const auto vals = es.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
    for (Eigen::Index i = 0; i < vals.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (vals[a].real() != vals[b].real()) return vals[a].real() < vals[b].real();
        return vals[a].imag() < vals[b].imag();
    });
    if (with_vectors) out.vectors.resize(m.rows(), m.cols());
    for (std::size_t k = 0; k < order.size(); ++k) {
        out.values.push_back(vals[order[k]]);
        if (with_vectors) out.vectors.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(order[k]);
    }
    return out;
}

[[nodiscard]] inline std::vector<Complex> eigenvalues(const Matrix& m) {
    return eigen_decompose(m, false).values;
}

/// sigma_min / sigma_max; 1 for an empty matrix, 0 for the zero matrix.
[[nodiscard]] inline Real singular_value_ratio(const Matrix& m) {
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    const Real smax = s.maxCoeff();
    if (smax == 0.0) return 0.0;
    return s.minCoeff() / smax;
}

}  // namespace qssa::algebra
