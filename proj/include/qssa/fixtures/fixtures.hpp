#pragma once

// Small synthetic models with known answers: an affine DAE family (covers
// the two-timescale system and random linear fixtures), the cubic fast
// system with three equilibria, and a constraint whose D_yg crosses zero.

#include "qssa/model.hpp"

#include <functional>
#include <random>

namespace qssa::fixtures {

/// A model defined by one callable returning all residuals.
class FunctionModel final : public HybridModel {
public:
    using Eval = std::function<Residuals(const PartitionedState&, Real)>;

    FunctionModel(Layout layout, Eval eval, std::size_t probe = 0, Real fast_tau = 1.0)
        : layout_(std::move(layout)), eval_(std::move(eval)), probe_(probe), fast_tau_(fast_tau) {}

    [[nodiscard]] const Layout& layout() const override { return layout_; }
    [[nodiscard]] Residuals eval_all(const PartitionedState& s, Real t) const override {
        check_layout(layout_, s);
        return eval_(s, t);
    }
    [[nodiscard]] std::size_t oscillation_probe() const override { return probe_; }
    [[nodiscard]] Real largest_fast_time_constant() const override { return fast_tau_; }

private:
    Layout layout_;
    Eval eval_;
    std::size_t probe_;
    Real fast_tau_;
};

/// Affine DAE
///   z_c' = Azz z + Azx x + Azy y + bz
///   x'   = Axz z + Axx x + Axy y + bx
///   0    = Ayz z + Ayx x + Ayy y + by
struct AffineBlocks {
    Matrix azz, azx, azy, axz, axx, axy, ayz, ayx, ayy;
    Vector bz, bx, by;

    [[nodiscard]] static AffineBlocks zeros(Eigen::Index nz, Eigen::Index nx, Eigen::Index ny) {
        AffineBlocks b;
        b.azz = Matrix::Zero(nz, nz);
        b.azx = Matrix::Zero(nz, nx);
        b.azy = Matrix::Zero(nz, ny);
        b.axz = Matrix::Zero(nx, nz);
        b.axx = Matrix::Zero(nx, nx);
        b.axy = Matrix::Zero(nx, ny);
        b.ayz = Matrix::Zero(ny, nz);
        b.ayx = Matrix::Zero(ny, nx);
        b.ayy = Matrix::Zero(ny, ny);
        b.bz = Vector::Zero(nz);
        b.bx = Vector::Zero(nx);
        b.by = Vector::Zero(ny);
        return b;
    }
};

class AffineModel final : public HybridModel {
public:
    explicit AffineModel(AffineBlocks b) : b_(std::move(b)) {
        for (Eigen::Index i = 0; i < b_.bz.size(); ++i) layout_.add(Partition::SlowContinuous, "z" + std::to_string(i + 1));
        for (Eigen::Index i = 0; i < b_.bx.size(); ++i) layout_.add(Partition::Fast, "x" + std::to_string(i + 1));
        for (Eigen::Index i = 0; i < b_.by.size(); ++i) layout_.add(Partition::Algebraic, "y" + std::to_string(i + 1));
    }

    [[nodiscard]] const Layout& layout() const override { return layout_; }
    [[nodiscard]] const AffineBlocks& blocks() const { return b_; }

    [[nodiscard]] Residuals eval_all(const PartitionedState& s, Real /*t*/) const override {
        check_layout(layout_, s);
        Residuals r;
        r.hc = b_.azz * s.zc + b_.azx * s.x + b_.azy * s.y + b_.bz;
        r.f = b_.axz * s.zc + b_.axx * s.x + b_.axy * s.y + b_.bx;
        r.g = b_.ayz * s.zc + b_.ayx * s.x + b_.ayy * s.y + b_.by;
        return r;
    }

private:
    AffineBlocks b_;
    Layout layout_;
};

/// z' = -z + x, x' = -x + z. Run the long-term model with epsilon_scale = eps
/// to obtain eps x' = -x + z.
[[nodiscard]] inline AffineModel two_timescale() {
    auto b = AffineBlocks::zeros(1, 1, 0);
    b.azz(0, 0) = -1.0;
    b.azx(0, 0) = 1.0;
    b.axz(0, 0) = 1.0;
    b.axx(0, 0) = -1.0;
    return AffineModel(std::move(b));
}

/// Long-term solution of the two-timescale system from (z0, x0):
/// z(t) = c + (z0 - c) exp(-(1 + 1/eps) t), c = (z0 + eps x0) / (1 + eps).
struct TwoTimescaleSolution {
    Real z, x;
};

[[nodiscard]] inline TwoTimescaleSolution two_timescale_exact(Real z0, Real x0, Real eps, Real t) {
    const Real c = (z0 + eps * x0) / (1.0 + eps);
    const Real decay = std::exp(-(1.0 + 1.0 / eps) * t);
    return {c + (z0 - c) * decay, c + (x0 - c) * decay};
}

/// x' = -a x with a = 1 by default.
[[nodiscard]] inline AffineModel scalar_decay(Real a = 1.0) {
    auto b = AffineBlocks::zeros(0, 1, 0);
    b.axx(0, 0) = -a;
    return AffineModel(std::move(b));
}

/// x' = -x (x^2 - 1): equilibria -1, 0, 1; 0 unstable.
[[nodiscard]] inline FunctionModel cubic() {
    Layout lay;
    lay.add(Partition::Fast, "x");
    return FunctionModel(std::move(lay), [](const PartitionedState& s, Real) {
        Residuals r;
        r.hc = Vector(0);
        r.g = Vector(0);
        r.f = Vector::Constant(1, -s.x[0] * (s.x[0] * s.x[0] - 1.0));
        return r;
    });
}

/// z' = rate, 0 = (z - crossing)(y - z). Along the branch y = z the
/// constraint Jacobian D_yg = z - crossing changes sign at z = crossing.
[[nodiscard]] inline FunctionModel singular_sweep(Real rate = 1.0, Real crossing = 0.5) {
    Layout lay;
    lay.add(Partition::SlowContinuous, "z");
    lay.add(Partition::Algebraic, "y");
    return FunctionModel(std::move(lay), [rate, crossing](const PartitionedState& s, Real) {
        Residuals r;
        r.hc = Vector::Constant(1, rate);
        r.f = Vector(0);
        r.g = Vector::Constant(1, (s.zc[0] - crossing) * (s.y[0] - s.zc[0]));
        return r;
    });
}

/// Random linear fast/algebraic system with well-conditioned D_yg. The
/// fast block is shifted by `shift` so that roughly half the draws are stable.
[[nodiscard]] inline AffineModel random_linear_dae(std::mt19937_64& rng, Eigen::Index nx, Eigen::Index ny,
                                                   Real shift = 0.0) {
    std::normal_distribution<Real> n01(0.0, 1.0);
    auto draw = [&](Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n01(rng);
        }
        return m;
    };
    auto b = AffineBlocks::zeros(0, nx, ny);
    b.axx = draw(nx, nx) / std::sqrt(static_cast<Real>(nx)) - shift * Matrix::Identity(nx, nx);
    b.axy = draw(nx, ny) / std::sqrt(static_cast<Real>(std::max<Eigen::Index>(ny, 1)));
    b.ayx = draw(ny, nx) / std::sqrt(static_cast<Real>(nx));
    // Diagonally dominant constraint block keeps D_yg safely invertible.
    b.ayy = draw(ny, ny) / std::sqrt(static_cast<Real>(std::max<Eigen::Index>(ny, 1))) -
            3.0 * Matrix::Identity(ny, ny);
    return AffineModel(std::move(b));
}

}  // namespace qssa::fixtures
