#pragma once

#include "qssa/core.hpp"

#include <deque>
#include <limits>

namespace qssa::sim {

/// Detects a sustained oscillation from a Poincare section taken at the
/// local maxima of one fast variable. At each section the continuous state
/// (z_c, x) is reconstructed by cubic Hermite interpolation between the two
/// bracketing samples. A return is a section point that lies within `tol`
/// (angles modulo 2*pi) of one of the last few section points, whose
/// oscillation amplitude has not decayed relative to that point, and whose
/// rate norm is above `min_rate`. `needed` consecutive returns declare a
/// limit cycle.
class LimitCycleDetector {
public:
    struct Options {
        Real tol = 1e-4;
        Real min_rate = 1e-4;
        int needed = 3;
        Real active_after = 0.0;
        Real amplitude_keep = 0.999;
        std::size_t history = 4;
    };

    LimitCycleDetector(std::vector<bool> is_angle, Eigen::Index probe, Options opt)
        : is_angle_(std::move(is_angle)), probe_(probe), opt_(opt) {}

    /// Feeds one accepted sample: continuous state p = [z_c; x], its time
    /// derivative dp, and the fast-rate norm. Returns true once a limit
    /// cycle is established.
    bool observe(Real t, const Vector& p, const Vector& dp, Real rate_norm) {
        bool detected = false;
        if (have_prev_) {
            const Real d0 = prev_dp_[probe_];
            const Real d1 = dp[probe_];
            if (d0 > 0.0 && d1 <= 0.0) detected = on_section(t, p, dp, rate_norm);
        }
        trough_ = have_prev_ ? std::min(trough_, p[probe_]) : p[probe_];
        prev_t_ = t;
        prev_p_ = p;
        prev_dp_ = dp;
        have_prev_ = true;
        return detected;
    }

    /// Forgets the sample history (used after discrete jumps).
    void reset_history() {
        have_prev_ = false;
        sections_.clear();
        streak_ = 0;
    }

    [[nodiscard]] int streak() const { return streak_; }

private:
    struct Section {
        Vector point;
        Real amplitude;
    };

    bool on_section(Real t, const Vector& p, const Vector& dp, Real rate_norm) {
        const Real d0 = prev_dp_[probe_];
        const Real d1 = dp[probe_];
        const Real s = d0 / (d0 - d1);
        const Real dt = t - prev_t_;
        const Real s2 = s * s;
        const Real s3 = s2 * s;
        const Real h00 = 2 * s3 - 3 * s2 + 1;
        const Real h10 = s3 - 2 * s2 + s;
        const Real h01 = -2 * s3 + 3 * s2;
        const Real h11 = s3 - s2;
        Vector point = h00 * prev_p_ + h10 * dt * prev_dp_ + h01 * p + h11 * dt * dp;
        const Real amplitude = point[probe_] - trough_;
        trough_ = point[probe_];

        bool is_return = false;
        if (t >= opt_.active_after && rate_norm > opt_.min_rate) {
            for (const auto& prior : sections_) {
                if (distance(point, prior.point) <= opt_.tol && amplitude >= opt_.amplitude_keep * prior.amplitude) {
                    is_return = true;
                    break;
                }
            }
        }
        streak_ = is_return ? streak_ + 1 : 0;
        sections_.push_front({std::move(point), amplitude});
        if (sections_.size() > opt_.history) sections_.pop_back();
        return streak_ >= opt_.needed;
    }

    [[nodiscard]] Real distance(const Vector& a, const Vector& b) const {
        Real d = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            d = std::max(d, std::abs(wrapped_difference(a[i], b[i], is_angle_[static_cast<std::size_t>(i)])));
        }
        return d;
    }

    std::vector<bool> is_angle_;
    Eigen::Index probe_;
    Options opt_;

    bool have_prev_ = false;
    Real prev_t_ = 0.0;
    Vector prev_p_, prev_dp_;
    Real trough_ = std::numeric_limits<Real>::infinity();
    std::deque<Section> sections_;
    int streak_ = 0;
};

}  // namespace qssa::sim
