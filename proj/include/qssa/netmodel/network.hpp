#pragma once

#include "qssa/core.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace qssa::net {

using Complex = std::complex<Real>;
using ComplexMatrix = Eigen::MatrixXcd;

enum class BusType { PQ, Slack };

struct Bus {
    int id = 0;
    BusType type = BusType::PQ;
    Real v = 1.0;      // initial magnitude, p.u. (set-point for the slack bus)
    Real theta = 0.0;  // initial angle, rad
    // Static load p_load * v^alpha_p + j q_load * v^alpha_q.
    Real p_load = 0.0;
    Real q_load = 0.0;
    Real alpha_p = 0.0;
    Real alpha_q = 0.0;
};

/// Pi-model branch with an off-nominal ratio on the `from` side: the series
/// impedance sees V_from / tap.
struct Branch {
    int from = 0;
    int to = 0;
    Real r = 0.0;
    Real x = 0.1;
    Real b = 0.0;
    Real tap = 1.0;
    bool in_service = true;
};

struct BranchAdmittance {
    Complex ff, ft, tf, tt;
};

[[nodiscard]] inline BranchAdmittance branch_admittance(const Branch& br, Real tap) {
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex half_shunt(0.0, br.b / 2.0);
    return {(ys + half_shunt) / (tap * tap), -ys / tap, -ys / tap, ys + half_shunt};
}

class Network {
public:
    Network() = default;
    Network(std::vector<Bus> buses, std::vector<Branch> branches)
        : buses_(std::move(buses)), branches_(std::move(branches)) {
        for (std::size_t i = 0; i < buses_.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (buses_[i].id == buses_[j].id) {
                    throw LayoutError("duplicate bus id " + std::to_string(buses_[i].id));
                }
            }
        }
        from_idx_.reserve(branches_.size());
        to_idx_.reserve(branches_.size());
        for (const auto& br : branches_) {
            from_idx_.push_back(index_of(br.from));
            to_idx_.push_back(index_of(br.to));
        }
    }

    [[nodiscard]] const std::vector<Bus>& buses() const { return buses_; }
    [[nodiscard]] const std::vector<Branch>& branches() const { return branches_; }
    [[nodiscard]] std::size_t bus_count() const { return buses_.size(); }

    [[nodiscard]] std::size_t index_of(int bus_id) const {
        for (std::size_t i = 0; i < buses_.size(); ++i) {
            if (buses_[i].id == bus_id) return i;
        }
        throw LayoutError("branch or device references unknown bus " + std::to_string(bus_id));
    }

    [[nodiscard]] std::size_t from_index(std::size_t branch) const { return from_idx_.at(branch); }
    [[nodiscard]] std::size_t to_index(std::size_t branch) const { return to_idx_.at(branch); }

    /// Bus admittance matrix for the given effective branch taps (one per
    /// branch; out-of-service branches contribute nothing).
    [[nodiscard]] ComplexMatrix admittance(std::span<const Real> taps) const {
        const auto n = static_cast<Eigen::Index>(buses_.size());
        ComplexMatrix y = ComplexMatrix::Zero(n, n);
        for (std::size_t k = 0; k < branches_.size(); ++k) {
            if (!branches_[k].in_service) continue;
            const auto a = branch_admittance(branches_[k], taps[k]);
            const auto f = static_cast<Eigen::Index>(from_idx_[k]);
            const auto t = static_cast<Eigen::Index>(to_idx_[k]);
            y(f, f) += a.ff;
            y(f, t) += a.ft;
            y(t, f) += a.tf;
            y(t, t) += a.tt;
        }
        return y;
    }

    [[nodiscard]] ComplexMatrix admittance() const { return admittance(nominal_taps()); }

    [[nodiscard]] std::vector<Real> nominal_taps() const {
        std::vector<Real> taps;
        taps.reserve(branches_.size());
        for (const auto& br : branches_) taps.push_back(br.tap);
        return taps;
    }

    /// Complex power injected into the network at every bus,
    /// S_i = V_i * conj(sum_j Y_ij V_j), accumulated branch by branch.
    void injections(std::span<const Real> v, std::span<const Real> theta, std::span<const Real> taps,
                    std::span<Real> p_out, std::span<Real> q_out) const {
        std::vector<Complex> phasor(buses_.size());
        for (std::size_t i = 0; i < buses_.size(); ++i) phasor[i] = std::polar(v[i], theta[i]);
        std::fill(p_out.begin(), p_out.end(), 0.0);
        std::fill(q_out.begin(), q_out.end(), 0.0);
        for (std::size_t k = 0; k < branches_.size(); ++k) {
            if (!branches_[k].in_service) continue;
            const auto a = branch_admittance(branches_[k], taps[k]);
            const std::size_t f = from_idx_[k];
            const std::size_t t = to_idx_[k];
            const Complex s_from = phasor[f] * std::conj(a.ff * phasor[f] + a.ft * phasor[t]);
            const Complex s_to = phasor[t] * std::conj(a.tf * phasor[f] + a.tt * phasor[t]);
            p_out[f] += s_from.real();
            q_out[f] += s_from.imag();
            p_out[t] += s_to.real();
            q_out[t] += s_to.imag();
        }
    }

private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<std::size_t> from_idx_;
    std::vector<std::size_t> to_idx_;
};

}  // namespace qssa::net
