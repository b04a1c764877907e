#pragma once

// Core value types shared by every module: the variable layout that maps
// device variables onto the (z_c, z_d, x, y) partition, the partitioned
// state itself, and the error hierarchy.

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qssa {

using Real = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// =============================================================================
// Errors
// =============================================================================

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LayoutError : public Error {
public:
    using Error::Error;
};

enum class SolverFailure {
    MaxIterations,
    SingularJacobian,
    NonFiniteEntry,
    NoConvergence,
    SingularDyg,
    EmptyOverlap,
};

[[nodiscard]] inline std::string_view to_string(SolverFailure kind) {
    switch (kind) {
        case SolverFailure::MaxIterations: return "MaxIterations";
        case SolverFailure::SingularJacobian: return "SingularJacobian";
        case SolverFailure::NonFiniteEntry: return "NonFiniteEntry";
        case SolverFailure::NoConvergence: return "NoConvergence";
        case SolverFailure::SingularDyg: return "SingularDyg";
        case SolverFailure::EmptyOverlap: return "EmptyOverlap";
    }
    return "unknown";
}

class SolverError : public Error {
public:
    SolverError(SolverFailure kind, const std::string& what)
        : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] SolverFailure kind() const noexcept { return kind_; }

private:
    SolverFailure kind_;
};

// =============================================================================
// Layout
// =============================================================================

enum class Partition : std::size_t { SlowContinuous = 0, Discrete = 1, Fast = 2, Algebraic = 3 };

inline constexpr std::array<Partition, 4> kPartitions = {
    Partition::SlowContinuous, Partition::Discrete, Partition::Fast, Partition::Algebraic};

[[nodiscard]] inline std::string_view to_string(Partition p) {
    switch (p) {
        case Partition::SlowContinuous: return "z_c";
        case Partition::Discrete: return "z_d";
        case Partition::Fast: return "x";
        case Partition::Algebraic: return "y";
    }
    return "?";
}

struct Slot {
    Partition partition;
    std::size_t index;

    friend bool operator==(const Slot&, const Slot&) = default;
};

/// Names every scalar of a model as `device.variable` and assigns it to
/// exactly one partition. Angle-valued entries are flagged so distances can
/// be taken modulo 2*pi.
class Layout {
public:
    std::size_t add(Partition p, std::string name, bool is_angle = false) {
        if (lookup_.contains(name)) {
            throw LayoutError("duplicate variable name '" + name + "'");
        }
        auto& names = names_[idx(p)];
        const std::size_t i = names.size();
        lookup_.emplace(name, Slot{p, i});
        names.push_back(std::move(name));
        angles_[idx(p)].push_back(is_angle);
        return i;
    }

    [[nodiscard]] std::size_t size(Partition p) const { return names_[idx(p)].size(); }
    [[nodiscard]] std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& v : names_) n += v.size();
        return n;
    }

    [[nodiscard]] const std::vector<std::string>& names(Partition p) const { return names_[idx(p)]; }
    [[nodiscard]] const std::string& name(Partition p, std::size_t i) const { return names_[idx(p)].at(i); }
    [[nodiscard]] bool is_angle(Partition p, std::size_t i) const { return angles_[idx(p)].at(i); }

    [[nodiscard]] std::optional<Slot> find(std::string_view name) const {
        auto it = lookup_.find(std::string(name));
        if (it == lookup_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] Slot at(std::string_view name) const {
        auto s = find(name);
        if (!s) throw LayoutError("unknown variable '" + std::string(name) + "'");
        return *s;
    }

    /// Column order used by every exporter: z_c, z_d, x, y.
    [[nodiscard]] std::vector<std::string> ordered_names() const {
        std::vector<std::string> out;
        out.reserve(total_size());
        for (auto p : kPartitions) {
            out.insert(out.end(), names_[idx(p)].begin(), names_[idx(p)].end());
        }
        return out;
    }

    friend bool operator==(const Layout& a, const Layout& b) { return a.names_ == b.names_; }

private:
    static constexpr std::size_t idx(Partition p) { return static_cast<std::size_t>(p); }

    std::array<std::vector<std::string>, 4> names_;
    std::array<std::vector<bool>, 4> angles_;
    std::unordered_map<std::string, Slot> lookup_;
};

// =============================================================================
// PartitionedState
// =============================================================================

struct PartitionedState {
    Vector zc;
    Vector zd;
    Vector x;
    Vector y;

    [[nodiscard]] static PartitionedState zeros(const Layout& layout) {
        PartitionedState s;
        s.zc = Vector::Zero(static_cast<Eigen::Index>(layout.size(Partition::SlowContinuous)));
        s.zd = Vector::Zero(static_cast<Eigen::Index>(layout.size(Partition::Discrete)));
        s.x = Vector::Zero(static_cast<Eigen::Index>(layout.size(Partition::Fast)));
        s.y = Vector::Zero(static_cast<Eigen::Index>(layout.size(Partition::Algebraic)));
        return s;
    }

    [[nodiscard]] Vector& part(Partition p) {
        switch (p) {
            case Partition::SlowContinuous: return zc;
            case Partition::Discrete: return zd;
            case Partition::Fast: return x;
            case Partition::Algebraic: return y;
        }
        return y;
    }
    [[nodiscard]] const Vector& part(Partition p) const {
        return const_cast<PartitionedState*>(this)->part(p);
    }

    [[nodiscard]] Real& operator[](Slot s) { return part(s.partition)[static_cast<Eigen::Index>(s.index)]; }
    [[nodiscard]] Real operator[](Slot s) const { return part(s.partition)[static_cast<Eigen::Index>(s.index)]; }

    /// Flat copy in exporter order (z_c, z_d, x, y).
    [[nodiscard]] Vector flatten() const {
        Vector out(zc.size() + zd.size() + x.size() + y.size());
        out << zc, zd, x, y;
        return out;
    }

    [[nodiscard]] bool all_finite() const {
        return zc.allFinite() && zd.allFinite() && x.allFinite() && y.allFinite();
    }
};

inline void check_layout(const Layout& layout, const PartitionedState& s) {
    auto check = [&](Partition p, const Vector& v) {
        if (static_cast<std::size_t>(v.size()) != layout.size(p)) {
            throw LayoutError("dimension mismatch in " + std::string(to_string(p)) + ": state has " +
                              std::to_string(v.size()) + ", layout expects " +
                              std::to_string(layout.size(p)));
        }
    };
    check(Partition::SlowContinuous, s.zc);
    check(Partition::Discrete, s.zd);
    check(Partition::Fast, s.x);
    check(Partition::Algebraic, s.y);
}

/// Difference a - b with angle entries wrapped into (-pi, pi].
[[nodiscard]] inline Real wrapped_difference(Real a, Real b, bool is_angle) {
    Real d = a - b;
    if (is_angle) {
        constexpr Real two_pi = 2.0 * std::numbers::pi;
        d = std::remainder(d, two_pi);
    }
    return d;
}

/// Infinity-norm distance over the given partitions, angles taken modulo 2*pi.
[[nodiscard]] inline Real state_distance(const Layout& layout, const PartitionedState& a,
                                         const PartitionedState& b,
                                         std::initializer_list<Partition> parts) {
    Real d = 0.0;
    for (auto p : parts) {
        const Vector& va = a.part(p);
        const Vector& vb = b.part(p);
        for (Eigen::Index i = 0; i < va.size(); ++i) {
            d = std::max(d, std::abs(wrapped_difference(va[i], vb[i],
                                                        layout.is_angle(p, static_cast<std::size_t>(i)))));
        }
    }
    return d;
}

[[nodiscard]] inline Real inf_norm(const Vector& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// Shortest decimal text that parses back to exactly `v`.
[[nodiscard]] inline std::string format_real(Real v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

}  // namespace qssa
