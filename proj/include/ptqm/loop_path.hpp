#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ptqm/metric_dynamics.hpp"
#include "ptqm/pt_model.hpp"
#include "ptqm/types.hpp"

namespace ptqm {

/// A closed, piecewise-smooth curve in the (theta, phi) manifold with the
/// remaining parameters (epsilon, a, b, delta) held fixed.
///
/// All three kinds share one internal representation: a vertex polyline in the
/// (theta, phi) plane traversed at uniform speed with respect to flat
/// arclength. phi is stored unwrapped, so the winding number is the net
/// (phi_end - phi_start)/2pi. A single-vertex path is a valid zero-length
/// (static) "loop".
class LoopPath {
public:
    enum class Kind { latitude, polygon, custom };

    /// Fixed-latitude loop theta = theta0, phi: phi0 -> phi0 + 2*pi*winding.
    static LoopPath latitude(const ParamPoint& base, double theta0, int winding = 1,
                             double phi0 = 0.0) {
        std::vector<std::pair<double, double>> verts;
        if (winding == 0) {
            verts = {{theta0, phi0}};
        } else {
            verts = {{theta0, phi0}, {theta0, phi0 + 2.0 * pi * winding}};
        }
        return LoopPath(base, Kind::latitude, std::move(verts));
    }

    /// Piecewise-linear loop through the given (theta, phi) vertices. The list
    /// must close: equal theta at both ends, phi ends differing by a whole
    /// number of turns.
    static LoopPath polygon(const ParamPoint& base,
                            std::vector<std::pair<double, double>> vertices) {
        return LoopPath(base, Kind::polygon, std::move(vertices));
    }

    /// Sampled closed curve, interpolated linearly between samples.
    static LoopPath custom(const ParamPoint& base,
                           std::vector<std::pair<double, double>> samples) {
        return LoopPath(base, Kind::custom, std::move(samples));
    }

    Kind kind() const { return kind_; }
    const ParamPoint& base() const { return base_; }
    int winding() const { return winding_; }
    double length() const { return cum_.back(); }
    bool zero_length() const { return length() == 0.0; }
    const std::vector<std::pair<double, double>>& vertices() const { return verts_; }

    /// (theta, phi) at normalized arclength s in [0, 1].
    std::pair<double, double> angles_at(double s) const {
        if (zero_length()) return verts_.front();
        const double target = std::clamp(s, 0.0, 1.0) * length();
        const std::size_t seg = segment_at(target);
        const double len = cum_[seg + 1] - cum_[seg];
        const double t = len > 0.0 ? (target - cum_[seg]) / len : 0.0;
        return {verts_[seg].first + t * (verts_[seg + 1].first - verts_[seg].first),
                verts_[seg].second + t * (verts_[seg + 1].second - verts_[seg].second)};
    }

    /// Full parameter point at normalized arclength s.
    ParamPoint at(double s) const {
        const auto [th, ph] = angles_at(s);
        return base_.at_angles(th, ph);
    }

    /// d(theta, phi)/ds at normalized arclength s (constant per segment).
    TangentVector tangent(double s) const {
        if (zero_length()) return TangentVector{0.0, 0.0};
        const double target = std::clamp(s, 0.0, 1.0) * length();
        const std::size_t seg = segment_at(target);
        const double len = cum_[seg + 1] - cum_[seg];
        if (len <= 0.0) return TangentVector{0.0, 0.0};
        const double scale = length() / len;
        return TangentVector{(verts_[seg + 1].first - verts_[seg].first) * scale,
                             (verts_[seg + 1].second - verts_[seg].second) * scale};
    }

    /// Scans N^2 of the given branch along the path; throws gauge_singular_error
    /// if any sample sits inside the gauge cut.
    void check_nonsingular(Branch branch, const Tolerances& tol = {},
                           int samples = 1024) const {
        for (int i = 0; i <= samples; ++i) {
            const ParamPoint x = at(static_cast<double>(i) / samples);
            const auto parts = detail::eig_vector_parts(x, branch);
            if (parts.bracket < tol.gauge_cut)
                throw gauge_singular_error("LoopPath: branch " +
                                           std::string(to_string(branch)) +
                                           " is gauge singular near " + x.describe());
        }
    }

private:
    LoopPath(const ParamPoint& base, Kind kind,
             std::vector<std::pair<double, double>> verts)
        : base_(base), kind_(kind), verts_(std::move(verts)) {
        if (verts_.empty()) throw std::invalid_argument("LoopPath: no vertices");
        for (auto& [th, ph] : verts_) {
            if (!std::isfinite(th) || !std::isfinite(ph))
                throw std::invalid_argument("LoopPath: non-finite vertex");
            th = std::clamp(th, 0.0, pi);
        }
        const double dphi = verts_.back().second - verts_.front().second;
        winding_ = static_cast<int>(std::lround(dphi / (2.0 * pi)));
        constexpr double closure_tol = 1e-9;
        if (std::abs(verts_.back().first - verts_.front().first) > closure_tol ||
            std::abs(dphi - 2.0 * pi * winding_) > closure_tol)
            throw std::invalid_argument("LoopPath: path is not closed");
        cum_.resize(verts_.size());
        cum_[0] = 0.0;
        for (std::size_t i = 1; i < verts_.size(); ++i) {
            const double dth = verts_[i].first - verts_[i - 1].first;
            const double dph = verts_[i].second - verts_[i - 1].second;
            cum_[i] = cum_[i - 1] + std::hypot(dth, dph);
        }
    }

    std::size_t segment_at(double target) const {
        // cum_ is nondecreasing; find the segment containing target arclength
        std::size_t lo = 0, hi = cum_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (cum_[mid] <= target)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    ParamPoint base_;
    Kind kind_;
    std::vector<std::pair<double, double>> verts_;
    std::vector<double> cum_;
    int winding_ = 0;
};

}  // namespace ptqm
