#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>
#include <vector>

#include "correspondence.hpp"

namespace bbcalib {

/// Reprojection statistics in mm. Standard deviations are population
/// standard deviations; per-axis statistics are over absolute component
/// residuals.
struct ErrorStats {
    double mean = 0.0;
    double std = 0.0;
    struct Axis {
        double mean = 0.0;
        double std = 0.0;
    };
    Axis per_axis[3];
    std::size_t n = 0;
};

/// Achieved-vs-target pose discrepancy: Euclidean distance between
/// translations and the relative rotation quaternion.
struct PoseError {
    double displacement = 0.0;
    UnitQuaternion rotation;
};

namespace detail {

// Sorted accumulation keeps the statistics exactly invariant under
// permutation of the input.
inline std::pair<double, double> sorted_mean_std(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values)
        var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

inline ErrorStats stats_from_residuals(const std::vector<Point3>& residuals) {
    ErrorStats s;
    s.n = residuals.size();
    std::vector<double> norms(s.n);
    for (std::size_t i = 0; i < s.n; ++i)
        norms[i] = residuals[i].norm();
    std::tie(s.mean, s.std) = sorted_mean_std(norms);
    for (int a = 0; a < 3; ++a) {
        std::vector<double> comps(s.n);
        for (std::size_t i = 0; i < s.n; ++i)
            comps[i] = std::abs(residuals[i](a));
        std::tie(s.per_axis[a].mean, s.per_axis[a].std) = sorted_mean_std(comps);
    }
    return s;
}

} // namespace detail

inline ErrorStats reprojection_error(const Transform& t,
                                     const std::vector<PointCorrespondence>& cs) {
    if (cs.empty())
        throw TooFewPoints("reprojection_error: empty correspondence set");
    std::vector<Point3> residuals;
    residuals.reserve(cs.size());
    for (const auto& c : cs)
        residuals.push_back(c.p - t.map(c.q));
    return detail::stats_from_residuals(residuals);
}

/// Markley-style quaternion mean: dominant eigenvector of the sum of outer
/// products of the quaternion 4-vectors. Sign flips of inputs do not change
/// the result.
inline UnitQuaternion average_quaternion(const std::vector<UnitQuaternion>& qs) {
    if (qs.empty())
        throw TooFewPoints("average_quaternion: empty input");
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    for (const auto& q : qs) {
        const Eigen::Vector4d v = q.wxyz();
        m += v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m);
    const auto& ev = es.eigenvalues(); // ascending
    if (ev(3) - ev(2) <= 1e-12 * std::max(1.0, ev(3)))
        throw AmbiguousAverage("average_quaternion: top eigenvalues coincide");
    const Eigen::Vector4d v = es.eigenvectors().col(3);
    return UnitQuaternion(v(0), v(1), v(2), v(3));
}

inline PoseError pose_error(const RigidTransform& achieved, const RigidTransform& target) {
    PoseError e;
    e.displacement = (achieved.translation - target.translation).norm();
    e.rotation = target.rotation.conjugate() * achieved.rotation;
    return e;
}

inline UnitQuaternion summarize_rotation_errors(const std::vector<PoseError>& es) {
    if (es.empty())
        throw TooFewPoints("summarize_rotation_errors: empty input");
    std::vector<UnitQuaternion> qs;
    qs.reserve(es.size());
    for (const auto& e : es)
        qs.push_back(e.rotation);
    return average_quaternion(qs);
}

/// "(0.999, 0.005, 0.002, 0.007)"-style report formatting.
inline std::string format_quaternion(const UnitQuaternion& q) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "(%.3f, %.3f, %.3f, %.3f)", q.w(), q.x(), q.y(), q.z());
    return buf;
}

} // namespace bbcalib
