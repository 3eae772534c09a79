#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "metrics.hpp"

namespace bbcalib {

struct RansacConfig {
    double inlier_threshold = 5.0; // mm
    int max_iterations = 500;
    double min_inlier_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(inlier_threshold > 0.0))
            throw Error("RansacConfig: inlier_threshold must be > 0");
        if (max_iterations < 1)
            throw Error("RansacConfig: max_iterations must be >= 1");
        if (!(min_inlier_fraction > 0.0) || min_inlier_fraction > 1.0)
            throw Error("RansacConfig: min_inlier_fraction must be in (0,1]");
    }
};

struct EstimationResult {
    Transform transform;
    std::vector<bool> inlier_mask;
    ErrorStats train_residual;
};

namespace detail {

inline Eigen::Matrix3Xd stack_q(const std::vector<PointCorrespondence>& cs) {
    Eigen::Matrix3Xd m(3, cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i)
        m.col(static_cast<Eigen::Index>(i)) = cs[i].q;
    return m;
}

inline Eigen::Matrix3Xd stack_p(const std::vector<PointCorrespondence>& cs) {
    Eigen::Matrix3Xd m(3, cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i)
        m.col(static_cast<Eigen::Index>(i)) = cs[i].p;
    return m;
}

// Similarity normalization for the DLT: centroid to the origin, mean
// distance sqrt(3). Returns the 4x4 normalizing transform.
inline HomogeneousMatrix similarity_normalization(const Eigen::Matrix3Xd& pts) {
    const Point3 centroid = pts.rowwise().mean();
    double mean_dist = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
        mean_dist += (pts.col(i) - centroid).norm();
    mean_dist /= static_cast<double>(pts.cols());
    const double s = mean_dist > 0.0 ? std::sqrt(3.0) / mean_dist : 1.0;
    HomogeneousMatrix t = HomogeneousMatrix::Identity();
    t.topLeftCorner<3, 3>() *= s;
    t.topRightCorner<3, 1>() = -s * centroid;
    return t;
}

} // namespace detail

/// Closed-form least-squares rigid alignment (Arun's absolute orientation):
/// SVD of the centered cross-covariance with determinant correction.
inline Transform estimate_isometric(const std::vector<PointCorrespondence>& cs) {
    const auto n = static_cast<Eigen::Index>(cs.size());
    if (n < 3)
        throw TooFewPoints("estimate_isometric: need at least 3 correspondences");
    const Eigen::Matrix3Xd q = detail::stack_q(cs);
    const Eigen::Matrix3Xd p = detail::stack_p(cs);
    const Point3 q_bar = q.rowwise().mean();
    const Point3 p_bar = p.rowwise().mean();
    const Eigen::Matrix3Xd qc = q.colwise() - q_bar;
    const Eigen::Matrix3Xd pc = p.colwise() - p_bar;

    {
        Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(qc);
        const auto& sv = svd.singularValues();
        if (sv(1) <= 1e-8 * sv(0))
            throw DegenerateConfiguration("estimate_isometric: collinear points");
    }

    const Eigen::Matrix3d h = qc * pc.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    if ((v * u.transpose()).determinant() < 0.0)
        v.col(2) = -v.col(2);
    const Eigen::Matrix3d r = v * u.transpose();
    const Point3 t = p_bar - r * q_bar;

    Transform out;
    out.model = ModelClass::isometric;
    out.matrix.setIdentity();
    out.matrix.topLeftCorner<3, 3>() = r;
    out.matrix.topRightCorner<3, 1>() = t;
    return out;
}

/// 12-parameter linear least squares; for the affine model the algebraic and
/// geometric errors coincide, so no iteration is needed.
inline Transform estimate_affine(const std::vector<PointCorrespondence>& cs) {
    const auto n = static_cast<Eigen::Index>(cs.size());
    if (n < 4)
        throw TooFewPoints("estimate_affine: need at least 4 correspondences");
    Eigen::MatrixXd d(n, 4);
    Eigen::MatrixXd rhs(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& c = cs[static_cast<std::size_t>(i)];
        d.row(i) << c.q.x(), c.q.y(), c.q.z(), 1.0;
        rhs.row(i) = c.p.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(3) <= 1e-8 * sv(0))
        throw DegenerateConfiguration("estimate_affine: coplanar points");
    const Eigen::MatrixXd x = svd.solve(rhs); // 4x3

    Transform out;
    out.model = ModelClass::affine;
    out.matrix.setIdentity();
    out.matrix.topLeftCorner<3, 4>() = x.transpose();
    return out;
}

/// DLT for the full 15-parameter projective model. Both point sets are
/// similarity-normalized, each correspondence contributes the 3 equations
/// obtained by eliminating the homogeneous scale, and the solution is the
/// smallest-singular-value right singular vector of the stacked 3n x 16
/// system. Result is scale-canonical (Frobenius norm 1).
inline Transform estimate_perspective(const std::vector<PointCorrespondence>& cs) {
    const auto n = static_cast<Eigen::Index>(cs.size());
    if (n < 5)
        throw TooFewPoints("estimate_perspective: need at least 5 correspondences");
    const HomogeneousMatrix sq = detail::similarity_normalization(detail::stack_q(cs));
    const HomogeneousMatrix sp = detail::similarity_normalization(detail::stack_p(cs));

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * n, 16);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& c = cs[static_cast<std::size_t>(i)];
        const Eigen::Vector4d qh = sq * c.q.homogeneous();
        const Eigen::Vector4d ph = sp * c.p.homogeneous();
        for (int row = 0; row < 3; ++row) {
            m.block<1, 4>(3 * i + row, 4 * row) = qh.transpose();
            m.block<1, 4>(3 * i + row, 12) = -ph(row) * qh.transpose();
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(14) <= 1e-8 * sv(0))
        throw DegenerateConfiguration("estimate_perspective: degenerate configuration");
    const Eigen::VectorXd t_vec = svd.matrixV().col(15);

    HomogeneousMatrix t_norm;
    for (int r = 0; r < 4; ++r)
        t_norm.row(r) = t_vec.segment<4>(4 * r).transpose();

    Transform out;
    out.model = ModelClass::perspective;
    out.matrix = canonical_scale(sp.inverse() * t_norm * sq);
    return out;
}

inline Transform estimate(ModelClass model, const std::vector<PointCorrespondence>& cs) {
    switch (model) {
    case ModelClass::isometric: return estimate_isometric(cs);
    case ModelClass::affine: return estimate_affine(cs);
    default: return estimate_perspective(cs);
    }
}

/// RANSAC over the reprojection error. Deterministic given cfg.seed; the
/// winning consensus set is refit with the plain estimator.
inline EstimationResult ransac_estimate(const std::vector<PointCorrespondence>& cs,
                                        ModelClass model, const RansacConfig& cfg) {
    cfg.validate();
    const std::size_t n = cs.size();
    const std::size_t k = static_cast<std::size_t>(min_sample_size(model));
    if (n < k)
        throw TooFewPoints("ransac_estimate: fewer correspondences than minimal sample");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    const auto residual = [&](const Transform& t, const PointCorrespondence& c) {
        try {
            return (c.p - t.map(c.q)).norm();
        } catch (const NearInfinityPoint&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<bool> best_mask;
    std::size_t best_count = 0;
    double best_mean = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> sample(k);
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t idx;
            bool dup;
            do {
                idx = pick(rng);
                dup = std::find(sample.begin(), sample.begin() + static_cast<long>(i), idx) !=
                      sample.begin() + static_cast<long>(i);
            } while (dup);
            sample[i] = idx;
        }
        std::vector<PointCorrespondence> subset(k);
        for (std::size_t i = 0; i < k; ++i)
            subset[i] = cs[sample[i]];

        Transform candidate;
        try {
            candidate = estimate(model, subset);
        } catch (const Error&) {
            continue; // degenerate minimal sample
        }

        std::vector<bool> mask(n, false);
        std::size_t count = 0;
        double err_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = residual(candidate, cs[i]);
            if (e < cfg.inlier_threshold) {
                mask[i] = true;
                ++count;
                err_sum += e;
            }
        }
        const double mean = count > 0 ? err_sum / static_cast<double>(count)
                                      : std::numeric_limits<double>::infinity();
        if (count > best_count || (count == best_count && mean < best_mean)) {
            best_count = count;
            best_mean = mean;
            best_mask = std::move(mask);
        }
    }

    const auto required = std::max(
        k, static_cast<std::size_t>(std::ceil(cfg.min_inlier_fraction * static_cast<double>(n))));
    if (best_count < required)
        throw NoConsensus("ransac_estimate: best inlier fraction below minimum");

    std::vector<PointCorrespondence> inliers;
    inliers.reserve(best_count);
    for (std::size_t i = 0; i < n; ++i)
        if (best_mask[i])
            inliers.push_back(cs[i]);

    EstimationResult result;
    result.transform = estimate(model, inliers);
    result.inlier_mask = std::move(best_mask);
    result.train_residual = reprojection_error(result.transform, inliers);
    return result;
}

struct PivotResult {
    Point3 tip_offset{0, 0, 0};  // marker-body frame
    Point3 pivot_point{0, 0, 0}; // tracker frame
    double rms_residual = 0.0;   // mm
};

/// Least-squares pivot calibration: stacks [R_i | -I]*[tip; pivot] = -t_i
/// over all poses.
inline PivotResult pivot_calibration(const std::vector<RigidTransform>& poses) {
    const auto n = static_cast<Eigen::Index>(poses.size());
    if (n < 3)
        throw TooFewPoints("pivot_calibration: need at least 3 poses");

    Eigen::MatrixXd a(3 * n, 6);
    Eigen::VectorXd b(3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& g = poses[static_cast<std::size_t>(i)];
        a.block<3, 3>(3 * i, 0) = g.rotation.to_rotation_matrix();
        a.block<3, 3>(3 * i, 3) = -Eigen::Matrix3d::Identity();
        b.segment<3>(3 * i) = -g.translation;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(5) <= 1e-8 * sv(0))
        throw DegenerateMotion("pivot_calibration: rotations span fewer than 2 axes");
    const Eigen::VectorXd x = svd.solve(b);

    PivotResult r;
    r.tip_offset = x.head<3>();
    r.pivot_point = x.tail<3>();
    r.rms_residual = std::sqrt((a * x - b).squaredNorm() / static_cast<double>(3 * n));
    return r;
}

} // namespace bbcalib
