#pragma once

#include <optional>
#include <random>
#include <vector>

#include "estimators.hpp"

namespace bbcalib {

/// Calibration workspace: a frustum centered on the viewing axis, square
/// cross sections whose areas are given at the near and far planes.
struct WorkspaceFrustum {
    double near_area_cm2 = 110.88;
    double far_area_cm2 = 38.88;
    double depth_range_cm = 12.0;
    double center_distance_mm = 500.0;

    double depth_mm() const { return depth_range_cm * 10.0; }
    double near_side_mm() const { return std::sqrt(near_area_cm2) * 10.0; }
    double far_side_mm() const { return std::sqrt(far_area_cm2) * 10.0; }

    /// Side length of the cross section at depth fraction w in [0,1]
    /// (0 = near plane).
    double side_at(double w) const {
        return near_side_mm() + w * (far_side_mm() - near_side_mm());
    }

    bool contains(const Point3& p, double tol = 1e-9) const {
        const double z0 = center_distance_mm - 0.5 * depth_mm();
        const double w = (p.z() - z0) / depth_mm();
        if (w < -tol || w > 1.0 + tol)
            return false;
        const double half = 0.5 * side_at(std::clamp(w, 0.0, 1.0));
        return std::abs(p.x()) <= half + tol && std::abs(p.y()) <= half + tol;
    }
};

/// Observation noise applied to display-space points, componentwise in the
/// viewing frame (z = line of sight, hence the separate depth sigma).
struct NoiseModel {
    double sigma_xy = 0.0;            // mm
    double sigma_z = 0.0;             // mm
    double outlier_probability = 0.0; // in [0,1)
    double outlier_magnitude = 0.0;   // mm
    double multipoint_pose_sigma = 0.0; // mm, shared per-pose rigid perturbation
    std::uint64_t seed = 0;
};

enum class Scenario { head_anchored, world_anchored };

struct GroundTruth {
    Transform transform;
    Scenario scenario = Scenario::head_anchored;
    double drift_sigma_mm = 0.0;   // per-placement head-pose translation drift
    double drift_sigma_mrad = 0.0; // per-placement head-pose rotation drift
};

struct CalibrationSession {
    std::vector<PointCorrespondence> correspondences;
    double cube_edge = 50.8; // mm (2 inch cube)
    std::optional<GroundTruth> ground_truth;
    WorkspaceFrustum workspace;
    NoiseModel noise;

    std::vector<PointCorrespondence> phase_points(Phase ph) const {
        std::vector<PointCorrespondence> out;
        for (const auto& c : correspondences)
            if (c.phase == ph)
                out.push_back(c);
        return out;
    }
};

enum class GroundTruthPreset { rigid, rigid_scale, rigid_shear, mild_perspective };

namespace detail {

constexpr std::uint64_t kNoiseStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kDriftStream = 0xc2b2ae3d27d4eb4fULL;

inline UnitQuaternion random_unit_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    double w, x, y, z, norm;
    do {
        w = n(rng); x = n(rng); y = n(rng); z = n(rng);
        norm = std::sqrt(w * w + x * x + y * y + z * z);
    } while (norm < 1e-6);
    return UnitQuaternion(w, x, y, z);
}

inline Point3 random_unit_vector(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Point3 v;
    do {
        v = Point3(n(rng), n(rng), n(rng));
    } while (v.norm() < 1e-6);
    return v.normalized();
}

inline Point3 gaussian_noise(std::mt19937_64& rng, double sigma_xy, double sigma_z) {
    if (sigma_xy == 0.0 && sigma_z == 0.0)
        return Point3::Zero();
    std::normal_distribution<double> n(0.0, 1.0);
    return {sigma_xy * n(rng), sigma_xy * n(rng), sigma_z * n(rng)};
}

/// One noisy display-space observation of an ideal point.
inline Point3 observe(std::mt19937_64& rng, const Point3& ideal, const NoiseModel& nm) {
    Point3 p = ideal + gaussian_noise(rng, nm.sigma_xy, nm.sigma_z);
    if (nm.outlier_probability > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < nm.outlier_probability)
            p += nm.outlier_magnitude * random_unit_vector(rng);
    }
    return p;
}

} // namespace detail

inline Transform make_ground_truth_transform(GroundTruthPreset preset, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const UnitQuaternion rot = detail::random_unit_quaternion(rng);
    const Point3 t(200.0 * u(rng), 200.0 * u(rng), 200.0 * u(rng));
    HomogeneousMatrix m = RigidTransform(rot, t).to_matrix();

    Transform out;
    switch (preset) {
    case GroundTruthPreset::rigid:
        out.model = ModelClass::isometric;
        break;
    case GroundTruthPreset::rigid_scale: {
        HomogeneousMatrix s = HomogeneousMatrix::Identity();
        s.topLeftCorner<3, 3>() *= 1.05;
        m = m * s;
        out.model = ModelClass::affine;
        break;
    }
    case GroundTruthPreset::rigid_shear: {
        HomogeneousMatrix s = HomogeneousMatrix::Identity();
        s(0, 1) = 0.05 + 0.05 * u(rng);
        s(1, 2) = 0.05 + 0.05 * u(rng);
        m = m * s;
        out.model = ModelClass::affine;
        break;
    }
    case GroundTruthPreset::mild_perspective: {
        for (int c = 0; c < 3; ++c)
            m(3, c) = 2e-4 * u(rng);
        out.model = ModelClass::perspective;
        break;
    }
    }
    out.matrix = out.model == ModelClass::perspective ? canonical_scale(m) : m;
    return out;
}

/// Corners of an axis-aligned cube with one corner at the origin.
/// Indices 0-4 are the multipoint alignment subset: the origin corner, its
/// three edge neighbors, and the xy-face diagonal. 5-7 complete the cube.
inline std::vector<Point3> cube_corners(double edge) {
    if (!(edge > 0.0))
        throw Error("cube_corners: edge must be positive");
    const double e = edge;
    return {{0, 0, 0}, {e, 0, 0}, {0, e, 0}, {0, 0, e},
            {e, e, 0}, {e, 0, e}, {0, e, e}, {e, e, e}};
}

/// Stratified frustum sampling: the unit cube is split into a grid, n cells
/// are chosen, and one uniformly jittered point is drawn per cell. margin_mm
/// shrinks the frustum on every side so nearby geometry stays inside.
inline std::vector<Point3> sample_frustum_points(const WorkspaceFrustum& ws, std::size_t n,
                                                 std::mt19937_64& rng, double margin_mm = 0.0) {
    const auto g = static_cast<std::size_t>(
        std::ceil(std::cbrt(static_cast<double>(std::max<std::size_t>(n, 1)))));
    std::vector<std::size_t> cells(g * g * g);
    for (std::size_t i = 0; i < cells.size(); ++i)
        cells[i] = i;
    std::shuffle(cells.begin(), cells.end(), rng);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double depth = std::max(ws.depth_mm() - 2.0 * margin_mm, 0.0);
    const double z0 = ws.center_distance_mm - 0.5 * depth;

    std::vector<Point3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = cells[i % cells.size()];
        const double cu = (static_cast<double>(cell % g) + u(rng)) / static_cast<double>(g);
        const double cv = (static_cast<double>((cell / g) % g) + u(rng)) / static_cast<double>(g);
        const double cw = (static_cast<double>(cell / (g * g)) + u(rng)) / static_cast<double>(g);
        const double side = std::max(ws.side_at(cw) - 2.0 * margin_mm, 0.0);
        pts.emplace_back((cu - 0.5) * side, (cv - 0.5) * side, z0 + cw * depth);
    }
    return pts;
}

/// Standard single-point protocol: n_train alignments spread over the
/// workspace plus n_test held-out samples. Deterministic per nm.seed.
inline CalibrationSession generate_single_point_session(const GroundTruth& gt,
                                                        const WorkspaceFrustum& ws,
                                                        const NoiseModel& nm,
                                                        std::size_t n_train = 20,
                                                        std::size_t n_test = 8) {
    if (n_train < 5)
        throw TooFewPoints("generate_single_point_session: n_train must be >= 5");
    std::mt19937_64 rng_sample(nm.seed);
    std::mt19937_64 rng_noise(nm.seed ^ detail::kNoiseStream);
    const auto pts = sample_frustum_points(ws, n_train + n_test, rng_sample);

    CalibrationSession s;
    s.ground_truth = gt;
    s.workspace = ws;
    s.noise = nm;
    s.correspondences.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        PointCorrespondence c;
        c.q = pts[i];
        c.p = detail::observe(rng_noise, gt.transform.map(pts[i]), nm);
        c.phase = i < n_train ? Phase::train : Phase::test;
        c.pose_id = static_cast<int>(i);
        s.correspondences.push_back(c);
    }
    return s;
}

/// Multipoint protocol: n_poses cube placements, 5 corners each, a shared
/// rigid perturbation per pose (correlated error) plus independent
/// per-corner noise, then n_test held-out single-point samples.
inline CalibrationSession generate_multipoint_session(const GroundTruth& gt,
                                                      const WorkspaceFrustum& ws,
                                                      const NoiseModel& nm,
                                                      std::size_t n_poses = 4,
                                                      double cube_edge = 50.8,
                                                      std::size_t n_test = 8) {
    if (n_poses < 2)
        throw TooFewPoints("generate_multipoint_session: n_poses must be >= 2");
    std::mt19937_64 rng_sample(nm.seed);
    std::mt19937_64 rng_noise(nm.seed ^ detail::kNoiseStream);

    const double margin = cube_edge * std::sqrt(3.0);
    const auto centers = sample_frustum_points(ws, n_poses, rng_sample, margin);
    const auto corners = cube_corners(cube_edge);

    CalibrationSession s;
    s.cube_edge = cube_edge;
    s.ground_truth = gt;
    s.workspace = ws;
    s.noise = nm;

    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t pose = 0; pose < n_poses; ++pose) {
        const RigidTransform placement(detail::random_unit_quaternion(rng_sample),
                                       centers[pose]);
        std::vector<Point3> ideal(5);
        Point3 centroid = Point3::Zero();
        for (int corner = 0; corner < 5; ++corner) {
            // corners sit around the placement origin; centered so the cube
            // body stays within the margin-shrunken frustum
            const Point3 local = corners[static_cast<std::size_t>(corner)] -
                                 Point3::Constant(cube_edge / 2.0);
            ideal[static_cast<std::size_t>(corner)] =
                gt.transform.map(placement.apply(local));
            centroid += ideal[static_cast<std::size_t>(corner)] / 5.0;
        }

        // shared per-pose rigid perturbation about the corner centroid
        RigidTransform pert;
        if (nm.multipoint_pose_sigma > 0.0) {
            const Point3 dt(nm.multipoint_pose_sigma * n01(rng_noise),
                            nm.multipoint_pose_sigma * n01(rng_noise),
                            nm.multipoint_pose_sigma * n01(rng_noise));
            const double angle = (nm.multipoint_pose_sigma / 100.0) * n01(rng_noise);
            pert = RigidTransform(
                UnitQuaternion::from_axis_angle(detail::random_unit_vector(rng_noise), angle),
                dt);
        }

        for (int corner = 0; corner < 5; ++corner) {
            PointCorrespondence c;
            const Point3 local = corners[static_cast<std::size_t>(corner)] -
                                 Point3::Constant(cube_edge / 2.0);
            c.q = placement.apply(local);
            const Point3& id_p = ideal[static_cast<std::size_t>(corner)];
            const Point3 perturbed = pert.apply(id_p - centroid) + centroid;
            c.p = perturbed + detail::gaussian_noise(rng_noise, nm.sigma_xy, nm.sigma_z);
            c.phase = Phase::train;
            c.pose_id = static_cast<int>(pose);
            c.corner_id = corner;
            s.correspondences.push_back(c);
        }
    }

    const auto test_pts = sample_frustum_points(ws, n_test, rng_sample);
    for (std::size_t i = 0; i < n_test; ++i) {
        PointCorrespondence c;
        c.q = test_pts[i];
        c.p = detail::observe(rng_noise, gt.transform.map(test_pts[i]), nm);
        c.phase = Phase::test;
        c.pose_id = static_cast<int>(n_poses + i);
        s.correspondences.push_back(c);
    }
    return s;
}

/// World-anchored chain: a fixed tracker pose in the world (g_we), a
/// per-placement head pose perturbed around nominal_head, and alignment
/// points expressed through head⁻¹·g_we into the display-tracker frame.
/// The recorded q carries the head-pose drift; the displayed p does not.
inline std::vector<PointCorrespondence>
simulate_world_anchored_chain(const GroundTruth& gt, const NoiseModel& nm,
                              const RigidTransform& g_we, const RigidTransform& nominal_head,
                              const std::vector<Point3>& placements) {
    std::mt19937_64 rng_noise(nm.seed ^ detail::kNoiseStream);
    std::mt19937_64 rng_drift(nm.seed ^ detail::kDriftStream);
    std::normal_distribution<double> n01(0.0, 1.0);

    std::vector<PointCorrespondence> out;
    out.reserve(placements.size());
    for (std::size_t i = 0; i < placements.size(); ++i) {
        RigidTransform head = nominal_head;
        if (gt.drift_sigma_mm > 0.0 || gt.drift_sigma_mrad > 0.0) {
            const Point3 dt(gt.drift_sigma_mm * n01(rng_drift),
                            gt.drift_sigma_mm * n01(rng_drift),
                            gt.drift_sigma_mm * n01(rng_drift));
            const double angle = (gt.drift_sigma_mrad / 1000.0) * n01(rng_drift);
            head = head * RigidTransform(
                UnitQuaternion::from_axis_angle(detail::random_unit_vector(rng_drift), angle),
                dt);
        }

        const RigidTransform chain_true = invert_rigid(nominal_head) * g_we;
        const RigidTransform chain_drifted = invert_rigid(head) * g_we;

        PointCorrespondence c;
        c.q = chain_drifted.apply(placements[i]);
        c.p = detail::observe(rng_noise, gt.transform.map(chain_true.apply(placements[i])), nm);
        c.phase = Phase::train;
        c.pose_id = static_cast<int>(i);
        out.push_back(c);
    }
    return out;
}

} // namespace bbcalib
