#pragma once

#include <array>
#include <string>

#include "simulator.hpp"

namespace bbcalib {

constexpr std::array<ModelClass, 3> kAllModels = {
    ModelClass::isometric, ModelClass::affine, ModelClass::perspective};

struct ModelReport {
    bool ok = false;
    std::string error;
    Transform transform;
    ErrorStats train; // over the RANSAC inlier set
    ErrorStats test;  // over all held-out points
    std::size_t inlier_count = 0;
    std::size_t excluded_count = 0;
};

struct CalibrationReport {
    std::array<ModelReport, 3> models; // indexed by ModelClass order
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;

    ModelReport& for_model(ModelClass m) { return models[static_cast<std::size_t>(m)]; }
    const ModelReport& for_model(ModelClass m) const {
        return models[static_cast<std::size_t>(m)];
    }
};

struct DoubleCubeReport {
    std::vector<PoseError> placements;
    double mean_displacement = 0.0;
    UnitQuaternion average_rotation;
    ModelClass model = ModelClass::isometric;
};

/// Fits all three models on the train split via RANSAC and evaluates each on
/// the held-out test split. A model that fails is recorded without aborting
/// the others.
inline CalibrationReport run_calibrate_and_test(const CalibrationSession& session,
                                                const RansacConfig& cfg) {
    const auto train = session.phase_points(Phase::train);
    const auto test = session.phase_points(Phase::test);
    if (train.size() < 5)
        throw TooFewPoints("run_calibrate_and_test: need at least 5 train points");
    if (test.empty())
        throw TooFewPoints("run_calibrate_and_test: need at least 1 test point");

    CalibrationReport report;
    report.n_train = train.size();
    report.n_test = test.size();
    report.seed = cfg.seed;
    for (ModelClass model : kAllModels) {
        ModelReport& mr = report.for_model(model);
        try {
            EstimationResult res = ransac_estimate(train, model, cfg);
            mr.transform = res.transform;
            mr.train = res.train_residual;
            mr.inlier_count =
                static_cast<std::size_t>(std::count(res.inlier_mask.begin(),
                                                    res.inlier_mask.end(), true));
            mr.excluded_count = train.size() - mr.inlier_count;
            mr.test = reprojection_error(res.transform, test);
            mr.ok = true;
        } catch (const Error& e) {
            mr.ok = false;
            mr.error = std::string(to_string(model)) + ": " + e.what();
        }
    }
    return report;
}

namespace detail {

/// Four equidistant placement centers: vertices of a regular tetrahedron
/// inscribed in the workspace, centered on the viewing axis.
inline std::vector<Point3> tetrahedron_placements(const WorkspaceFrustum& ws) {
    const double r = 0.25 * std::min(ws.far_side_mm(), ws.depth_mm());
    const Point3 center(0.0, 0.0, ws.center_distance_mm);
    const double s = r / std::sqrt(3.0);
    return {center + s * Point3(1, 1, 1), center + s * Point3(1, -1, -1),
            center + s * Point3(-1, 1, -1), center + s * Point3(-1, -1, 1)};
}

/// Best rigid pose of a cube whose world-space corners were mapped through f.
template <typename F>
RigidTransform fit_cube_pose(const RigidTransform& pose, double edge, F&& f) {
    const auto corners = cube_corners(edge);
    std::vector<PointCorrespondence> cs(corners.size());
    for (std::size_t i = 0; i < corners.size(); ++i) {
        const Point3 local = corners[i] - Point3::Constant(edge / 2.0);
        cs[i].q = local;
        cs[i].p = f(pose.apply(local));
    }
    const Transform t = estimate_isometric(cs);
    return RigidTransform::from_matrix(t.matrix);
}

} // namespace detail

/// Double-cube-match: a virtual cube is shown at a fixed offset from the
/// first cube through the candidate transform; the simulated user aligns a
/// second real cube to it, seen through the true display mapping. Errors are
/// measured against the ideal offset pose in tracker space.
inline DoubleCubeReport run_double_cube_match(const Transform& candidate, const GroundTruth& gt,
                                              const NoiseModel& alignment_noise,
                                              const Point3& offset = Point3(150.0, 0.0, 0.0),
                                              std::size_t n_placements = 4,
                                              const WorkspaceFrustum& ws = WorkspaceFrustum{},
                                              double cube_edge = 50.8) {
    if (n_placements < 1)
        throw Error("run_double_cube_match: need at least 1 placement");

    const HomogeneousMatrix gt_inv = gt.transform.matrix.inverse();
    std::mt19937_64 rng(alignment_noise.seed ^ detail::kNoiseStream);
    std::normal_distribution<double> n01(0.0, 1.0);

    auto centers = detail::tetrahedron_placements(ws);
    while (centers.size() < n_placements)
        centers.push_back(centers[centers.size() % 4]);

    DoubleCubeReport report;
    report.model = candidate.model;
    double disp_sum = 0.0;
    for (std::size_t i = 0; i < n_placements; ++i) {
        const RigidTransform first_cube(UnitQuaternion::identity(), centers[i]);
        const RigidTransform target(first_cube.rotation,
                                    first_cube.apply(offset));

        // what the user can do: place the real cube so it coincides with the
        // virtual one, i.e. map each displayed corner back through the true
        // display transform; a candidate identical to the truth means a
        // perfect alignment is achievable, no numerics involved
        RigidTransform achieved =
            (candidate.matrix.array() == gt.transform.matrix.array()).all()
                ? target
                : detail::fit_cube_pose(target, cube_edge, [&](const Point3& x) {
                      return apply(gt_inv, candidate.map(x));
                  });

        if (alignment_noise.sigma_xy > 0.0 || alignment_noise.sigma_z > 0.0) {
            const Point3 dt = detail::gaussian_noise(rng, alignment_noise.sigma_xy,
                                                     alignment_noise.sigma_z);
            const double angle = (alignment_noise.sigma_xy / 100.0) * n01(rng);
            // perturb orientation in place, then shift the center
            achieved.rotation = UnitQuaternion::from_axis_angle(
                                    detail::random_unit_vector(rng), angle) *
                                achieved.rotation;
            achieved.translation += dt;
        }

        report.placements.push_back(pose_error(achieved, target));
        disp_sum += report.placements.back().displacement;
    }
    report.mean_displacement = disp_sum / static_cast<double>(n_placements);
    report.average_rotation = summarize_rotation_errors(report.placements);
    return report;
}

/// Multipoint workflow: 4 placements x 5 corners for training, a fresh
/// 8-point single-point test set from the same ground truth.
inline CalibrationReport run_multipoint_workflow(const GroundTruth& gt,
                                                 const WorkspaceFrustum& ws,
                                                 const NoiseModel& nm,
                                                 const RansacConfig& cfg) {
    const CalibrationSession session = generate_multipoint_session(gt, ws, nm);
    return run_calibrate_and_test(session, cfg);
}

} // namespace bbcalib
