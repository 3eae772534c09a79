#include <catch_amalgamated.hpp>

#include <map>
#include <set>

#include "helpers.hpp"

using namespace bbcalib;

TEST_CASE("cube_corners") {
    const auto unit = cube_corners(1.0);
    REQUIRE(unit.size() == 8);
    CHECK((unit[0] - Point3(0, 0, 0)).norm() == 0.0);
    CHECK((unit[7] - Point3(1, 1, 1)).norm() == 0.0);

    // 2-inch cube: min pairwise distance is the edge
    const auto c = cube_corners(50.8);
    double min_dist = 1e9;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j)
            min_dist = std::min(min_dist, (c[i] - c[j]).norm());
    CHECK(min_dist == Catch::Approx(50.8).epsilon(1e-12));

    // all pairwise distances in {e, e*sqrt2, e*sqrt3}
    const double e = 50.8;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            const double d = (c[i] - c[j]).norm();
            const bool ok = std::abs(d - e) < 1e-9 || std::abs(d - e * std::sqrt(2.0)) < 1e-9 ||
                            std::abs(d - e * std::sqrt(3.0)) < 1e-9;
            CHECK(ok);
        }

    CHECK_THROWS_AS(cube_corners(0.0), Error);
}

TEST_CASE("single-point session basics") {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(GroundTruthPreset::rigid, 1);
    WorkspaceFrustum ws;
    NoiseModel nm;
    nm.seed = 1;

    const CalibrationSession s = generate_single_point_session(gt, ws, nm);
    REQUIRE(s.correspondences.size() == 28);
    CHECK(s.phase_points(Phase::train).size() == 20);
    CHECK(s.phase_points(Phase::test).size() == 8);

    // zero noise: exact mapping and in-frustum samples
    for (const auto& c : s.correspondences) {
        CHECK((c.p - gt.transform.map(c.q)).norm() == 0.0);
        CHECK(ws.contains(c.q));
    }

    // deterministic per seed
    const CalibrationSession s2 = generate_single_point_session(gt, ws, nm);
    for (std::size_t i = 0; i < s.correspondences.size(); ++i) {
        CHECK((s.correspondences[i].q - s2.correspondences[i].q).norm() == 0.0);
        CHECK((s.correspondences[i].p - s2.correspondences[i].p).norm() == 0.0);
    }

    CHECK_THROWS_AS(generate_single_point_session(gt, ws, nm, 4), TooFewPoints);
}

TEST_CASE("single-point outlier rate matches configuration") {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(GroundTruthPreset::rigid, 2);
    WorkspaceFrustum ws;

    std::size_t outliers = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        NoiseModel nm;
        nm.outlier_probability = 0.05;
        nm.outlier_magnitude = 80.0;
        nm.seed = seed;
        const CalibrationSession s = generate_single_point_session(gt, ws, nm);
        for (const auto& c : s.correspondences) {
            total += 1;
            if ((c.p - gt.transform.map(c.q)).norm() > 40.0)
                outliers += 1;
        }
    }
    const double rate = static_cast<double>(outliers) / static_cast<double>(total);
    CHECK(rate > 0.03);
    CHECK(rate < 0.07);
}

TEST_CASE("multipoint session structure") {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(GroundTruthPreset::rigid, 3);
    WorkspaceFrustum ws;
    NoiseModel nm;
    nm.seed = 3;

    const CalibrationSession s = generate_multipoint_session(gt, ws, nm);
    const auto train = s.phase_points(Phase::train);
    REQUIRE(train.size() == 20);
    std::set<int> poses;
    std::map<int, std::set<int>> corners;
    for (const auto& c : train) {
        poses.insert(c.pose_id);
        corners[c.pose_id].insert(c.corner_id);
    }
    CHECK(poses == std::set<int>({0, 1, 2, 3}));
    for (const auto& [pose, ids] : corners)
        CHECK(ids == std::set<int>({0, 1, 2, 3, 4}));
    CHECK(s.phase_points(Phase::test).size() == 8);

    // zero noise, rigid gt: isometric recovers exactly
    const Transform est = estimate_isometric(train);
    CHECK((est.matrix - gt.transform.matrix).norm() < 1e-9);

    CHECK_THROWS_AS(generate_multipoint_session(gt, ws, nm, 1), TooFewPoints);
}

TEST_CASE("multipoint correlated noise preserves within-pose distances") {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(GroundTruthPreset::rigid, 4);
    WorkspaceFrustum ws;
    NoiseModel clean;
    clean.seed = 9;
    NoiseModel pose_only = clean;
    pose_only.multipoint_pose_sigma = 2.0;

    const auto ref = generate_multipoint_session(gt, ws, clean).phase_points(Phase::train);
    const auto pert =
        generate_multipoint_session(gt, ws, pose_only).phase_points(Phase::train);
    REQUIRE(ref.size() == pert.size());

    for (int pose = 0; pose < 4; ++pose) {
        std::vector<Point3> a, b;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (ref[i].pose_id == pose) {
                a.push_back(ref[i].p);
                b.push_back(pert[i].p);
            }
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = i + 1; j < a.size(); ++j)
                CHECK((a[i] - a[j]).norm() ==
                      Catch::Approx((b[i] - b[j]).norm()).margin(1e-9));
    }
}

TEST_CASE("world-anchored chain collapses to head-anchored on zero drift") {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(GroundTruthPreset::rigid, 5);
    WorkspaceFrustum ws;
    NoiseModel nm;
    nm.sigma_xy = 0.7;
    nm.sigma_z = 2.0;
    nm.seed = 12;

    const CalibrationSession head = generate_single_point_session(gt, ws, nm);
    std::mt19937_64 rng(nm.seed);
    const auto placements = sample_frustum_points(ws, 28, rng);
    const auto chain = simulate_world_anchored_chain(gt, nm, RigidTransform::identity(),
                                                     RigidTransform::identity(), placements);
    REQUIRE(chain.size() == head.correspondences.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        CHECK((chain[i].q - head.correspondences[i].q).norm() == 0.0);
        CHECK((chain[i].p - head.correspondences[i].p).norm() == 0.0);
    }
}

TEST_CASE("world-anchored drift magnitude") {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(GroundTruthPreset::rigid, 6);
    WorkspaceFrustum ws;
    NoiseModel nm;
    nm.seed = 17;

    std::mt19937_64 rng(nm.seed);
    const auto placements = sample_frustum_points(ws, 2000, rng);
    const auto clean = simulate_world_anchored_chain(gt, nm, RigidTransform::identity(),
                                                     RigidTransform::identity(), placements);
    GroundTruth drifted = gt;
    drifted.drift_sigma_mm = 1.0;
    const auto noisy = simulate_world_anchored_chain(drifted, nm, RigidTransform::identity(),
                                                     RigidTransform::identity(), placements);
    double sq[3] = {0, 0, 0};
    for (std::size_t i = 0; i < clean.size(); ++i)
        for (int a = 0; a < 3; ++a)
            sq[a] += std::pow(noisy[i].q(a) - clean[i].q(a), 2);
    for (int a = 0; a < 3; ++a) {
        const double rms = std::sqrt(sq[a] / static_cast<double>(clean.size()));
        CHECK(rms > 0.9);
        CHECK(rms < 1.1);
    }
}

TEST_CASE("world-anchored chain matches hand composition") {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(GroundTruthPreset::rigid, 7);
    NoiseModel nm;
    nm.seed = 23;

    std::mt19937_64 rng(101);
    const RigidTransform g_we = bbtest::random_rigid(rng);
    const RigidTransform head = bbtest::random_rigid(rng);
    const std::vector<Point3> placements = bbtest::random_points(rng, 10, 300.0);

    const auto cs = simulate_world_anchored_chain(gt, nm, g_we, head, placements);
    for (std::size_t i = 0; i < placements.size(); ++i) {
        const Point3 expected_q = (invert_rigid(head) * g_we).apply(placements[i]);
        CHECK((cs[i].q - expected_q).norm() < 1e-12);
        CHECK((cs[i].p - gt.transform.map(expected_q)).norm() < 1e-12);
    }
}

TEST_CASE("ground truth presets separate the estimator families") {
    const Transform rigid = make_ground_truth_transform(GroundTruthPreset::rigid, 8);
    const Eigen::Matrix3d r = rigid.matrix.topLeftCorner<3, 3>();
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-12);

    const Transform scaled = make_ground_truth_transform(GroundTruthPreset::rigid_scale, 8);
    const Eigen::Matrix3d rs = scaled.matrix.topLeftCorner<3, 3>();
    CHECK(std::abs(std::cbrt(rs.determinant()) - 1.05) < 1e-9);

    const Transform persp = make_ground_truth_transform(GroundTruthPreset::mild_perspective, 8);
    CHECK(persp.matrix.row(3).head<3>().norm() > 0.0);
    CHECK(std::abs(persp.matrix.norm() - 1.0) < 1e-12);
}

TEST_CASE("frustum sampling stays inside and respects the margin") {
    WorkspaceFrustum ws;
    std::mt19937_64 rng(404);
    for (const auto& p : sample_frustum_points(ws, 500, rng))
        CHECK(ws.contains(p));

    std::mt19937_64 rng2(405);
    const double margin = 30.0;
    for (const auto& p : sample_frustum_points(ws, 200, rng2, margin)) {
        CHECK(p.z() >= ws.center_distance_mm - 0.5 * ws.depth_mm() + margin - 1e-9);
        CHECK(p.z() <= ws.center_distance_mm + 0.5 * ws.depth_mm() - margin + 1e-9);
    }
}
