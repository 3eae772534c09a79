#include <catch_amalgamated.hpp>

#include <algorithm>

#include "helpers.hpp"

using namespace bbcalib;

TEST_CASE("reprojection_error basics") {
    Transform identity;

    std::vector<PointCorrespondence> cs(4);
    std::mt19937_64 rng(3);
    for (auto& c : cs) {
        c.q = bbtest::random_point(rng);
        c.p = c.q;
    }
    ErrorStats st = reprojection_error(identity, cs);
    CHECK(st.mean == 0.0);
    CHECK(st.std == 0.0);
    CHECK(st.n == 4);

    // 3-4-5 residual
    std::vector<PointCorrespondence> one(1);
    one[0].q = Point3(0, 0, 0);
    one[0].p = Point3(3, 0, 4);
    st = reprojection_error(identity, one);
    CHECK(st.mean == 5.0);
    CHECK(st.per_axis[0].mean == 3.0);
    CHECK(st.per_axis[1].mean == 0.0);
    CHECK(st.per_axis[2].mean == 4.0);

    CHECK_THROWS_AS(reprojection_error(identity, {}), TooFewPoints);
}

TEST_CASE("reprojection_error matches straight-loop oracle") {
    std::mt19937_64 rng(5);
    Transform t;
    t.matrix = bbtest::random_affine(rng);
    t.model = ModelClass::affine;
    std::vector<PointCorrespondence> cs(30);
    for (auto& c : cs) {
        c.q = bbtest::random_point(rng);
        c.p = bbtest::random_point(rng);
    }
    const ErrorStats st = reprojection_error(t, cs);

    double mean = 0.0;
    for (const auto& c : cs)
        mean += (c.p - apply(t.matrix, c.q)).norm();
    mean /= static_cast<double>(cs.size());
    double var = 0.0;
    for (const auto& c : cs) {
        const double d = (c.p - apply(t.matrix, c.q)).norm() - mean;
        var += d * d;
    }
    CHECK(st.mean == Catch::Approx(mean).epsilon(1e-12));
    CHECK(st.std == Catch::Approx(std::sqrt(var / static_cast<double>(cs.size())))
                        .epsilon(1e-12));
}

TEST_CASE("reprojection_error permutation invariant and axis bound") {
    std::mt19937_64 rng(7);
    Transform t;
    t.matrix = bbtest::random_affine(rng);
    std::vector<PointCorrespondence> cs(20);
    for (auto& c : cs) {
        c.q = bbtest::random_point(rng);
        c.p = bbtest::random_point(rng);
    }
    const ErrorStats a = reprojection_error(t, cs);
    std::shuffle(cs.begin(), cs.end(), rng);
    const ErrorStats b = reprojection_error(t, cs);
    CHECK(a.mean == b.mean);
    CHECK(a.std == b.std);
    for (int ax = 0; ax < 3; ++ax) {
        CHECK(a.per_axis[ax].mean == b.per_axis[ax].mean);
        // per-point norm dominates each component
        CHECK(a.mean + 1e-12 >= a.per_axis[ax].mean);
    }
}

TEST_CASE("average_quaternion basics") {
    const UnitQuaternion q(0.8, 0.1, 0.2, 0.3);
    const UnitQuaternion avg = average_quaternion({q, q, q});
    CHECK((avg.wxyz() - q.wxyz()).norm() < 1e-12);

    // sign invariance: -q encodes the same rotation
    const UnitQuaternion flipped(-q.w(), -q.x(), -q.y(), -q.z());
    const UnitQuaternion avg2 = average_quaternion({q, flipped});
    CHECK((avg2.wxyz() - q.wxyz()).norm() < 1e-12);

    // symmetric +-10 degrees about z averages to identity
    const double a = 10.0 * M_PI / 180.0;
    const UnitQuaternion plus = UnitQuaternion::from_axis_angle({0, 0, 1}, a);
    const UnitQuaternion minus = UnitQuaternion::from_axis_angle({0, 0, 1}, -a);
    const UnitQuaternion avg3 = average_quaternion({plus, minus});
    CHECK((avg3.wxyz() - Eigen::Vector4d(1, 0, 0, 0)).norm() < 1e-9);
}

TEST_CASE("average_quaternion ambiguous for antipodal spread") {
    const UnitQuaternion rx = UnitQuaternion::from_axis_angle({1, 0, 0}, M_PI);
    const UnitQuaternion ry = UnitQuaternion::from_axis_angle({0, 1, 0}, M_PI);
    CHECK_THROWS_AS(average_quaternion({rx, ry}), AmbiguousAverage);
}

TEST_CASE("average_quaternion eigen oracle and sign flips") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<UnitQuaternion> qs;
        const UnitQuaternion base = bbtest::random_quaternion(rng);
        std::normal_distribution<double> n(0.0, 0.05);
        for (int i = 0; i < 8; ++i) {
            const UnitQuaternion jitter(base.w() + n(rng), base.x() + n(rng),
                                        base.y() + n(rng), base.z() + n(rng));
            qs.push_back(jitter);
        }
        const UnitQuaternion avg = average_quaternion(qs);
        CHECK(std::abs(avg.wxyz().norm() - 1.0) < 1e-9);

        // sign flips collapse to the canonical hemisphere on construction,
        // so a flipped input is the identical 4-vector
        for (const auto& q : qs) {
            const UnitQuaternion neg(-q.w(), -q.x(), -q.y(), -q.z());
            CHECK((neg.wxyz() - q.wxyz()).norm() == 0.0);
        }

        // the accumulated matrix is an even function of each input, so the
        // average is sign-flip invariant by construction; verify against the
        // dense eigen oracle
        Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
        for (const auto& q : qs)
            m += q.wxyz() * q.wxyz().transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(m);
        Eigen::Vector4d v = solver.eigenvectors().col(3);
        if (v(0) < 0)
            v = -v;
        CHECK((avg.wxyz() - v).norm() < 1e-9);
    }
}

TEST_CASE("pose_error") {
    std::mt19937_64 rng(13);
    const RigidTransform a = bbtest::random_rigid(rng);
    const PoseError self = pose_error(a, a);
    CHECK(self.displacement == 0.0);
    CHECK(self.rotation.angle() < 1e-12);

    // 150 mm offset scenario
    const RigidTransform target(UnitQuaternion::identity(), Point3(0, 0, 0));
    const RigidTransform achieved(UnitQuaternion::identity(), Point3(0, 0, 150));
    CHECK(pose_error(achieved, target).displacement == 150.0);

    for (int i = 0; i < 50; ++i) {
        const RigidTransform x = bbtest::random_rigid(rng);
        const RigidTransform y = bbtest::random_rigid(rng);
        const PoseError e = pose_error(x, y);
        // compose-and-extract oracle in homogeneous form
        const HomogeneousMatrix rel = y.to_matrix().inverse() * x.to_matrix();
        const UnitQuaternion expect =
            UnitQuaternion::from_rotation_matrix(rel.topLeftCorner<3, 3>());
        CHECK((e.rotation.wxyz() - expect.wxyz()).norm() < 1e-9);
        CHECK(e.displacement ==
              Catch::Approx((x.translation - y.translation).norm()).epsilon(1e-12));
    }
}

TEST_CASE("summarize_rotation_errors and report formatting") {
    std::vector<PoseError> es(5);
    const UnitQuaternion avg = summarize_rotation_errors(es);
    CHECK(format_quaternion(avg) == "(1.000, 0.000, 0.000, 0.000)");

    const UnitQuaternion near_identity(0.999027, 0.030, 0.020, 0.025);
    CHECK(format_quaternion(near_identity) == "(0.999, 0.030, 0.020, 0.025)");

    std::mt19937_64 rng(17);
    std::vector<PoseError> mixed(9);
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    for (auto& e : mixed) {
        std::normal_distribution<double> n(0.0, 0.02);
        e.rotation = UnitQuaternion(1.0, n(rng), n(rng), n(rng));
        m += e.rotation.wxyz() * e.rotation.wxyz().transpose();
    }
    const UnitQuaternion got = summarize_rotation_errors(mixed);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es2(m);
    Eigen::Vector4d v = es2.eigenvectors().col(3);
    if (v(0) < 0)
        v = -v;
    CHECK((got.wxyz() - v).norm() < 1e-9);
}
