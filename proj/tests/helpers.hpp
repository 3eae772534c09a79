#pragma once

#include <random>

#include "bbcalib/simulator.hpp"

namespace bbtest {

using namespace bbcalib;

inline UnitQuaternion random_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return UnitQuaternion(n(rng), n(rng), n(rng), n(rng));
}

inline Point3 random_point(std::mt19937_64& rng, double scale = 100.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

inline RigidTransform random_rigid(std::mt19937_64& rng, double t_scale = 100.0) {
    return {random_quaternion(rng), random_point(rng, t_scale)};
}

inline HomogeneousMatrix translate(double x, double y, double z) {
    HomogeneousMatrix m = HomogeneousMatrix::Identity();
    m(0, 3) = x;
    m(1, 3) = y;
    m(2, 3) = z;
    return m;
}

inline HomogeneousMatrix random_affine(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    HomogeneousMatrix m = HomogeneousMatrix::Identity();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
            m(r, c) = u(rng) + (r == c ? 1.0 : 0.0);
        m(r, 3) = 50.0 * u(rng);
    }
    return m;
}

/// Frobenius distance between canonically scaled matrices, sign-agnostic.
inline double canonical_distance(const HomogeneousMatrix& a, const HomogeneousMatrix& b) {
    const HomogeneousMatrix ca = canonical_scale(a);
    const HomogeneousMatrix cb = canonical_scale(b);
    return std::min((ca - cb).norm(), (ca + cb).norm());
}

inline std::vector<PointCorrespondence> make_correspondences(
    const std::vector<Point3>& qs, const HomogeneousMatrix& t) {
    std::vector<PointCorrespondence> cs(qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        cs[i].q = qs[i];
        cs[i].p = apply(t, qs[i]);
    }
    return cs;
}

inline std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t n,
                                         double scale = 100.0) {
    std::vector<Point3> out(n);
    for (auto& p : out)
        p = random_point(rng, scale);
    return out;
}

} // namespace bbtest
