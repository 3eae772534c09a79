#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "errors.hpp"

namespace bbcalib {

// All lengths are millimeters throughout the library.
using Point3 = Eigen::Vector3d;
using HomogeneousMatrix = Eigen::Matrix4d;
using ProjectionMatrix3x4 = Eigen::Matrix<double, 3, 4>;

/// Unit quaternion in (w, x, y, z) order, canonicalized to the w >= 0
/// hemisphere on construction (w == 0: first nonzero of x,y,z positive).
class UnitQuaternion {
public:
    UnitQuaternion() : q_(1.0, 0.0, 0.0, 0.0) {}

    UnitQuaternion(double w, double x, double y, double z) : q_(w, x, y, z) {
        const double n = q_.norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw Error("UnitQuaternion: zero or non-finite norm");
        // skip the division for already-unit inputs so sign flips and
        // copies stay bit-exact
        if (std::abs(n - 1.0) > 1e-12)
            q_.coeffs() /= n;
        canonicalize();
    }

    explicit UnitQuaternion(const Eigen::Quaterniond& q)
        : UnitQuaternion(q.w(), q.x(), q.y(), q.z()) {}

    static UnitQuaternion identity() { return UnitQuaternion(); }

    static UnitQuaternion from_rotation_matrix(const Eigen::Matrix3d& r) {
        return UnitQuaternion(Eigen::Quaterniond(r));
    }

    static UnitQuaternion from_axis_angle(const Point3& axis, double angle_rad) {
        return UnitQuaternion(
            Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis.normalized())));
    }

    double w() const { return q_.w(); }
    double x() const { return q_.x(); }
    double y() const { return q_.y(); }
    double z() const { return q_.z(); }

    Eigen::Vector4d wxyz() const { return {q_.w(), q_.x(), q_.y(), q_.z()}; }
    Eigen::Matrix3d to_rotation_matrix() const { return q_.toRotationMatrix(); }

    UnitQuaternion conjugate() const { return UnitQuaternion(q_.conjugate()); }

    UnitQuaternion operator*(const UnitQuaternion& rhs) const {
        return UnitQuaternion(q_ * rhs.q_);
    }

    Point3 rotate(const Point3& p) const { return q_ * p; }

    /// Rotation angle in radians, in [0, pi].
    double angle() const {
        const double w = std::min(1.0, std::abs(q_.w()));
        return 2.0 * std::acos(w);
    }

private:
    void canonicalize() {
        const double* c = q_.coeffs().data(); // x y z w
        double lead = c[3];
        if (lead == 0.0) {
            for (int i = 0; i < 3; ++i) {
                if (c[i] != 0.0) {
                    lead = c[i];
                    break;
                }
            }
        }
        if (lead < 0.0)
            q_.coeffs() = -q_.coeffs();
    }

    Eigen::Quaterniond q_;
};

/// Rigid (rotation + translation) transform; translation in mm.
struct RigidTransform {
    UnitQuaternion rotation;
    Point3 translation{0.0, 0.0, 0.0};

    RigidTransform() = default;
    RigidTransform(const UnitQuaternion& r, const Point3& t)
        : rotation(r), translation(t) {}

    static RigidTransform identity() { return {}; }

    static RigidTransform from_matrix(const HomogeneousMatrix& m) {
        Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
        if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() > 1e-6 ||
            std::abs(r.determinant() - 1.0) > 1e-6)
            throw Error("RigidTransform::from_matrix: rotation block not orthonormal");
        return {UnitQuaternion::from_rotation_matrix(r), m.topRightCorner<3, 1>()};
    }

    HomogeneousMatrix to_matrix() const {
        HomogeneousMatrix m = HomogeneousMatrix::Identity();
        m.topLeftCorner<3, 3>() = rotation.to_rotation_matrix();
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    Point3 apply(const Point3& p) const { return rotation.rotate(p) + translation; }

    RigidTransform operator*(const RigidTransform& rhs) const {
        return {rotation * rhs.rotation, rotation.rotate(rhs.translation) + translation};
    }
};

inline HomogeneousMatrix compose(const HomogeneousMatrix& a, const HomogeneousMatrix& b) {
    return a * b;
}

/// Applies a 4x4 transform to a point and dehomogenizes.
/// Throws NearInfinityPoint when the w component vanishes relative to the
/// transformed homogeneous vector.
inline Point3 apply(const HomogeneousMatrix& t, const Point3& p) {
    const Eigen::Vector4d h = t * p.homogeneous();
    if (std::abs(h.w()) <= 1e-12 * h.norm())
        throw NearInfinityPoint("apply: point maps to (near) infinity");
    return h.head<3>() / h.w();
}

inline RigidTransform invert_rigid(const RigidTransform& g) {
    const UnitQuaternion rinv = g.rotation.conjugate();
    return {rinv, -rinv.rotate(g.translation)};
}

inline ProjectionMatrix3x4 apply_to_projection(const ProjectionMatrix3x4& p_default,
                                               const HomogeneousMatrix& t) {
    ProjectionMatrix3x4 p = p_default * t;
    Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(p);
    const auto& sv = svd.singularValues();
    if (sv(2) <= 1e-12 * sv(0))
        throw RankDeficient("apply_to_projection: corrected projection lost rank");
    return p;
}

} // namespace bbcalib
