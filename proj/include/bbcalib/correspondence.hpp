#pragma once

#include <cstdint>
#include <string>

#include "geometry.hpp"

namespace bbcalib {

enum class Phase { train, test };

inline const char* to_string(Phase p) { return p == Phase::train ? "train" : "test"; }

/// One alignment sample: q in tracker space, p in display space (mm).
/// pose_id identifies the placement that produced it; corner_id is the
/// multipoint corner index (0 for single-point sessions).
struct PointCorrespondence {
    Point3 q{0, 0, 0};
    Point3 p{0, 0, 0};
    Phase phase = Phase::train;
    int pose_id = 0;
    int corner_id = 0;
};

enum class ModelClass { isometric, affine, perspective };

inline const char* to_string(ModelClass m) {
    switch (m) {
    case ModelClass::isometric: return "isometric";
    case ModelClass::affine: return "affine";
    default: return "perspective";
    }
}

/// Minimum number of correspondences that determine each model.
inline int min_sample_size(ModelClass m) {
    switch (m) {
    case ModelClass::isometric: return 3;
    case ModelClass::affine: return 4;
    default: return 5;
    }
}

/// A 4x4 transform tagged with its model class.
/// Invariants: isometric -> orthonormal rotation block, det +1, last row
/// (0,0,0,1); affine -> last row (0,0,0,1); perspective -> Frobenius norm 1
/// with the largest-magnitude entry positive (canonical scale and sign).
struct Transform {
    HomogeneousMatrix matrix = HomogeneousMatrix::Identity();
    ModelClass model = ModelClass::isometric;

    Point3 map(const Point3& pt) const { return apply(matrix, pt); }
};

/// Scales a perspective matrix to Frobenius norm 1 and fixes the sign so the
/// largest-magnitude entry is positive.
inline HomogeneousMatrix canonical_scale(const HomogeneousMatrix& m) {
    HomogeneousMatrix out = m / m.norm();
    int r = 0, c = 0;
    out.cwiseAbs().maxCoeff(&r, &c);
    if (out(r, c) < 0.0)
        out = -out;
    return out;
}

} // namespace bbcalib
