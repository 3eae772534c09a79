#pragma once

#include <stdexcept>
#include <string>

namespace bbcalib {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dehomogenization would divide by a (near-)zero w component.
struct NearInfinityPoint : Error {
    using Error::Error;
};

struct RankDeficient : Error {
    using Error::Error;
};

struct TooFewPoints : Error {
    using Error::Error;
};

// Input geometry does not constrain the model (collinear / coplanar /
// ill-conditioned design matrix).
struct DegenerateConfiguration : Error {
    using Error::Error;
};

struct NoConsensus : Error {
    using Error::Error;
};

// Pivot calibration input does not span enough rotation axes.
struct DegenerateMotion : Error {
    using Error::Error;
};

// Quaternion average undefined: top two eigenvalues coincide.
struct AmbiguousAverage : Error {
    using Error::Error;
};

struct BadMagic : Error {
    using Error::Error;
};

struct BadLength : Error {
    using Error::Error;
};

struct NonUnitQuaternion : Error {
    using Error::Error;
};

} // namespace bbcalib
