#pragma once

#include <stdexcept>
#include <string>

namespace nsfde {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Segment carries non-finite values or an inconsistent shape.
class InvalidSegmentError : public Error {
public:
    using Error::Error;
};

/// Two segments (or a segment and a grid) disagree on step/depth/dimension.
class ShapeMismatchError : public Error {
public:
    using Error::Error;
};

/// A time does not snap to the grid, or lies outside the stored range.
class GridAlignmentError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// A measure fails the finite-exponential-moment requirement.
class MeasureError : public Error {
public:
    using Error::Error;
};

/// The truncated history window is too short for the requested measure
/// integral; `bound` is the truncation error bound that was exceeded.
class TailTruncationError : public Error {
public:
    TailTruncationError(const std::string& what, double bound)
        : Error(what), bound(bound) {}
    double bound;
};

/// Scheme-level failure (inadmissible model without force, fixed-point
/// non-convergence). `contraction` reports the estimated contraction
/// constant of the neutral solve when relevant.
class SchemeError : public Error {
public:
    explicit SchemeError(const std::string& what, double contraction = 0.0)
        : Error(what), contraction(contraction) {}
    double contraction;
};

/// A simulated path left the admissible region (|x| > limit).
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, double time, long path_index)
        : Error(what), time(time), path_index(path_index) {}
    double time;
    long path_index;
};

/// Configuration / schema problem; `field` holds the offending field path.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::string field = {})
        : Error(what), field(std::move(field)) {}
    std::string field;
};

/// Decay-rate fit cannot be performed on the given curve.
class FitError : public Error {
public:
    using Error::Error;
};

}  // namespace nsfde
