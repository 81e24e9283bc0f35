#pragma once

#include <stdexcept>
#include <string>

namespace rspace {

/// Base class for all geometric/numeric failures raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
    using Error::Error;
};
struct NonFiniteValue : Error {
    using Error::Error;
};
struct NotASubalgebra : Error {
    using Error::Error;
};
struct NotParabolicHeightOne : Error {
    using Error::Error;
};
struct NotComplementary : Error {
    using Error::Error;
};
struct NotPairwiseComplementary : Error {
    using Error::Error;
};
struct NotNilpotent : Error {
    using Error::Error;
};
struct NotInChart : Error {
    using Error::Error;
};
struct NotConcircular : Error {
    using Error::Error;
};
struct WrongConjugacyClass : Error {
    using Error::Error;
};
struct UnsupportedModel : Error {
    using Error::Error;
};
struct GridDimensionMismatch : Error {
    using Error::Error;
};
struct PathDependence : Error {
    using Error::Error;
};
struct DegenerateQuad : Error {
    using Error::Error;
};
struct PoleParameter : Error {
    using Error::Error;
};
struct CartanInvariantViolation : Error {
    using Error::Error;
};
struct VanishingLift : Error {
    using Error::Error;
};

/// Loss of pointwise complementarity during a propagation; carries the
/// flattened vertex index where the failure was detected.
struct ComplementarityLost : Error {
    long vertex;
    ComplementarityLost(const std::string& what, long vertex_index)
        : Error(what + " (vertex " + std::to_string(vertex_index) + ")"), vertex(vertex_index) {}
};

/// Riccati blow-up, reported with the grid location of the escape.
struct BlowUp : Error {
    long location;
    BlowUp(const std::string& what, long where)
        : Error(what + " (grid index " + std::to_string(where) + ")"), location(where) {}
};

/// Time-stepping instability, reported with the step index.
struct Instability : Error {
    long step;
    Instability(const std::string& what, long step_index)
        : Error(what + " (step " + std::to_string(step_index) + ")"), step(step_index) {}
};

}  // namespace rspace
