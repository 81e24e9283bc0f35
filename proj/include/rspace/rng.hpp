#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "rspace/linalg.hpp"

namespace rspace {

/// Deterministic random source.  All randomness in the library and its
/// verification suites flows from one of these, seeded explicitly; the raw
/// engine output is mapped to doubles by hand so that streams are identical
/// across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform in [0,1).
    double uniform() {
        return (engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vector normal_vector(int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

    Vector unit_vector(int n) {
        Vector v = normal_vector(n);
        double norm = v.norm();
        while (norm < 1e-12) {
            v = normal_vector(n);
            norm = v.norm();
        }
        return v / norm;
    }

    Matrix normal_matrix(int rows, int cols) {
        Matrix m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = normal();
        return m;
    }

    /// Uniformly random k-dimensional subspace of R^n.
    Subspace subspace(int n, int k) { return subspace_from_spanning(normal_matrix(n, k)); }

    int integer(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rspace
