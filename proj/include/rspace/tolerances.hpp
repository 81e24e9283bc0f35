#pragma once

#include <cstdlib>
#include <string>

namespace rspace {

namespace detail {
inline double read_env_tol() {
    if (const char* s = std::getenv("RSPACE_TOL")) {
        try {
            double v = std::stod(s);
            if (v > 0) return v;
        } catch (...) {
        }
    }
    return 1e-9;
}
}  // namespace detail

/// Global relative rank tolerance.  Every rank decision in the library routes
/// through this value unless a call-site override is given.  Initialised once
/// from the RSPACE_TOL environment variable when set.
inline double& rank_tol_storage() {
    static double tol = detail::read_env_tol();
    return tol;
}

inline double rank_tol() { return rank_tol_storage(); }
inline void set_rank_tol(double tol) { rank_tol_storage() = tol; }

namespace tol {
/// Threshold for declaring two parabolic subalgebras equal after multi-step
/// transform chains.  Individual tests tighten this where exact formulas exist.
inline constexpr double parabolic_equality = 1e-7;
/// Acceptance residual for grading-element solves: doubles as the
/// complementarity certificate.
inline constexpr double grading_residual = 1e-8;
/// Abelian-nilradical check for height-one validation.
inline constexpr double nilradical_abelian = 1e-9;
}  // namespace tol

}  // namespace rspace
