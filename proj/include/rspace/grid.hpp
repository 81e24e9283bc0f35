#pragma once

#include <vector>

#include "rspace/errors.hpp"

namespace rspace {

/// A rectangular parameter lattice with per-axis spacings.  Vertices are
/// flattened row-major with axis 0 fastest.
struct Grid {
    std::vector<int> sizes;
    std::vector<double> spacing;

    Grid() = default;
    Grid(std::vector<int> sz, std::vector<double> h) : sizes(std::move(sz)), spacing(std::move(h)) {
        if (sizes.size() != spacing.size()) throw GridDimensionMismatch("Grid: sizes/spacing length mismatch");
        for (int s : sizes)
            if (s < 1) throw GridDimensionMismatch("Grid: empty axis");
        for (double h : spacing)
            if (!(h > 0)) throw GridDimensionMismatch("Grid: nonpositive spacing");
    }

    static Grid line(int n, double h) { return Grid({n}, {h}); }
    static Grid square(int n, double h) { return Grid({n, n}, {h, h}); }

    int dims() const { return static_cast<int>(sizes.size()); }

    long vertex_count() const {
        long c = 1;
        for (int s : sizes) c *= s;
        return c;
    }

    long flatten(const std::vector<int>& idx) const {
        long f = 0;
        for (int a = dims() - 1; a >= 0; --a) f = f * sizes[a] + idx[a];
        return f;
    }

    std::vector<int> unflatten(long flat) const {
        std::vector<int> idx(dims());
        for (int a = 0; a < dims(); ++a) {
            idx[a] = static_cast<int>(flat % sizes[a]);
            flat /= sizes[a];
        }
        return idx;
    }

    bool has_forward(const std::vector<int>& idx, int axis) const { return idx[axis] + 1 < sizes[axis]; }

    long neighbor(long flat, int axis) const {  // flat index + e_axis
        long stride = 1;
        for (int a = 0; a < axis; ++a) stride *= sizes[a];
        return flat + stride;
    }

    /// Parameter coordinates of a vertex (origin at index zero).
    std::vector<double> coords(const std::vector<int>& idx) const {
        std::vector<double> x(dims());
        for (int a = 0; a < dims(); ++a) x[a] = idx[a] * spacing[a];
        return x;
    }

    /// Visits every directed forward edge as (axis, tail_flat, head_flat).
    template <typename F>
    void for_each_edge(F&& fn) const {
        const long n = vertex_count();
        for (long v = 0; v < n; ++v) {
            auto idx = unflatten(v);
            for (int a = 0; a < dims(); ++a)
                if (has_forward(idx, a)) fn(a, v, neighbor(v, a));
        }
    }

    /// Visits every elementary plaquette as (axis_a, axis_b, base, base+ea,
    /// base+eb, base+ea+eb) with axis_a < axis_b.
    template <typename F>
    void for_each_plaquette(F&& fn) const {
        const long n = vertex_count();
        for (long v = 0; v < n; ++v) {
            auto idx = unflatten(v);
            for (int a = 0; a < dims(); ++a) {
                if (!has_forward(idx, a)) continue;
                for (int b = a + 1; b < dims(); ++b) {
                    if (!has_forward(idx, b)) continue;
                    long va = neighbor(v, a), vb = neighbor(v, b);
                    fn(a, b, v, va, vb, neighbor(va, b));
                }
            }
        }
    }
};

}  // namespace rspace
