#pragma once

#include <vector>

#include "cwlssvm/kernels.hpp"
#include "cwlssvm/linalg.hpp"
#include "cwlssvm/rng.hpp"

namespace cwlssvm::testing {

inline Matrix uniform_matrix(Rng& rng, Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = rng.uniform(lo, hi);
        }
    }
    return m;
}

inline Vector normal_vector(Rng& rng, Index n, double scale = 1.0) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v[i] = scale * rng.normal();
    }
    return v;
}

/// Per-component family drawn at random, bandwidths in [0.3, 2].
inline KernelSpec random_spec(Rng& rng, Index d) {
    std::vector<ComponentKernel> comps;
    for (Index j = 0; j < d; ++j) {
        if (rng.uniform() < 0.7) {
            comps.push_back(ComponentKernel::rbf(rng.uniform(0.3, 2.0), j));
        } else {
            comps.push_back(ComponentKernel::linear(j));
        }
    }
    return KernelSpec(std::move(comps));
}

/// Labels +-1 with both classes present.
inline Vector random_labels(Rng& rng, Index n) {
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    y[0] = 1.0;
    y[1] = -1.0;
    return y;
}

/// Log-uniform in [lo, hi].
inline double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

} // namespace cwlssvm::testing
