#pragma once

#include <random>

#include "magnuslab/complex_matrix.hpp"
#include "magnuslab/linalg.hpp"

namespace magnuslab::testing {

inline double uniform(std::mt19937& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Complex random_complex(std::mt19937& rng, double scale = 1.0) {
    return {uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

inline ComplexMatrix random_matrix(std::mt19937& rng, int n, double scale = 1.0) {
    ComplexMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = random_complex(rng, scale);
    return m;
}

inline ComplexMatrix random_anti_hermitian(std::mt19937& rng, int n, double scale = 1.0) {
    ComplexMatrix m(n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = Complex(0.0, uniform(rng, -scale, scale));
        for (int j = i + 1; j < n; ++j) {
            const Complex v = random_complex(rng, scale);
            m(i, j) = v;
            m(j, i) = -std::conj(v);
        }
    }
    return m;
}

inline double matrix_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    return max_abs(a - b);
}

}  // namespace magnuslab::testing
