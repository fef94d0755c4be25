// random_state.hpp: Random Slater states and unitaries for property tests

#pragma once

#include <complex>

#include <Eigen/Dense>

#include "skinsim/rng.hpp"
#include "skinsim/state.hpp"

namespace testing_support {

inline Eigen::MatrixXcd random_matrix(int rows, int cols, skinsim::RandomStream& rng) {
    Eigen::MatrixXcd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = {rng.uniform() - 0.5, rng.uniform() - 0.5};
    return m;
}

inline Eigen::MatrixXcd random_isometry(int rows, int cols, skinsim::RandomStream& rng) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_matrix(rows, cols, rng));
    return qr.householderQ() * Eigen::MatrixXcd::Identity(rows, cols);
}

inline skinsim::SlaterState random_slater(int L, int N, skinsim::RandomStream& rng) {
    return skinsim::SlaterState(random_isometry(L, N, rng));
}

} // namespace testing_support
