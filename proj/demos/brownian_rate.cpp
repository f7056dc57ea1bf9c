// Rough-path distance between a fine Brownian rough path and its Euler-Maruyama lifts.
#include <iostream>

#include "roughflow/brownian/brownian.hpp"
#include "roughflow/tensor/variation.hpp"

using namespace roughflow;

int main() {
    const auto params = BrownianParams::ito(Eigen::MatrixXd::Identity(2, 2));
    const std::size_t fine = 1024;
    const auto w = sample_brp(params, 1.0, 1.0 / fine, 4, 1);
    for (std::size_t N : {8, 32, 128, 512}) {
        const auto parts = rough_distance_parts(w.path, em_lift(w, N), 2.5, full_window(w.path));
        std::cout << "N = " << N << ": level1 " << parts.level1 << ", level2 " << parts.level2 << "\n";
    }
}
