// Prints LIL constants M for a few words and for the Levy-area tensor.
#include <iostream>

#include "roughflow/cm/cameron_martin.hpp"

using namespace roughflow;

int main() {
    LilConfig cfg;
    cfg.restarts = 16;
    const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1), two = Eigen::MatrixXd::Identity(2, 2);
    std::cout << "e_1        M = " << lil_constant(ContractionTensor::word(1, {0}), one, cfg).M << "\n";
    std::cout << "e_11       M = " << lil_constant(ContractionTensor::word(1, {0, 0}), one, cfg).M << "\n";
    std::cout << "e_111      M = " << lil_constant(ContractionTensor::word(1, {0, 0, 0}), one, cfg).M << "\n";
    const auto area = lil_constant(ContractionTensor(2, 2, {0.0, 0.5, -0.5, 0.0}), two, cfg);
    std::cout << "Levy area  M = " << area.M << " (semicircle bound 1/(2 pi) = " << 0.5 / 3.141592653589793 << ")\n";
}
