// Solves the recurrence X_{n+1} = X_n + b(X_n)/N + sigma(X_n) xi_n / sqrt(N) driven by a
// two-state Markov chain, through the rough-path solver, and prints the corrected drift.
#include <iostream>

#include "roughflow/mixing/markov.hpp"
#include "roughflow/rde/solver.hpp"
#include "roughflow/tensor/lift.hpp"

using namespace roughflow;

int main() {
    Eigen::MatrixXd P(2, 2), g(2, 1);
    P << 0.7, 0.3, 0.3, 0.7;
    g << 1, -1;
    const MarkovMixingSpec chain(P, g);
    const auto cov = covariance_summary(chain);
    std::cout << "long-run variance " << cov.sigma(0, 0) << ", Gamma " << cov.gamma(0, 0) << "\n";

    const auto field = fields::sine1d(1.0, 0.5);
    const std::size_t N = 1024;
    const auto lift = canonical_lift(sample_sequence(chain, N, 7), 1, N);
    const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(1);
    const auto sol = solve_rde(RDEProblem{field, y0, lift, DriftClock::step(static_cast<double>(N))});
    std::cout << "X_N(1) = " << sol.terminal()(0) << "\n";

    const auto c = drift_correction(field, cov.gamma);
    for (double x : {-1.0, 0.0, 1.0})
        std::cout << "drift correction at " << x << ": " << c(Eigen::VectorXd::Constant(1, x))(0) << "\n";
}
