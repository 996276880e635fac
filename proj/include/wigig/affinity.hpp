#pragma once

#include <Eigen/Dense>
#include <vector>

namespace wigig {

struct AffinityResult {
    std::vector<int> exemplar_of;   // for each point, its exemplar's index
    std::vector<int> exemplars;     // distinct exemplar indices, ascending
    int iterations = 0;
    bool converged = false;
};

/// Affinity propagation by responsibility/availability message passing with
/// damped updates. The preference overwrites the diagonal of S. Ties are
/// broken toward the lowest index and no noise is injected, so the result
/// is deterministic for fixed inputs.
AffinityResult affinity_propagation(const Eigen::MatrixXd& similarity, double preference,
                                    double damping = 0.9, int max_iter = 500,
                                    int stable_iter = 50);

/// Median of the off-diagonal entries, the standard preference default.
double median_off_diagonal(const Eigen::MatrixXd& similarity);

}  // namespace wigig
