#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace resatlas {

// Minimum-total-cost assignment on a square cost matrix (Hungarian method,
// shortest-augmenting-path formulation, O(n^3)). Returns row -> column.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

struct ValueMatch {
    std::vector<int> perm;     // a-index -> b-index, optimal under sum |a_i - b_perm(i)|
    double max_pair_distance;  // largest |a_i - b_perm(i)| over the assignment
    double total_cost;
};

// Optimal matching between two equally sized complex multisets.
ValueMatch match_values(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

// max-pair distance of the optimal assignment; multisets of unequal size are
// padded with zeros (the natural completion for filtered near-zero eigenvalues).
double matching_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

}  // namespace resatlas
