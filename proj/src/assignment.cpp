#include "resatlas/assignment.hpp"

#include <limits>

#include "resatlas/errors.hpp"

namespace resatlas {

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw DimensionMismatchError("assignment: cost matrix not square");
    const int n = static_cast<int>(cost.rows());
    if (n == 0) return {};

    const double kInf = std::numeric_limits<double>::infinity();
    // 1-based potentials/back-pointers; column 0 is the virtual start.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

ValueMatch match_values(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    if (a.size() != b.size()) throw CardinalityMismatchError("match_values: multiset sizes differ");
    const int n = static_cast<int>(a.size());
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = std::abs(a[i] - b[j]);

    ValueMatch m;
    m.perm = min_cost_assignment(cost);
    m.max_pair_distance = 0.0;
    m.total_cost = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = cost(i, m.perm[i]);
        m.total_cost += d;
        if (d > m.max_pair_distance) m.max_pair_distance = d;
    }
    return m;
}

double matching_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    const Eigen::Index n = std::max(a.size(), b.size());
    Eigen::VectorXcd ap = Eigen::VectorXcd::Zero(n), bp = Eigen::VectorXcd::Zero(n);
    ap.head(a.size()) = a;
    bp.head(b.size()) = b;
    return match_values(ap, bp).max_pair_distance;
}

}  // namespace resatlas
