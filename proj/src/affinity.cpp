#include "wigig/affinity.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "wigig/rng.hpp"

namespace wigig {

double median_off_diagonal(const Eigen::MatrixXd& s) {
    const Eigen::Index k = s.rows();
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(k * (k - 1)));
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            if (i != j) vals.push_back(s(i, j));
    if (vals.empty()) return 0.0;
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size();
    return (m % 2 == 1) ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

namespace {

// Exemplars are the points whose self responsibility + availability is
// positive.
std::vector<int> extract_exemplars(const Eigen::MatrixXd& r, const Eigen::MatrixXd& a) {
    std::vector<int> ex;
    const Eigen::Index k = r.rows();
    for (Eigen::Index i = 0; i < k; ++i)
        if (r(i, i) + a(i, i) > 0.0) ex.push_back(static_cast<int>(i));
    return ex;
}

// Degenerate inputs (e.g. all-identical points) may never produce a
// positive criterion; pick the single best-scoring point instead.
int fallback_exemplar(const Eigen::MatrixXd& r, const Eigen::MatrixXd& a) {
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        const double v = r(i, i) + a(i, i);
        if (v > best_v) {
            best_v = v;
            best = static_cast<int>(i);
        }
    }
    return best;
}

// One k-medoids style polish pass: within each cluster, move the exemplar
// to the member with the largest similarity sum over the cluster. Ties go
// to the lowest index.
std::vector<int> refine_exemplars(const Eigen::MatrixXd& s, const std::vector<int>& ex,
                                  const std::vector<int>& owner) {
    std::vector<int> refined;
    for (int e : ex) {
        std::vector<int> members;
        for (int i = 0; i < static_cast<int>(owner.size()); ++i)
            if (owner[static_cast<std::size_t>(i)] == e) members.push_back(i);
        int best = e;
        double best_sum = -std::numeric_limits<double>::infinity();
        for (int cand : members) {
            double sum = 0.0;
            for (int i : members) sum += s(i, cand);
            if (sum > best_sum) {
                best_sum = sum;
                best = cand;
            }
        }
        refined.push_back(best);
    }
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());
    return refined;
}

std::vector<int> assign_to_exemplars(const Eigen::MatrixXd& s, const std::vector<int>& ex) {
    const Eigen::Index k = s.rows();
    std::vector<int> owner(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        if (std::binary_search(ex.begin(), ex.end(), static_cast<int>(i))) {
            owner[static_cast<std::size_t>(i)] = static_cast<int>(i);
            continue;
        }
        int best = ex.front();
        double best_s = -std::numeric_limits<double>::infinity();
        for (int e : ex) {
            const double v = s(i, e);
            if (v > best_s) {
                best_s = v;
                best = e;
            }
        }
        owner[static_cast<std::size_t>(i)] = best;
    }
    return owner;
}

}  // namespace

AffinityResult affinity_propagation(const Eigen::MatrixXd& similarity, double preference,
                                    double damping, int max_iter, int stable_iter) {
    if (similarity.rows() != similarity.cols())
        throw std::invalid_argument("affinity_propagation: similarity matrix not square");
    if (similarity.rows() == 0)
        throw std::invalid_argument("affinity_propagation: empty similarity matrix");
    if (!(damping >= 0.5 && damping < 1.0))
        throw std::invalid_argument("affinity_propagation: damping must lie in [0.5, 1)");

    const Eigen::Index k = similarity.rows();
    AffinityResult res;
    if (k == 1) {
        res.exemplar_of = {0};
        res.exemplars = {0};
        res.converged = true;
        return res;
    }

    Eigen::MatrixXd s = similarity;
    s.diagonal().setConstant(preference);

    // Degeneracy-breaking noise at machine-epsilon scale, as in the
    // reference algorithm, but from a fixed seed so the clustering stays
    // deterministic for fixed inputs. Relative-only scaling keeps exact
    // zero similarities exact, so identical points still collapse.
    {
        Rng noise(0x9e3779b97f4a7c15ULL);
        constexpr double eps = std::numeric_limits<double>::epsilon();
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                s(i, j) += eps * std::abs(s(i, j)) * noise.gaussian();
    }

    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);

    std::vector<int> last_ex;
    int stable = 0;

    for (int it = 0; it < max_iter; ++it) {
        // Responsibilities: r(i,k) <- s(i,k) - max_{k' != k} (a(i,k') + s(i,k'))
        for (Eigen::Index i = 0; i < k; ++i) {
            double max1 = -std::numeric_limits<double>::infinity();
            double max2 = max1;
            Eigen::Index arg1 = 0;
            for (Eigen::Index j = 0; j < k; ++j) {
                const double v = a(i, j) + s(i, j);
                if (v > max1) {
                    max2 = max1;
                    max1 = v;
                    arg1 = j;
                } else if (v > max2) {
                    max2 = v;
                }
            }
            for (Eigen::Index j = 0; j < k; ++j) {
                const double cap = (j == arg1) ? max2 : max1;
                r(i, j) = damping * r(i, j) + (1.0 - damping) * (s(i, j) - cap);
            }
        }

        // Availabilities: a(i,k) <- min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))
        for (Eigen::Index j = 0; j < k; ++j) {
            double pos_sum = 0.0;
            for (Eigen::Index i = 0; i < k; ++i)
                if (i != j) pos_sum += std::max(0.0, r(i, j));
            for (Eigen::Index i = 0; i < k; ++i) {
                double val;
                if (i == j) {
                    val = pos_sum;
                } else {
                    val = std::min(0.0, r(j, j) + pos_sum - std::max(0.0, r(i, j)));
                }
                a(i, j) = damping * a(i, j) + (1.0 - damping) * val;
            }
        }

        res.iterations = it + 1;
        std::vector<int> ex = extract_exemplars(r, a);
        if (!ex.empty() && ex == last_ex) {
            if (++stable >= stable_iter) {
                res.converged = true;
                break;
            }
        } else {
            stable = 0;
            last_ex = std::move(ex);
        }
    }

    res.exemplars = last_ex;
    if (res.exemplars.empty()) res.exemplars = {fallback_exemplar(r, a)};
    res.exemplar_of = assign_to_exemplars(s, res.exemplars);
    res.exemplars = refine_exemplars(s, res.exemplars, res.exemplar_of);
    res.exemplar_of = assign_to_exemplars(s, res.exemplars);
    return res;
}

}  // namespace wigig
