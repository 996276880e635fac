#include "wigig/exemplars.hpp"

#include "wigig/affinity.hpp"

namespace wigig {

std::map<int, std::vector<std::pair<int, FingerprintVector>>> group_by_sector(
    const RadioMap& map, int ap_col) {
    std::map<int, std::vector<std::pair<int, FingerprintVector>>> groups;
    for (Eigen::Index l = 0; l < map.phi.rows(); ++l) {
        const int d = map.phi(l, ap_col);
        if (d == 0) continue;
        groups[d].emplace_back(static_cast<int>(l), map.psi.row(l).transpose());
    }
    return groups;
}

ExemplarSet build_exemplars(const RadioMap& map, const ClusteringParams& params) {
    ExemplarSet out;
    for (int n = 0; n < map.num_aps(); ++n) {
        std::map<int, std::vector<Cluster>> per_ap;
        for (const auto& [sector, members] : group_by_sector(map, n)) {
            const int k = static_cast<int>(members.size());
            std::vector<Cluster> clusters;
            if (k == 1) {
                Cluster c;
                c.exemplar_lp = members[0].first;
                c.exemplar = members[0].second;
                c.member_lps = {members[0].first};
                clusters.push_back(std::move(c));
            } else {
                Eigen::MatrixXd s(k, k);
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j)
                        s(i, j) = -(members[static_cast<std::size_t>(i)].second -
                                    members[static_cast<std::size_t>(j)].second)
                                       .squaredNorm();
                const double pref = median_off_diagonal(s);
                const auto res = affinity_propagation(s, pref, params.damping,
                                                      params.max_iter, params.stable_iter);
                for (int e : res.exemplars) {
                    Cluster c;
                    c.exemplar_lp = members[static_cast<std::size_t>(e)].first;
                    c.exemplar = members[static_cast<std::size_t>(e)].second;
                    for (int i = 0; i < k; ++i)
                        if (res.exemplar_of[static_cast<std::size_t>(i)] == e)
                            c.member_lps.push_back(members[static_cast<std::size_t>(i)].first);
                    clusters.push_back(std::move(c));
                }
            }
            per_ap[sector] = std::move(clusters);
        }
        out.clusters.push_back(std::move(per_ap));
    }
    return out;
}

}  // namespace wigig
