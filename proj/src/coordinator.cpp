#include "wigig/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wigig/units.hpp"

namespace wigig {

namespace {

double min_exemplar_distance(const OnlineFingerprint& psi_r,
                             const std::vector<Cluster>& clusters) {
    double best = std::numeric_limits<double>::infinity();
    for (const Cluster& c : clusters)
        best = std::min(best, (psi_r - c.exemplar).squaredNorm());
    return best;
}

}  // namespace

std::optional<int> associate_ue(const OnlineFingerprint& psi_r, const ExemplarSet& exemplars,
                                const std::set<int>& unused_ap_cols) {
    std::optional<int> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int n : unused_ap_cols) {
        if (n < 0 || n >= exemplars.num_aps()) continue;
        const auto& per_ap = exemplars.clusters[static_cast<std::size_t>(n)];
        if (per_ap.empty()) continue;  // AP covers nothing
        double d = std::numeric_limits<double>::infinity();
        for (const auto& [sector, clusters] : per_ap)
            d = std::min(d, min_exemplar_distance(psi_r, clusters));
        if (d < best_d) {
            best_d = d;
            best = n;
        }
    }
    return best;
}

std::vector<int> select_best_beams(const OnlineFingerprint& psi_r, int ap_col,
                                   const ExemplarSet& exemplars, int x) {
    const auto& per_ap = exemplars.clusters.at(static_cast<std::size_t>(ap_col));
    std::vector<std::pair<double, int>> ranked;
    for (const auto& [sector, clusters] : per_ap)
        ranked.emplace_back(min_exemplar_distance(psi_r, clusters), sector);
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> beams;
    const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(x), ranked.size());
    for (std::size_t i = 0; i < limit; ++i) beams.push_back(ranked[i].second);
    return beams;
}

double snr_at_lp(const RadioMap& map, int z, int n, int beam) {
    if (map.phi(z, n) != beam)
        throw std::invalid_argument("snr_at_lp: learning point not covered by that beam");
    const double p = map.p_off(z, n);
    if (p <= 0.0) throw std::invalid_argument("snr_at_lp: zero offline power");
    return p / map.noise_mw;
}

double sinr_at_lp(const RadioMap& map, int z, int n, int beam, int m, int d_m) {
    if (map.phi(z, n) != beam || map.phi(z, m) != d_m)
        throw std::invalid_argument("sinr_at_lp: not an overlapped learning point");
    const double p = map.p_off(z, n);
    if (p <= 0.0) throw std::invalid_argument("sinr_at_lp: zero offline power");
    return p / (map.p_off(z, m) + map.noise_mw);
}

std::vector<std::set<int>> bad_beam_candidates(const RadioMap& map, int n,
                                               const std::vector<int>& best_beams, int m,
                                               const McsTable& table) {
    if (m == n) throw std::invalid_argument("bad_beam_candidates: interferer equals victim");
    std::vector<std::set<int>> out(best_beams.size());
    const int d_max = map.sectors_per_ap[static_cast<std::size_t>(m)];
    for (std::size_t x = 0; x < best_beams.size(); ++x) {
        const int beam = best_beams[x];
        for (int d_m = 1; d_m <= d_max; ++d_m) {
            bool degrades = false;
            for (int z : overlapped_lps(map, n, beam, m, d_m)) {
                const int ideal = mcs_from_snr(linear_to_db(snr_at_lp(map, z, n, beam)), table);
                const int realized =
                    mcs_from_snr(linear_to_db(sinr_at_lp(map, z, n, beam, m, d_m)), table);
                if (realized < ideal) {
                    degrades = true;
                    break;
                }
            }
            if (degrades) out[x].insert(d_m);
        }
    }
    return out;
}

std::set<int> refine_bad_beams(const RadioMap& map, const ActiveLinkRecord& bid, int m,
                               const McsTable& table) {
    const int n = bid.ap_col;
    if (bid.beam < 1 || bid.beam > map.sectors_per_ap[static_cast<std::size_t>(n)])
        throw std::invalid_argument("refine_bad_beams: unknown beam id");
    const auto offline = bad_beam_candidates(map, n, {bid.beam}, m, table).front();

    const double actual_mw = dbm_to_mw(bid.rx_power_dbm);
    std::set<int> refined;
    for (int d_m : offline) {
        for (int z : overlapped_lps(map, n, bid.beam, m, d_m)) {
            const double sinr = actual_mw / (map.p_off(z, m) + map.noise_mw);
            if (mcs_from_snr(linear_to_db(sinr), table) < bid.mcs_index) {
                refined.insert(d_m);
                break;
            }
        }
    }
    return refined;
}

std::vector<int> eliminate_bad_beams(const std::vector<int>& best_beams,
                                     const std::set<int>& bad) {
    std::vector<int> out;
    for (int b : best_beams)
        if (!bad.contains(b)) out.push_back(b);
    return out;
}

}  // namespace wigig
