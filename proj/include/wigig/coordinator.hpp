#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "wigig/exemplars.hpp"
#include "wigig/mcs.hpp"
#include "wigig/radiomap.hpp"

namespace wigig {

using OnlineFingerprint = FingerprintVector;  // one RSS per AP column

/// One bad-beam entry: sector of the interfering AP and the victim beam it
/// would degrade.
struct BadBeam {
    int sector = 0;
    int victim_beam = 0;

    friend auto operator<=>(const BadBeam&, const BadBeam&) = default;
};

/// Outcome of one association decision.
struct BeamPlan {
    int ue = -1;
    int ap_col = -1;                          // associated AP column
    std::vector<int> best_beams;              // d*(1:X), best first
    std::map<int, std::vector<BadBeam>> bad;  // keyed by other AP column
};

/// Payload of a BID broadcast: the realized link parameters.
struct ActiveLinkRecord {
    int ap_col = -1;
    int beam = 0;
    double rx_power_dbm = 0.0;
    int mcs_index = 0;
};

/// Squared-distance fingerprint match against every exemplar of every
/// candidate AP; picks the closest covered AP among the unused ones.
std::optional<int> associate_ue(const OnlineFingerprint& psi_r, const ExemplarSet& exemplars,
                                const std::set<int>& unused_ap_cols);

/// Eq.-4 style ranking: per best sector id, the minimum exemplar distance;
/// sorted ascending, ties to the lowest id, truncated to X.
std::vector<int> select_best_beams(const OnlineFingerprint& psi_r, int ap_col,
                                   const ExemplarSet& exemplars, int x);

/// Offline SNR at learning point z for (AP column n, beam), linear ratio.
double snr_at_lp(const RadioMap& map, int z, int n, int beam);

/// Offline SINR at overlapped learning point z, victim (n, beam) against
/// interferer (m, d_m), linear ratio.
double sinr_at_lp(const RadioMap& map, int z, int n, int beam, int m, int d_m);

/// For each victim beam, every sector of AP m that degrades the victim's
/// MCS at one or more overlapped learning points. Indexed like best_beams.
std::vector<std::set<int>> bad_beam_candidates(const RadioMap& map, int n,
                                               const std::vector<int>& best_beams, int m,
                                               const McsTable& table);

/// Re-evaluates the candidates for the single realized beam with the BID's
/// actual power and MCS; always a subset of the offline candidate set.
std::set<int> refine_bad_beams(const RadioMap& map, const ActiveLinkRecord& bid, int m,
                               const McsTable& table);

/// Order-preserving removal of flagged beams from a training list.
std::vector<int> eliminate_bad_beams(const std::vector<int>& best_beams,
                                     const std::set<int>& bad);

}  // namespace wigig
