#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wigig/antenna.hpp"
#include "wigig/channel.hpp"
#include "wigig/geometry.hpp"

namespace wigig {

struct LearningPoint {
    int index = 0;  // 0-based, contiguous
    Position position{0.0, 0.0, 0.0};
};

struct ApSite {
    int id = 0;
    Position position{0.0, 0.0, 0.0};
    SectorCodebook codebook;
};

/// The three offline databases over the learning-point grid. Row l holds
/// learning point l, column n holds AP n. A best-sector value of 0 means
/// the AP does not cover that point, in which case the stored power is 0.
struct RadioMap {
    Eigen::MatrixXd psi;    // WiFi RSS, dBm
    Eigen::MatrixXi phi;    // best sector ids, 0 = null
    Eigen::MatrixXd p_off;  // received power at the best sector, linear mW

    std::vector<LearningPoint> lps;
    std::vector<int> ap_ids;
    std::vector<int> sectors_per_ap;  // D_n
    double noise_mw = 0.0;
    double coverage_threshold_dbm = 0.0;

    int num_lps() const { return static_cast<int>(psi.rows()); }
    int num_aps() const { return static_cast<int>(psi.cols()); }

    /// Throws std::runtime_error on any cross-matrix inconsistency.
    void validate() const;

    /// Restriction to a subset of AP columns, preserving order of `ids`.
    RadioMap select_aps(std::span<const int> ids) const;
};

/// Argmax of Eq.-style per-sector powers: the 1-based index of the largest
/// entry at or above the coverage threshold, ties to the lowest id.
std::optional<int> best_sector_id(std::span<const double> powers_dbm, double threshold_dbm);

struct RadioMapParams {
    double wigig_tx_power_dbm = 10.0;
    double wifi_tx_power_dbm = 20.0;
    int max_reflections = 2;
    double coverage_threshold_dbm = -70.0;
    WifiChannelParams wifi;
};

/// Offline survey: fills all three databases from the propagation model,
/// with zero shadowing (long-term averages).
RadioMap build_radio_map(const Environment& env, const std::vector<ApSite>& aps,
                         const std::vector<LearningPoint>& lps, const RadioMapParams& params);

/// All learning points covered by sector d_n of AP column n and sector d_m
/// of AP column m simultaneously.
std::vector<int> overlapped_lps(const RadioMap& map, int n, int d_n, int m, int d_m);

// Exemplar clusters ride along in the same database file; see exemplars.hpp.
struct ExemplarSet;

void save_radio_map(const RadioMap& map, const std::string& path,
                    const ExemplarSet* exemplars = nullptr);
RadioMap load_radio_map(const std::string& path, ExemplarSet* exemplars = nullptr);

}  // namespace wigig
