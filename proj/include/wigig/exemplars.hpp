#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "wigig/radiomap.hpp"

namespace wigig {

using FingerprintVector = Eigen::VectorXd;  // one RSS value per AP, dBm

struct Cluster {
    int exemplar_lp = 0;              // learning-point index of the exemplar
    FingerprintVector exemplar;       // its fingerprint (a row of psi)
    std::vector<int> member_lps;      // includes the exemplar
};

/// Clustered WiFi fingerprints per (AP column, best sector id).
struct ExemplarSet {
    // clusters[n][d] = clusters of AP column n, best sector id d
    std::vector<std::map<int, std::vector<Cluster>>> clusters;

    int num_aps() const { return static_cast<int>(clusters.size()); }
    bool empty() const { return clusters.empty(); }

    const std::vector<Cluster>* find(int ap_col, int sector_id) const {
        const auto& per_ap = clusters[static_cast<std::size_t>(ap_col)];
        auto it = per_ap.find(sector_id);
        return it == per_ap.end() ? nullptr : &it->second;
    }
};

/// Partition of the covered learning points of AP column n by best sector
/// id. Pairs are (LP index, fingerprint row).
std::map<int, std::vector<std::pair<int, FingerprintVector>>> group_by_sector(
    const RadioMap& map, int ap_col);

struct ClusteringParams {
    double damping = 0.9;
    int max_iter = 500;
    int stable_iter = 50;
};

/// Groups each AP column by best sector id and clusters every group with
/// affinity propagation (similarity = negative squared Euclidean distance,
/// preference = median off-diagonal similarity).
ExemplarSet build_exemplars(const RadioMap& map, const ClusteringParams& params = {});

}  // namespace wigig
