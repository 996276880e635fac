#pragma once

#include <stdexcept>
#include <vector>

namespace wigig {

struct McsEntry {
    int index = 0;
    double min_snr_db = 0.0;
    double rate_bps = 0.0;
};

/// Ordered MCS ladder. Index 0 is reserved for "no transmission"; entries
/// here start at index 1 with strictly increasing thresholds and rates.
struct McsTable {
    std::vector<McsEntry> entries;

    void validate() const {
        if (entries.empty()) throw std::invalid_argument("mcs table: empty");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].index != static_cast<int>(i) + 1)
                throw std::invalid_argument("mcs table: indices must be 1..K contiguous");
            if (i > 0 && !(entries[i].min_snr_db > entries[i - 1].min_snr_db &&
                           entries[i].rate_bps > entries[i - 1].rate_bps))
                throw std::invalid_argument("mcs table: thresholds and rates must increase");
        }
    }

    int max_index() const { return static_cast<int>(entries.size()); }

    double rate_bps(int index) const {
        if (index == 0) return 0.0;
        return at(index).rate_bps;
    }

    double min_snr_db(int index) const { return at(index).min_snr_db; }

    const McsEntry& at(int index) const {
        if (index < 1 || index > max_index())
            throw std::out_of_range("mcs table: index out of range");
        return entries[static_cast<std::size_t>(index - 1)];
    }
};

/// Highest index whose threshold is at or below the SNR; 0 below the ladder.
inline int mcs_from_snr(double snr_db, const McsTable& table) {
    int best = 0;
    for (const McsEntry& e : table.entries)
        if (snr_db >= e.min_snr_db) best = e.index;
    return best;
}

/// 12-step ladder patterned on 802.11ad single-carrier rates, thresholds
/// evenly spaced over [1, 21] dB.
inline McsTable default_mcs_table() {
    static const double rates_mbps[12] = {385.0,  770.0,  962.5,  1155.0, 1251.25, 1540.0,
                                          1925.0, 2310.0, 2502.5, 3080.0, 3850.0,  4620.0};
    McsTable t;
    for (int i = 0; i < 12; ++i) {
        McsEntry e;
        e.index = i + 1;
        e.min_snr_db = 1.0 + 20.0 * i / 11.0;
        e.rate_bps = rates_mbps[i] * 1e6;
        t.entries.push_back(e);
    }
    return t;
}

}  // namespace wigig
