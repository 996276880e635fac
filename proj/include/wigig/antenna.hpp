#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wigig/units.hpp"

namespace wigig {

/// One directional transmit sector of the steering antenna model.
/// Angles in degrees: azimuth in (-180, 180], elevation in [-90, 90]
/// measured from the horizontal plane (negative = downward).
struct Sector {
    int id = 0;  // 1-based within its codebook
    double az_center_deg = 0.0;
    double el_tilt_deg = 0.0;
    double az_width_deg = 30.0;  // half-power beamwidth
    double el_width_deg = 30.0;
    double g0_db = 0.0;          // boresight gain
};

/// Boresight gain of the steering antenna model for a given half-power
/// beamwidth: 20*log10(1.6162 / sin(theta_3dB / 2)).
inline double g0_db(double beamwidth_deg) {
    if (!(beamwidth_deg > 0.0 && beamwidth_deg < 180.0))
        throw std::domain_error("g0_db: beamwidth must lie in (0, 180) degrees");
    return 20.0 * std::log10(1.6162 / std::sin(deg2rad(beamwidth_deg) / 2.0));
}

/// 3D sector gain in dB at the given departure direction. The quadratic
/// horizontal/vertical rolloffs are clipped at A_m = 12 + G0, which floors
/// the pattern at -12 dB.
inline double antenna_gain_db(const Sector& s, double az_deg, double el_deg) {
    const double am = 12.0 + s.g0_db;
    const double daz = wrap_deg(az_deg - s.az_center_deg) / s.az_width_deg;
    const double del = (el_deg - s.el_tilt_deg) / s.el_width_deg;
    const double gh = -std::min(12.0 * daz * daz, am);
    const double gv = -std::min(12.0 * del * del, am);
    return s.g0_db - std::min(-(gh + gv), am);
}

struct SectorCodebook {
    int ap_id = 0;
    std::vector<Sector> sectors;

    int size() const { return static_cast<int>(sectors.size()); }

    const Sector& sector(int id) const {
        if (id < 1 || id > size())
            throw std::out_of_range("SectorCodebook: unknown sector id");
        return sectors[static_cast<std::size_t>(id - 1)];
    }
};

struct CodebookLayout {
    int azimuth_count = 12;
    double azimuth_offset_deg = 0.0;
    std::vector<double> elevation_tilts_deg = {-70.0, -40.0, -10.0};
    double az_width_deg = 30.0;
    double el_width_deg = 30.0;
    std::optional<double> g0_override_db;  // e.g. force 25 dBi
};

/// Builds the regular grid codebook: azimuth ring x elevation tilts,
/// ids assigned row-major over (tilt, azimuth), 1-based.
inline SectorCodebook make_codebook(int ap_id, const CodebookLayout& layout = {}) {
    SectorCodebook cb;
    cb.ap_id = ap_id;
    const double g0 =
        layout.g0_override_db ? *layout.g0_override_db : g0_db(layout.el_width_deg);
    const double step = 360.0 / layout.azimuth_count;
    int id = 1;
    for (double tilt : layout.elevation_tilts_deg) {
        for (int k = 0; k < layout.azimuth_count; ++k) {
            Sector s;
            s.id = id++;
            s.az_center_deg = wrap_deg(layout.azimuth_offset_deg + k * step);
            s.el_tilt_deg = tilt;
            s.az_width_deg = layout.az_width_deg;
            s.el_width_deg = layout.el_width_deg;
            s.g0_db = g0;
            cb.sectors.push_back(s);
        }
    }
    return cb;
}

}  // namespace wigig
