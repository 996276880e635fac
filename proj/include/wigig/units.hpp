#pragma once

#include <cmath>
#include <numbers>

namespace wigig {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wrap an angle difference into [-180, 180] degrees.
inline double wrap_deg(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) w += 360.0;
    return w - 180.0;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

}  // namespace wigig
