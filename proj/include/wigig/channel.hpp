#pragma once

#include <optional>
#include <span>

#include "wigig/antenna.hpp"
#include "wigig/geometry.hpp"
#include "wigig/rays.hpp"

namespace wigig {

/// Free-space path loss in dB at distance d for wavelength lambda.
inline double fspl_db(double distance_m, double lambda_m) {
    return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m / lambda_m);
}

/// Incoherent power sum over a ray set, with directional transmit gain and
/// an arbitrary receive gain callback (omni = 0 dB). Returns nothing for an
/// empty ray set (no coverage).
std::optional<double> rx_power_from_rays(std::span<const Ray> rays, const Sector& tx_sector,
                                         double tx_power_dbm, double lambda_m);

/// Same, but with a directional receive sector at the other end.
std::optional<double> rx_power_from_rays(std::span<const Ray> rays, const Sector& tx_sector,
                                         const Sector* rx_sector, double tx_power_dbm,
                                         double lambda_m);

/// 60 GHz received power at ue from ap transmitting through the given
/// sector, over image-method rays with up to max_reflections bounces.
std::optional<double> wigig_rx_power_dbm(const Environment& env, const Position& ap,
                                         const Sector& sector, const Position& ue,
                                         double tx_power_dbm, int max_reflections = 2);

struct WifiChannelParams {
    double ref_distance_m = 1.0;
    double path_loss_exponent = 2.2;
};

/// 5 GHz log-distance RSS. shadowing_db = 0 gives the long-term average
/// used for the offline databases; online measurements add a Gaussian draw.
double wifi_rss_dbm(const Environment& env, const Position& ap, const Position& ue,
                    double tx_power_dbm, double shadowing_db,
                    const WifiChannelParams& params = {});

}  // namespace wigig
