#include "wigig/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "wigig/units.hpp"

namespace wigig {

std::optional<double> rx_power_from_rays(std::span<const Ray> rays, const Sector& tx_sector,
                                         const Sector* rx_sector, double tx_power_dbm,
                                         double lambda_m) {
    if (rays.empty()) return std::nullopt;
    double sum_mw = 0.0;
    for (const Ray& r : rays) {
        double gain = antenna_gain_db(tx_sector, r.dep_az_deg, r.dep_el_deg);
        if (rx_sector != nullptr)
            gain += antenna_gain_db(*rx_sector, r.arr_az_deg, r.arr_el_deg);
        const double amp = lambda_m / (4.0 * std::numbers::pi * r.length_m);
        sum_mw += db_to_linear(gain - r.loss_db) * amp * amp;
    }
    return tx_power_dbm + linear_to_db(sum_mw);
}

std::optional<double> rx_power_from_rays(std::span<const Ray> rays, const Sector& tx_sector,
                                         double tx_power_dbm, double lambda_m) {
    return rx_power_from_rays(rays, tx_sector, nullptr, tx_power_dbm, lambda_m);
}

std::optional<double> wigig_rx_power_dbm(const Environment& env, const Position& ap,
                                         const Sector& sector, const Position& ue,
                                         double tx_power_dbm, int max_reflections) {
    const auto rays = trace_rays(env, ap, ue, max_reflections);
    const double lambda = kSpeedOfLight / env.wigig_freq_hz;
    return rx_power_from_rays(rays, sector, tx_power_dbm, lambda);
}

double wifi_rss_dbm(const Environment& env, const Position& ap, const Position& ue,
                    double tx_power_dbm, double shadowing_db,
                    const WifiChannelParams& params) {
    if (!env.contains(ap) || !env.contains(ue))
        throw std::invalid_argument("wifi_rss_dbm: position outside environment");
    const double lambda = kSpeedOfLight / env.wifi_freq_hz;
    const double d0 = params.ref_distance_m;
    const double d = std::max((ap - ue).norm(), d0);
    const double pl = fspl_db(d0, lambda) +
                      10.0 * params.path_loss_exponent * std::log10(d / d0) +
                      env.wifi_wall_loss_db * env.walls_crossed(ap, ue);
    return tx_power_dbm - pl + shadowing_db;
}

}  // namespace wigig
