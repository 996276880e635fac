#pragma once

#include <Eigen/Dense>
#include <vector>

namespace wigig {

using Position = Eigen::Vector3d;  // meters, z up

/// Axis-aligned interior wall segment (full room height) used only for the
/// 5 GHz penetration-loss model. axis 0 = plane of constant x, axis 1 = y.
struct InteriorWall {
    int axis = 0;
    double position = 0.0;
    double from = 0.0;  // extent along the other horizontal axis
    double to = 0.0;
};

/// Rectangular indoor environment with per-surface reflection losses.
/// Surfaces are indexed x-, x+, y-, y+, floor, ceiling.
struct Environment {
    double width = 18.0;   // x extent, m
    double depth = 10.0;   // y extent, m
    double height = 3.0;   // z extent, m

    double reflection_loss_db[6] = {14.0, 14.0, 14.0, 14.0, 14.0, 14.0};

    double wigig_freq_hz = 60.0e9;
    double wifi_freq_hz = 5.0e9;

    double noise_dbm = default_noise_dbm();
    double wifi_wall_loss_db = 5.0;
    std::vector<InteriorWall> interior_walls;

    /// Thermal noise over a 1.76 GHz channel plus a 10 dB noise figure.
    static double default_noise_dbm() {
        const double ktb_mw = 1.380649e-23 * 290.0 * 1.76e9 * 1000.0;
        return 10.0 * std::log10(ktb_mw) + 10.0;
    }

    double noise_mw() const { return std::pow(10.0, noise_dbm / 10.0); }

    bool contains(const Position& p) const {
        return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= depth &&
               p.z() >= 0.0 && p.z() <= height;
    }

    void set_reflection_loss(double db) {
        for (double& v : reflection_loss_db) v = db;
    }

    /// Number of interior walls crossed by the straight segment a-b,
    /// projected on the horizontal plane.
    int walls_crossed(const Position& a, const Position& b) const {
        int n = 0;
        for (const auto& w : interior_walls) {
            const double pa = w.axis == 0 ? a.x() : a.y();
            const double pb = w.axis == 0 ? b.x() : b.y();
            if ((pa - w.position) * (pb - w.position) >= 0.0) continue;
            const double t = (w.position - pa) / (pb - pa);
            const double oa = w.axis == 0 ? a.y() : a.x();
            const double ob = w.axis == 0 ? b.y() : b.x();
            const double cross = oa + t * (ob - oa);
            if (cross >= w.from && cross <= w.to) ++n;
        }
        return n;
    }
};

}  // namespace wigig
