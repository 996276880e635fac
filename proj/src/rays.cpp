#include "wigig/rays.hpp"

#include <cmath>
#include <stdexcept>

#include "wigig/units.hpp"

namespace wigig {

namespace {

// Mirror image of coordinate v within [0, extent] for tile index i of the
// reflected-room tessellation.
double image_coord(double v, double extent, int i) {
    const double base = static_cast<double>(i) * extent;
    return (i % 2 == 0) ? base + v : base + extent - v;
}

// Reflection losses collected while crossing |i| planes along one axis.
// Walking outward from tile 0, crossings alternate between the two
// surfaces of the axis, starting with the positive one for i > 0.
double axis_loss(int i, double loss_neg, double loss_pos) {
    const int n = std::abs(i);
    const int first_pos = i > 0 ? (n + 1) / 2 : n / 2;
    return first_pos * loss_pos + (n - first_pos) * loss_neg;
}

}  // namespace

std::vector<Ray> trace_rays(const Environment& env, const Position& tx,
                            const Position& rx, int max_reflections) {
    if ((tx - rx).norm() == 0.0)
        throw std::invalid_argument("trace_rays: tx and rx coincide");
    if (!env.contains(tx) || !env.contains(rx))
        throw std::invalid_argument("trace_rays: endpoint outside environment");

    const double ext[3] = {env.width, env.depth, env.height};
    std::vector<Ray> rays;

    const int r = max_reflections;
    for (int i = -r; i <= r; ++i) {
        for (int j = -r; j <= r; ++j) {
            for (int k = -r; k <= r; ++k) {
                const int bounces = std::abs(i) + std::abs(j) + std::abs(k);
                if (bounces > r) continue;

                const Position img(image_coord(rx.x(), ext[0], i),
                                   image_coord(rx.y(), ext[1], j),
                                   image_coord(rx.z(), ext[2], k));
                const Position d = img - tx;
                const double len = d.norm();

                Ray ray;
                ray.length_m = len;
                ray.reflections = bounces;
                ray.loss_db = axis_loss(i, env.reflection_loss_db[0], env.reflection_loss_db[1]) +
                              axis_loss(j, env.reflection_loss_db[2], env.reflection_loss_db[3]) +
                              axis_loss(k, env.reflection_loss_db[4], env.reflection_loss_db[5]);

                ray.dep_az_deg = rad2deg(std::atan2(d.y(), d.x()));
                ray.dep_el_deg = rad2deg(std::atan2(d.z(), std::hypot(d.x(), d.y())));

                // Folding the unfolded segment back into the room flips one
                // direction component per crossing of that axis.
                const double ax = (std::abs(i) % 2 == 0) ? d.x() : -d.x();
                const double ay = (std::abs(j) % 2 == 0) ? d.y() : -d.y();
                const double az = (std::abs(k) % 2 == 0) ? d.z() : -d.z();
                // Outgoing (away from rx) direction is the reverse of arrival.
                ray.arr_az_deg = rad2deg(std::atan2(-ay, -ax));
                ray.arr_el_deg = rad2deg(std::atan2(-az, std::hypot(ax, ay)));

                rays.push_back(ray);
            }
        }
    }
    return rays;
}

}  // namespace wigig
