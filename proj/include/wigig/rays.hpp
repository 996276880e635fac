#pragma once

#include <vector>

#include "wigig/geometry.hpp"

namespace wigig {

/// One multipath component between two points. Angles are the outgoing
/// direction at each endpoint, so the same ray can be used for transmit
/// gain at one end and receive gain at the other.
struct Ray {
    double length_m = 0.0;
    double dep_az_deg = 0.0;  // at tx
    double dep_el_deg = 0.0;
    double arr_az_deg = 0.0;  // outgoing direction at rx
    double arr_el_deg = 0.0;
    int reflections = 0;
    double loss_db = 0.0;  // accumulated reflection loss
};

/// Image-method rays in a rectangular room: the direct path plus every
/// reflection sequence with up to max_reflections bounces off the six
/// surfaces. Deterministic; ordering is fixed by the image enumeration.
std::vector<Ray> trace_rays(const Environment& env, const Position& tx,
                            const Position& rx, int max_reflections);

}  // namespace wigig
