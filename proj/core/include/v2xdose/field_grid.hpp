#pragma once

#include <cstdint>
#include <vector>

#include "v2xdose/geometry.hpp"

namespace v2xdose {

struct FieldSample {
    Vec3 position;
    double e_rms = 0.0;  // V/m
    double p_dbm = 0.0;
    std::uint32_t path_count = 0;
    bool discarded = false;
};

// All receivers of one grid height, row-major (y outer, x inner).
struct FieldLayer {
    double height = 0.0;
    std::vector<FieldSample> samples;
};

}  // namespace v2xdose
