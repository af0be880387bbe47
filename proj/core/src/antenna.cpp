#include "v2xdose/antenna.hpp"

#include <algorithm>
#include <cmath>

#include "v2xdose/errors.hpp"

namespace v2xdose {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

Vec3 tilted_axis(double tilt_deg, double azimuth_deg) {
    const double t = tilt_deg * kPi / 180.0;
    const double a = azimuth_deg * kPi / 180.0;
    return {std::sin(t) * std::cos(a), std::sin(t) * std::sin(a), std::cos(t)};
}

Vec3 Transmitter::axis() const { return tilted_axis(tilt_deg, azimuth_deg); }

double Transmitter::gain_toward(const Vec3& dir) const {
    const double c = std::clamp(dot(axis(), dir), -1.0, 1.0);
    return dipole_gain(std::acos(c), peak_gain_dbi);
}

Transmitter Transmitter::v2v(std::string id, double x, double y) {
    Transmitter t;
    t.id = std::move(id);
    t.kind = TransmitterKind::V2V;
    t.position = {x, y, kV2VHeight};
    t.input_power_w = dbm_to_watts(kDefaultTxPowerDbm);
    return t;
}

Transmitter Transmitter::rsu(std::string id, double x, double y, double azimuth_deg) {
    Transmitter t;
    t.id = std::move(id);
    t.kind = TransmitterKind::RSU;
    t.position = {x, y, kRsuHeight};
    t.tilt_deg = kRsuTiltDeg;
    t.azimuth_deg = azimuth_deg;
    t.input_power_w = dbm_to_watts(kDefaultTxPowerDbm);
    return t;
}

double dipole_gain(double theta, double peak_gain_dbi) {
    const double s = std::sin(theta);
    if (std::abs(s) < 1e-12) return 0.0;
    const double f = std::cos(0.5 * kPi * std::cos(theta)) / s;
    return f * f * std::pow(10.0, peak_gain_dbi / 10.0);
}

double free_space_rms_field(double power_w, double gain, double d) {
    if (!(d > 0.0)) throw DomainError("free_space_rms_field: distance must be positive");
    return std::sqrt(30.0 * power_w * gain) / d;
}

GridPoints generate_grid(const ReceiverGrid& grid, const Scene& scene) {
    GridPoints out;
    if (!(grid.spacing > 0.0) || grid.heights.empty()) return out;
    const double tol = 1e-9 * std::max(1.0, grid.spacing);
    const auto nx = static_cast<long>(std::floor((grid.x_max - grid.x_min) / grid.spacing + tol)) + 1;
    const auto ny = static_cast<long>(std::floor((grid.y_max - grid.y_min) / grid.spacing + tol)) + 1;
    for (std::size_t layer = 0; layer < grid.heights.size(); ++layer) {
        for (long iy = 0; iy < ny; ++iy) {
            for (long ix = 0; ix < nx; ++ix) {
                const Vec3 p{grid.x_min + ix * grid.spacing, grid.y_min + iy * grid.spacing, grid.heights[layer]};
                if (scene.inside_solid(p)) {
                    out.removed.push_back(p);
                } else {
                    out.points.push_back({p, layer});
                }
            }
        }
    }
    return out;
}

}  // namespace v2xdose
