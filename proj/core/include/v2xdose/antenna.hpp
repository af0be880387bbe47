#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "v2xdose/geometry.hpp"
#include "v2xdose/scene.hpp"

namespace v2xdose {

enum class TransmitterKind { V2V, RSU };

inline constexpr double kDefaultTxPowerDbm = 33.0;
inline constexpr double kV2VHeight = 1.7;  // m
inline constexpr double kRsuHeight = 5.0;  // m
inline constexpr double kRsuTiltDeg = 10.0;

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Half-wave dipole source. The axis is vertical for V2V; an RSU tilts its
// axis by `tilt_deg` so the broadside beam dips toward `azimuth_deg`.
struct Transmitter {
    std::string id;
    TransmitterKind kind = TransmitterKind::V2V;
    Vec3 position{0.0, 0.0, kV2VHeight};
    double tilt_deg = 0.0;
    double azimuth_deg = 0.0;  // facing direction in the xy plane, from +x toward +y
    double input_power_w = 0.0;
    double peak_gain_dbi = 0.0;
    double frequency_hz = kDefaultFrequencyHz;
    bool reference = false;  // origin for distance profiles

    Vec3 axis() const;
    // Linear power gain toward unit direction `dir`.
    double gain_toward(const Vec3& dir) const;

    static Transmitter v2v(std::string id, double x, double y);
    static Transmitter rsu(std::string id, double x, double y, double azimuth_deg);
};

// Dipole axis tilted by `tilt_deg` from vertical toward `azimuth_deg`.
Vec3 tilted_axis(double tilt_deg, double azimuth_deg);

// [cos(pi/2 cos(theta)) / sin(theta)]^2 scaled so the broadside peak equals
// `peak_gain_dbi`. Zero on the axis.
double dipole_gain(double theta, double peak_gain_dbi = 0.0);

// E_rms = sqrt(30 P G) / d. Throws DomainError for d <= 0.
double free_space_rms_field(double power_w, double gain, double d);

struct ReceiverGrid {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    double spacing = 3.0;
    std::vector<double> heights{1.7, 1.5, 0.85};
};

struct Receiver {
    Vec3 position;
    std::size_t layer = 0;  // index into ReceiverGrid::heights
};

struct GridPoints {
    std::vector<Receiver> points;  // layer-major, then row-major (y outer, x inner)
    std::vector<Vec3> removed;     // lattice points inside solid geometry
};

GridPoints generate_grid(const ReceiverGrid& grid, const Scene& scene);

}  // namespace v2xdose
