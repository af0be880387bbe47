#pragma once

#include <span>
#include <string>
#include <vector>

#include "v2xdose/geometry.hpp"

namespace v2xdose {

struct StatSummary {
    std::size_t count = 0;
    double min = 0.0;
    double p25 = 0.0;
    double median = 0.0;
    double p75 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double skewness = 0.0;
};

// Inclusive linear interpolation at position p*(n-1) of sorted data, p in [0, 1].
double percentile_sorted(std::span<const double> sorted, double p);

// Adjusted Fisher-Pearson skewness n/((n-1)(n-2)) * sum(((x-mean)/s)^3), s the
// sample standard deviation. Zero for constant data. Needs n >= 3.
double skewness(std::span<const double> samples);

// Throws DomainError for fewer than 3 samples.
StatSummary summarize(std::span<const double> samples);

struct DistanceBin {
    double distance = 0.0;  // m, horizontal
    std::vector<double> values;
};

// Groups values by horizontal distance from `origin`. With bin_width 0,
// distances equal within 1e-6 m share a bin; otherwise distances are rounded
// to multiples of bin_width. Bins are sorted by distance, values keep input order.
std::vector<DistanceBin> distance_profile(std::span<const Vec3> positions, std::span<const double> values,
                                          const Vec3& origin, double bin_width = 0.0);

// Largest bin distance holding a value >= factor * p99 of all values.
double compute_dlim(std::span<const DistanceBin> profile, double factor = 0.7);

struct Roi {
    std::string center_tx;
    double d_lim = 0.0;
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    std::vector<Vec3> centers;

    double side() const { return x_max - x_min; }
    // Inside the square (boundary inclusive).
    bool contains(const Vec3& p) const;
    // Within d_lim of some transmitter (horizontal distance).
    bool in_disks(const Vec3& p) const;
};

// Smallest axis-aligned square holding every disk of radius d_lim, the
// shorter side of the disks' bounding box grown symmetrically.
Roi build_roi(std::span<const Vec3> tx_positions, double d_lim, std::string center_tx = {});

}  // namespace v2xdose
