#include "v2xdose/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "v2xdose/errors.hpp"

namespace v2xdose {

double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("percentile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("percentile rank must be in [0, 1]");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return sorted[lo] + f * (sorted[hi] - sorted[lo]);
}

double skewness(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 3) throw DomainError("skewness needs at least 3 samples");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double m2 = 0.0;
    for (double v : x) m2 += (v - mean) * (v - mean);
    const double s = std::sqrt(m2 / static_cast<double>(n - 1));
    if (s == 0.0) return 0.0;
    double acc = 0.0;
    for (double v : x) {
        const double z = (v - mean) / s;
        acc += z * z * z;
    }
    const double nd = static_cast<double>(n);
    return nd / ((nd - 1.0) * (nd - 2.0)) * acc;
}

StatSummary summarize(std::span<const double> samples) {
    if (samples.size() < 3) throw DomainError("summarize needs at least 3 samples");
    std::vector<double> v(samples.begin(), samples.end());
    std::sort(v.begin(), v.end());
    StatSummary s;
    s.count = v.size();
    s.min = v.front();
    s.max = v.back();
    s.p25 = percentile_sorted(v, 0.25);
    s.median = percentile_sorted(v, 0.5);
    s.p75 = percentile_sorted(v, 0.75);
    s.p99 = percentile_sorted(v, 0.99);
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(v.size());
    s.skewness = skewness(samples);
    return s;
}

std::vector<DistanceBin> distance_profile(std::span<const Vec3> positions, std::span<const double> values,
                                          const Vec3& origin, double bin_width) {
    if (positions.size() != values.size()) throw DomainError("distance_profile: positions and values differ in length");
    if (bin_width < 0.0) throw DomainError("distance_profile: bin width must be non-negative");
    std::vector<std::pair<double, std::size_t>> d(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        double r = horizontal_distance(positions[i], origin);
        if (bin_width > 0.0) r = std::round(r / bin_width) * bin_width;
        d[i] = {r, i};
    }
    std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<DistanceBin> out;
    for (std::size_t k = 0; k < d.size();) {
        DistanceBin bin;
        bin.distance = d[k].first;
        std::vector<std::size_t> members;
        std::size_t j = k;
        while (j < d.size() && d[j].first - bin.distance <= 1e-6) members.push_back(d[j++].second);
        std::sort(members.begin(), members.end());
        for (auto m : members) bin.values.push_back(values[m]);
        out.push_back(std::move(bin));
        k = j;
    }
    return out;
}

double compute_dlim(std::span<const DistanceBin> profile, double factor) {
    std::vector<double> all;
    for (const auto& b : profile) all.insert(all.end(), b.values.begin(), b.values.end());
    if (all.empty()) throw DomainError("compute_dlim: empty profile");
    if (!(factor > 0.0)) throw DomainError("compute_dlim: factor must be positive");
    std::sort(all.begin(), all.end());
    const double threshold = factor * percentile_sorted(all, 0.99);
    double dlim = -1.0;
    for (const auto& b : profile) {
        if (std::any_of(b.values.begin(), b.values.end(), [&](double v) { return v >= threshold; })) {
            dlim = std::max(dlim, b.distance);
        }
    }
    if (dlim < 0.0) throw DomainError("compute_dlim: no sample reaches the threshold");
    return dlim;
}

bool Roi::contains(const Vec3& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
}

bool Roi::in_disks(const Vec3& p) const {
    return std::any_of(centers.begin(), centers.end(),
                       [&](const Vec3& c) { return horizontal_distance(p, c) <= d_lim; });
}

Roi build_roi(std::span<const Vec3> tx_positions, double d_lim, std::string center_tx) {
    if (tx_positions.empty()) throw DomainError("build_roi: no transmitter positions");
    if (!(d_lim > 0.0)) throw DomainError("build_roi: d_lim must be positive");
    Roi roi;
    roi.center_tx = std::move(center_tx);
    roi.d_lim = d_lim;
    roi.centers.assign(tx_positions.begin(), tx_positions.end());
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const Vec3& p : tx_positions) {
        x0 = std::min(x0, p.x - d_lim);
        x1 = std::max(x1, p.x + d_lim);
        y0 = std::min(y0, p.y - d_lim);
        y1 = std::max(y1, p.y + d_lim);
    }
    const double side = std::max(x1 - x0, y1 - y0);
    const double cx = 0.5 * (x0 + x1);
    const double cy = 0.5 * (y0 + y1);
    roi.x_min = (x1 - x0 == side) ? x0 : cx - 0.5 * side;
    roi.x_max = (x1 - x0 == side) ? x1 : cx + 0.5 * side;
    roi.y_min = (y1 - y0 == side) ? y0 : cy - 0.5 * side;
    roi.y_max = (y1 - y0 == side) ? y1 : cy + 0.5 * side;
    return roi;
}

}  // namespace v2xdose
