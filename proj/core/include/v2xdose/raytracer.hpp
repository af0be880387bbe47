#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "v2xdose/antenna.hpp"
#include "v2xdose/field.hpp"
#include "v2xdose/scattering.hpp"
#include "v2xdose/scene.hpp"

namespace v2xdose {

inline constexpr int kMaxReflectionOrder = 10;
inline constexpr double kFreeSpaceImpedance = 376.73;  // ohm

struct TraceParams {
    double ray_spacing_deg = 0.2;
    int max_reflections = 6;
    int max_diffractions = 1;
    int max_transmissions = 0;
    // Reflections allowed before the diffraction on a diffracted path.
    int max_reflections_before_diffraction = 2;
    double rx_threshold_dbm = -250.0;
    double capture_safety = 1.5;
    bool coherent = true;
    bool vehicle_edges = true;

    // Throws ValidationError.
    void validate() const;
    // tan(spacing / 2) * safety; multiply by the unfolded length for the capture radius.
    double capture_rate() const;
};

// Interaction sequence: reflections in order, then an optional diffraction.
struct PathKey {
    std::uint8_t reflections = 0;
    std::int32_t wedge = -1;
    std::array<std::uint32_t, kMaxReflectionOrder> surfaces{};

    friend auto operator<=>(const PathKey&, const PathKey&) = default;
    friend bool operator==(const PathKey&, const PathKey&) = default;

    std::span<const std::uint32_t> reflection_surfaces() const { return {surfaces.data(), reflections}; }
    static PathKey direct() { return {}; }
    static PathKey reflected(std::span<const std::uint32_t> seq);
};

struct CandidateSet {
    std::vector<std::vector<PathKey>> per_receiver;  // sorted, unique
    std::vector<PathKey> edge_candidates;            // prefixes ending in a diffraction; sorted, unique
    std::size_t ray_count = 0;
};

// Class-I geodesic subdivision frequency whose neighbouring directions are at most `spacing_deg` apart.
int icosphere_frequency(double spacing_deg);
// Largest angle (rad) between neighbouring lattice directions for frequency `n`.
double icosphere_max_spacing(int n);
// 10 n^2 + 2 unit directions.
std::vector<Vec3> launch_directions(double spacing_deg);

CandidateSet launch_rays(const Scene& scene, const Transmitter& tx, std::span<const Vec3> receivers,
                         const TraceParams& params, int threads = 1);

enum class InteractionKind : std::uint8_t { Emit, Reflect, Diffract, Scatter, Receive };

struct Interaction {
    InteractionKind kind = InteractionKind::Emit;
    std::uint32_t index = 0;  // surface, wedge or tile
};

struct PropagationPath {
    std::vector<Interaction> interactions;  // Emit ... Receive
    std::vector<Vec3> points;               // one per interaction
    double total_length = 0.0;              // m
    double delay = 0.0;                     // s
    FieldVector field;                      // RMS phasor, V/m

    double magnitude() const { return field.norm(); }
    bool has(InteractionKind k) const;
};

// Image-method correction of a candidate sequence. Returns nullopt when a
// reflection point falls outside its polygon, the diffraction point leaves the
// edge or lies inside the wedge, or any segment is occluded.
std::optional<PropagationPath> exact_path_correction(const PathKey& key, const Vec3& tx, const Vec3& rx,
                                                     const Scene& scene);

// Single-bounce tx -> tile -> rx scatter path geometry (no field); nullopt when
// either end is behind the tile or a leg is blocked.
std::optional<PropagationPath> scatter_path(std::uint32_t tile_index, const ScatterTile& tile, const Vec3& tx,
                                            const Vec3& rx, const Scene& scene);

struct FieldOptions {
    ScatterParams scatter;
    std::span<const ScatterTile> tiles;  // required for scatter paths
};

// Complex field of a corrected path at its receiver.
FieldVector path_field(const PropagationPath& path, const Transmitter& tx, const Scene& scene,
                       const FieldOptions& options = {});

struct ReceiverField {
    double e_rms = 0.0;  // V/m
    double p_dbm = -std::numeric_limits<double>::infinity();
    std::uint32_t path_count = 0;
    bool discarded = true;
};

// Received power of an isotropic antenna: E^2 lambda^2 / (4 pi eta0), in dBm.
double received_power_dbm(double e_rms, double wavelength);

// Sums the paths in the given order (coherently or in power) and applies the threshold.
ReceiverField total_field(std::span<const PropagationPath> paths, double wavelength, double threshold_dbm,
                          bool coherent = true);

// Full multipath evaluation of one transmitter over the receivers.
std::vector<ReceiverField> trace_transmitter(const Scene& scene, const Transmitter& tx,
                                             std::span<const Vec3> receivers, const TraceParams& params,
                                             const FieldOptions& options, int threads = 1);

// All valid paths (with fields) reaching one receiver, in summation order.
std::vector<PropagationPath> receiver_paths(const Scene& scene, const Transmitter& tx, const Vec3& rx,
                                            std::span<const PathKey> keys, std::span<const PathKey> edge_candidates,
                                            const TraceParams& params, const FieldOptions& options);

// Incoherent combination of several transmitters' grids (power sum).
std::vector<ReceiverField> combine_transmitters(std::span<const std::vector<ReceiverField>> grids, double wavelength,
                                                double threshold_dbm);

}  // namespace v2xdose
