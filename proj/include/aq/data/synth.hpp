#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aq/data/observations.hpp"
#include "aq/graph/stations.hpp"
#include "aq/haze/features.hpp"
#include "aq/haze/image.hpp"

namespace aq::data {

enum class DepthFieldKind { LinearRamp, Radial, RandomSmooth };

DepthFieldKind depth_field_kind_from_string(const std::string& name);
std::string to_string(DepthFieldKind kind);

// Depth map in [0,1]; the smooth variant is value noise interpolated from a
// seeded coarse grid.
haze::GrayImage make_depth_field(DepthFieldKind kind, std::size_t height, std::size_t width,
                                 std::uint64_t seed);

// Procedural outdoor-ish scene: smooth colour field capped below the usual
// airlight brightness, with sparse near-black speckles so every patch keeps a
// dark pixel.
haze::RgbImage make_base_image(std::size_t height, std::size_t width, std::uint64_t seed);

// Attenuation forward model: out = base * b + airlight * (1 - b) with
// b(x) = exp(-extinction * depth(x)), clamped to [0,1].
haze::RgbImage synthesize_haze_image(const haze::RgbImage& base, double extinction,
                                     const std::array<double, 3>& airlight,
                                     const haze::GrayImage& depth);

/** Recipe for the synthetic labelled corpus. */
struct HazeSynthesisSpec {
    std::size_t base_count = 600;        // procedural bases when `bases` is empty
    std::size_t image_size = 64;         // square bases
    std::vector<haze::RgbImage> bases;   // optional explicit base images
    std::vector<double> extinctions;     // sorted positive haze levels
    std::array<double, 3> airlight{0.90, 0.92, 0.95};
    DepthFieldKind depth_kind = DepthFieldKind::RandomSmooth;
    // Half-open [lo, hi) intervals over extinction, one per class, last
    // interval closed. Empty means equal-width over the extinction range.
    std::vector<std::pair<double, double>> class_intervals;
    std::uint64_t seed = 0;

    void validate() const;
    std::vector<std::pair<double, double>> resolved_intervals(std::size_t classes) const;
    static std::vector<std::pair<double, double>> equal_width_intervals(
        const std::vector<double>& extinctions, std::size_t classes);
    int class_of(double extinction, const std::vector<std::pair<double, double>>& intervals) const;
};

struct LabeledStack {
    std::string id;
    haze::FeatureStack stack;
    int label = 0;
    double extinction = 0.0;
    std::uint64_t digest = 0;  // over the stack's channel bytes
};

struct StackDataset {
    std::vector<LabeledStack> samples;
    int classes = 0;
    std::size_t side = 0;  // stack spatial size
};

// Synthesizes base x extinction pairs, extracts feature stacks, labels by
// extinction interval, and balances classes to within one sample. The number
// of classes defaults to one per extinction level unless intervals are given.
StackDataset generate_haze_dataset(const HazeSynthesisSpec& spec,
                                   const haze::FeatureConfig& feature_cfg,
                                   std::size_t classes = 0);

/** Seeded spatio-temporal process on a station graph. */
struct DiffusionSpec {
    int steps = 2000;
    std::int64_t start_time = 1546300800;  // 2019-01-01T00:00:00Z
    std::int64_t step_seconds = 3600;
    double coupling = 0.6;        // weight of the neighbour-diffused previous value
    double noise_sigma = 3.0;
    double season_period = 24.0;  // steps per cycle
    // localized pollution episodes that spread to neighbours through the graph
    double event_rate = 0.25;      // per-step probability of a new episode
    double event_magnitude = 60.0; // additive spike at the source station
    int event_duration = 3;       // steps the source keeps emitting
    std::uint64_t seed = 0;
};

// x_{t+1} = coupling * (Prw x_t) + (1 - coupling) * seasonal_{t+1} + noise
// + episode emissions, where Prw is the row-normalized self-looped weight
// matrix. Episodes start at a random station and reach the rest of the graph
// only through the diffusion term. Values are kept inside [0,500].
ObservationTable generate_diffusion_series(const graph::StationGraph& g, const DiffusionSpec& spec);

// Evenly spread synthetic station ring around a city-scale center.
std::vector<graph::Station> make_station_ring(std::size_t count, double center_lat,
                                              double center_lon, double radius_km);

// Ring of small station clusters (cluster_size 1 degenerates to the ring).
// Mirrors real deployments where several monitors share a district, which
// concentrates the inverse-distance weights inside each cluster.
std::vector<graph::Station> make_station_clusters(std::size_t count, std::size_t cluster_size,
                                                  double center_lat, double center_lon,
                                                  double radius_km, double spread_km);

}  // namespace aq::data
