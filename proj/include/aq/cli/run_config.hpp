#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aq/data/dataset.hpp"
#include "aq/data/synth.hpp"
#include "aq/dmnet/model.hpp"
#include "aq/fed/federation.hpp"
#include "aq/graph/gclstm.hpp"
#include "aq/haze/features.hpp"

namespace aq::cli {

/**
 * Resolved settings for one run: built-in desk-scale defaults, overridden by
 * a JSON config file, overridden again by command-line flags. The resolved
 * snapshot (including the seed) is embedded in every report, so any number
 * in a report can be reproduced from the report alone.
 */
struct RunConfig {
    std::uint64_t seed = 0;

    haze::FeatureConfig feature;           // target_size 32 by default here
    dmnet::DenseMobileNetConfig model;     // classes follow the dataset at training time
    fed::RoundConfig federation;
    int clients = 4;
    double public_fraction = 0.0;          // share of train data used for pretraining
    int pretrain_epochs = 1;
    graph::GcLstmConfig gclstm;
    data::SplitSpec split;

    // synthetic image corpus
    std::size_t synth_samples = 600;
    std::size_t synth_image_size = 64;
    std::vector<double> synth_extinctions{0.4, 2.2, 4.0};
    std::size_t synth_classes = 0;         // 0: one class per extinction level
    data::DepthFieldKind depth_kind = data::DepthFieldKind::RandomSmooth;
    std::array<double, 3> synth_airlight{0.90, 0.92, 0.95};

    // synthetic station network
    int diffusion_stations = 10;
    int diffusion_steps = 2000;
    double diffusion_coupling = 0.6;
    double diffusion_noise = 3.0;
    double diffusion_period = 24.0;
    double diffusion_event_rate = 0.25;
    double diffusion_event_magnitude = 60.0;
    int diffusion_event_duration = 3;
    int cluster_size = 2;
    double cluster_spread_km = 0.6;
    double ring_radius_km = 8.0;
    double ring_center_lat = 23.129;
    double ring_center_lon = 113.264;

    RunConfig();

    // Apply a JSON document (file layer). Unknown keys are rejected.
    void apply_json(const nlohmann::json& doc);

    static RunConfig resolve(const std::optional<std::string>& config_path);

    // Full resolved view, key-sorted, suitable for embedding in reports.
    nlohmann::json snapshot() const;

    // Digest of snapshot + seed; stable across identical runs.
    std::string run_id() const;
};

}  // namespace aq::cli
