#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aq/data/synth.hpp"
#include "aq/nn/tensor.hpp"

namespace aq::data {

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool stratified = true;
};

// Random 80/20 split by count: test size is round((1-fraction)*n), train
// keeps the remainder. Stratified mode applies the same rule per class and
// rejects classes with fewer than 2 samples.
std::pair<StackDataset, StackDataset> split_8_2(const StackDataset& dataset, const SplitSpec& spec);

// First 5/6 of the windows train, the rest test (chronological).
std::pair<std::vector<SeriesWindow>, std::vector<SeriesWindow>> split_windows_chronological(
    const std::vector<SeriesWindow>& windows, double train_fraction = 5.0 / 6.0);

/** Per-channel means over a training split; subtracted before the classifier. */
struct ChannelStats {
    std::array<double, haze::kFeatureChannels> mean{};

    static ChannelStats fit(const StackDataset& train);
};

// Channel-major [6,S,S] input with the training means removed.
nn::Tensor to_model_input(const haze::FeatureStack& stack, const ChannelStats& stats);

// Dataset directory layout: manifest.json plus stacks/<id>.bin (single-tensor
// parameter blobs). The manifest records id, file, label, extinction, digest.
void save_dataset(const StackDataset& dataset, const std::string& dir);
StackDataset load_dataset(const std::string& dir);

std::uint64_t dataset_digest(const StackDataset& dataset);

}  // namespace aq::data
