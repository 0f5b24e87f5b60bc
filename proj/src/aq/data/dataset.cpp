#include "aq/data/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "aq/errors.hpp"
#include "aq/nn/param_set.hpp"
#include "aq/util/digest.hpp"

namespace aq::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

}  // namespace

std::pair<StackDataset, StackDataset> split_8_2(const StackDataset& dataset,
                                                const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ConfigError("split: train_fraction must be in (0,1)");
    }
    const std::size_t n = dataset.samples.size();
    if (n < 5) throw ConfigError("split: dataset too small (" + std::to_string(n) + " samples)");

    StackDataset train, test;
    train.classes = test.classes = dataset.classes;
    train.side = test.side = dataset.side;

    auto assign = [&](const std::vector<std::size_t>& pool, std::uint64_t seed) {
        const std::size_t test_count = static_cast<std::size_t>(
            std::llround((1.0 - spec.train_fraction) * static_cast<double>(pool.size())));
        auto order = shuffled_indices(pool.size(), seed);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const auto& s = dataset.samples[pool[order[i]]];
            (i < test_count ? test : train).samples.push_back(s);
        }
    };

    if (spec.stratified) {
        std::vector<std::vector<std::size_t>> per_class(
            static_cast<std::size_t>(dataset.classes));
        for (std::size_t i = 0; i < n; ++i) {
            per_class[static_cast<std::size_t>(dataset.samples[i].label)].push_back(i);
        }
        for (std::size_t c = 0; c < per_class.size(); ++c) {
            if (per_class[c].size() < 2) {
                throw ConfigError("split: class " + std::to_string(c) + " has " +
                                  std::to_string(per_class[c].size()) +
                                  " samples; stratified split needs at least 2");
            }
            assign(per_class[c], util::mix_seed(spec.seed, c));
        }
    } else {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        assign(all, spec.seed);
    }

    auto by_id = [](const LabeledStack& a, const LabeledStack& b) { return a.id < b.id; };
    std::sort(train.samples.begin(), train.samples.end(), by_id);
    std::sort(test.samples.begin(), test.samples.end(), by_id);
    return {std::move(train), std::move(test)};
}

std::pair<std::vector<SeriesWindow>, std::vector<SeriesWindow>> split_windows_chronological(
    const std::vector<SeriesWindow>& windows, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split: train_fraction must be in (0,1)");
    }
    const std::size_t cut = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(windows.size())));
    std::vector<SeriesWindow> train(windows.begin(),
                                    windows.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<SeriesWindow> test(windows.begin() + static_cast<std::ptrdiff_t>(cut),
                                   windows.end());
    return {std::move(train), std::move(test)};
}

ChannelStats ChannelStats::fit(const StackDataset& train) {
    if (train.samples.empty()) throw ConfigError("ChannelStats: empty training set");
    ChannelStats stats;
    std::array<double, haze::kFeatureChannels> acc{};
    std::size_t per_channel = 0;
    for (const auto& s : train.samples) {
        const auto& v = s.stack.channels.data();
        const std::size_t pixels = v.size() / haze::kFeatureChannels;
        per_channel += pixels;
        for (std::size_t p = 0; p < pixels; ++p) {
            for (std::size_t c = 0; c < haze::kFeatureChannels; ++c) {
                acc[c] += v[p * haze::kFeatureChannels + c];
            }
        }
    }
    for (std::size_t c = 0; c < haze::kFeatureChannels; ++c) {
        stats.mean[c] = acc[c] / static_cast<double>(per_channel);
    }
    return stats;
}

nn::Tensor to_model_input(const haze::FeatureStack& stack, const ChannelStats& stats) {
    nn::Tensor chw = stack.to_chw();
    auto& v = chw.data();
    const std::size_t plane = stack.side() * stack.side();
    for (std::size_t c = 0; c < haze::kFeatureChannels; ++c) {
        for (std::size_t p = 0; p < plane; ++p) v[c * plane + p] -= stats.mean[c];
    }
    return chw;
}

void save_dataset(const StackDataset& dataset, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "stacks");
    json manifest;
    manifest["classes"] = dataset.classes;
    manifest["side"] = dataset.side;
    manifest["samples"] = json::array();
    for (const auto& s : dataset.samples) {
        const std::string rel = "stacks/" + s.id + ".bin";
        nn::ParamSet blob;
        blob.add("features", s.stack.channels);
        blob.add("diagnostics",
                 nn::Tensor({4}, {s.stack.rms_global, s.stack.entropy_global,
                                  s.stack.smoothness_avg,
                                  static_cast<double>(s.stack.otsu_threshold)}));
        blob.save_file((fs::path(dir) / rel).string());
        manifest["samples"].push_back({{"id", s.id},
                                       {"file", rel},
                                       {"label", s.label},
                                       {"extinction", s.extinction},
                                       {"digest", util::hex64(s.digest)}});
    }
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

StackDataset load_dataset(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw IoError("cannot open manifest in " + dir);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IoError("bad manifest in " + dir + ": " + e.what());
    }
    StackDataset out;
    out.classes = manifest.at("classes").get<int>();
    out.side = manifest.at("side").get<std::size_t>();
    for (const auto& e : manifest.at("samples")) {
        LabeledStack s;
        s.id = e.at("id").get<std::string>();
        s.label = e.at("label").get<int>();
        s.extinction = e.at("extinction").get<double>();
        nn::ParamSet blob =
            nn::ParamSet::load_file((fs::path(dir) / e.at("file").get<std::string>()).string());
        s.stack.channels = blob.get("features");
        const auto& diag = blob.get("diagnostics").data();
        s.stack.rms_global = diag[0];
        s.stack.entropy_global = diag[1];
        s.stack.smoothness_avg = diag[2];
        s.stack.otsu_threshold = static_cast<int>(diag[3]);
        s.digest = util::fnv1a64(s.stack.channels.data());
        const std::string want = e.at("digest").get<std::string>();
        if (util::hex64(s.digest) != want) {
            throw IoError("digest mismatch for sample " + s.id + " in " + dir);
        }
        out.samples.push_back(std::move(s));
    }
    if (out.samples.empty()) throw IoError("dataset in " + dir + " is empty");
    return out;
}

std::uint64_t dataset_digest(const StackDataset& dataset) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& s : dataset.samples) {
        h = util::fnv1a64(s.id, h);
        h = util::fnv1a64(&s.digest, sizeof(s.digest), h);
        h = util::fnv1a64(&s.label, sizeof(s.label), h);
    }
    return h;
}

}  // namespace aq::data
