#include "aq/dmnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "aq/errors.hpp"
#include "aq/nn/ops.hpp"
#include "aq/util/digest.hpp"

namespace aq::dmnet {

namespace fs = std::filesystem;

void DenseMobileNetConfig::validate() const {
    if (input_size == 0) throw ConfigError("input_size must be positive");
    if (input_channels == 0) throw ConfigError("input_channels must be positive");
    if (blocks.empty()) throw ConfigError("at least one block is required");
    for (const auto& b : blocks) {
        if (b.layers < 1) throw ConfigError("every block needs at least one layer");
        if (b.growth < 1) throw ConfigError("growth channels must be positive");
    }
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 1");
    if (classes < 2) throw ConfigError("need at least 2 classes");
    if (static_cast<std::size_t>(kernel) > input_size) {
        throw ConfigError("kernel larger than input");
    }
}

double dsc_reduction_ratio(int kernel, int out_channels) {
    if (kernel < 1 || out_channels < 1) {
        throw ConfigError("dsc_reduction_ratio: kernel and out_channels must be >= 1");
    }
    return 1.0 / out_channels + 1.0 / (static_cast<double>(kernel) * kernel);
}

namespace {

nn::Tensor he_uniform(nn::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    nn::Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

std::string dw_name(std::size_t b, int l) {
    return "block" + std::to_string(b) + ".layer" + std::to_string(l) + ".dw";
}
std::string pw_name(std::size_t b, int l) {
    return "block" + std::to_string(b) + ".layer" + std::to_string(l) + ".pw";
}

}  // namespace

DenseMobileNet::DenseMobileNet(DenseMobileNetConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);
    const std::size_t k = static_cast<std::size_t>(cfg_.kernel);
    std::size_t channels = cfg_.input_channels;
    for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
        for (int l = 0; l < cfg_.blocks[b].layers; ++l) {
            const std::size_t growth = static_cast<std::size_t>(cfg_.blocks[b].growth);
            params_.add(dw_name(b, l), he_uniform({channels, k, k}, k * k, rng));
            params_.add(pw_name(b, l), he_uniform({growth, channels}, channels, rng));
            channels += growth;
        }
    }
    params_.add("head.w",
                he_uniform({static_cast<std::size_t>(cfg_.classes), channels}, channels, rng));
    params_.add("head.b", nn::Tensor({static_cast<std::size_t>(cfg_.classes)}));
}

DenseMobileNet DenseMobileNet::from_params(DenseMobileNetConfig cfg, nn::ParamSet params) {
    DenseMobileNet model(cfg);
    std::string mismatch;
    if (!model.params_.aligned_with(params, &mismatch)) {
        throw ShapeError("parameter set does not match architecture: " + mismatch);
    }
    model.params_ = std::move(params);
    return model;
}

nn::Tensor DenseMobileNet::forward(const nn::Tensor& input, nn::Tape* tape) const {
    if (input.rank() != 3 || input.extent(0) != cfg_.input_channels ||
        input.extent(1) != cfg_.input_size || input.extent(2) != cfg_.input_size) {
        throw ShapeError("forward: expected input (" + std::to_string(cfg_.input_channels) + "," +
                         std::to_string(cfg_.input_size) + "," + std::to_string(cfg_.input_size) +
                         "), got " + nn::shape_str(input.shape()));
    }
    const int pad = cfg_.kernel / 2;
    nn::Tensor x = input;
    for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
        std::vector<nn::Tensor> features{x};
        for (int l = 0; l < cfg_.blocks[b].layers; ++l) {
            nn::Tensor in = nn::dense_concat(features, tape);
            nn::Tensor h = nn::depthwise_conv(in, params_.get(dw_name(b, l)), 1, pad, tape);
            h = nn::pointwise_conv(h, params_.get(pw_name(b, l)), tape);
            h = nn::relu(h, tape);
            features.push_back(h);
        }
        x = nn::dense_concat(features, tape);
    }
    nn::Tensor pooled = nn::global_avg_pool(x, tape);
    return nn::linear(pooled, params_.get("head.w"), params_.get("head.b"), tape);
}

nn::Tensor DenseMobileNet::forward_batch(const std::vector<nn::Tensor>& batch,
                                         nn::Tape* tape) const {
    if (batch.empty()) throw ShapeError("forward_batch: empty batch");
    std::vector<nn::Tensor> rows;
    rows.reserve(batch.size());
    for (const auto& sample : batch) rows.push_back(forward(sample, tape));
    return nn::stack_rows(rows, tape);
}

ModelSummary DenseMobileNet::summary() const {
    ModelSummary s;
    const std::size_t k2 = static_cast<std::size_t>(cfg_.kernel) * cfg_.kernel;
    const std::size_t plane = cfg_.input_size * cfg_.input_size;  // same padding, stride 1
    std::size_t channels = cfg_.input_channels;
    std::size_t conv_params = 0, std_conv_params = 0;
    for (const auto& block : cfg_.blocks) {
        for (int l = 0; l < block.layers; ++l) {
            const std::size_t growth = static_cast<std::size_t>(block.growth);
            conv_params += channels * k2 + channels * growth;
            s.macs += channels * k2 * plane + channels * growth * plane;
            std_conv_params += channels * k2 * growth;
            s.std_macs += channels * k2 * growth * plane;
            channels += growth;
        }
    }
    const std::size_t head = static_cast<std::size_t>(cfg_.classes) * channels +
                             static_cast<std::size_t>(cfg_.classes);
    s.params = conv_params + head;
    s.std_params = std_conv_params + head;
    s.macs += static_cast<std::size_t>(cfg_.classes) * channels;
    s.std_macs += static_cast<std::size_t>(cfg_.classes) * channels;
    s.dsc_ratio = static_cast<double>(conv_params) / static_cast<double>(std_conv_params);
    return s;
}

std::string architecture_descriptor(const DenseMobileNetConfig& cfg) {
    std::ostringstream out;
    out << "dense-mobilenet v1\n";
    out << "input_size " << cfg.input_size << "\n";
    out << "input_channels " << cfg.input_channels << "\n";
    out << "kernel " << cfg.kernel << "\n";
    out << "classes " << cfg.classes << "\n";
    out << "seed " << cfg.seed << "\n";
    out << "blocks " << cfg.blocks.size() << "\n";
    for (const auto& b : cfg.blocks) out << "block " << b.layers << " " << b.growth << "\n";
    return out.str();
}

DenseMobileNetConfig parse_architecture_descriptor(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "dense-mobilenet v1") {
        throw IoError("unrecognized architecture descriptor header: '" + line + "'");
    }
    DenseMobileNetConfig cfg;
    cfg.blocks.clear();
    std::size_t expected_blocks = 0;
    std::string key;
    while (in >> key) {
        if (key == "input_size") {
            in >> cfg.input_size;
        } else if (key == "input_channels") {
            in >> cfg.input_channels;
        } else if (key == "kernel") {
            in >> cfg.kernel;
        } else if (key == "classes") {
            in >> cfg.classes;
        } else if (key == "seed") {
            in >> cfg.seed;
        } else if (key == "blocks") {
            in >> expected_blocks;
        } else if (key == "block") {
            BlockSpec b;
            in >> b.layers >> b.growth;
            cfg.blocks.push_back(b);
        } else {
            throw IoError("unknown descriptor key '" + key + "'");
        }
        if (!in && !in.eof()) throw IoError("malformed architecture descriptor");
    }
    if (cfg.blocks.size() != expected_blocks) {
        throw IoError("descriptor block count mismatch");
    }
    cfg.validate();
    return cfg;
}

void DenseMobileNet::save(const std::string& dir) const {
    fs::create_directories(dir);
    params_.save_file((fs::path(dir) / "model.bin").string());
    std::ofstream arch(fs::path(dir) / "model.arch");
    if (!arch) throw IoError("cannot write architecture descriptor in " + dir);
    arch << architecture_descriptor(cfg_);
}

DenseMobileNet DenseMobileNet::load(const std::string& dir) {
    std::ifstream arch(fs::path(dir) / "model.arch");
    if (!arch) throw IoError("cannot open architecture descriptor in " + dir);
    std::stringstream buf;
    buf << arch.rdbuf();
    DenseMobileNetConfig cfg = parse_architecture_descriptor(buf.str());
    nn::ParamSet params = nn::ParamSet::load_file((fs::path(dir) / "model.bin").string());
    return from_params(std::move(cfg), std::move(params));
}

Prediction predict_scale(const std::vector<double>& logits, const AqiScaleTable& table) {
    if (logits.size() != table.size()) {
        throw ShapeError("predict_scale: " + std::to_string(logits.size()) + " logits for " +
                         std::to_string(table.size()) + " scale bands");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    const AqiBand& band = table.band(best);
    return Prediction{best, band.name, band.aqi_min, band.aqi_max};
}

double train_epoch(DenseMobileNet& model, const std::vector<TrainSample>& dataset,
                   std::size_t batch_size, double lr, std::uint64_t seed, double reg_lambda) {
    if (dataset.empty()) throw ConfigError("train_epoch: empty dataset");
    if (batch_size == 0) throw ConfigError("train_epoch: batch size must be positive");
    if (batch_size > dataset.size()) {
        warn("batch size " + std::to_string(batch_size) + " exceeds dataset size " +
             std::to_string(dataset.size()) + "; using one full batch");
        batch_size = dataset.size();
    }

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_acc = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        std::vector<nn::Tensor> inputs;
        std::vector<std::size_t> labels;
        inputs.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            inputs.push_back(dataset[order[i]].input);
            labels.push_back(dataset[order[i]].label);
        }
        nn::Tape tape;
        nn::Tensor logits = model.forward_batch(inputs, &tape);
        nn::Tensor loss = nn::softmax_cross_entropy(logits, labels, &tape);
        const double batch_loss = loss.value();
        if (!std::isfinite(batch_loss)) throw ValueError("train_epoch: non-finite loss");
        loss_acc += batch_loss * static_cast<double>(end - start);
        model.params().zero_grads();
        nn::backward(loss);
        nn::sgd_step(model.params(), lr, reg_lambda);
    }
    return loss_acc / static_cast<double>(dataset.size());
}

}  // namespace aq::dmnet
