#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aq/dmnet/scale_table.hpp"
#include "aq/nn/param_set.hpp"
#include "aq/nn/tensor.hpp"

namespace aq::dmnet {

struct BlockSpec {
    int layers = 2;
    int growth = 16;  // output channels added per layer
};

struct DenseMobileNetConfig {
    std::size_t input_size = 128;    // 32 is the usual desk-scale setting
    std::size_t input_channels = 6;
    std::vector<BlockSpec> blocks{{2, 16}};
    int kernel = 3;
    int classes = 6;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ModelSummary {
    std::size_t params = 0;      // depthwise-separable network
    std::size_t macs = 0;
    std::size_t std_params = 0;  // same layout with standard convolutions
    std::size_t std_macs = 0;
    double dsc_ratio = 0.0;      // conv params / standard-conv params
};

// Parameter/compute reduction of one depthwise-separable layer against a
// standard KxK convolution with N output channels: 1/N + 1/K^2.
double dsc_reduction_ratio(int kernel, int out_channels);

/**
 * Densely connected depthwise-separable classifier over the 6-channel
 * feature stack. Inside a block, layer l consumes the concatenation of the
 * block input and every earlier layer's output; each layer is a depthwise
 * KxK (same padding) followed by a pointwise map to `growth` channels and a
 * rectifier. Head: global average pooling into a fully connected layer.
 * Convolutions carry no bias, so parameter counts follow the
 * depthwise-separable identity exactly.
 */
class DenseMobileNet {
public:
    explicit DenseMobileNet(DenseMobileNetConfig cfg);
    static DenseMobileNet from_params(DenseMobileNetConfig cfg, nn::ParamSet params);

    const DenseMobileNetConfig& config() const { return cfg_; }
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }

    // input [6,S,S] -> logits [classes]
    nn::Tensor forward(const nn::Tensor& input, nn::Tape* tape) const;
    // batch of [6,S,S] -> logits [B,classes]
    nn::Tensor forward_batch(const std::vector<nn::Tensor>& batch, nn::Tape* tape) const;

    ModelSummary summary() const;

    void save(const std::string& dir) const;  // model.bin + model.arch
    static DenseMobileNet load(const std::string& dir);

private:
    DenseMobileNetConfig cfg_;
    nn::ParamSet params_;
};

std::string architecture_descriptor(const DenseMobileNetConfig& cfg);
DenseMobileNetConfig parse_architecture_descriptor(const std::string& text);

struct Prediction {
    std::size_t index = 0;
    std::string scale_name;
    double aqi_min = 0.0;
    double aqi_max = 0.0;
};

// Argmax with ties broken toward the lowest index, mapped through the table.
Prediction predict_scale(const std::vector<double>& logits, const AqiScaleTable& table);

struct TrainSample {
    nn::Tensor input;      // [6,S,S], already normalized
    std::size_t label = 0;
};

// One pass over the dataset in seeded shuffle order, mini-batches of
// `batch_size` (a batch larger than the dataset degrades to one full batch,
// with a warning). Returns the sample-weighted mean loss.
double train_epoch(DenseMobileNet& model, const std::vector<TrainSample>& dataset,
                   std::size_t batch_size, double lr, std::uint64_t seed, double reg_lambda = 0.0);

}  // namespace aq::dmnet
