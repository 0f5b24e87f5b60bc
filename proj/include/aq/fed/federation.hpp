#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aq/dmnet/model.hpp"
#include "aq/nn/param_set.hpp"

namespace aq::fed {

/** A simulated UAV client: identity, private samples, RNG stream. */
struct ClientState {
    std::string id;
    std::vector<dmnet::TrainSample> dataset;  // never leaves the client
    std::uint64_t seed = 0;
    std::string swarm = "A";  // organizational grouping only

    std::size_t sample_count() const { return dataset.size(); }
};

struct RoundConfig {
    int rounds = 30;
    double client_fraction = 1.0;  // share of clients selected per round
    int local_epochs = 1;
    std::size_t batch = 16;
    double lr = 0.1;
    double convergence_tol = 1e-4;  // on the L2 parameter delta between rounds
    double reg_lambda = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/** What a client transmits: parameters plus bookkeeping, never raw data. */
struct ClientUpdate {
    std::string client_id;
    nn::ParamSet params;
    std::size_t sample_count = 0;
    double mean_loss = 0.0;
    int round = 0;
};

// Binary update frame: header (round, sample count, client id) followed by
// the parameter blob.
std::vector<std::uint8_t> serialize_update(const ClientUpdate& update);
ClientUpdate deserialize_update(const std::vector<std::uint8_t>& bytes);

struct RoundEntry {
    int round = 0;
    std::vector<std::string> participants;  // selected this round
    std::vector<std::string> responders;    // updates actually received
    double train_loss = 0.0;                // sample-weighted mean of client losses
    std::optional<double> accuracy;         // on the evaluation set, when given
    double delta_norm = 0.0;                // L2 parameter movement
    double wall_seconds = 0.0;
};

using FederationLog = std::vector<RoundEntry>;

// In-process transport stub; return false to drop a client's update.
class Transport {
public:
    virtual ~Transport() = default;
    virtual bool deliver(const std::string& client_id, int round) {
        (void)client_id;
        (void)round;
        return true;
    }
};

// Called after each round's updates are collected, before aggregation.
using RoundObserver = std::function<void(int round, const std::vector<ClientUpdate>& updates)>;

// Centralized warm start on a public dataset. The public set must be
// disjoint from every client's data (checked by sample digest); an empty
// public set falls back to the seeded random initialization with a warning.
nn::ParamSet pretrain_global(const std::vector<dmnet::TrainSample>& public_set, int epochs,
                             const dmnet::DenseMobileNetConfig& model_cfg, const RoundConfig& cfg,
                             const std::vector<ClientState>& clients);

// max(1, round(fraction*K)) distinct indices, deterministic in round_seed.
std::vector<std::size_t> select_clients(std::size_t client_count, double fraction,
                                        std::uint64_t round_seed);

// One client's round: copy the global parameters, run local_epochs over the
// private data, return the new parameters with the sample count.
ClientUpdate client_local_train(const ClientState& client, const nn::ParamSet& global_params,
                                const dmnet::DenseMobileNetConfig& model_cfg,
                                const RoundConfig& cfg, int round);

// Sample-count-weighted parameter average. Updates are summed in canonical
// (client id) order so the result is bit-identical under permutation.
nn::ParamSet aggregate(const std::vector<ClientUpdate>& updates);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

EvalResult evaluate_global(const dmnet::DenseMobileNet& model,
                           const std::vector<dmnet::TrainSample>& test_set,
                           const dmnet::AqiScaleTable& table);

struct FederationResult {
    nn::ParamSet model;
    FederationLog log;
};

/**
 * The full loop: select clients, train them in parallel, aggregate the
 * delivered updates (weights renormalized over responders), evaluate, and
 * stop at `rounds` or when the parameter delta drops under convergence_tol.
 */
FederationResult run_federation(const std::vector<ClientState>& clients,
                                const dmnet::DenseMobileNetConfig& model_cfg,
                                const RoundConfig& cfg,
                                std::optional<nn::ParamSet> initial = std::nullopt,
                                const std::vector<dmnet::TrainSample>* eval_set = nullptr,
                                Transport* transport = nullptr,
                                const RoundObserver& observer = {});

}  // namespace aq::fed
