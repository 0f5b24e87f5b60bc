#include "aq/fed/federation.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "aq/errors.hpp"
#include "aq/nn/ops.hpp"
#include "aq/util/digest.hpp"

namespace aq::fed {

void RoundConfig::validate() const {
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (!(client_fraction > 0.0 && client_fraction <= 1.0)) {
        throw ConfigError("client_fraction must be in (0,1]");
    }
    if (local_epochs < 0) throw ConfigError("local_epochs must be >= 0");
    if (batch == 0) throw ConfigError("batch must be positive");
    if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
    if (!(convergence_tol >= 0.0)) throw ConfigError("convergence_tol must be non-negative");
    if (reg_lambda < 0.0) throw ConfigError("reg_lambda must be non-negative");
}

namespace {

constexpr char kUpdateMagic[4] = {'A', 'Q', 'F', 'U'};

std::uint64_t sample_digest(const dmnet::TrainSample& s) {
    std::uint64_t h = util::fnv1a64(s.input.data());
    return util::fnv1a64(&s.label, sizeof(s.label), h);
}

double dataset_loss(const dmnet::DenseMobileNet& model,
                    const std::vector<dmnet::TrainSample>& dataset) {
    double acc = 0.0;
    for (const auto& s : dataset) {
        nn::Tensor logits = model.forward_batch({s.input}, nullptr);
        acc += nn::softmax_cross_entropy(logits, {s.label}, nullptr).value();
    }
    return acc / static_cast<double>(dataset.size());
}

}  // namespace

std::vector<std::uint8_t> serialize_update(const ClientUpdate& update) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kUpdateMagic, kUpdateMagic + 4);
    auto put_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
    };
    auto put_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
    };
    put_u32(static_cast<std::uint32_t>(update.round));
    put_u64(update.sample_count);
    put_u64(std::bit_cast<std::uint64_t>(update.mean_loss));
    put_u32(static_cast<std::uint32_t>(update.client_id.size()));
    out.insert(out.end(), update.client_id.begin(), update.client_id.end());
    const auto params = update.params.to_bytes();
    put_u64(params.size());
    out.insert(out.end(), params.begin(), params.end());
    return out;
}

ClientUpdate deserialize_update(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > bytes.size()) throw IoError("client update frame truncated");
    };
    need(4);
    if (!std::equal(kUpdateMagic, kUpdateMagic + 4, bytes.begin())) {
        throw IoError("bad client update magic");
    }
    pos = 4;
    auto get_u32 = [&]() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    };
    auto get_u64 = [&]() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    };
    ClientUpdate u;
    u.round = static_cast<int>(get_u32());
    u.sample_count = get_u64();
    u.mean_loss = std::bit_cast<double>(get_u64());
    const std::uint32_t id_len = get_u32();
    need(id_len);
    u.client_id.assign(reinterpret_cast<const char*>(bytes.data() + pos), id_len);
    pos += id_len;
    const std::uint64_t blob_len = get_u64();
    need(blob_len);
    u.params = nn::ParamSet::from_bytes(bytes.data() + pos, blob_len);
    return u;
}

nn::ParamSet pretrain_global(const std::vector<dmnet::TrainSample>& public_set, int epochs,
                             const dmnet::DenseMobileNetConfig& model_cfg, const RoundConfig& cfg,
                             const std::vector<ClientState>& clients) {
    model_cfg.validate();
    cfg.validate();
    if (public_set.empty()) {
        warn("public pretraining set is empty; starting from the seeded random initialization");
        return dmnet::DenseMobileNet(model_cfg).params().clone();
    }

    std::set<std::uint64_t> public_digests;
    for (const auto& s : public_set) public_digests.insert(sample_digest(s));
    for (const auto& client : clients) {
        std::string offending;
        for (const auto& s : client.dataset) {
            const auto d = sample_digest(s);
            if (public_digests.count(d)) offending += " " + util::hex64(d);
        }
        if (!offending.empty()) {
            throw ValueError("public pretraining set overlaps client " + client.id +
                             " (digests:" + offending + ")");
        }
    }

    dmnet::DenseMobileNet model(model_cfg);
    for (int e = 0; e < epochs; ++e) {
        dmnet::train_epoch(model, public_set, cfg.batch, cfg.lr, util::mix_seed(cfg.seed, 7700 + e),
                           cfg.reg_lambda);
    }
    return model.params().clone();
}

std::vector<std::size_t> select_clients(std::size_t client_count, double fraction,
                                        std::uint64_t round_seed) {
    if (client_count == 0) throw ConfigError("select_clients: no clients");
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("select_clients: fraction must be in (0,1]");
    }
    const std::size_t want = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(client_count))));
    std::vector<std::size_t> idx(client_count);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(round_seed);
    for (std::size_t i = 0; i < want; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, client_count - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(want);
    std::sort(idx.begin(), idx.end());
    return idx;
}

ClientUpdate client_local_train(const ClientState& client, const nn::ParamSet& global_params,
                                const dmnet::DenseMobileNetConfig& model_cfg,
                                const RoundConfig& cfg, int round) {
    if (client.dataset.empty()) {
        throw ConfigError("client " + client.id + " has an empty dataset");
    }
    dmnet::DenseMobileNet model =
        dmnet::DenseMobileNet::from_params(model_cfg, global_params.clone());

    ClientUpdate update;
    update.client_id = client.id;
    update.sample_count = client.dataset.size();
    update.round = round;
    if (cfg.local_epochs == 0) {
        update.mean_loss = dataset_loss(model, client.dataset);
    } else {
        for (int e = 0; e < cfg.local_epochs; ++e) {
            update.mean_loss = dmnet::train_epoch(
                model, client.dataset, cfg.batch, cfg.lr,
                util::mix_seed(client.seed, static_cast<std::uint64_t>(round) * 131 +
                                                static_cast<std::uint64_t>(e)),
                cfg.reg_lambda);
        }
    }
    update.params = model.params().clone();
    if (!update.params.all_finite()) {
        throw ValueError("client " + client.id + " produced non-finite parameters");
    }
    return update;
}

nn::ParamSet aggregate(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw ValueError("aggregate: no updates");
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });

    const nn::ParamSet& first = updates[order[0]].params;
    for (std::size_t i = 1; i < order.size(); ++i) {
        std::string mismatch;
        if (!first.aligned_with(updates[order[i]].params, &mismatch)) {
            throw ShapeError("aggregate: update from " + updates[order[i]].client_id +
                             " is misaligned: " + mismatch);
        }
    }

    double total = 0.0;
    for (const auto& u : updates) total += static_cast<double>(u.sample_count);
    if (total <= 0.0) throw ValueError("aggregate: zero total sample count");

    nn::ParamSet out;
    for (std::size_t e = 0; e < first.size(); ++e) {
        out.add(first.entry(e).first, nn::Tensor(first.entry(e).second.shape()));
    }
    for (std::size_t oi : order) {
        const auto& u = updates[oi];
        const double w = static_cast<double>(u.sample_count) / total;
        for (std::size_t e = 0; e < out.size(); ++e) {
            auto& dst = out.entry(e).second.data();
            const auto& src = u.params.entry(e).second.data();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
        }
    }
    return out;
}

EvalResult evaluate_global(const dmnet::DenseMobileNet& model,
                           const std::vector<dmnet::TrainSample>& test_set,
                           const dmnet::AqiScaleTable& table) {
    if (test_set.empty()) throw ConfigError("evaluate_global: empty test set");
    const std::size_t classes = static_cast<std::size_t>(model.config().classes);
    if (table.size() != classes) {
        throw ShapeError("evaluate_global: table has " + std::to_string(table.size()) +
                         " bands for " + std::to_string(classes) + " classes");
    }
    EvalResult res;
    res.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    std::size_t correct = 0;
    for (const auto& s : test_set) {
        nn::Tensor logits = model.forward(s.input, nullptr);
        const auto pred = predict_scale(logits.data(), table);
        res.confusion[s.label][pred.index]++;
        if (pred.index == s.label) ++correct;
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
    return res;
}

FederationResult run_federation(const std::vector<ClientState>& clients,
                                const dmnet::DenseMobileNetConfig& model_cfg,
                                const RoundConfig& cfg, std::optional<nn::ParamSet> initial,
                                const std::vector<dmnet::TrainSample>* eval_set,
                                Transport* transport, const RoundObserver& observer) {
    model_cfg.validate();
    cfg.validate();
    if (clients.empty()) throw ConfigError("run_federation: no clients");
    {
        std::set<std::string> ids;
        for (const auto& c : clients) {
            if (!ids.insert(c.id).second) throw ConfigError("duplicate client id " + c.id);
        }
    }

    nn::ParamSet global = initial ? std::move(*initial)
                                  : dmnet::DenseMobileNet(model_cfg).params().clone();
    const dmnet::AqiScaleTable table =
        dmnet::AqiScaleTable::for_classes(static_cast<std::size_t>(model_cfg.classes));

    FederationResult result;
    for (int round = 1; round <= cfg.rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto selected =
            select_clients(clients.size(), cfg.client_fraction, util::mix_seed(cfg.seed, round));

        RoundEntry entry;
        entry.round = round;
        for (std::size_t idx : selected) entry.participants.push_back(clients[idx].id);

        // clients train concurrently on private model copies
        std::vector<std::future<ClientUpdate>> futures;
        futures.reserve(selected.size());
        for (std::size_t idx : selected) {
            const ClientState& client = clients[idx];
            futures.push_back(std::async(std::launch::async, [&client, &global, &model_cfg, &cfg,
                                                              round]() {
                return client_local_train(client, global, model_cfg, cfg, round);
            }));
        }
        std::vector<ClientUpdate> updates;
        for (auto& f : futures) updates.push_back(f.get());

        if (transport) {
            std::vector<ClientUpdate> delivered;
            for (auto& u : updates) {
                if (transport->deliver(u.client_id, round)) {
                    delivered.push_back(std::move(u));
                } else {
                    warn("round " + std::to_string(round) + ": update from " + u.client_id +
                         " dropped in transit");
                }
            }
            updates = std::move(delivered);
        }
        for (const auto& u : updates) entry.responders.push_back(u.client_id);
        if (observer) observer(round, updates);

        if (updates.empty()) {
            warn("round " + std::to_string(round) + ": no updates received; keeping global model");
            entry.train_loss = std::numeric_limits<double>::quiet_NaN();
            entry.delta_norm = std::numeric_limits<double>::quiet_NaN();
        } else {
            double total = 0.0, loss = 0.0;
            for (const auto& u : updates) {
                total += static_cast<double>(u.sample_count);
                loss += u.mean_loss * static_cast<double>(u.sample_count);
            }
            entry.train_loss = loss / total;
            nn::ParamSet next = aggregate(updates);
            entry.delta_norm = next.l2_distance(global);
            global = std::move(next);
        }

        if (eval_set && !eval_set->empty()) {
            dmnet::DenseMobileNet model =
                dmnet::DenseMobileNet::from_params(model_cfg, global.clone());
            entry.accuracy = evaluate_global(model, *eval_set, table).accuracy;
        }
        entry.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(std::move(entry));

        if (result.log.back().delta_norm < cfg.convergence_tol) break;
    }
    result.model = std::move(global);
    return result;
}

}  // namespace aq::fed
