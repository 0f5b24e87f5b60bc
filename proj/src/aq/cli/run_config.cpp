#include "aq/cli/run_config.hpp"

#include <fstream>

#include "aq/errors.hpp"
#include "aq/util/digest.hpp"

namespace aq::cli {

using nlohmann::json;

RunConfig::RunConfig() {
    // desk-scale defaults; the full-size geometry comes from a config file
    feature.target_size = 32;
    feature.dark_patch = 7;
    feature.local_window = 5;
    model.input_size = 32;
    model.blocks = {{2, 24}};
    model.classes = 3;
    federation.local_epochs = 3;
    federation.batch = 8;
    federation.lr = 0.08;
    gclstm.epochs = 25;
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& into) {
    if (obj.contains(key)) into = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& section) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known) {
            if (it.key() == k) ok = true;
        }
        if (!ok) throw ConfigError("unknown config key '" + section + it.key() + "'");
    }
}

}  // namespace

void RunConfig::apply_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown(doc,
                   {"seed", "feature", "model", "federation", "gclstm", "split", "synth",
                    "diffusion"},
                   "");
    take(doc, "seed", seed);

    if (doc.contains("feature")) {
        const json& f = doc.at("feature");
        reject_unknown(f,
                       {"target_size", "dark_patch", "local_window", "sky_fraction", "airlight",
                        "extinction", "clamp_eps"},
                       "feature.");
        take(f, "target_size", feature.target_size);
        take(f, "dark_patch", feature.dark_patch);
        take(f, "local_window", feature.local_window);
        take(f, "sky_fraction", feature.sky_fraction);
        take(f, "extinction", feature.extinction);
        take(f, "clamp_eps", feature.clamp_eps);
        if (f.contains("airlight")) {
            if (f.at("airlight").is_string()) {
                if (f.at("airlight").get<std::string>() != "estimate") {
                    throw ConfigError("feature.airlight must be \"estimate\" or [r,g,b]");
                }
                feature.airlight.reset();
            } else {
                feature.airlight = f.at("airlight").get<std::array<double, 3>>();
            }
        }
    }

    if (doc.contains("model")) {
        const json& m = doc.at("model");
        reject_unknown(m, {"input_size", "blocks", "kernel", "classes"}, "model.");
        take(m, "input_size", model.input_size);
        take(m, "kernel", model.kernel);
        take(m, "classes", model.classes);
        if (m.contains("blocks")) {
            model.blocks.clear();
            for (const auto& b : m.at("blocks")) {
                if (!b.is_array() || b.size() != 2) {
                    throw ConfigError("model.blocks entries must be [layers, growth] pairs");
                }
                model.blocks.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
            }
        }
    }

    if (doc.contains("federation")) {
        const json& f = doc.at("federation");
        reject_unknown(f,
                       {"clients", "rounds", "client_fraction", "local_epochs", "batch", "lr",
                        "convergence_tol", "reg_lambda", "public_fraction", "pretrain_epochs"},
                       "federation.");
        take(f, "clients", clients);
        take(f, "rounds", federation.rounds);
        take(f, "client_fraction", federation.client_fraction);
        take(f, "local_epochs", federation.local_epochs);
        take(f, "batch", federation.batch);
        take(f, "lr", federation.lr);
        take(f, "convergence_tol", federation.convergence_tol);
        take(f, "reg_lambda", federation.reg_lambda);
        take(f, "public_fraction", public_fraction);
        take(f, "pretrain_epochs", pretrain_epochs);
    }

    if (doc.contains("gclstm")) {
        const json& g = doc.at("gclstm");
        reject_unknown(g, {"window", "horizon", "gc_out", "hidden", "lr", "epochs", "use_graph"},
                       "gclstm.");
        take(g, "window", gclstm.window);
        take(g, "horizon", gclstm.horizon);
        take(g, "gc_out", gclstm.gc_out);
        take(g, "hidden", gclstm.hidden);
        take(g, "lr", gclstm.lr);
        take(g, "epochs", gclstm.epochs);
        take(g, "use_graph", gclstm.use_graph);
    }

    if (doc.contains("split")) {
        const json& s = doc.at("split");
        reject_unknown(s, {"train_fraction", "stratified"}, "split.");
        take(s, "train_fraction", split.train_fraction);
        take(s, "stratified", split.stratified);
    }

    if (doc.contains("synth")) {
        const json& s = doc.at("synth");
        reject_unknown(s, {"samples", "image_size", "extinctions", "classes", "depth", "airlight"},
                       "synth.");
        take(s, "samples", synth_samples);
        take(s, "image_size", synth_image_size);
        take(s, "classes", synth_classes);
        if (s.contains("extinctions")) {
            synth_extinctions = s.at("extinctions").get<std::vector<double>>();
        }
        if (s.contains("depth")) {
            depth_kind = data::depth_field_kind_from_string(s.at("depth").get<std::string>());
        }
        if (s.contains("airlight")) {
            synth_airlight = s.at("airlight").get<std::array<double, 3>>();
        }
    }

    if (doc.contains("diffusion")) {
        const json& d = doc.at("diffusion");
        reject_unknown(d,
                       {"stations", "steps", "coupling", "noise_sigma", "season_period",
                        "event_rate", "event_magnitude", "event_duration", "cluster_size",
                        "cluster_spread_km", "radius_km", "center_lat", "center_lon"},
                       "diffusion.");
        take(d, "stations", diffusion_stations);
        take(d, "steps", diffusion_steps);
        take(d, "coupling", diffusion_coupling);
        take(d, "noise_sigma", diffusion_noise);
        take(d, "season_period", diffusion_period);
        take(d, "event_rate", diffusion_event_rate);
        take(d, "event_magnitude", diffusion_event_magnitude);
        take(d, "event_duration", diffusion_event_duration);
        take(d, "cluster_size", cluster_size);
        take(d, "cluster_spread_km", cluster_spread_km);
        take(d, "radius_km", ring_radius_km);
        take(d, "center_lat", ring_center_lat);
        take(d, "center_lon", ring_center_lon);
    }
}

RunConfig RunConfig::resolve(const std::optional<std::string>& config_path) {
    RunConfig cfg;
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw IoError("cannot open config file " + *config_path);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ConfigError("config file " + *config_path + " is not valid JSON: " + e.what());
        }
        cfg.apply_json(doc);
    }
    return cfg;
}

json RunConfig::snapshot() const {
    json blocks = json::array();
    for (const auto& b : model.blocks) blocks.push_back({b.layers, b.growth});
    json airlight;
    if (feature.airlight) {
        airlight = *feature.airlight;
    } else {
        airlight = "estimate";
    }
    return json{
        {"seed", seed},
        {"feature",
         {{"target_size", feature.target_size},
          {"dark_patch", feature.dark_patch},
          {"local_window", feature.local_window},
          {"sky_fraction", feature.sky_fraction},
          {"airlight", airlight},
          {"extinction", feature.extinction},
          {"clamp_eps", feature.clamp_eps}}},
        {"model",
         {{"input_size", model.input_size},
          {"blocks", blocks},
          {"kernel", model.kernel},
          {"classes", model.classes}}},
        {"federation",
         {{"clients", clients},
          {"rounds", federation.rounds},
          {"client_fraction", federation.client_fraction},
          {"local_epochs", federation.local_epochs},
          {"batch", federation.batch},
          {"lr", federation.lr},
          {"convergence_tol", federation.convergence_tol},
          {"reg_lambda", federation.reg_lambda},
          {"public_fraction", public_fraction},
          {"pretrain_epochs", pretrain_epochs}}},
        {"gclstm",
         {{"window", gclstm.window},
          {"horizon", gclstm.horizon},
          {"gc_out", gclstm.gc_out},
          {"hidden", gclstm.hidden},
          {"lr", gclstm.lr},
          {"epochs", gclstm.epochs},
          {"use_graph", gclstm.use_graph}}},
        {"split", {{"train_fraction", split.train_fraction}, {"stratified", split.stratified}}},
        {"synth",
         {{"samples", synth_samples},
          {"image_size", synth_image_size},
          {"extinctions", synth_extinctions},
          {"classes", synth_classes},
          {"depth", data::to_string(depth_kind)},
          {"airlight", synth_airlight}}},
        {"diffusion",
         {{"stations", diffusion_stations},
          {"steps", diffusion_steps},
          {"coupling", diffusion_coupling},
          {"noise_sigma", diffusion_noise},
          {"season_period", diffusion_period},
          {"event_rate", diffusion_event_rate},
          {"event_magnitude", diffusion_event_magnitude},
          {"event_duration", diffusion_event_duration},
          {"cluster_size", cluster_size},
          {"cluster_spread_km", cluster_spread_km},
          {"radius_km", ring_radius_km},
          {"center_lat", ring_center_lat},
          {"center_lon", ring_center_lon}}}};
}

std::string RunConfig::run_id() const {
    const std::string dump = snapshot().dump();
    std::uint64_t h = util::fnv1a64(dump);
    h = util::fnv1a64(&seed, sizeof(seed), h);
    return util::hex64(h);
}

}  // namespace aq::cli
