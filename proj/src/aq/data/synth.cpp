#include "aq/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "aq/errors.hpp"
#include "aq/util/digest.hpp"

namespace aq::data {

DepthFieldKind depth_field_kind_from_string(const std::string& name) {
    if (name == "linear_ramp") return DepthFieldKind::LinearRamp;
    if (name == "radial") return DepthFieldKind::Radial;
    if (name == "random_smooth") return DepthFieldKind::RandomSmooth;
    throw ConfigError("unknown depth field kind '" + name +
                      "' (expected linear_ramp, radial, or random_smooth)");
}

std::string to_string(DepthFieldKind kind) {
    switch (kind) {
        case DepthFieldKind::LinearRamp: return "linear_ramp";
        case DepthFieldKind::Radial: return "radial";
        case DepthFieldKind::RandomSmooth: return "random_smooth";
    }
    return "?";
}

namespace {

// Bilinear value noise from a coarse seeded lattice, output in [0,1].
haze::GrayImage value_noise(std::size_t height, std::size_t width, std::size_t cells,
                            std::mt19937_64& rng) {
    const std::size_t gh = cells + 1, gw = cells + 1;
    std::vector<double> lattice(gh * gw);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& v : lattice) v = dist(rng);
    haze::GrayImage out(height, width);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = height > 1 ? double(y) / double(height - 1) * cells : 0.0;
        const std::size_t y0 = std::min(static_cast<std::size_t>(fy), cells - 1);
        const double wy = fy - y0;
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = width > 1 ? double(x) / double(width - 1) * cells : 0.0;
            const std::size_t x0 = std::min(static_cast<std::size_t>(fx), cells - 1);
            const double wx = fx - x0;
            const double top = lattice[y0 * gw + x0] * (1 - wx) + lattice[y0 * gw + x0 + 1] * wx;
            const double bot =
                lattice[(y0 + 1) * gw + x0] * (1 - wx) + lattice[(y0 + 1) * gw + x0 + 1] * wx;
            out.at(y, x) = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

}  // namespace

haze::GrayImage make_depth_field(DepthFieldKind kind, std::size_t height, std::size_t width,
                                 std::uint64_t seed) {
    haze::GrayImage out(height, width);
    switch (kind) {
        case DepthFieldKind::LinearRamp: {
            for (std::size_t y = 0; y < height; ++y) {
                const double d = height > 1 ? double(y) / double(height - 1) : 0.0;
                for (std::size_t x = 0; x < width; ++x) out.at(y, x) = d;
            }
            break;
        }
        case DepthFieldKind::Radial: {
            const double cy = (height - 1) / 2.0, cx = (width - 1) / 2.0;
            const double rmax = std::sqrt(cy * cy + cx * cx);
            for (std::size_t y = 0; y < height; ++y) {
                for (std::size_t x = 0; x < width; ++x) {
                    const double dy = y - cy, dx = x - cx;
                    out.at(y, x) = rmax > 0 ? std::sqrt(dy * dy + dx * dx) / rmax : 0.0;
                }
            }
            break;
        }
        case DepthFieldKind::RandomSmooth: {
            std::mt19937_64 rng(seed);
            out = value_noise(height, width, 4, rng);
            // span the full [0,1] range like the deterministic kinds
            const auto [mn, mx] = std::minmax_element(out.v.begin(), out.v.end());
            const double lo = *mn, range = *mx - *mn;
            if (range > 0.0) {
                for (auto& d : out.v) d = (d - lo) / range;
            }
            break;
        }
    }
    return out;
}

haze::RgbImage make_base_image(std::size_t height, std::size_t width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    haze::RgbImage img(height, width);
    // three loosely correlated smooth fields, kept below typical airlight
    haze::GrayImage luma = value_noise(height, width, 5, rng);
    haze::GrayImage tint_a = value_noise(height, width, 3, rng);
    haze::GrayImage tint_b = value_noise(height, width, 3, rng);
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        const double l = 0.05 + 0.70 * luma.v[p];
        const double ta = 0.3 + 0.7 * tint_a.v[p];
        const double tb = 0.3 + 0.7 * tint_b.v[p];
        img.v[p * 3 + 0] = std::clamp(l * ta, 0.0, 0.85);
        img.v[p * 3 + 1] = std::clamp(l * (0.5 * ta + 0.5 * tb), 0.0, 0.85);
        img.v[p * 3 + 2] = std::clamp(l * tb, 0.0, 0.85);
    }
    // dark speckles every few pixels keep the dark-channel assumption valid
    std::uniform_real_distribution<double> dim(0.0, 0.02);
    for (std::size_t y = 1; y < height; y += 3) {
        for (std::size_t x = 1; x < width; x += 3) {
            const double v = dim(rng);
            img.at(y, x, 0) = v;
            img.at(y, x, 1) = v;
            img.at(y, x, 2) = v;
        }
    }
    return img;
}

haze::RgbImage synthesize_haze_image(const haze::RgbImage& base, double extinction,
                                     const std::array<double, 3>& airlight,
                                     const haze::GrayImage& depth) {
    if (extinction < 0.0) throw ConfigError("synthesize_haze_image: extinction must be >= 0");
    if (depth.height != base.height || depth.width != base.width) {
        throw ShapeError("synthesize_haze_image: depth map " + std::to_string(depth.height) + "x" +
                         std::to_string(depth.width) + " does not match image " +
                         std::to_string(base.height) + "x" + std::to_string(base.width));
    }
    for (double d : depth.v) {
        if (d < 0.0) throw ValueError("synthesize_haze_image: negative depth");
    }
    haze::RgbImage out(base.height, base.width);
    for (std::size_t p = 0; p < base.pixels(); ++p) {
        const double b = std::exp(-extinction * depth.v[p]);
        for (std::size_t c = 0; c < 3; ++c) {
            out.v[p * 3 + c] =
                std::clamp(base.v[p * 3 + c] * b + airlight[c] * (1.0 - b), 0.0, 1.0);
        }
    }
    return out;
}

void HazeSynthesisSpec::validate() const {
    if (extinctions.empty()) throw ConfigError("synthesis spec: need at least one extinction level");
    if (!std::is_sorted(extinctions.begin(), extinctions.end())) {
        throw ConfigError("synthesis spec: extinction levels must be sorted");
    }
    for (double e : extinctions) {
        if (!(e > 0.0)) throw ConfigError("synthesis spec: extinction levels must be positive");
    }
    if (bases.empty() && base_count == 0) throw ConfigError("synthesis spec: no base images");
    if (bases.empty() && image_size < 8) throw ConfigError("synthesis spec: image_size too small");
    for (double c : airlight) {
        if (!(c > 0.0 && c <= 1.0)) throw ConfigError("synthesis spec: airlight must be in (0,1]");
    }
}

std::vector<std::pair<double, double>> HazeSynthesisSpec::equal_width_intervals(
    const std::vector<double>& extinctions, std::size_t classes) {
    if (classes == 0) throw ConfigError("equal_width_intervals: need at least one class");
    const double lo = extinctions.front(), hi = extinctions.back();
    const double width = (hi - lo) / static_cast<double>(classes);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < classes; ++i) {
        // the last edge is pinned to the true maximum
        out.emplace_back(lo + width * static_cast<double>(i),
                         i + 1 == classes ? hi : lo + width * static_cast<double>(i + 1));
    }
    return out;
}

std::vector<std::pair<double, double>> HazeSynthesisSpec::resolved_intervals(
    std::size_t classes) const {
    if (!class_intervals.empty()) return class_intervals;
    if (classes == 0) classes = extinctions.size();
    return equal_width_intervals(extinctions, classes);
}

int HazeSynthesisSpec::class_of(double extinction,
                                const std::vector<std::pair<double, double>>& intervals) const {
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const bool last = i + 1 == intervals.size();
        if (extinction >= intervals[i].first &&
            (extinction < intervals[i].second || (last && extinction <= intervals[i].second))) {
            return static_cast<int>(i);
        }
    }
    throw ConfigError("extinction " + std::to_string(extinction) +
                      " not covered by any class interval");
}

StackDataset generate_haze_dataset(const HazeSynthesisSpec& spec,
                                   const haze::FeatureConfig& feature_cfg, std::size_t classes) {
    spec.validate();
    feature_cfg.validate();
    const auto intervals = spec.resolved_intervals(classes);

    // one label per (base, extinction) pair, bases round-robined over levels
    const std::size_t n_bases = spec.bases.empty() ? spec.base_count : spec.bases.size();
    std::vector<std::vector<LabeledStack>> per_class(intervals.size());

    for (std::size_t bi = 0; bi < n_bases; ++bi) {
        const haze::RgbImage base = spec.bases.empty()
                                        ? make_base_image(spec.image_size, spec.image_size,
                                                          util::mix_seed(spec.seed, bi))
                                        : spec.bases[bi];
        const double ext = spec.extinctions[bi % spec.extinctions.size()];
        const haze::GrayImage depth = make_depth_field(
            spec.depth_kind, base.height, base.width, util::mix_seed(spec.seed, 1000003 + bi));
        const haze::RgbImage hazed = synthesize_haze_image(base, ext, spec.airlight, depth);

        LabeledStack sample;
        sample.stack = haze::build_feature_stack(hazed, feature_cfg);
        sample.label = spec.class_of(ext, intervals);
        sample.extinction = ext;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "sample_%06zu", bi);
        sample.id = idbuf;
        sample.digest = util::fnv1a64(sample.stack.channels.data());
        per_class[static_cast<std::size_t>(sample.label)].push_back(std::move(sample));
    }

    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c].empty()) {
            throw ConfigError("class " + std::to_string(c) +
                              " received no samples; adjust extinction levels or intervals");
        }
    }

    // balance to within one sample of the smallest class
    std::size_t smallest = per_class.front().size();
    for (const auto& v : per_class) smallest = std::min(smallest, v.size());
    StackDataset out;
    out.classes = static_cast<int>(intervals.size());
    for (auto& v : per_class) {
        if (v.size() > smallest + 1) {
            warn("dropping " + std::to_string(v.size() - smallest - 1) +
                 " samples to balance class sizes");
            v.resize(smallest + 1);
        }
        for (auto& s : v) out.samples.push_back(std::move(s));
    }
    std::sort(out.samples.begin(), out.samples.end(),
              [](const LabeledStack& a, const LabeledStack& b) { return a.id < b.id; });
    out.side = out.samples.front().stack.side();
    return out;
}

ObservationTable generate_diffusion_series(const graph::StationGraph& g,
                                           const DiffusionSpec& spec) {
    const std::size_t n = g.size();
    if (n == 0) throw ConfigError("generate_diffusion_series: empty graph");
    if (spec.steps < 2) throw ConfigError("generate_diffusion_series: need at least 2 steps");

    // row-normalized self-looped weights keep the diffused value a convex mix
    std::vector<double> prw(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 1.0;
        for (std::size_t j = 0; j < n; ++j) deg += g.adjacency[i * n + j];
        for (std::size_t j = 0; j < n; ++j) {
            prw[i * n + j] = (g.adjacency[i * n + j] + (i == j ? 1.0 : 0.0)) / deg;
        }
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> base_dist(70.0, 110.0);
    std::uniform_real_distribution<double> amp_dist(20.0, 45.0);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * 3.14159265358979323846);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    std::uniform_real_distribution<double> uniform01(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_station(0, n - 1);

    std::vector<double> base(n), amp(n), phase(n);
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = base_dist(rng);
        amp[i] = amp_dist(rng);
        phase[i] = phase_dist(rng);
    }
    auto seasonal = [&](std::size_t i, int t) {
        return base[i] +
               amp[i] * std::sin(2.0 * 3.14159265358979323846 * t / spec.season_period + phase[i]);
    };

    std::vector<double> x(n), next(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = seasonal(i, 0);

    ObservationTable table;
    // phase-of-cycle predictors; shared clock, so identical across stations
    table.met_names = {"met_cycle_sin", "met_cycle_cos"};
    table.stations.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        table.stations[i].station_id = g.stations[i].id;
        table.stations[i].rows.reserve(static_cast<std::size_t>(spec.steps));
    }
    auto push = [&](int t) {
        const double phase = 2.0 * 3.14159265358979323846 * t / spec.season_period;
        for (std::size_t i = 0; i < n; ++i) {
            ObservationRecord r;
            r.station_id = g.stations[i].id;
            r.timestamp = spec.start_time + t * spec.step_seconds;
            r.aqi = std::clamp(x[i], 0.0, 500.0);
            r.met = {std::sin(phase), std::cos(phase)};
            table.stations[i].rows.push_back(std::move(r));
        }
    };
    push(0);
    std::vector<int> emitting(n, 0);  // remaining emission steps per station
    for (int t = 1; t < spec.steps; ++t) {
        if (spec.event_rate > 0.0 && uniform01(rng) < spec.event_rate) {
            emitting[pick_station(rng)] = spec.event_duration;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double mixed = 0.0;
            for (std::size_t j = 0; j < n; ++j) mixed += prw[i * n + j] * x[j];
            next[i] = spec.coupling * mixed + (1.0 - spec.coupling) * seasonal(i, t) + noise(rng);
            if (emitting[i] > 0) {
                next[i] += spec.event_magnitude;
                --emitting[i];
            }
        }
        x = next;
        push(t);
    }
    return table;
}

std::vector<graph::Station> make_station_ring(std::size_t count, double center_lat,
                                              double center_lon, double radius_km) {
    if (count < 2) throw ConfigError("make_station_ring: need at least 2 stations");
    std::vector<graph::Station> out;
    const double deg_per_km_lat = 1.0 / 111.32;
    const double deg_per_km_lon =
        1.0 / (111.32 * std::cos(center_lat * 3.14159265358979323846 / 180.0));
    for (std::size_t i = 0; i < count; ++i) {
        const double ang = 2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                           static_cast<double>(count);
        graph::Station s;
        s.id = "st" + std::to_string(i);
        s.lat = center_lat + radius_km * std::sin(ang) * deg_per_km_lat;
        s.lon = center_lon + radius_km * std::cos(ang) * deg_per_km_lon;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<graph::Station> make_station_clusters(std::size_t count, std::size_t cluster_size,
                                                  double center_lat, double center_lon,
                                                  double radius_km, double spread_km) {
    if (cluster_size < 1) throw ConfigError("make_station_clusters: cluster_size must be >= 1");
    if (cluster_size <= 1) return make_station_ring(count, center_lat, center_lon, radius_km);
    if (count < 2) throw ConfigError("make_station_clusters: need at least 2 stations");
    const std::size_t clusters = (count + cluster_size - 1) / cluster_size;
    auto anchors = make_station_ring(std::max<std::size_t>(2, clusters), center_lat, center_lon,
                                     radius_km);
    const double deg_per_km_lat = 1.0 / 111.32;
    const double deg_per_km_lon =
        1.0 / (111.32 * std::cos(center_lat * 3.14159265358979323846 / 180.0));
    std::vector<graph::Station> out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& anchor = anchors[i / cluster_size];
        const std::size_t member = i % cluster_size;
        graph::Station s;
        s.id = "st" + std::to_string(i);
        // members sit on a small local arc around the anchor
        const double ang = 2.0 * 3.14159265358979323846 * static_cast<double>(member) /
                           static_cast<double>(cluster_size);
        s.lat = anchor.lat + spread_km * std::sin(ang) * deg_per_km_lat;
        s.lon = anchor.lon + spread_km * std::cos(ang) * deg_per_km_lon;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace aq::data
