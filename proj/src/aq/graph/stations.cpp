#include "aq/graph/stations.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aq/errors.hpp"

namespace aq::graph {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

void validate_station(const Station& s) {
    if (s.id.empty()) throw ConfigError("station id must be non-empty");
    if (!(s.lat >= -90.0 && s.lat <= 90.0)) {
        throw ConfigError("station " + s.id + ": latitude " + std::to_string(s.lat) +
                          " outside [-90,90]");
    }
    if (!(s.lon >= -180.0 && s.lon <= 180.0)) {
        throw ConfigError("station " + s.id + ": longitude " + std::to_string(s.lon) +
                          " outside [-180,180]");
    }
}

}  // namespace

double haversine_km(const Station& a, const Station& b) {
    validate_station(a);
    validate_station(b);
    const double lat1 = a.lat * kDegToRad, lat2 = b.lat * kDegToRad;
    const double dlat = (b.lat - a.lat) * kDegToRad;
    const double dlon = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dlat / 2.0), s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::vector<double> build_adjacency(const std::vector<Station>& stations, double min_distance_km) {
    const std::size_t n = stations.size();
    if (n < 2) throw ConfigError("build_adjacency: need at least 2 stations");
    std::set<std::string> ids;
    for (const auto& s : stations) {
        validate_station(s);
        if (!ids.insert(s.id).second) throw ConfigError("duplicate station id " + s.id);
    }
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = haversine_km(stations[i], stations[j]);
            if (d < min_distance_km) {
                warn("stations " + stations[i].id + " and " + stations[j].id +
                     " are nearly coincident (" + std::to_string(d) + " km); weight clamped");
            }
            const double weight = 1.0 / std::max(d, min_distance_km);
            a[i * n + j] = weight;
            a[j * n + i] = weight;
        }
    }
    return a;
}

std::vector<double> normalize_propagation(const std::vector<double>& adjacency, std::size_t n) {
    if (adjacency.size() != n * n) {
        throw ShapeError("normalize_propagation: matrix size " +
                         std::to_string(adjacency.size()) + " is not " + std::to_string(n) + "^2");
    }
    std::vector<double> self_looped = adjacency;
    for (std::size_t i = 0; i < n; ++i) self_looped[i * n + i] += 1.0;
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += self_looped[i * n + j];
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);  // deg >= 1 by the self loop
    }
    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            p[i * n + j] = inv_sqrt_deg[i] * self_looped[i * n + j] * inv_sqrt_deg[j];
    return p;
}

StationGraph StationGraph::build(std::vector<Station> stations, double min_distance_km) {
    StationGraph g;
    g.adjacency = build_adjacency(stations, min_distance_km);
    g.propagation = normalize_propagation(g.adjacency, stations.size());
    g.stations = std::move(stations);
    return g;
}

std::vector<Station> load_stations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open station file " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("station file " + path + " is empty");
    std::vector<Station> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        Station s;
        std::string lat_s, lon_s;
        if (!std::getline(ss, s.id, ',') || !std::getline(ss, lat_s, ',') ||
            !std::getline(ss, lon_s, ',')) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected station_id,lat,lon");
        }
        try {
            s.lat = std::stod(lat_s);
            s.lon = std::stod(lon_s);
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(line_no) + ": unparseable coordinates");
        }
        out.push_back(std::move(s));
    }
    return out;
}

void save_matrix_csv(const std::vector<double>& m, std::size_t n, const std::string& path) {
    if (m.size() != n * n) throw ShapeError("save_matrix_csv: not an NxN matrix");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m[i * n + j]);
            out << buf << (j + 1 == n ? "\n" : ",");
        }
    }
}

}  // namespace aq::graph
