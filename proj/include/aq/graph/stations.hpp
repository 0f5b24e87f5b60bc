#pragma once

#include <string>
#include <vector>

namespace aq::graph {

struct Station {
    std::string id;
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]
};

// Great-circle distance in km, Earth radius 6371.0.
double haversine_km(const Station& a, const Station& b);

// Inverse-distance weights: A[i][j] = 1 / max(d_ij, min_distance_km) off the
// diagonal, 0 on it. Near-coincident stations hit the clamp (with a warning).
std::vector<double> build_adjacency(const std::vector<Station>& stations,
                                    double min_distance_km = 1e-3);

// Symmetric normalization of the self-looped weights:
// P = D^{-1/2} (A + I) D^{-1/2}, D_ii = sum_j (A + I)_ij.
std::vector<double> normalize_propagation(const std::vector<double>& adjacency, std::size_t n);

/** Station set with its weight and propagation matrices (row-major N x N). */
struct StationGraph {
    std::vector<Station> stations;
    std::vector<double> adjacency;
    std::vector<double> propagation;

    std::size_t size() const { return stations.size(); }

    static StationGraph build(std::vector<Station> stations, double min_distance_km = 1e-3);
};

// CSV with header station_id,lat,lon.
std::vector<Station> load_stations_csv(const std::string& path);
void save_matrix_csv(const std::vector<double>& m, std::size_t n, const std::string& path);

}  // namespace aq::graph
