#include "aq/data/observations.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "aq/errors.hpp"

namespace aq::data {

namespace {

// Howard Hinnant's civil-date algorithm; avoids timezone-dependent libc calls.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::int64_t parse_iso8601_utc(const std::string& text) {
    int y = 0, mon = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    const int got =
        std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mon, &d, &sep, &h, &mi, &s);
    if (got < 3 || mon < 1 || mon > 12 || d < 1 || d > 31) {
        throw IoError("unparseable ISO-8601 timestamp: " + text);
    }
    if (got >= 6 && sep != 'T' && sep != ' ') {
        throw IoError("unparseable ISO-8601 timestamp: " + text);
    }
    if (h > 23 || mi > 59 || s > 60) throw IoError("unparseable ISO-8601 timestamp: " + text);
    return days_from_civil(y, mon, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_iso8601_utc(std::int64_t seconds) {
    std::int64_t days = seconds / 86400;
    std::int64_t rem = seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

ObservationTable load_station_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open observation file " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("observation file " + path + " has no header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "station_id") {
        throw IoError(path + ": expected header station_id,timestamp_iso8601,aqi[,met_*...]");
    }

    ObservationTable table;
    for (std::size_t i = 3; i < header.size(); ++i) table.met_names.push_back(header[i]);

    std::map<std::string, std::size_t> index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3 + table.met_names.size()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(3 + table.met_names.size()) + " fields, got " +
                          std::to_string(fields.size()));
        }
        ObservationRecord rec;
        rec.station_id = fields[0];
        rec.timestamp = parse_iso8601_utc(fields[1]);
        if (fields[2].empty()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": missing aqi value");
        }
        try {
            std::size_t used = 0;
            rec.aqi = std::stod(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(line_no) + ": unparseable aqi value '" +
                          fields[2] + "'");
        }
        if (rec.aqi < 0.0 || rec.aqi > 500.0) {
            rec.aqi_flagged = true;
            warn(path + ":" + std::to_string(line_no) + ": aqi " + std::to_string(rec.aqi) +
                 " outside [0,500]");
        }
        for (std::size_t i = 3; i < fields.size(); ++i) {
            try {
                rec.met.push_back(fields[i].empty() ? 0.0 : std::stod(fields[i]));
            } catch (const std::exception&) {
                throw IoError(path + ":" + std::to_string(line_no) + ": unparseable value '" +
                              fields[i] + "'");
            }
        }

        auto [it, inserted] = index.try_emplace(rec.station_id, table.stations.size());
        if (inserted) table.stations.push_back(StationSeries{rec.station_id, {}});
        auto& rows = table.stations[it->second].rows;
        auto dup = std::find_if(rows.begin(), rows.end(), [&](const ObservationRecord& r) {
            return r.timestamp == rec.timestamp;
        });
        if (dup != rows.end()) {
            warn(path + ":" + std::to_string(line_no) + ": duplicate timestamp for station " +
                 rec.station_id + "; last row wins");
            *dup = std::move(rec);
        } else {
            rows.push_back(std::move(rec));
        }
    }

    for (auto& s : table.stations) {
        std::stable_sort(s.rows.begin(), s.rows.end(),
                         [](const ObservationRecord& a, const ObservationRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
    }
    return table;
}

void save_station_csv(const ObservationTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "station_id,timestamp_iso8601,aqi";
    for (const auto& m : table.met_names) out << "," << m;
    out << "\n";
    char buf[64];
    for (const auto& s : table.stations) {
        for (const auto& r : s.rows) {
            std::snprintf(buf, sizeof(buf), "%.17g", r.aqi);
            out << s.station_id << "," << format_iso8601_utc(r.timestamp) << "," << buf;
            for (double m : r.met) {
                std::snprintf(buf, sizeof(buf), "%.17g", m);
                out << "," << buf;
            }
            out << "\n";
        }
    }
}

std::vector<SeriesWindow> make_windows(const ObservationTable& table, int window, int horizon,
                                       int step) {
    if (window < 1 || horizon < 1 || step < 1) {
        throw ConfigError("make_windows: window, horizon, and step must be >= 1");
    }
    if (table.stations.empty()) throw ConfigError("make_windows: no stations");

    // Common grid: every station must carry exactly the reference timestamps.
    const auto& ref = table.stations.front().rows;
    std::vector<std::int64_t> grid(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) grid[i] = ref[i].timestamp;
    std::string missing;
    for (const auto& s : table.stations) {
        std::size_t k = 0;
        for (std::int64_t t : grid) {
            while (k < s.rows.size() && s.rows[k].timestamp < t) ++k;
            if (k >= s.rows.size() || s.rows[k].timestamp != t) {
                missing += " " + s.station_id + "@" + format_iso8601_utc(t);
            }
        }
        for (const auto& r : s.rows) {
            if (!std::binary_search(grid.begin(), grid.end(), r.timestamp)) {
                missing += " " + s.station_id + "@" + format_iso8601_utc(r.timestamp) + "(extra)";
            }
        }
    }
    if (!missing.empty()) {
        throw ValueError("make_windows: stations do not share a common time grid; missing:" +
                         missing);
    }
    if (grid.size() >= 2) {
        const std::int64_t dt = grid[1] - grid[0];
        for (std::size_t i = 2; i < grid.size(); ++i) {
            if (grid[i] - grid[i - 1] != dt) {
                throw ValueError("make_windows: irregular time grid around " +
                                 format_iso8601_utc(grid[i]));
            }
        }
    }

    const std::size_t n = table.stations.size();
    const std::size_t m = 1 + table.met_names.size();
    const std::size_t len = grid.size();
    const std::size_t need = static_cast<std::size_t>(window + horizon);
    std::vector<SeriesWindow> out;
    if (len < need) {
        warn("make_windows: series length " + std::to_string(len) + " shorter than window+horizon " +
             std::to_string(need) + "; no windows produced");
        return out;
    }

    for (std::size_t start = 0; start + need <= len; start += static_cast<std::size_t>(step)) {
        SeriesWindow w;
        w.x = nn::Tensor({static_cast<std::size_t>(window), n, m});
        w.y = nn::Tensor({static_cast<std::size_t>(horizon), n});
        auto& xv = w.x.data();
        auto& yv = w.y.data();
        for (std::size_t t = 0; t < static_cast<std::size_t>(window); ++t) {
            for (std::size_t si = 0; si < n; ++si) {
                const auto& r = table.stations[si].rows[start + t];
                xv[(t * n + si) * m] = r.aqi;
                for (std::size_t j = 0; j < table.met_names.size(); ++j) {
                    xv[(t * n + si) * m + 1 + j] = j < r.met.size() ? r.met[j] : 0.0;
                }
            }
        }
        for (std::size_t h = 0; h < static_cast<std::size_t>(horizon); ++h) {
            for (std::size_t si = 0; si < n; ++si) {
                yv[h * n + si] =
                    table.stations[si].rows[start + static_cast<std::size_t>(window) + h].aqi;
            }
        }
        w.anchor = grid[start + static_cast<std::size_t>(window) - 1];
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace aq::data
