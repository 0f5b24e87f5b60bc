#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aq/nn/tensor.hpp"

namespace aq::data {

struct ObservationRecord {
    std::string station_id;
    std::int64_t timestamp = 0;  // UTC seconds
    double aqi = 0.0;
    std::vector<double> met;     // optional met_* columns, fixed order per table
    bool aqi_flagged = false;    // outside [0,500]
};

struct StationSeries {
    std::string station_id;
    std::vector<ObservationRecord> rows;  // strictly increasing timestamps
};

struct ObservationTable {
    std::vector<std::string> met_names;   // header names after station_id,timestamp,aqi
    std::vector<StationSeries> stations;  // in first-appearance order

    std::size_t station_count() const { return stations.size(); }
};

// Header: station_id,timestamp_iso8601,aqi[,met_*...]. Rows are grouped per
// station and sorted by time; a duplicate (station, timestamp) keeps the last
// row seen, with a warning. Missing or unparseable aqi raises an error naming
// the line.
ObservationTable load_station_csv(const std::string& path);
void save_station_csv(const ObservationTable& table, const std::string& path);

std::int64_t parse_iso8601_utc(const std::string& text);
std::string format_iso8601_utc(std::int64_t seconds);

/** One training window: X spans T steps just before the T' target steps. */
struct SeriesWindow {
    nn::Tensor x;             // [T, N, M]
    nn::Tensor y;             // [T', N] of raw AQI
    std::int64_t anchor = 0;  // timestamp of the last input step
};

// Slides a [T | T'] window over the common time grid. Every station must
// cover the same regular grid; gaps raise an error listing the missing
// stamps. A series shorter than T + T' yields an empty list with a warning.
// Feature order per station row: aqi, then met columns.
std::vector<SeriesWindow> make_windows(const ObservationTable& table, int window, int horizon,
                                       int step = 1);

}  // namespace aq::data
