#pragma once

#include <string>
#include <vector>

namespace aq::dmnet {

struct AqiBand {
    std::string name;
    double aqi_min = 0.0;
    double aqi_max = 0.0;
};

/**
 * Ordered AQI bands mapping a class index to an [aqi_min, aqi_max] range.
 * Bands must be contiguous (next min = previous max + 1), non-overlapping,
 * and cover [0, 500].
 */
class AqiScaleTable {
public:
    explicit AqiScaleTable(std::vector<AqiBand> bands);

    // The common six bands from "good" (0-50) up to "hazardous" (301-500).
    static AqiScaleTable default_table();

    // Fallback for class counts other than six: [0,500] cut into `classes`
    // contiguous integer bands named scale_0..scale_{classes-1}.
    static AqiScaleTable evenly_divided(std::size_t classes);

    // default_table when classes == 6, evenly_divided otherwise.
    static AqiScaleTable for_classes(std::size_t classes);

    std::size_t size() const { return bands_.size(); }
    const AqiBand& band(std::size_t i) const { return bands_.at(i); }

    // Band index containing the given AQI value.
    std::size_t classify(double aqi) const;

    // CSV with header name,aqi_min,aqi_max.
    void save_csv(const std::string& path) const;
    static AqiScaleTable load_csv(const std::string& path);

private:
    std::vector<AqiBand> bands_;
};

}  // namespace aq::dmnet
