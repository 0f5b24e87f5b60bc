#include "aq/dmnet/scale_table.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "aq/errors.hpp"

namespace aq::dmnet {

AqiScaleTable::AqiScaleTable(std::vector<AqiBand> bands) : bands_(std::move(bands)) {
    if (bands_.size() < 2) throw ConfigError("scale table needs at least 2 bands");
    if (bands_.front().aqi_min != 0.0) throw ConfigError("scale table must start at 0");
    if (bands_.back().aqi_max != 500.0) throw ConfigError("scale table must end at 500");
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        const auto& b = bands_[i];
        if (b.name.empty()) throw ConfigError("scale band " + std::to_string(i) + " has no name");
        if (!(b.aqi_min < b.aqi_max)) {
            throw ConfigError("scale band " + b.name + " has empty range");
        }
        if (i > 0 && b.aqi_min != bands_[i - 1].aqi_max + 1.0) {
            throw ConfigError("scale bands " + bands_[i - 1].name + " and " + b.name +
                              " are not contiguous");
        }
    }
}

AqiScaleTable AqiScaleTable::default_table() {
    return AqiScaleTable({{"good", 0, 50},
                          {"moderate", 51, 100},
                          {"unhealthy_sensitive", 101, 150},
                          {"unhealthy", 151, 200},
                          {"very_unhealthy", 201, 300},
                          {"hazardous", 301, 500}});
}

AqiScaleTable AqiScaleTable::evenly_divided(std::size_t classes) {
    if (classes < 2) throw ConfigError("scale table needs at least 2 bands");
    std::vector<AqiBand> bands;
    double lo = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
        const double hi =
            i + 1 == classes
                ? 500.0
                : std::floor(500.0 * static_cast<double>(i + 1) / static_cast<double>(classes));
        bands.push_back({"scale_" + std::to_string(i), lo, hi});
        lo = hi + 1.0;
    }
    return AqiScaleTable(std::move(bands));
}

AqiScaleTable AqiScaleTable::for_classes(std::size_t classes) {
    return classes == 6 ? default_table() : evenly_divided(classes);
}

std::size_t AqiScaleTable::classify(double aqi) const {
    if (aqi < 0.0 || aqi > 500.0) {
        throw ValueError("aqi " + std::to_string(aqi) + " outside [0,500]");
    }
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        if (aqi <= bands_[i].aqi_max) return i;
    }
    return bands_.size() - 1;
}

void AqiScaleTable::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "name,aqi_min,aqi_max\n";
    for (const auto& b : bands_) {
        out << b.name << "," << b.aqi_min << "," << b.aqi_max << "\n";
    }
}

AqiScaleTable AqiScaleTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scale table " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("scale table " + path + " is empty");
    std::vector<AqiBand> bands;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        AqiBand b;
        std::string mn, mx;
        if (!std::getline(ss, b.name, ',') || !std::getline(ss, mn, ',') ||
            !std::getline(ss, mx, ',')) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected name,aqi_min,aqi_max");
        }
        try {
            b.aqi_min = std::stod(mn);
            b.aqi_max = std::stod(mx);
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(line_no) + ": unparseable bounds");
        }
        bands.push_back(std::move(b));
    }
    return AqiScaleTable(std::move(bands));
}

}  // namespace aq::dmnet
