#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aq/nn/tensor.hpp"

namespace aq::nn {

enum class Precision : std::uint8_t { F64 = 0, F32 = 1 };

/**
 * Ordered, named parameter collection. Names are unique and the entry order
 * is stable, including across serialization round-trips. Two sets are
 * "aligned" when names, order, and shapes all match.
 *
 * Binary layout (little-endian):
 *   magic "AQPS", version byte, precision byte, entry count u32, then per
 *   entry: name length u32, name bytes, rank u32, extents u64[rank],
 *   values (f64 or f32). F64 round-trips are bit-exact.
 */
class ParamSet {
public:
    using Entry = std::pair<std::string, Tensor>;

    ParamSet() = default;

    void add(std::string name, Tensor tensor);
    bool contains(const std::string& name) const;
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    Entry& entry(std::size_t i) { return entries_[i]; }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool aligned_with(const ParamSet& other, std::string* first_mismatch = nullptr) const;

    // Deep copy of every tensor.
    ParamSet clone() const;

    void ensure_grads();
    void zero_grads();
    bool all_grads_present() const;
    bool all_finite() const;

    std::size_t total_values() const;
    // L2 norm of the element-wise difference; requires alignment.
    double l2_distance(const ParamSet& other) const;

    std::vector<std::uint8_t> to_bytes(Precision precision = Precision::F64) const;
    static ParamSet from_bytes(const std::uint8_t* bytes, std::size_t len);
    static ParamSet from_bytes(const std::vector<std::uint8_t>& bytes);

    void save(std::ostream& out, Precision precision = Precision::F64) const;
    static ParamSet load(std::istream& in);
    void save_file(const std::string& path, Precision precision = Precision::F64) const;
    static ParamSet load_file(const std::string& path);

private:
    std::vector<Entry> entries_;
};

/**
 * In-place gradient step: w <- w - lr * (grad + reg_lambda * w).
 * The quadratic-penalty term is only applied when reg_lambda > 0.
 * Throws ValueError when any entry is missing its gradient buffer.
 */
void sgd_step(ParamSet& params, double lr, double reg_lambda = 0.0);

}  // namespace aq::nn
