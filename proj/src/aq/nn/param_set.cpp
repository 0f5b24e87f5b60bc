#include "aq/nn/param_set.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "aq/errors.hpp"

namespace aq::nn {

namespace {

constexpr char kMagic[4] = {'A', 'Q', 'P', 'S'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    Reader(const std::uint8_t* p, std::size_t len) : p_(p), len_(len) {}

    std::uint8_t u8() {
        need(1);
        return p_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return len_ - pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > len_) throw IoError("parameter blob truncated");
    }
    const std::uint8_t* p_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

}  // namespace

void ParamSet::add(std::string name, Tensor tensor) {
    if (name.empty()) throw ValueError("parameter name must be non-empty");
    if (contains(name)) throw ValueError("duplicate parameter name: " + name);
    if (!tensor.defined()) throw ValueError("parameter " + name + " is undefined");
    entries_.emplace_back(std::move(name), std::move(tensor));
}

bool ParamSet::contains(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) return true;
    }
    return false;
}

Tensor& ParamSet::get(const std::string& name) {
    for (auto& [n, t] : entries_) {
        if (n == name) return t;
    }
    throw ValueError("no parameter named " + name);
}

const Tensor& ParamSet::get(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) return t;
    }
    throw ValueError("no parameter named " + name);
}

bool ParamSet::aligned_with(const ParamSet& other, std::string* first_mismatch) const {
    if (entries_.size() != other.entries_.size()) {
        if (first_mismatch) {
            *first_mismatch = "entry count " + std::to_string(entries_.size()) + " vs " +
                              std::to_string(other.entries_.size());
        }
        return false;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& [an, at] = entries_[i];
        const auto& [bn, bt] = other.entries_[i];
        if (an != bn || at.shape() != bt.shape()) {
            if (first_mismatch) {
                *first_mismatch = an + shape_str(at.shape()) + " vs " + bn + shape_str(bt.shape());
            }
            return false;
        }
    }
    return true;
}

ParamSet ParamSet::clone() const {
    ParamSet out;
    for (const auto& [name, t] : entries_) out.add(name, t.clone());
    return out;
}

void ParamSet::ensure_grads() {
    for (auto& [name, t] : entries_) t.ensure_grad();
}

void ParamSet::zero_grads() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

bool ParamSet::all_grads_present() const {
    for (const auto& [name, t] : entries_) {
        if (!t.has_grad()) return false;
    }
    return true;
}

bool ParamSet::all_finite() const {
    for (const auto& [name, t] : entries_) {
        if (!t.all_finite()) return false;
    }
    return true;
}

std::size_t ParamSet::total_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
}

double ParamSet::l2_distance(const ParamSet& other) const {
    std::string mismatch;
    if (!aligned_with(other, &mismatch)) {
        throw ShapeError("l2_distance: parameter sets not aligned: " + mismatch);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i].second.data();
        const auto& b = other.entries_[i].second.data();
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double d = a[j] - b[j];
            acc += d * d;
        }
    }
    return std::sqrt(acc);
}

std::vector<std::uint8_t> ParamSet::to_bytes(Precision precision) const {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(static_cast<std::uint8_t>(precision));
    put_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, t] : entries_) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t e : t.shape()) put_u64(out, e);
        if (precision == Precision::F64) {
            for (double v : t.data()) put_f64(out, v);
        } else {
            for (double v : t.data()) put_f32(out, static_cast<float>(v));
        }
    }
    return out;
}

ParamSet ParamSet::from_bytes(const std::uint8_t* bytes, std::size_t len) {
    Reader r(bytes, len);
    if (r.str(4) != std::string(kMagic, 4)) throw IoError("bad parameter blob magic");
    const std::uint8_t version = r.u8();
    if (version != kVersion) {
        throw IoError("unsupported parameter format version " + std::to_string(version));
    }
    const std::uint8_t prec = r.u8();
    if (prec > 1) throw IoError("unsupported precision flag " + std::to_string(prec));
    const std::uint32_t count = r.u32();
    ParamSet out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        const std::uint32_t rank = r.u32();
        Shape shape(rank);
        for (auto& e : shape) e = static_cast<std::size_t>(r.u64());
        const std::size_t n = shape_numel(shape);
        std::vector<double> values(n);
        if (static_cast<Precision>(prec) == Precision::F64) {
            for (auto& v : values) v = r.f64();
        } else {
            for (auto& v : values) v = static_cast<double>(r.f32());
        }
        out.add(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return out;
}

ParamSet ParamSet::from_bytes(const std::vector<std::uint8_t>& bytes) {
    return from_bytes(bytes.data(), bytes.size());
}

void ParamSet::save(std::ostream& out, Precision precision) const {
    const auto bytes = to_bytes(precision);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed to write parameter blob");
}

ParamSet ParamSet::load(std::istream& in) {
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return from_bytes(bytes);
}

void ParamSet::save_file(const std::string& path, Precision precision) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    save(out, precision);
}

ParamSet ParamSet::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return load(in);
}

void sgd_step(ParamSet& params, double lr, double reg_lambda) {
    for (auto& [name, t] : params) {
        if (!t.has_grad()) throw ValueError("sgd_step: parameter " + name + " has no gradient");
    }
    for (auto& [name, t] : params) {
        auto& v = t.data();
        const auto& g = t.grad();
        if (reg_lambda > 0.0) {
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * (g[i] + reg_lambda * v[i]);
        } else {
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
        }
    }
}

}  // namespace aq::nn
