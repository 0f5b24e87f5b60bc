#include "aq/nn/tensor.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

#include "aq/errors.hpp"

namespace aq::nn {

std::string shape_str(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    out += ")";
    return out;
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

namespace {
void check_extents(const Shape& shape) {
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    check_extents(shape_);
    storage_ = std::make_shared<Storage>();
    storage_->data.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
    check_extents(shape_);
    if (shape_numel(shape_) != values.size()) {
        throw ShapeError("tensor shape " + shape_str(shape_) + " expects " +
                         std::to_string(shape_numel(shape_)) + " values, got " +
                         std::to_string(values.size()));
    }
    storage_ = std::make_shared<Storage>();
    storage_->data = std::move(values);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    t.data().assign(t.numel(), v);
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::numel() const { return storage_ ? storage_->data.size() : 0; }

std::vector<double>& Tensor::data() {
    if (!storage_) throw ValueError("tensor is not defined");
    return storage_->data;
}

const std::vector<double>& Tensor::data() const {
    if (!storage_) throw ValueError("tensor is not defined");
    return storage_->data;
}

double Tensor::value() const {
    if (numel() != 1) {
        throw ShapeError("value() requires a scalar tensor, shape is " + shape_str(shape_));
    }
    return storage_->data[0];
}

bool Tensor::has_grad() const { return storage_ && !storage_->grad.empty(); }

std::vector<double>& Tensor::grad() {
    if (!has_grad()) throw ValueError("tensor has no gradient buffer");
    return storage_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (!has_grad()) throw ValueError("tensor has no gradient buffer");
    return storage_->grad;
}

Tensor& Tensor::ensure_grad() {
    if (!storage_) throw ValueError("tensor is not defined");
    if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), 0.0);
    return *this;
}

Tensor& Tensor::zero_grad() {
    ensure_grad();
    storage_->grad.assign(storage_->data.size(), 0.0);
    return *this;
}

void Tensor::drop_grad() {
    if (storage_) storage_->grad.clear();
}

Tensor Tensor::clone() const {
    if (!storage_) return Tensor();
    Tensor out;
    out.shape_ = shape_;
    out.storage_ = std::make_shared<Storage>();
    out.storage_->data = storage_->data;
    return out;
}

bool Tensor::all_finite() const {
    if (!storage_) return true;
    for (double v : storage_->data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tape::record(std::vector<Tensor> inputs, std::vector<Tensor> outputs,
                  std::function<void()> pull_gradients) {
    nodes_.push_back(Node{std::move(inputs), std::move(outputs), std::move(pull_gradients)});
}

void backward(Tensor loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ValueError("backward: loss must be a defined scalar tensor, shape is " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("(undefined)")));
    }
    Tape* tape = loss.tape();
    if (tape == nullptr) {
        throw ValueError("backward: loss is not attached to a differentiation graph");
    }

    // Fresh zero gradients for every tensor the graph touched.
    std::unordered_set<const void*> seen;
    for (auto& node : tape->nodes_) {
        for (auto& t : node.inputs) {
            if (seen.insert(t.storage_id()).second) t.zero_grad();
        }
        for (auto& t : node.outputs) {
            if (seen.insert(t.storage_id()).second) t.zero_grad();
        }
    }
    loss.zero_grad();
    loss.grad()[0] = 1.0;

    for (auto it = tape->nodes_.rbegin(); it != tape->nodes_.rend(); ++it) {
        it->pull();
    }
    tape->clear();
}

}  // namespace aq::nn
