#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace aq::nn {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

class Tape;

/**
 * Dense row-major tensor of doubles.
 *
 * A Tensor is a cheap handle: copies share the underlying value/gradient
 * storage (clone() makes a private copy). The gradient buffer is allocated
 * lazily and always matches the value shape. Operations in ops.hpp record
 * themselves on an explicit Tape; a tensor only remembers the tape that
 * produced it so backward(loss) can find the graph.
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor full(Shape shape, double v);

    bool defined() const { return static_cast<bool>(storage_); }
    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const;
    std::size_t numel() const;

    std::vector<double>& data();
    const std::vector<double>& data() const;

    // Scalar convenience accessor; throws unless numel() == 1.
    double value() const;

    bool has_grad() const;
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    Tensor& ensure_grad();  // allocate a zero gradient buffer if absent
    Tensor& zero_grad();    // ensure + fill with zeros
    void drop_grad();

    // Deep copy of the values; gradient and tape link are not carried over.
    Tensor clone() const;

    bool all_finite() const;

    Tape* tape() const { return tape_; }
    Tensor& attach(Tape* tape) {
        tape_ = tape;
        return *this;
    }

    // Identity of the shared storage, for gradient bookkeeping.
    const void* storage_id() const { return storage_.get(); }

private:
    struct Storage {
        std::vector<double> data;
        std::vector<double> grad;  // empty means "no gradient buffer"
    };

    Shape shape_;
    std::shared_ptr<Storage> storage_;
    Tape* tape_ = nullptr;
};

/**
 * Reverse-mode differentiation graph.
 *
 * Records one node per primitive operation, in execution order (which is a
 * valid topological order). backward(loss) replays the closures in reverse,
 * accumulating into the gradient buffers of every recorded tensor, then
 * clears the tape. A tape is confined to a single worker at a time.
 */
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(std::vector<Tensor> inputs, std::vector<Tensor> outputs,
                std::function<void()> pull_gradients);

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    void clear() { nodes_.clear(); }

    friend void backward(Tensor loss);

private:
    struct Node {
        std::vector<Tensor> inputs;
        std::vector<Tensor> outputs;
        std::function<void()> pull;
    };
    std::vector<Node> nodes_;
};

/**
 * Populates grad buffers with d(loss)/d(tensor) for every tensor recorded on
 * the tape that produced `loss`, then resets that tape. The loss must be a
 * scalar. Gradients of recorded tensors are overwritten, not accumulated
 * across calls; tensors the loss does not depend on keep a zero gradient.
 */
void backward(Tensor loss);

}  // namespace aq::nn
