// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "physmamba/tensor.hpp"

namespace physmamba {

namespace detail {

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // empty until a gradient arrives
    std::shared_ptr<Node> grad_fn;
};

/// One recorded operation.
struct Node {
    using BackwardFn = std::function<void(Node&, std::span<const double> grad_out)>;

    std::string name;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::weak_ptr<TensorImpl> output;
    BackwardFn backward;
    std::uint64_t generation = 0;
    bool released = false;

    /// Gradient accumulator of input i, allocated on first use; nullptr if that input needs no gradient.
    std::vector<double>* input_grad(std::size_t i);
};

/// Builds the output tensor of an op and records it on the current tape when
/// any input requires a gradient and grad mode is on. Raises NumericError if
/// the produced values are not finite.
Tensor make_result(const char* name, Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs, Node::BackwardFn backward);

}  // namespace detail

/// Ordered record of executed operations for the reverse pass.
///
/// One tape per thread. backward() walks the records in exact reverse
/// execution order, then releases them; the graph cannot be replayed.
class Tape {
public:
    static Tape& current();

    void record(std::shared_ptr<detail::Node> node);
    std::size_t size() const noexcept { return records_.size(); }
    std::uint64_t generation() const noexcept { return generation_; }

    /// Names of recorded ops in execution order (for inspection and tests).
    std::vector<std::string> op_names() const;

    /// Drops all records without running backward.
    void clear();

    void backward(const Tensor& loss);

    /// Called once per node during a reverse pass, in visit order. Test hook.
    std::function<void(const detail::Node&)> on_visit;

private:
    std::vector<std::shared_ptr<detail::Node>> records_;
    std::uint64_t generation_ = 1;
};

bool grad_enabled();

/// Disables recording for the current thread within its scope.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Reverse pass from a scalar loss into every requires_grad leaf.
void backward(const Tensor& loss);

}  // namespace physmamba
