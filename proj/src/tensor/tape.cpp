// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"

namespace physmamba {

namespace {
thread_local bool t_grad_enabled = true;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

namespace detail {

std::vector<double>* Node::input_grad(std::size_t i) {
    TensorImpl& in = *inputs.at(i);
    if (!in.requires_grad) return nullptr;
    if (in.grad.empty()) in.grad.assign(in.data.size(), 0.0);
    return &in.grad;
}

Tensor make_result(const char* name, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   Node::BackwardFn backward) {
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + name);
    }
    Tensor out(std::move(shape), std::move(values));
    if (!grad_enabled()) return out;
    const bool needs_grad =
        std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (!needs_grad) return out;

    auto node = std::make_shared<Node>();
    node->name = name;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.impl());
    node->output = out.impl();
    node->backward = std::move(backward);
    out.impl()->requires_grad = true;
    out.impl()->grad_fn = node;
    Tape::current().record(std::move(node));
    return out;
}

}  // namespace detail

Tape& Tape::current() {
    thread_local Tape tape;
    return tape;
}

void Tape::record(std::shared_ptr<detail::Node> node) {
    node->generation = generation_;
    records_.push_back(std::move(node));
}

std::vector<std::string> Tape::op_names() const {
    std::vector<std::string> names;
    names.reserve(records_.size());
    for (const auto& n : records_) names.push_back(n->name);
    return names;
}

void Tape::clear() {
    for (auto& n : records_) {
        n->released = true;
        n->inputs.clear();
        n->backward = nullptr;
    }
    records_.clear();
    ++generation_;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined()) throw GraphError("backward on an undefined tensor");
    if (loss.numel() != 1) throw GraphError("backward requires a scalar loss, got " + shape_str(loss.shape()));
    const auto& root = loss.impl()->grad_fn;
    if (!root) throw GraphError("backward on a tensor that is not connected to the tape");
    if (root->released || root->generation != generation_) {
        throw GraphError("graph already consumed by a previous backward; run a new forward pass");
    }

    loss.impl()->grad.assign(1, 1.0);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        detail::Node& node = **it;
        auto out = node.output.lock();
        if (!out || out->grad.empty()) continue;
        if (on_visit) on_visit(node);
        node.backward(node, out->grad);
        // intermediate gradients are complete once their producer has run
        if (out->grad_fn) std::vector<double>().swap(out->grad);
    }
    clear();
}

void backward(const Tensor& loss) { Tape::current().backward(loss); }

}  // namespace physmamba
