// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <sstream>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"
#include "physmamba/verify.hpp"

namespace physmamba::verify {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

// Shared driver: upper/lower evaluate the perturbed points, numeric_of turns them into a central difference.
GradCheckResult check_with(const std::string& name, const std::function<Tensor()>& loss_fn,
                           const std::function<double()>& upper, const std::function<double()>& lower,
                           const std::vector<nn::NamedParam>& params, std::mt19937_64& rng,
                           const GradCheckOptions& options, const std::function<double(double, double)>& numeric_of) {
    GradCheckResult result;
    result.name = name;

    std::vector<Tensor> tensors;
    for (const auto& p : params) {
        Tensor t = p.tensor;
        t.requires_grad_();
        t.zero_grad();
        tensors.push_back(t);
    }
    Tape::current().clear();
    const Tensor loss = loss_fn();
    backward(loss);

    // flat coordinate list (param index, element index)
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t p = 0; p < tensors.size(); ++p)
        for (std::size_t i = 0; i < tensors[p].numel(); ++i) coords.emplace_back(p, i);
    if (coords.size() > options.samples) {
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(options.samples);
        std::sort(coords.begin(), coords.end());
    }

    NoGradGuard no_grad;
    for (const auto& [p, i] : coords) {
        Tensor& t = tensors[p];
        const double analytic = t.has_grad() ? t.grad()[i] : 0.0;
        auto values = t.data_mut();
        const double original = values[i];
        values[i] = original + options.step;
        const double up = upper();
        values[i] = original - options.step;
        const double down = lower();
        values[i] = original;
        const double numeric = numeric_of(up, down);
        const double err = relative_error(analytic, numeric, options.floor);
        ++result.checked;
        if (err > result.max_rel_error || result.worst.empty()) {
            result.max_rel_error = std::max(result.max_rel_error, err);
            std::ostringstream os;
            os.precision(10);
            os << params[p].name << '[' << i << "]: analytic " << analytic << " vs numeric " << numeric;
            result.worst = os.str();
        }
    }
    result.passed = result.max_rel_error <= options.tolerance;
    for (Tensor& t : tensors) t.zero_grad();
    return result;
}

}  // namespace

GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                                const std::vector<nn::NamedParam>& params, std::mt19937_64& rng,
                                const GradCheckOptions& options) {
    auto eval = [&] { return loss_fn().item(); };
    return check_with(name, loss_fn, eval, eval, params, rng, options,
                      [&](double up, double down) { return (up - down) / (2.0 * options.step); });
}

GradCheckResult check_projected_gradients(const std::string& name, const std::function<Tensor()>& output_fn,
                                          const Tensor& direction, const std::vector<nn::NamedParam>& params,
                                          std::mt19937_64& rng, const GradCheckOptions& options) {
    std::vector<double> up_out, down_out;
    auto loss = [&] { return ops::sum(ops::mul(output_fn(), direction)); };
    auto capture = [&](std::vector<double>& dst) {
        const Tensor y = output_fn();
        if (y.shape() != direction.shape())
            throw DimensionError("projection " + shape_str(direction.shape()) + " does not match output " +
                                 shape_str(y.shape()));
        const auto d = y.data();
        dst.assign(d.begin(), d.end());
        return 0.0;
    };
    return check_with(
        name, loss, [&] { return capture(up_out); }, [&] { return capture(down_out); }, params, rng, options,
        [&](double, double) {
            const auto r = direction.data();
            double acc = 0.0;
            for (std::size_t k = 0; k < r.size(); ++k) acc += r[k] * (up_out[k] - down_out[k]);
            return acc / (2.0 * options.step);
        });
}

double max_relative_error(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw DimensionError("comparing " + shape_str(a.shape()) + " with " + shape_str(b.shape()));
    const auto ad = a.data();
    const auto bd = b.data();
    double scale = 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) {
        scale = std::max(scale, std::abs(bd[i]));
        diff = std::max(diff, std::abs(ad[i] - bd[i]));
    }
    return diff / std::max(scale, 1e-300);
}

}  // namespace physmamba::verify
