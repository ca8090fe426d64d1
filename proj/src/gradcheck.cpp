#include <algorithm>
#include <cmath>
#include <functional>

#include "lmf/gradcheck.hpp"

namespace lmf {

double relative_error(double analytic, double numeric) {
    // Below the floor the comparison is effectively absolute: finite-
    // difference noise dominates near-zero gradients.
    const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
    return std::fabs(analytic - numeric) / scale;
}

namespace {

GradCheckResult run_check(LmfNet& net, const std::function<double()>& loss_fn,
                          const std::function<void()>& backward_fn, double step,
                          int samples_per_param) {
    net.zero_grad();
    backward_fn();  // fills analytic gradients

    // Snapshot the analytic gradients before the probing passes overwrite
    // any shared state.
    auto named = net.named_params();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(named.size());
    for (auto& [name, p] : named) analytic.push_back(p->grad.data);

    GradCheckResult result;
    for (std::size_t pi = 0; pi < named.size(); ++pi) {
        ParamTensor& p = *named[pi].second;
        const std::size_t count = p.size();
        const std::size_t stride =
            std::max<std::size_t>(1, count / std::max(1, samples_per_param));
        for (std::size_t j = 0; j < count; j += stride) {
            const double saved = p.value.data[j];
            auto probe = [&](double h) {
                p.value.data[j] = saved + h;
                const double up = loss_fn();
                p.value.data[j] = saved - h;
                const double down = loss_fn();
                p.value.data[j] = saved;
                return (up - down) / (2.0 * h);
            };
            double numeric = probe(step);
            double rel_err = relative_error(analytic[pi][j], numeric);
            // A probe that straddles a ReLU kink or a pooling tie reports the
            // wrong one-sided slope; shrinking the step resolves it, while a
            // genuine backward bug does not.
            for (double shrink : {0.5, 0.1, 0.01}) {
                if (rel_err <= 1e-5) break;
                const double retry = probe(step * shrink);
                if (relative_error(analytic[pi][j], retry) < rel_err) {
                    numeric = retry;
                    rel_err = relative_error(analytic[pi][j], numeric);
                }
            }
            const double abs_err = std::fabs(analytic[pi][j] - numeric);
            if (rel_err > result.max_rel_err) {
                result.max_rel_err = rel_err;
                result.worst_param =
                    named[pi].first + "[" + std::to_string(j) + "]";
            }
            result.max_abs_err = std::max(result.max_abs_err, abs_err);
            ++result.checked;
        }
    }
    return result;
}

}  // namespace

GradCheckResult gradcheck_sod(LmfNet& net, const Tensor& input, const Tensor& target,
                              LossSelection sel, double step, int samples_per_param) {
    auto loss_fn = [&]() {
        NetCache cache;
        const Tensor pred = net.forward(input, /*train=*/true, cache);
        return hybrid_loss(pred, target, sel).total;
    };
    auto backward_fn = [&]() {
        NetCache cache;
        const Tensor pred = net.forward(input, /*train=*/true, cache);
        HybridResult loss = hybrid_loss(pred, target, sel);
        net.backward(loss.grad, cache, /*train=*/true);
    };
    return run_check(net, loss_fn, backward_fn, step, samples_per_param);
}

GradCheckResult gradcheck_classifier(LmfNet& net, const Tensor& input,
                                     const std::vector<int>& labels, double step,
                                     int samples_per_param) {
    auto loss_fn = [&]() {
        NetCache cache;
        const Tensor logits = net.forward(input, /*train=*/true, cache);
        return softmax_cross_entropy(logits, labels).value;
    };
    auto backward_fn = [&]() {
        NetCache cache;
        const Tensor logits = net.forward(input, /*train=*/true, cache);
        LossResult loss = softmax_cross_entropy(logits, labels);
        net.backward(loss.grad, cache, /*train=*/true);
    };
    return run_check(net, loss_fn, backward_fn, step, samples_per_param);
}

}  // namespace lmf
