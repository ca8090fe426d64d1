#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lmf/train.hpp"

namespace lmf {

namespace {

void check_finite_params(LmfNet& net, const char* where) {
    for (ParamTensor* p : net.params()) {
        if (!all_finite(p->value) || !all_finite(p->grad))
            throw NumericalError(std::string("non-finite parameter state after ") + where);
    }
}

// Fisher-Yates with the shared deterministic generator.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);
}

}  // namespace

TrainHistory train_sod(LmfNet& net, const std::vector<SodSample>& data, const TrainRecipe& recipe,
                       std::ostream* log) {
    if (data.empty()) throw ConfigError("train_sod: empty dataset");
    if (recipe.batch_size <= 0 || recipe.epochs <= 0)
        throw ConfigError("train_sod: epochs and batch size must be positive");
    Rng root(recipe.seed);
    Rng shuffle_rng = root.fork();
    Rng augment_rng = root.fork();
    std::vector<ParamTensor*> params = net.params();
    Optimizer opt(recipe.optimizer, params);

    TrainHistory hist;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
        opt.set_epoch(epoch);
        shuffle_indices(order, shuffle_rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += recipe.batch_size) {
            const std::size_t end = std::min(order.size(), start + recipe.batch_size);
            std::vector<AugmentedPair> aug;
            aug.reserve(end - start);
            for (std::size_t i = start; i < end; ++i)
                aug.push_back(augment_sod(data[order[i]].image, data[order[i]].mask,
                                          recipe.augment, augment_rng));
            std::vector<const Tensor*> imgs, masks;
            for (const AugmentedPair& p : aug) {
                imgs.push_back(&p.image);
                masks.push_back(&p.mask);
            }
            const Tensor batch = stack_batch(imgs);
            const Tensor target = stack_batch(masks);

            net.zero_grad();
            NetCache cache;
            const Tensor pred = net.forward(batch, /*train=*/true, cache);
            HybridResult loss = hybrid_loss(pred, target, recipe.loss);
            if (!std::isfinite(loss.total))
                throw NumericalError("train_sod: non-finite loss at epoch " +
                                     std::to_string(epoch));
            net.backward(loss.grad, cache, /*train=*/true);
            opt.step(params);
            check_finite_params(net, "optimizer step");
            loss_sum += loss.total;
            ++batches;
            ++hist.steps;
        }
        EpochStats st;
        st.epoch = epoch;
        st.mean_loss = loss_sum / batches;
        st.lr = opt.current_lr();
        hist.epochs.push_back(st);
        if (log)
            *log << "epoch " << epoch << " loss " << st.mean_loss << " lr " << st.lr << "\n";
    }
    return hist;
}

TrainHistory train_classifier(LmfNet& net, const std::vector<CifarRecord>& data,
                              const TrainRecipe& recipe, std::ostream* log) {
    if (data.empty()) throw ConfigError("train_classifier: empty dataset");
    if (recipe.batch_size <= 0 || recipe.epochs <= 0)
        throw ConfigError("train_classifier: epochs and batch size must be positive");
    const NetworkConfig& cfg = net.config();
    Rng root(recipe.seed);
    Rng shuffle_rng = root.fork();
    Rng augment_rng = root.fork();
    std::vector<ParamTensor*> params = net.params();
    Optimizer opt(recipe.optimizer, params);

    // Resize once up front when the network resolution differs from 32x32.
    std::vector<Tensor> images;
    images.reserve(data.size());
    for (const CifarRecord& r : data)
        images.push_back(resize_bilinear(r.image, cfg.input_h, cfg.input_w));

    TrainHistory hist;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
        opt.set_epoch(epoch);
        shuffle_indices(order, shuffle_rng);
        double loss_sum = 0.0;
        long long correct = 0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += recipe.batch_size) {
            const std::size_t end = std::min(order.size(), start + recipe.batch_size);
            std::vector<Tensor> aug;
            std::vector<int> labels;
            aug.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                aug.push_back(augment_image(images[order[i]], recipe.augment, augment_rng));
                labels.push_back(data[order[i]].label);
            }
            std::vector<const Tensor*> imgs;
            for (const Tensor& t : aug) imgs.push_back(&t);
            const Tensor batch = stack_batch(imgs);

            net.zero_grad();
            NetCache cache;
            const Tensor logits = net.forward(batch, /*train=*/true, cache);
            LossResult loss = softmax_cross_entropy(logits, labels);
            if (!std::isfinite(loss.value))
                throw NumericalError("train_classifier: non-finite loss at epoch " +
                                     std::to_string(epoch));
            for (std::size_t b = 0; b < labels.size(); ++b) {
                int argmax = 0;
                for (int c = 1; c < logits.c; ++c)
                    if (logits.at(static_cast<int>(b), c, 0, 0) >
                        logits.at(static_cast<int>(b), argmax, 0, 0))
                        argmax = c;
                correct += argmax == labels[b];
            }
            net.backward(loss.grad, cache, /*train=*/true);
            opt.step(params);
            check_finite_params(net, "optimizer step");
            loss_sum += loss.value;
            ++batches;
            ++hist.steps;
        }
        EpochStats st;
        st.epoch = epoch;
        st.mean_loss = loss_sum / batches;
        st.lr = opt.current_lr();
        st.accuracy = static_cast<double>(correct) / data.size();
        hist.epochs.push_back(st);
        if (log)
            *log << "epoch " << epoch << " loss " << st.mean_loss << " acc " << st.accuracy
                 << " lr " << st.lr << "\n";
    }
    return hist;
}

}  // namespace lmf
