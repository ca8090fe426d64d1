#pragma once

#include <iosfwd>
#include <vector>

#include "lmf/augment.hpp"
#include "lmf/data_io.hpp"
#include "lmf/dataset.hpp"
#include "lmf/lmfnet.hpp"
#include "lmf/losses.hpp"
#include "lmf/optim.hpp"

namespace lmf {

struct TrainRecipe {
    int epochs = 1;
    int batch_size = 4;
    OptimizerConfig optimizer;
    LossSelection loss;      // saliency head only
    AugmentConfig augment;
    std::uint64_t seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
    double accuracy = -1.0;  // classifier training accuracy; -1 for saliency
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    long long steps = 0;
};

// Deterministic given (recipe.seed, data order): shuffling, augmentation and
// init all draw from split streams of one splitmix64 root. Throws
// NumericalError when a loss or update goes non-finite.
TrainHistory train_sod(LmfNet& net, const std::vector<SodSample>& data, const TrainRecipe& recipe,
                       std::ostream* log = nullptr);

TrainHistory train_classifier(LmfNet& net, const std::vector<CifarRecord>& data,
                              const TrainRecipe& recipe, std::ostream* log = nullptr);

}  // namespace lmf
