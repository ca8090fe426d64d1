#pragma once

#include <array>
#include <string>
#include <vector>

#include "lmf/tensor.hpp"

// Saliency evaluation: MAE, PR / F-measure curves over 256 thresholds,
// max E-measure, and S-measure. Threshold t binarizes at S >= (t+0.5)/256.

namespace lmf {

constexpr int kThresholds = 256;
constexpr double kFBetaSq = 0.3;

// prediction in [0,1], ground truth strictly binary, equal single-channel shapes.
struct EvalPair {
    Tensor prediction;
    Tensor ground_truth;
};

void validate_eval_pair(const EvalPair& pair);

double mae(const EvalPair& pair);

struct PrPoint {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

struct CurveReport {
    std::array<PrPoint, kThresholds> curve;
    double max_f = 0.0;
    int max_f_threshold = 0;
};

// Per-image precision/recall at each threshold, averaged across the dataset.
// Empty-prediction convention: precision 1 if the mask is also empty, else 0;
// recall 1 on an empty mask.
CurveReport pr_and_f_curves(const std::vector<EvalPair>& pairs);

// Enhanced-alignment measure, maximum over the 256 thresholds.
double e_measure(const EvalPair& pair);

// Structure measure: 0.5 * S_region + 0.5 * S_object.
double s_measure(const EvalPair& pair);

struct MetricsReport {
    double mae = 0.0;
    double max_f = 0.0;
    int max_f_threshold = 0;
    double max_e = 0.0;
    double s_m = 0.0;
    std::array<PrPoint, kThresholds> curve;
    int image_count = 0;
};

MetricsReport evaluate_pairs(const std::vector<EvalPair>& pairs);

}  // namespace lmf
