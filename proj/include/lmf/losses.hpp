#pragma once

#include "lmf/tensor.hpp"

namespace lmf {

struct LossResult {
    double value = 0.0;
    Tensor grad;  // dLoss/dS
};

// Mean over pixels of -[G log S + (1-G) log(1-S)]; S clamped 1e-7 from the
// boundary before the logs.
LossResult bce_loss(const Tensor& S, const Tensor& G);

// 1 - sum(S*G) / sum(S + G - S*G) per image, averaged over the batch.
// All-empty prediction and ground truth define loss 0.
LossResult iou_loss(const Tensor& S, const Tensor& G);

// 1 - mean SSIM with an 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
// C2=0.03^2 on dynamic range 1; border windows truncated and renormalized.
LossResult ssim_loss(const Tensor& S, const Tensor& G);

struct LossSelection {
    bool bce = true;
    bool ssim = true;
    bool iou = true;
};

struct HybridResult {
    double total = 0.0;
    double bce = 0.0, ssim = 0.0, iou = 0.0;
    Tensor grad;
};

// Unit-weight sum of the selected components.
HybridResult hybrid_loss(const Tensor& S, const Tensor& G, LossSelection sel = {});

// Softmax cross-entropy over (n, classes, 1, 1) logits; grad w.r.t. logits.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace lmf
