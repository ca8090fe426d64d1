#pragma once

#include <string>
#include <vector>

#include "lmf/lmfnet.hpp"
#include "lmf/losses.hpp"

namespace lmf {

struct GradCheckResult {
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    std::string worst_param;
    long long checked = 0;

    bool pass(double tol = 1e-4) const { return max_rel_err < tol; }
};

// Central-difference check of dLoss/dParam against the analytic backward
// pass. `samples_per_param` entries of each parameter tensor are probed
// (evenly strided) to keep the cost bounded on larger configurations.
GradCheckResult gradcheck_sod(LmfNet& net, const Tensor& input, const Tensor& target,
                              LossSelection sel = {}, double step = 1e-6,
                              int samples_per_param = 4);

GradCheckResult gradcheck_classifier(LmfNet& net, const Tensor& input,
                                     const std::vector<int>& labels, double step = 1e-6,
                                     int samples_per_param = 4);

// Generic scalar-function check used by the unit tests for individual ops.
double relative_error(double analytic, double numeric);

}  // namespace lmf
