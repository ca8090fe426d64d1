#pragma once

#include <string>
#include <vector>

#include "lmf/tensor.hpp"

namespace lmf {

enum class OptimizerKind : std::uint8_t { Adam, SgdMomentum };

enum class ScheduleKind : std::uint8_t { Constant, Exponential, Multistep };

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Constant;
    double gamma = 0.98;           // exponential decay per epoch
    double factor = 0.2;           // multistep multiplier
    std::vector<int> milestones;   // multistep epoch boundaries (0-based)

    double scale_at(int epoch) const;
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double momentum = 0.9;
    double weight_decay = 1e-4;  // coupled (L2 added to the gradient)
    ScheduleSpec schedule;
};

// Per-parameter optimizer state; slot order must match the parameter list
// passed to every step() call.
class Optimizer {
  public:
    Optimizer() = default;
    Optimizer(OptimizerConfig cfg, const std::vector<ParamTensor*>& params);

    const OptimizerConfig& config() const { return cfg_; }
    void set_epoch(int epoch) { epoch_ = epoch; }
    double current_lr() const { return cfg_.lr * cfg_.schedule.scale_at(epoch_); }
    long long step_count() const { return steps_; }

    void step(const std::vector<ParamTensor*>& params);

  private:
    OptimizerConfig cfg_;
    int epoch_ = 0;
    long long steps_ = 0;
    std::vector<std::vector<double>> m_, v_;  // Adam moments / SGD velocity
};

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

}  // namespace lmf
