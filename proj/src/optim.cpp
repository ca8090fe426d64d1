#include <cmath>

#include "lmf/optim.hpp"

namespace lmf {

double ScheduleSpec::scale_at(int epoch) const {
    switch (kind) {
        case ScheduleKind::Constant:
            return 1.0;
        case ScheduleKind::Exponential:
            return std::pow(gamma, epoch);
        case ScheduleKind::Multistep: {
            double s = 1.0;
            for (int m : milestones)
                if (epoch >= m) s *= factor;
            return s;
        }
    }
    return 1.0;
}

namespace {

bool decays(ParamRole role) {
    return role == ParamRole::DepthwiseWeight || role == ParamRole::PointwiseWeight ||
           role == ParamRole::FcWeight;
}

}  // namespace

Optimizer::Optimizer(OptimizerConfig cfg, const std::vector<ParamTensor*>& params) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamTensor* p : params) {
        m_.emplace_back(p->size(), 0.0);
        if (cfg_.kind == OptimizerKind::Adam) v_.emplace_back(p->size(), 0.0);
    }
}

void Optimizer::step(const std::vector<ParamTensor*>& params) {
    if (params.size() != m_.size())
        throw ConfigError("Optimizer::step: parameter list changed size");
    ++steps_;
    const double lr = current_lr();
    if (cfg_.kind == OptimizerKind::Adam) {
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            ParamTensor& p = *params[i];
            const double wd = decays(p.role) ? cfg_.weight_decay : 0.0;
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double g = p.grad.data[j] + wd * p.value.data[j];
                m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
                v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m_[i][j] / bc1;
                const double vhat = v_[i][j] / bc2;
                p.value.data[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
    } else {
        for (std::size_t i = 0; i < params.size(); ++i) {
            ParamTensor& p = *params[i];
            const double wd = decays(p.role) ? cfg_.weight_decay : 0.0;
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double g = p.grad.data[j] + wd * p.value.data[j];
                m_[i][j] = cfg_.momentum * m_[i][j] + g;
                p.value.data[j] -= lr * m_[i][j];
            }
        }
    }
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "sgd") return OptimizerKind::SgdMomentum;
    throw ConfigError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::Adam ? "adam" : "sgd";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "constant") return ScheduleKind::Constant;
    if (s == "exponential") return ScheduleKind::Exponential;
    if (s == "multistep") return ScheduleKind::Multistep;
    throw ConfigError("unknown schedule '" + s + "' (expected constant, exponential or multistep)");
}

std::string to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Constant: return "constant";
        case ScheduleKind::Exponential: return "exponential";
        default: return "multistep";
    }
}

}  // namespace lmf
