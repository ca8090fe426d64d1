#include "lmf/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace lmf {

void validate_eval_pair(const EvalPair& pair) {
    if (!pair.prediction.same_shape(pair.ground_truth))
        throw ShapeError("EvalPair: prediction " + pair.prediction.shape_str() +
                         " vs ground truth " + pair.ground_truth.shape_str());
    if (pair.prediction.c != 1 || pair.prediction.n != 1)
        throw ShapeError("EvalPair: expected one single-channel map, got " +
                         pair.prediction.shape_str());
    for (double v : pair.ground_truth.data)
        if (v != 0.0 && v != 1.0)
            throw ShapeError("EvalPair: ground truth must be binary, found " +
                             std::to_string(v));
}

static double threshold_value(int t) { return (t + 0.5) / 256.0; }

double mae(const EvalPair& pair) {
    validate_eval_pair(pair);
    double total = 0.0;
    for (std::size_t i = 0; i < pair.prediction.size(); ++i)
        total += std::fabs(pair.prediction.data[i] - pair.ground_truth.data[i]);
    return total / static_cast<double>(pair.prediction.size());
}

CurveReport pr_and_f_curves(const std::vector<EvalPair>& pairs) {
    if (pairs.empty()) throw ConfigError("pr_and_f_curves: empty dataset");
    for (const EvalPair& p : pairs) validate_eval_pair(p);
    CurveReport rep;
    for (int t = 0; t < kThresholds; ++t) {
        const double thr = threshold_value(t);
        double psum = 0.0, rsum = 0.0;
        for (const EvalPair& p : pairs) {
            long long tp = 0, pred_pos = 0, gt_pos = 0;
            for (std::size_t i = 0; i < p.prediction.size(); ++i) {
                const bool pred = p.prediction.data[i] >= thr;
                const bool gt = p.ground_truth.data[i] != 0.0;
                pred_pos += pred;
                gt_pos += gt;
                tp += pred && gt;
            }
            const double prec = pred_pos > 0 ? static_cast<double>(tp) / pred_pos
                                             : (gt_pos == 0 ? 1.0 : 0.0);
            const double rec = gt_pos > 0 ? static_cast<double>(tp) / gt_pos : 1.0;
            psum += prec;
            rsum += rec;
        }
        PrPoint& pt = rep.curve[t];
        pt.precision = psum / pairs.size();
        pt.recall = rsum / pairs.size();
        const double denom = kFBetaSq * pt.precision + pt.recall;
        pt.f = denom > 0 ? (1.0 + kFBetaSq) * pt.precision * pt.recall / denom : 0.0;
        if (pt.f > rep.max_f) {
            rep.max_f = pt.f;
            rep.max_f_threshold = t;
        }
    }
    return rep;
}

double e_measure(const EvalPair& pair) {
    validate_eval_pair(pair);
    const std::size_t count = pair.prediction.size();
    long long gt_pos = 0;
    for (double v : pair.ground_truth.data) gt_pos += v != 0.0;
    const double gt_mean = static_cast<double>(gt_pos) / count;
    double best = 0.0;
    for (int t = 0; t < kThresholds; ++t) {
        const double thr = threshold_value(t);
        long long pred_pos = 0;
        for (std::size_t i = 0; i < count; ++i) pred_pos += pair.prediction.data[i] >= thr;
        const double pred_mean = static_cast<double>(pred_pos) / count;
        double score;
        if (gt_pos == static_cast<long long>(count)) {
            score = pred_mean;
        } else if (gt_pos == 0) {
            score = 1.0 - pred_mean;
        } else {
            double sum = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                const double xs = (pair.prediction.data[i] >= thr ? 1.0 : 0.0) - pred_mean;
                const double xg = pair.ground_truth.data[i] - gt_mean;
                const double align = 2.0 * xs * xg / (xs * xs + xg * xg + 1e-20);
                sum += (1.0 + align) * (1.0 + align) / 4.0;
            }
            score = sum / count;
        }
        best = std::max(best, score);
    }
    return best;
}

namespace {

// Windowless SSIM over one region; the region-similarity building block.
double region_ssim(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n == 0) return 1.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double div = n > 1 ? static_cast<double>(n - 1) : 1.0;
    sxx /= div;
    syy /= div;
    sxy /= div;
    const double alpha = 4.0 * mx * my * sxy;
    const double beta = (mx * mx + my * my) * (sxx + syy);
    if (alpha != 0.0) return alpha / (beta + 1e-20);
    return beta == 0.0 ? 1.0 : 0.0;
}

double object_score(const std::vector<double>& region) {
    if (region.empty()) return 0.0;
    double mean = 0.0;
    for (double v : region) mean += v;
    mean /= region.size();
    double var = 0.0;
    for (double v : region) var += (v - mean) * (v - mean);
    const double sd = region.size() > 1 ? std::sqrt(var / (region.size() - 1)) : 0.0;
    return 2.0 * mean / (mean * mean + 1.0 + sd + 1e-20);
}

}  // namespace

double s_measure(const EvalPair& pair) {
    validate_eval_pair(pair);
    const Tensor& S = pair.prediction;
    const Tensor& G = pair.ground_truth;
    const std::size_t count = S.size();
    long long fg = 0;
    for (double v : G.data) fg += v != 0.0;
    double s_mean = 0.0;
    for (double v : S.data) s_mean += v;
    s_mean /= count;
    if (fg == 0) return 1.0 - s_mean;
    if (fg == static_cast<long long>(count)) return s_mean;

    // Object similarity: foreground and background statistics weighted by the
    // foreground ratio.
    const double mu = static_cast<double>(fg) / count;
    std::vector<double> fg_vals, bg_vals;
    fg_vals.reserve(fg);
    bg_vals.reserve(count - fg);
    for (std::size_t i = 0; i < count; ++i) {
        if (G.data[i] != 0.0)
            fg_vals.push_back(S.data[i]);
        else
            bg_vals.push_back(1.0 - S.data[i]);
    }
    const double s_o = mu * object_score(fg_vals) + (1.0 - mu) * object_score(bg_vals);

    // Region similarity: split both maps into 4 quadrants at the GT centroid,
    // windowless SSIM per quadrant, weighted by GT-area share.
    double cy = 0.0, cx = 0.0;
    for (int y = 0; y < G.h; ++y)
        for (int x = 0; x < G.w; ++x)
            if (G.at(0, 0, y, x) != 0.0) {
                cy += y;
                cx += x;
            }
    const int qy = static_cast<int>(std::round(cy / fg)) + 1;  // quadrant boundary
    const int qx = static_cast<int>(std::round(cx / fg)) + 1;
    double s_r = 0.0;
    const std::array<std::pair<std::pair<int, int>, std::pair<int, int>>, 4> quads = {{
        {{0, qy}, {0, qx}},
        {{0, qy}, {qx, G.w}},
        {{qy, G.h}, {0, qx}},
        {{qy, G.h}, {qx, G.w}},
    }};
    for (const auto& q : quads) {
        std::vector<double> sv, gv;
        long long qfg = 0;
        for (int y = q.first.first; y < std::min(q.first.second, G.h); ++y)
            for (int x = q.second.first; x < std::min(q.second.second, G.w); ++x) {
                sv.push_back(S.at(0, 0, y, x));
                gv.push_back(G.at(0, 0, y, x));
                qfg += G.at(0, 0, y, x) != 0.0;
            }
        const double weight = static_cast<double>(qfg) / fg;
        s_r += weight * region_ssim(sv, gv);
    }
    const double alpha = 0.5;
    double sm = alpha * s_r + (1.0 - alpha) * s_o;
    return std::clamp(sm, 0.0, 1.0);
}

MetricsReport evaluate_pairs(const std::vector<EvalPair>& pairs) {
    if (pairs.empty()) throw ConfigError("evaluate_pairs: empty dataset");
    MetricsReport rep;
    rep.image_count = static_cast<int>(pairs.size());
    double mae_sum = 0.0, e_sum = 0.0, s_sum = 0.0;
    for (const EvalPair& p : pairs) {
        mae_sum += mae(p);
        e_sum += e_measure(p);
        s_sum += s_measure(p);
    }
    rep.mae = mae_sum / pairs.size();
    rep.max_e = e_sum / pairs.size();
    rep.s_m = s_sum / pairs.size();
    CurveReport curves = pr_and_f_curves(pairs);
    rep.curve = curves.curve;
    rep.max_f = curves.max_f;
    rep.max_f_threshold = curves.max_f_threshold;
    return rep;
}

}  // namespace lmf
