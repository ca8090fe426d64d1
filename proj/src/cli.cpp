#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "lmf/analysis.hpp"
#include "lmf/checkpoint.hpp"
#include "lmf/cli.hpp"
#include "lmf/config_json.hpp"
#include "lmf/gradcheck.hpp"
#include "lmf/metrics.hpp"
#include "lmf/train.hpp"

namespace lmf {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitGridding = 2;
constexpr int kExitNumerical = 3;

void apply_thread_settings(int cli_threads) {
    int threads = 0;
    if (const char* env = std::getenv("LMF_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 0) threads = static_cast<int>(v);
    }
    if (cli_threads > 0) threads = cli_threads;
    set_max_threads(threads);
}

json analysis_to_json(const AnalysisReport& rep) {
    json j;
    j["receptive_field"] = {{"variant_a", rep.rf.variant_a}, {"variant_b", rep.rf.variant_b}};
    json pairs = json::array();
    for (const GriddingPair& p : rep.gridding.pairs)
        pairs.push_back({{"first_layer", p.first_layer},
                         {"kernel", p.kernel_first},
                         {"dilation_first", p.dilation_first},
                         {"dilation_second", p.dilation_second},
                         {"ratio", p.ratio},
                         {"pass", p.pass},
                         {"gaps", p.gaps}});
    j["gridding"] = {{"pairs", pairs},
                     {"stack_gaps", rep.gridding.stack_gaps},
                     {"all_pass", rep.gridding.all_pass}};
    j["params"] = rep.params;
    j["flops"] = {{"macs", rep.flops.macs},
                  {"elementwise", rep.flops.elementwise},
                  {"total", rep.flops.flops()}};
    j["schedule_flags"] = rep.schedule_flags;
    return j;
}

json metrics_to_json(const MetricsReport& rep, bool full_curve) {
    json j;
    j["mae"] = rep.mae;
    j["max_f"] = rep.max_f;
    j["max_f_threshold"] = rep.max_f_threshold;
    j["max_e"] = rep.max_e;
    j["s_measure"] = rep.s_m;
    j["image_count"] = rep.image_count;
    if (full_curve) {
        json curve = json::array();
        for (const PrPoint& p : rep.curve)
            curve.push_back({{"precision", p.precision}, {"recall", p.recall}, {"f", p.f}});
        j["curve"] = curve;
    }
    return j;
}

int cmd_analyze(const std::string& config, bool strict) {
    const NetworkConfig cfg = resolve_network_config(config);
    const AnalysisReport rep = analyze_network(cfg);
    std::cout << analysis_to_json(rep).dump(2) << "\n";
    if (strict && !rep.gridding.all_pass) {
        std::cerr << "gridding rule violated\n";
        return kExitGridding;
    }
    return kExitOk;
}

TrainRecipe load_recipe(const std::string& path) {
    if (path.empty()) return TrainRecipe{};
    return recipe_from_json(load_json_file(path));
}

int cmd_train(const std::string& config, const std::string& recipe_path,
              const std::string& images, const std::string& masks, const std::string& cifar,
              int classes, const std::string& out, std::uint64_t seed_override, bool has_seed) {
    NetworkConfig cfg = resolve_network_config(config);
    TrainRecipe recipe = load_recipe(recipe_path);
    if (has_seed) recipe.seed = seed_override;
    LmfNet net = build_network(cfg, recipe.seed);

    TrainHistory hist;
    if (cfg.head == HeadKind::Saliency) {
        if (images.empty() || masks.empty())
            throw ConfigError("saliency training needs --images and --masks");
        std::vector<std::string> warnings;
        const int channels = cfg.encoder.at(0).c_in;
        std::vector<SodSample> data =
            load_sod_dataset(images, masks, cfg.input_h, cfg.input_w, channels, &warnings);
        for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
        std::cerr << "training on " << data.size() << " pairs\n";
        hist = train_sod(net, data, recipe, &std::cerr);
    } else {
        if (cifar.empty()) throw ConfigError("classifier training needs --cifar");
        std::vector<CifarRecord> data = load_cifar(cifar, classes);
        std::cerr << "training on " << data.size() << " records\n";
        hist = train_classifier(net, data, recipe, &std::cerr);
    }
    if (!out.empty()) save_checkpoint(net, out);

    json j;
    j["steps"] = hist.steps;
    j["epochs"] = json::array();
    for (const EpochStats& e : hist.epochs) {
        json je = {{"epoch", e.epoch}, {"loss", e.mean_loss}, {"lr", e.lr}};
        if (e.accuracy >= 0.0) je["accuracy"] = e.accuracy;
        j["epochs"].push_back(je);
    }
    if (!out.empty()) j["checkpoint"] = out;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& ckpt, const std::string& input, const std::string& output) {
    LmfNet net = load_checkpoint(ckpt);
    if (net.config().head != HeadKind::Saliency)
        throw ConfigError("predict needs a saliency checkpoint");
    const NetworkConfig& cfg = net.config();
    const ImageRecord rec = load_image(input);
    const Tensor resized = resize_bilinear(to_channels(rec.pixels, cfg.encoder.at(0).c_in),
                                           cfg.input_h, cfg.input_w);
    Tensor map = net.forward_eval(resized);
    if (!all_finite(map)) throw NumericalError("prediction contains non-finite values");
    map = resize_bilinear(map, rec.pixels.h, rec.pixels.w);
    save_image(map, output);
    double lo = 1.0, hi = 0.0, mean = 0.0;
    for (double v : map.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        mean += v;
    }
    mean /= static_cast<double>(map.size());
    json j = {{"input", input}, {"output", output},
              {"height", map.h}, {"width", map.w},
              {"min", lo},       {"max", hi},
              {"mean", mean}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& preds, const std::string& masks, const std::string& ckpt,
             const std::string& images, bool full_curve) {
    std::vector<EvalPair> pairs;
    if (!ckpt.empty()) {
        if (images.empty() || masks.empty())
            throw ConfigError("checkpoint evaluation needs --images and --masks");
        LmfNet net = load_checkpoint(ckpt);
        if (net.config().head != HeadKind::Saliency)
            throw ConfigError("eval needs a saliency checkpoint");
        const NetworkConfig& cfg = net.config();
        std::vector<std::string> warnings;
        std::vector<SodSample> data = load_sod_dataset(images, masks, cfg.input_h, cfg.input_w,
                                                       cfg.encoder.at(0).c_in, &warnings);
        for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
        for (const SodSample& s : data) {
            EvalPair p;
            p.prediction = net.forward_eval(s.image);
            p.ground_truth = s.mask;
            pairs.push_back(std::move(p));
        }
    } else {
        if (preds.empty() || masks.empty())
            throw ConfigError("eval needs either --preds and --masks, or --checkpoint");
        SodPairing pairing = pair_sod_dataset(preds, masks);
        for (const std::string& w : pairing.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& [pred_path, mask_path] : pairing.pairs) {
            EvalPair p;
            const ImageRecord rec = load_image(pred_path);
            p.prediction = to_channels(rec.pixels, 1);
            Tensor mask = load_mask(mask_path);
            if (mask.h != p.prediction.h || mask.w != p.prediction.w)
                mask = resize_bilinear(mask, p.prediction.h, p.prediction.w);
            for (double& v : mask.data) v = v >= 0.5 ? 1.0 : 0.0;
            p.ground_truth = std::move(mask);
            pairs.push_back(std::move(p));
        }
    }
    const MetricsReport rep = evaluate_pairs(pairs);
    std::cout << metrics_to_json(rep, full_curve).dump(2) << "\n";
    return kExitOk;
}

int cmd_gradcheck(const std::string& config, double tol, std::uint64_t seed) {
    NetworkConfig cfg = resolve_network_config(config);
    LmfNet net = build_network(cfg, seed);
    Rng rng(seed + 1);
    GradCheckResult result;
    if (cfg.head == HeadKind::Saliency) {
        Tensor input(1, cfg.encoder.at(0).c_in, cfg.input_h, cfg.input_w);
        for (double& v : input.data) v = rng.uniform();
        Tensor target(1, 1, cfg.input_h, cfg.input_w);
        for (double& v : target.data) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
        result = gradcheck_sod(net, input, target);
    } else {
        Tensor input(2, cfg.encoder.at(0).c_in, cfg.input_h, cfg.input_w);
        for (double& v : input.data) v = rng.uniform();
        std::vector<int> labels = {static_cast<int>(rng.below(cfg.num_classes)),
                                   static_cast<int>(rng.below(cfg.num_classes))};
        result = gradcheck_classifier(net, input, labels);
    }
    json j = {{"checked", result.checked},
              {"max_abs_err", result.max_abs_err},
              {"max_rel_err", result.max_rel_err},
              {"worst_param", result.worst_param},
              {"tolerance", tol},
              {"pass", result.pass(tol)}};
    std::cout << j.dump(2) << "\n";
    if (!result.pass(tol)) {
        std::cerr << "gradient check failed: max relative error " << result.max_rel_err << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Lightweight multi-scale feature network toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker thread count (overrides LMF_THREADS)");
    // Let `lmf <subcommand> --threads N` reach the global option.
    app.fallthrough();

    auto* analyze = app.add_subcommand("analyze", "receptive field / gridding / cost report");
    std::string an_config = "sod-default";
    bool an_strict = false;
    analyze->add_option("--config", an_config, "named config or JSON path");
    analyze->add_flag("--strict", an_strict, "exit 2 when the gridding rule fails");

    auto* train = app.add_subcommand("train", "train a network");
    std::string tr_config = "sod-tiny", tr_recipe, tr_images, tr_masks, tr_cifar, tr_out;
    int tr_classes = 10;
    std::uint64_t tr_seed = 0;
    bool tr_has_seed = false;
    train->add_option("--config", tr_config, "named config or JSON path");
    train->add_option("--recipe", tr_recipe, "training recipe JSON");
    train->add_option("--images", tr_images, "saliency image directory");
    train->add_option("--masks", tr_masks, "saliency mask directory");
    train->add_option("--cifar", tr_cifar, "CIFAR binary batch file");
    train->add_option("--classes", tr_classes, "CIFAR class count (10 or 100)");
    train->add_option("--out", tr_out, "checkpoint output path");
    train->add_option("--seed", tr_seed, "override recipe seed")
        ->each([&](const std::string&) { tr_has_seed = true; });

    auto* predict = app.add_subcommand("predict", "run a checkpoint on one image");
    std::string pr_ckpt, pr_input, pr_output;
    predict->add_option("--checkpoint", pr_ckpt, "checkpoint path")->required();
    predict->add_option("--input", pr_input, "input image (PGM/PPM)")->required();
    predict->add_option("--output", pr_output, "output saliency map (PGM)")->required();

    auto* evalc = app.add_subcommand("eval", "saliency metrics over a dataset");
    std::string ev_preds, ev_masks, ev_ckpt, ev_images;
    bool ev_curve = false;
    evalc->add_option("--preds", ev_preds, "predicted-map directory");
    evalc->add_option("--masks", ev_masks, "ground-truth mask directory");
    evalc->add_option("--checkpoint", ev_ckpt, "evaluate a checkpoint instead of stored maps");
    evalc->add_option("--images", ev_images, "image directory (with --checkpoint)");
    evalc->add_flag("--curve", ev_curve, "emit the full 256-point PR curve");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    std::string gc_config = "sod-tiny";
    double gc_tol = 1e-4;
    std::uint64_t gc_seed = 7;
    gradcheck->add_option("--config", gc_config, "named config or JSON path");
    gradcheck->add_option("--tol", gc_tol, "max relative error allowed");
    gradcheck->add_option("--seed", gc_seed, "init / probe seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    apply_thread_settings(threads);
    try {
        if (analyze->parsed()) return cmd_analyze(an_config, an_strict);
        if (train->parsed())
            return cmd_train(tr_config, tr_recipe, tr_images, tr_masks, tr_cifar, tr_classes,
                             tr_out, tr_seed, tr_has_seed);
        if (predict->parsed()) return cmd_predict(pr_ckpt, pr_input, pr_output);
        if (evalc->parsed()) return cmd_eval(ev_preds, ev_masks, ev_ckpt, ev_images, ev_curve);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_config, gc_tol, gc_seed);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace lmf
