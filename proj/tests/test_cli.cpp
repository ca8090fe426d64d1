#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "lmf/analysis.hpp"
#include "lmf/config_json.hpp"
#include "helpers.hpp"

using namespace lmf;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

RunResult run_cli(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path();
    const auto out = dir / ("lmf_cli_out_" + std::to_string(counter));
    const auto err = dir / ("lmf_cli_err_" + std::to_string(counter));
    ++counter;
    const std::string cmd = env + (env.empty() ? "" : " ") + LMF_CLI_PATH + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// Single-stage classifier small enough for a fast end-to-end gradient check.
NetworkConfig micro_classifier() {
    NetworkConfig cfg;
    cfg.input_h = cfg.input_w = 8;
    cfg.head = HeadKind::Classifier;
    cfg.num_classes = 3;
    cfg.hidden_width = 6;
    LMFConfig stage;
    stage.dilations = {1, 2};
    stage.kernel = 3;
    stage.c_out = 4;
    cfg.encoder.push_back(stage);
    finalize_config(cfg);
    return cfg;
}

}  // namespace

TEST_CASE("network config survives a json round trip") {
    for (const NetworkConfig& cfg : {tiny_sod_config(64), tiny_classifier_config(10)}) {
        const NetworkConfig back = network_config_from_json(network_config_to_json(cfg));
        CHECK(back.input_h == cfg.input_h);
        CHECK(back.head == cfg.head);
        REQUIRE(back.encoder.size() == cfg.encoder.size());
        for (std::size_t i = 0; i < cfg.encoder.size(); ++i) {
            CHECK(back.encoder[i].dilations == cfg.encoder[i].dilations);
            CHECK(back.encoder[i].c_out == cfg.encoder[i].c_out);
            CHECK(back.encoder[i].resample == cfg.encoder[i].resample);
        }
        CHECK(analytic_param_count(back) == analytic_param_count(cfg));
    }
    CHECK_THROWS_AS(network_config_from_json(json{{"head", "segmentation"}}), ConfigError);
    CHECK_THROWS_AS(network_config_from_json(json{{"head", "saliency"}}), ConfigError);
}

TEST_CASE("training recipe survives a json round trip and validates the loss set") {
    TrainRecipe r;
    r.epochs = 17;
    r.batch_size = 3;
    r.seed = 99;
    r.optimizer.kind = OptimizerKind::SgdMomentum;
    r.optimizer.lr = 0.05;
    r.optimizer.schedule.kind = ScheduleKind::Multistep;
    r.optimizer.schedule.milestones = {5, 9};
    r.loss.ssim = false;
    r.augment.crop_min = 0.9;
    const TrainRecipe back = recipe_from_json(recipe_to_json(r));
    CHECK(back.epochs == 17);
    CHECK(back.batch_size == 3);
    CHECK(back.seed == 99);
    CHECK(back.optimizer.kind == OptimizerKind::SgdMomentum);
    CHECK(back.optimizer.lr == 0.05);
    CHECK(back.optimizer.schedule.milestones == std::vector<int>{5, 9});
    CHECK_FALSE(back.loss.ssim);
    CHECK(back.augment.crop_min == 0.9);

    json none = recipe_to_json(r);
    none["loss"] = {{"bce", false}, {"ssim", false}, {"iou", false}};
    CHECK_THROWS_AS(recipe_from_json(none), ConfigError);
    CHECK_THROWS_AS(load_json_file("/nonexistent/recipe.json"), IoError);
    const auto dir = testutil::scratch_dir("badjson");
    std::ofstream((dir / "broken.json").string()) << "{ not json";
    CHECK_THROWS_AS(load_json_file((dir / "broken.json").string()), ConfigError);
}

TEST_CASE("cli: analyze reports the default verdicts and exit codes") {
    const RunResult r = run_cli("analyze --config sod-default --strict");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j["gridding"]["all_pass"] == true);
    CHECK(j["gridding"]["stack_gaps"].empty());
    CHECK(j["params"].get<long long>() >= 730000);
    CHECK(j["params"].get<long long>() <= 890000);
    CHECK(j["flops"]["total"].get<long long>() >= 3000000000LL);
    CHECK(j["flops"]["total"].get<long long>() <= 4600000000LL);
    CHECK(j["receptive_field"]["variant_b"].back().get<long long>() > 256);
    CHECK(j["schedule_flags"].empty());
}

TEST_CASE("cli: analyze --strict exits 2 on a gridding violation") {
    const auto dir = testutil::scratch_dir("cli_gridding");
    NetworkConfig cfg = tiny_sod_config(64);
    cfg.encoder[1].dilations = {1, 8};  // ratio 8 >= entry kernel 5
    const std::string path = (dir / "steep.json").string();
    save_json_file(network_config_to_json(cfg), path);

    const RunResult lax = run_cli("analyze --config " + path);
    CHECK(lax.exit_code == 0);
    CHECK(json::parse(lax.out)["gridding"]["all_pass"] == false);
    const RunResult strict = run_cli("analyze --config " + path + " --strict");
    CHECK(strict.exit_code == 2);
}

TEST_CASE("cli: usage errors exit 1") {
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("frobnicate").exit_code == 1);
    CHECK(run_cli("analyze --config /nonexistent.json").exit_code == 1);
    CHECK(run_cli("predict --checkpoint /missing.lmfc --input a.pgm --output b.pgm").exit_code ==
          1);
    CHECK(run_cli("train --config sod-tiny").exit_code == 1);  // no data arguments
}

TEST_CASE("cli: train, predict and eval round trip on a small fixture") {
    const auto dir = testutil::scratch_dir("cli_flow");
    auto fx = testutil::make_sod_fixture(4, 64, 111);
    testutil::write_sod_fixture(fx, dir);

    TrainRecipe recipe;
    recipe.epochs = 2;
    recipe.batch_size = 2;
    recipe.optimizer.lr = 5e-3;
    recipe.augment.enabled = false;
    recipe.seed = 4;
    const std::string recipe_path = (dir / "recipe.json").string();
    save_json_file(recipe_to_json(recipe), recipe_path);

    const std::string ckpt = (dir / "net.lmfc").string();
    const std::string train_args = "train --config sod-tiny --recipe " + recipe_path +
                                   " --images " + (dir / "images").string() + " --masks " +
                                   (dir / "masks").string() + " --out " + ckpt;
    const RunResult tr = run_cli(train_args);
    REQUIRE(tr.exit_code == 0);
    const json tj = json::parse(tr.out);
    REQUIRE(tj["epochs"].size() == 2);
    CHECK(tj["steps"] == 4);
    CHECK(tj["checkpoint"] == ckpt);
    CHECK(std::filesystem::exists(ckpt));

    // Re-running the same recipe reproduces the loss history bit for bit.
    const RunResult tr2 = run_cli(train_args);
    REQUIRE(tr2.exit_code == 0);
    CHECK(json::parse(tr2.out)["epochs"] == tj["epochs"]);

    const std::string pred = (dir / "pred.pgm").string();
    const RunResult pr = run_cli("predict --checkpoint " + ckpt + " --input " +
                                 (dir / "images" / "s0.ppm").string() + " --output " + pred);
    REQUIRE(pr.exit_code == 0);
    const json pj = json::parse(pr.out);
    CHECK(pj["height"] == 64);
    CHECK(pj["min"].get<double>() >= 0.0);
    CHECK(pj["max"].get<double>() <= 1.0);
    const ImageRecord out_img = load_image(pred);
    CHECK(out_img.pixels.c == 1);
    CHECK(out_img.pixels.h == 64);

    const RunResult ev = run_cli("eval --checkpoint " + ckpt + " --images " +
                                 (dir / "images").string() + " --masks " +
                                 (dir / "masks").string());
    REQUIRE(ev.exit_code == 0);
    const json ej = json::parse(ev.out);
    CHECK(ej["image_count"] == 4);
    CHECK(ej["mae"].get<double>() >= 0.0);
    CHECK(ej["mae"].get<double>() <= 1.0);

    // Feeding the ground truth back as predictions scores perfectly.
    const RunResult self = run_cli("eval --preds " + (dir / "masks").string() + " --masks " +
                                   (dir / "masks").string() + " --curve");
    REQUIRE(self.exit_code == 0);
    const json sj = json::parse(self.out);
    CHECK(sj["mae"].get<double>() == 0.0);
    CHECK(sj["max_f"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sj["s_measure"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sj["curve"].size() == 256);
}

TEST_CASE("cli: gradcheck exits 0 within tolerance and 3 beyond it") {
    const auto dir = testutil::scratch_dir("cli_gradcheck");
    const std::string path = (dir / "micro.json").string();
    save_json_file(network_config_to_json(micro_classifier()), path);

    const RunResult ok = run_cli("gradcheck --config " + path);
    REQUIRE(ok.exit_code == 0);
    const json j = json::parse(ok.out);
    CHECK(j["pass"] == true);
    CHECK(j["max_rel_err"].get<double>() < 1e-4);
    CHECK(j["checked"].get<int>() > 0);

    const RunResult fail = run_cli("gradcheck --config " + path + " --tol 1e-15");
    CHECK(fail.exit_code == 3);
    CHECK(json::parse(fail.out)["pass"] == false);
}

TEST_CASE("cli: thread settings are accepted via flag and environment") {
    CHECK(run_cli("analyze --config cls-tiny --threads 2").exit_code == 0);
    CHECK(run_cli("analyze --config cls-tiny", "LMF_THREADS=3").exit_code == 0);
}
