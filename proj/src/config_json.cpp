#include <fstream>

#include "lmf/config_json.hpp"

namespace lmf {

using nlohmann::json;

namespace {

std::string resample_name(Resample r) {
    switch (r) {
        case Resample::None: return "none";
        case Resample::Pool: return "pool";
        default: return "upsample";
    }
}

Resample resample_from(const std::string& s) {
    if (s == "none") return Resample::None;
    if (s == "pool") return Resample::Pool;
    if (s == "upsample") return Resample::Upsample;
    throw ConfigError("unknown resample mode '" + s + "'");
}

json layer_to_json(const LMFConfig& cfg) {
    return json{{"dilations", cfg.dilations}, {"input_maps", cfg.input_maps},
                {"c_in", cfg.c_in},           {"c_out", cfg.c_out},
                {"kernel", cfg.kernel},       {"resample", resample_name(cfg.resample)}};
}

LMFConfig layer_from_json(const json& j) {
    LMFConfig cfg;
    if (!j.contains("dilations") || !j["dilations"].is_array())
        throw ConfigError("layer config: missing dilation list");
    cfg.dilations = j["dilations"].get<std::vector<int>>();
    cfg.input_maps = j.value("input_maps", 1);
    cfg.c_in = j.value("c_in", 1);
    cfg.c_out = j.value("c_out", cfg.c_in);
    cfg.kernel = j.value("kernel", 3);
    cfg.resample = resample_from(j.value("resample", "none"));
    return cfg;
}

}  // namespace

json network_config_to_json(const NetworkConfig& cfg) {
    json j;
    j["input_h"] = cfg.input_h;
    j["input_w"] = cfg.input_w;
    j["head"] = cfg.head == HeadKind::Saliency ? "saliency" : "classifier";
    j["num_classes"] = cfg.num_classes;
    j["hidden_width"] = cfg.hidden_width;
    j["encoder"] = json::array();
    for (const LMFConfig& l : cfg.encoder) j["encoder"].push_back(layer_to_json(l));
    if (cfg.head == HeadKind::Saliency) {
        j["fusion_i"] = {layer_to_json(cfg.fusion_i_pool), layer_to_json(cfg.fusion_i_up)};
        j["fusion_l"] = {layer_to_json(cfg.fusion_l_pool), layer_to_json(cfg.fusion_l_up)};
        j["decoder"] = json::array();
        for (const LMFConfig& l : cfg.decoder) j["decoder"].push_back(layer_to_json(l));
    }
    return j;
}

NetworkConfig network_config_from_json(const json& j) {
    NetworkConfig cfg;
    cfg.input_h = j.value("input_h", 256);
    cfg.input_w = j.value("input_w", 256);
    const std::string head = j.value("head", "saliency");
    if (head == "saliency")
        cfg.head = HeadKind::Saliency;
    else if (head == "classifier")
        cfg.head = HeadKind::Classifier;
    else
        throw ConfigError("unknown head '" + head + "'");
    cfg.num_classes = j.value("num_classes", 10);
    cfg.hidden_width = j.value("hidden_width", 128);
    if (!j.contains("encoder") || !j["encoder"].is_array())
        throw ConfigError("network config: missing encoder stage list");
    for (const json& l : j["encoder"]) cfg.encoder.push_back(layer_from_json(l));
    if (cfg.head == HeadKind::Saliency) {
        auto pair_from = [](const json& arr, const char* name) {
            if (!arr.is_array() || arr.size() != 2)
                throw ConfigError(std::string("network config: ") + name +
                                  " must hold exactly a pool and an upsample layer");
            return std::pair<LMFConfig, LMFConfig>(layer_from_json(arr[0]),
                                                   layer_from_json(arr[1]));
        };
        if (!j.contains("fusion_i") || !j.contains("fusion_l") || !j.contains("decoder"))
            throw ConfigError("network config: saliency head needs fusion_i, fusion_l, decoder");
        std::tie(cfg.fusion_i_pool, cfg.fusion_i_up) = pair_from(j["fusion_i"], "fusion_i");
        std::tie(cfg.fusion_l_pool, cfg.fusion_l_up) = pair_from(j["fusion_l"], "fusion_l");
        for (const json& l : j["decoder"]) cfg.decoder.push_back(layer_from_json(l));
    }
    finalize_config(cfg);
    return cfg;
}

json recipe_to_json(const TrainRecipe& r) {
    json j;
    j["epochs"] = r.epochs;
    j["batch_size"] = r.batch_size;
    j["seed"] = r.seed;
    j["optimizer"] = {{"kind", to_string(r.optimizer.kind)},
                      {"lr", r.optimizer.lr},
                      {"beta1", r.optimizer.beta1},
                      {"beta2", r.optimizer.beta2},
                      {"epsilon", r.optimizer.epsilon},
                      {"momentum", r.optimizer.momentum},
                      {"weight_decay", r.optimizer.weight_decay}};
    j["schedule"] = {{"kind", to_string(r.optimizer.schedule.kind)},
                     {"gamma", r.optimizer.schedule.gamma},
                     {"factor", r.optimizer.schedule.factor},
                     {"milestones", r.optimizer.schedule.milestones}};
    j["loss"] = {{"bce", r.loss.bce}, {"ssim", r.loss.ssim}, {"iou", r.loss.iou}};
    j["augment"] = {{"enabled", r.augment.enabled},
                    {"hflip_prob", r.augment.hflip_prob},
                    {"brightness_delta", r.augment.brightness_delta},
                    {"contrast_min", r.augment.contrast_min},
                    {"contrast_max", r.augment.contrast_max},
                    {"crop_min", r.augment.crop_min},
                    {"crop_max", r.augment.crop_max}};
    return j;
}

TrainRecipe recipe_from_json(const json& j) {
    TrainRecipe r;
    r.epochs = j.value("epochs", 1);
    r.batch_size = j.value("batch_size", 4);
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        r.optimizer.kind = optimizer_kind_from_string(o.value("kind", "adam"));
        r.optimizer.lr = o.value("lr", 1e-3);
        r.optimizer.beta1 = o.value("beta1", 0.9);
        r.optimizer.beta2 = o.value("beta2", 0.999);
        r.optimizer.epsilon = o.value("epsilon", 1e-8);
        r.optimizer.momentum = o.value("momentum", 0.9);
        r.optimizer.weight_decay = o.value("weight_decay", 1e-4);
    }
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        r.optimizer.schedule.kind = schedule_kind_from_string(s.value("kind", "constant"));
        r.optimizer.schedule.gamma = s.value("gamma", 0.98);
        r.optimizer.schedule.factor = s.value("factor", 0.2);
        r.optimizer.schedule.milestones = s.value("milestones", std::vector<int>{});
    }
    if (j.contains("loss")) {
        const json& l = j["loss"];
        r.loss.bce = l.value("bce", true);
        r.loss.ssim = l.value("ssim", true);
        r.loss.iou = l.value("iou", true);
        if (!r.loss.bce && !r.loss.ssim && !r.loss.iou)
            throw ConfigError("recipe: at least one loss component must be enabled");
    }
    if (j.contains("augment")) {
        const json& a = j["augment"];
        r.augment.enabled = a.value("enabled", true);
        r.augment.hflip_prob = a.value("hflip_prob", 0.5);
        r.augment.brightness_delta = a.value("brightness_delta", 0.2);
        r.augment.contrast_min = a.value("contrast_min", 0.8);
        r.augment.contrast_max = a.value("contrast_max", 1.25);
        r.augment.crop_min = a.value("crop_min", 0.8);
        r.augment.crop_max = a.value("crop_max", 1.0);
    }
    return r;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

void save_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

NetworkConfig resolve_network_config(const std::string& name_or_path) {
    if (name_or_path == "sod-default") return default_sod_config();
    if (name_or_path == "sod-small") return default_sod_config_scaled(0.78);
    if (name_or_path == "sod-large") return default_sod_config_scaled(1.26);
    if (name_or_path == "sod-tiny") return tiny_sod_config();
    if (name_or_path == "cls-default") return default_classifier_config();
    if (name_or_path == "cls-wide") return wide_classifier_config();
    if (name_or_path == "cls-tiny") return tiny_classifier_config();
    return network_config_from_json(load_json_file(name_or_path));
}

}  // namespace lmf
