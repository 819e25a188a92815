#include "coc/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "coc/error.hpp"

namespace coc::cli {

using json = nlohmann::ordered_json;

void PipelineConfig::validate() const {
    diffusion.validate();
    snake.validate();
    region_grow.validate();
    forest.validate();
    if (!(features.log_sigma_small > 0.0) || !(features.log_sigma_large > 0.0))
        fail(errc::invalid_config, "LoG sigmas must be > 0");
    if (!(features.haar_window_factor > 0.0))
        fail(errc::invalid_config, "Haar window factor must be > 0");
    if (synth.side < 128) fail(errc::invalid_config, "synth side must be >= 128");
    if (!(synth.contrast > 0.0) || synth.contrast > 1.0)
        fail(errc::invalid_config, "synth contrast must be in (0,1]");
    if (synth.noise_sigma < 0.0 || synth.noise_sigma > 0.1)
        fail(errc::invalid_config, "synth noise sigma must be in [0, 0.1]");
    if (per_pixel_stride < 1) fail(errc::invalid_config, "per-pixel stride must be >= 1");
    if (per_pixel_window < 3 || per_pixel_window % 2 == 0)
        fail(errc::invalid_config, "per-pixel window must be odd and >= 3");
}

PipelineConfig default_config() { return PipelineConfig{}; }

namespace {

const char* weight_mode_name(rf::WeightMode m) {
    return m == rf::WeightMode::uniform ? "uniform" : "oob_accuracy";
}

/// Applies `fn(key, value)` for every non-underscore key and rejects keys fn
/// does not recognize.
template <class Fn>
void for_known_keys(const json& section, const std::string& where, Fn&& fn) {
    for (const auto& [key, value] : section.items()) {
        if (!key.empty() && key[0] == '_') continue;
        if (!fn(key, value))
            fail(errc::invalid_config, "unknown key '" + key + "' in " + where);
    }
}

} // namespace

std::string config_to_json(const PipelineConfig& cfg) {
    json j;
    j["_doc"] =
        "Pipeline configuration; every parameter the method leaves open. "
        "Keys starting with '_' are ignored by the loader.";

    json d;
    d["_doc"] = "Perona-Malik edge-preserving smoothing before segmentation.";
    d["iterations"] = cfg.diffusion.iterations;
    d["kappa"] = cfg.diffusion.kappa;
    d["lambda"] = cfg.diffusion.lambda;
    j["diffusion"] = d;

    json s;
    s["_doc"] =
        "Active contour for the outer boundary. Init is a centered circle of "
        "radius 0.45*min(w,h); balloon < 0 shrinks it onto the cell.";
    s["n_points"] = cfg.snake.n_points;
    s["alpha"] = cfg.snake.alpha;
    s["beta"] = cfg.snake.beta;
    s["gamma"] = cfg.snake.gamma;
    s["balloon"] = cfg.snake.balloon;
    s["sigma_ext"] = cfg.snake.sigma_ext;
    s["max_iters"] = cfg.snake.max_iters;
    s["tol"] = cfg.snake.tol;
    s["stall_iters"] = cfg.snake.stall_iters;
    j["snake"] = s;

    json r;
    r["_doc"] = "Seeded region growing for the nucleus, bounded by the outer circle.";
    r["tau"] = cfg.region_grow.tau;
    r["connectivity"] = cfg.region_grow.connectivity;
    r["seed_window"] = cfg.region_grow.seed_window;
    j["region_grow"] = r;

    json f;
    f["_doc"] = "Random forest training defaults; max_depth 0 = unbounded.";
    f["trees"] = cfg.forest.n_trees;
    f["max_depth"] = cfg.forest.max_depth;
    f["min_leaf"] = cfg.forest.min_leaf;
    f["mtry"] = cfg.forest.mtry;
    f["seed"] = cfg.forest.seed;
    f["weight_mode"] = weight_mode_name(cfg.forest.weight_mode);
    j["forest"] = f;

    json ft;
    ft["_doc"] = "Texture filter constants (part of the feature layout).";
    ft["log_sigma_small"] = cfg.features.log_sigma_small;
    ft["log_sigma_large"] = cfg.features.log_sigma_large;
    ft["haar_window_factor"] = cfg.features.haar_window_factor;
    j["features"] = ft;

    json sy;
    sy["_doc"] = "Synthetic phantom generator defaults.";
    sy["side"] = cfg.synth.side;
    sy["contrast"] = cfg.synth.contrast;
    sy["noise_sigma"] = cfg.synth.noise_sigma;
    j["synth"] = sy;

    json pl;
    pl["_doc"] =
        "apply_white_balance: gray-world correction for 3-channel inputs. "
        "per_pixel_*: sampling for the per-pixel vote mode of predict.";
    pl["apply_white_balance"] = cfg.apply_white_balance;
    pl["per_pixel_stride"] = cfg.per_pixel_stride;
    pl["per_pixel_window"] = cfg.per_pixel_window;
    j["pipeline"] = pl;

    return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(errc::invalid_config, std::string("config parse error: ") + e.what());
    }
    PipelineConfig cfg;
    try {
        for_known_keys(j, "config root", [&](const std::string& key, const json& value) {
            if (key == "diffusion") {
                for_known_keys(value, "diffusion", [&](const std::string& k, const json& v) {
                    if (k == "iterations") cfg.diffusion.iterations = v.get<int>();
                    else if (k == "kappa") cfg.diffusion.kappa = v.get<double>();
                    else if (k == "lambda") cfg.diffusion.lambda = v.get<double>();
                    else return false;
                    return true;
                });
            } else if (key == "snake") {
                for_known_keys(value, "snake", [&](const std::string& k, const json& v) {
                    if (k == "n_points") cfg.snake.n_points = v.get<int>();
                    else if (k == "alpha") cfg.snake.alpha = v.get<double>();
                    else if (k == "beta") cfg.snake.beta = v.get<double>();
                    else if (k == "gamma") cfg.snake.gamma = v.get<double>();
                    else if (k == "balloon") cfg.snake.balloon = v.get<double>();
                    else if (k == "sigma_ext") cfg.snake.sigma_ext = v.get<double>();
                    else if (k == "max_iters") cfg.snake.max_iters = v.get<int>();
                    else if (k == "tol") cfg.snake.tol = v.get<double>();
                    else if (k == "stall_iters") cfg.snake.stall_iters = v.get<int>();
                    else return false;
                    return true;
                });
            } else if (key == "region_grow") {
                for_known_keys(value, "region_grow", [&](const std::string& k, const json& v) {
                    if (k == "tau") cfg.region_grow.tau = v.get<double>();
                    else if (k == "connectivity") cfg.region_grow.connectivity = v.get<int>();
                    else if (k == "seed_window") cfg.region_grow.seed_window = v.get<int>();
                    else return false;
                    return true;
                });
            } else if (key == "forest") {
                for_known_keys(value, "forest", [&](const std::string& k, const json& v) {
                    if (k == "trees") cfg.forest.n_trees = v.get<int>();
                    else if (k == "max_depth") cfg.forest.max_depth = v.get<int>();
                    else if (k == "min_leaf") cfg.forest.min_leaf = v.get<int>();
                    else if (k == "mtry") cfg.forest.mtry = v.get<int>();
                    else if (k == "seed") cfg.forest.seed = v.get<std::uint64_t>();
                    else if (k == "weight_mode") {
                        const std::string mode = v.get<std::string>();
                        if (mode == "uniform")
                            cfg.forest.weight_mode = rf::WeightMode::uniform;
                        else if (mode == "oob_accuracy")
                            cfg.forest.weight_mode = rf::WeightMode::oob_accuracy;
                        else
                            fail(errc::invalid_config, "unknown weight_mode '" + mode + "'");
                    } else return false;
                    return true;
                });
            } else if (key == "features") {
                for_known_keys(value, "features", [&](const std::string& k, const json& v) {
                    if (k == "log_sigma_small") cfg.features.log_sigma_small = v.get<double>();
                    else if (k == "log_sigma_large") cfg.features.log_sigma_large = v.get<double>();
                    else if (k == "haar_window_factor")
                        cfg.features.haar_window_factor = v.get<double>();
                    else return false;
                    return true;
                });
            } else if (key == "synth") {
                for_known_keys(value, "synth", [&](const std::string& k, const json& v) {
                    if (k == "side") cfg.synth.side = v.get<int>();
                    else if (k == "contrast") cfg.synth.contrast = v.get<double>();
                    else if (k == "noise_sigma") cfg.synth.noise_sigma = v.get<double>();
                    else return false;
                    return true;
                });
            } else if (key == "pipeline") {
                for_known_keys(value, "pipeline", [&](const std::string& k, const json& v) {
                    if (k == "apply_white_balance") cfg.apply_white_balance = v.get<bool>();
                    else if (k == "per_pixel_stride") cfg.per_pixel_stride = v.get<int>();
                    else if (k == "per_pixel_window") cfg.per_pixel_window = v.get<int>();
                    else return false;
                    return true;
                });
            } else {
                return false;
            }
            return true;
        });
    } catch (const json::exception& e) {
        fail(errc::invalid_config, std::string("config schema error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

} // namespace coc::cli
