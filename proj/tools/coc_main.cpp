// coc: grade cumulus-oocyte complex images.
//
// Subcommands: synth, segment, features, train, predict, evaluate.
// Exit codes: 0 success, 2 validation error, 3 segmentation failure(s).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coc/config.hpp"
#include "coc/error.hpp"
#include "coc/evaluation.hpp"
#include "coc/forest.hpp"
#include "coc/image_io.hpp"
#include "coc/manifest.hpp"
#include "coc/overlay.hpp"
#include "coc/parallel.hpp"
#include "coc/pipeline.hpp"
#include "coc/synthdata.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSegmentation = 3;

struct CommonOpts {
    std::string config_path;
};

coc::cli::PipelineConfig resolve_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return coc::cli::default_config();
    return coc::cli::load_config(opts.config_path);
}

json circle_json(const coc::Circle& c) {
    return json{{"cx", c.cx}, {"cy", c.cy}, {"r", c.r}};
}

json posterior_json(const coc::rf::GradePosterior& p) {
    return json(p.p);
}

void print_prediction(const std::string& id, coc::Grade g,
                      const coc::rf::GradePosterior& post) {
    std::printf("%s\tgrade=%c\tposterior=[%.6f, %.6f, %.6f, %.6f]\n", id.c_str(),
                coc::grade_letter(g), post.p[0], post.p[1], post.p[2], post.p[3]);
}

int cmd_synth(int count_per_grade, std::uint64_t seed, const std::string& outdir,
              const CommonOpts& common) {
    const auto cfg = resolve_config(common);
    fs::create_directories(outdir);
    const auto phantoms = coc::synth::generate_corpus(count_per_grade, seed, cfg.synth.side,
                                                      cfg.synth.contrast, cfg.synth.noise_sigma);
    coc::cli::Manifest manifest;
    manifest.base_dir = outdir;
    manifest.rows.resize(phantoms.size());

    coc::parallel_for(static_cast<int>(phantoms.size()), [&](int i) {
        const auto& ph = phantoms[i];
        char name[64];
        std::snprintf(name, sizeof(name), "%c%03d", coc::grade_letter(ph.grade),
                      i % count_per_grade);
        const fs::path img_path = fs::path(outdir) / (std::string(name) + ".png");
        const fs::path cell_path = fs::path(outdir) / (std::string(name) + "_cell.png");
        const fs::path nuc_path = fs::path(outdir) / (std::string(name) + "_nucleus.png");
        coc::save_png(img_path, ph.image);
        coc::save_mask_png(cell_path, ph.cell_mask);
        coc::save_mask_png(nuc_path, ph.nucleus_mask);
        coc::cli::ManifestRow row;
        row.id = name;
        row.image_path = img_path;
        row.grade = ph.grade;
        row.cell_mask_path = cell_path;
        row.nucleus_mask_path = nuc_path;
        manifest.rows[i] = std::move(row);
    });
    const fs::path manifest_path = fs::path(outdir) / "manifest.csv";
    coc::cli::save_manifest(manifest_path, manifest);
    std::printf("wrote %zu phantoms + %s\n", phantoms.size(), manifest_path.string().c_str());
    return kExitOk;
}

int cmd_segment(const std::string& input, const std::string& out_overlay,
                const std::string& out_masks, const std::string& out_json,
                const CommonOpts& common) {
    const auto cfg = resolve_config(common);
    const coc::RasterImage img = coc::load_image(input);
    const coc::seg::Segmentation s = coc::seg::segment(img, cfg.segmentation_config());

    if (!out_overlay.empty()) coc::save_png(out_overlay, coc::cli::draw_overlay(img, s));
    if (!out_masks.empty()) {
        coc::save_mask_png(out_masks + "_cell.png", s.outer_mask);
        coc::save_mask_png(out_masks + "_nucleus.png", s.nucleus_mask);
    }
    json record;
    record["outer"] = circle_json(s.outer);
    record["nucleus"] = circle_json(s.nucleus);
    record["converged"] = s.converged;
    record["iterations_used"] = s.iterations_used;
    const std::string text = record.dump(2) + "\n";
    if (!out_json.empty()) coc::atomic_write_file(out_json, text);
    std::fputs(text.c_str(), stdout);
    return kExitOk;
}

int cmd_features(const std::string& manifest_path, const std::string& out_path,
                 const CommonOpts& common) {
    const auto cfg = resolve_config(common);
    const auto manifest = coc::cli::load_manifest(manifest_path);
    const auto outcome = coc::cli::process_manifest(manifest, cfg);

    std::vector<coc::cli::FeatureRow> rows;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        if (!outcome.results[i]) continue;
        coc::cli::FeatureRow row;
        row.id = manifest.rows[i].id;
        row.values = outcome.results[i]->features.values;
        row.grade = manifest.rows[i].grade;
        rows.push_back(std::move(row));
    }
    coc::cli::write_features_csv(out_path, rows);
    std::printf("wrote %zu feature rows to %s\n", rows.size(), out_path.c_str());
    for (const std::string& f : outcome.failures)
        std::fprintf(stderr, "segmentation failed: %s\n", f.c_str());
    return outcome.failures.empty() ? kExitOk : kExitSegmentation;
}

int cmd_train(const std::string& features_path, const std::string& out_path,
              const coc::rf::ForestParams& params, const std::string& feature_group,
              std::optional<double> train_fraction, std::uint64_t split_seed, bool mtry_given,
              const CommonOpts&) {
    auto rows = coc::cli::read_features_csv(features_path);
    if (rows.empty()) coc::fail(coc::errc::empty_training_set, "features CSV has no rows");
    for (const auto& row : rows)
        if (!row.grade)
            coc::fail(coc::errc::invalid_data, "row '" + row.id + "' has no grade");

    coc::rf::ForestParams p = params;
    if (feature_group == "texture") {
        p.feature_mask.fill(false);
        for (int f = coc::feat::kContourFeatureCount; f < coc::feat::kFeatureCount; ++f)
            p.feature_mask[f] = true;
    } else if (feature_group == "contour") {
        p.feature_mask.fill(false);
        for (int f = 0; f < coc::feat::kContourFeatureCount; ++f) p.feature_mask[f] = true;
    } else if (feature_group != "all") {
        coc::fail(coc::errc::invalid_params, "feature group must be all|texture|contour");
    }
    if (!mtry_given) {
        int allowed = 0;
        for (bool b : p.feature_mask) allowed += b ? 1 : 0;
        p.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(allowed))));
    }

    std::vector<int> selected(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) selected[i] = static_cast<int>(i);
    std::vector<std::string> train_ids;
    if (train_fraction) {
        std::vector<coc::Grade> labels;
        labels.reserve(rows.size());
        for (const auto& row : rows) labels.push_back(*row.grade);
        const auto split = coc::eval::stratified_split(labels, *train_fraction, split_seed);
        selected = split.train;
        for (int i : selected) train_ids.push_back(rows[i].id);
    }

    coc::rf::FeatureMatrix x;
    std::vector<coc::Grade> y;
    x.reserve(selected.size());
    for (int i : selected) {
        x.push_back(rows[i].values);
        y.push_back(*rows[i].grade);
    }

    coc::rf::ForestModel model = coc::rf::train(x, y, p);
    model.train_ids = std::move(train_ids);
    coc::rf::save_model(out_path, model);
    std::printf("trained %d trees on %zu samples, oob_error=%.4f -> %s\n", p.n_trees, x.size(),
                model.oob_error, out_path.c_str());

    // Display importances clamped at zero; the raw values stay in the model.
    std::printf("feature importances (negatives shown as 0):\n");
    const auto& layout = coc::feat::feature_layout();
    for (int f = 0; f < coc::feat::kFeatureCount; ++f)
        std::printf("  f%02d %-26s %.5f\n", f + 1, layout[f].name,
                    std::max(0.0, model.importances[f]));
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& manifest_path, bool per_pixel, const CommonOpts& common) {
    const auto cfg = resolve_config(common);
    const auto model = coc::rf::load_model(model_path);
    if (model.layout_version != coc::feat::kLayoutVersion)
        coc::fail(coc::errc::incompatible_model,
                  "model layout " + model.layout_version + " does not match extractor layout " +
                      coc::feat::kLayoutVersion);

    auto predict_one = [&](const std::string& id, const coc::RasterImage& img) {
        const auto result = coc::cli::process_image(img, cfg);
        if (per_pixel) {
            const auto votes = coc::cli::per_pixel_votes(img, result.segmentation, model, cfg);
            coc::rf::GradePosterior shares;
            for (coc::Grade g : votes) shares.p[static_cast<int>(g)] += 1.0;
            for (double& v : shares.p) v /= static_cast<double>(votes.size());
            print_prediction(id, coc::rf::aggregate_votes(votes), shares);
        } else {
            const auto post = coc::rf::posterior(model, result.features);
            print_prediction(id, coc::rf::assign(post), post);
        }
    };

    if (!input.empty()) {
        predict_one(input, coc::load_image(input));
        return kExitOk;
    }
    const auto manifest = coc::cli::load_manifest(manifest_path);
    int failures = 0;
    for (const auto& row : manifest.rows) {
        try {
            predict_one(row.id, coc::load_image(row.image_path));
        } catch (const coc::Error& e) {
            if (e.kind() != coc::errc::segmentation_failed &&
                e.kind() != coc::errc::degenerate_fit)
                throw;
            std::fprintf(stderr, "segmentation failed: %s: %s\n", row.id.c_str(), e.what());
            ++failures;
        }
    }
    return failures == 0 ? kExitOk : kExitSegmentation;
}

int cmd_evaluate(const std::string& model_path, const std::string& manifest_path,
                 const std::string& features_path, const std::string& out_path, bool test_only,
                 const CommonOpts& common) {
    const auto cfg = resolve_config(common);
    const auto model = coc::rf::load_model(model_path);
    if (model.layout_version != coc::feat::kLayoutVersion)
        coc::fail(coc::errc::incompatible_model,
                  "model layout does not match extractor layout");

    struct Record {
        std::string id;
        std::optional<coc::Grade> truth;
        coc::Grade predicted = coc::Grade::A;
        coc::rf::GradePosterior posterior;
        std::optional<double> dice_outer, dice_nucleus, rand_outer, rand_nucleus;
    };
    std::vector<Record> records;
    std::vector<std::string> failures;

    auto in_train = [&model](const std::string& id) {
        for (const std::string& t : model.train_ids)
            if (t == id) return true;
        return false;
    };

    if (!features_path.empty()) {
        // Precomputed features: classification metrics only.
        for (const auto& row : coc::cli::read_features_csv(features_path)) {
            if (test_only && in_train(row.id)) continue;
            Record rec;
            rec.id = row.id;
            rec.truth = row.grade;
            coc::feat::FeatureVector v;
            v.values = row.values;
            rec.posterior = coc::rf::posterior(model, v);
            rec.predicted = coc::rf::assign(rec.posterior);
            records.push_back(std::move(rec));
        }
    } else {
        coc::cli::Manifest manifest = coc::cli::load_manifest(manifest_path);
        if (test_only) {
            std::vector<coc::cli::ManifestRow> kept;
            for (auto& row : manifest.rows)
                if (!in_train(row.id)) kept.push_back(std::move(row));
            manifest.rows = std::move(kept);
        }
        const auto outcome = coc::cli::process_manifest(manifest, cfg);
        failures = outcome.failures;
        for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
            if (!outcome.results[i]) continue;
            const auto& row = manifest.rows[i];
            const auto& result = *outcome.results[i];
            Record rec;
            rec.id = row.id;
            rec.truth = row.grade;
            rec.posterior = coc::rf::posterior(model, result.features);
            rec.predicted = coc::rf::assign(rec.posterior);
            if (row.cell_mask_path) {
                const auto truth_mask = coc::load_mask_png(*row.cell_mask_path);
                rec.dice_outer = coc::eval::dice(result.segmentation.outer_mask, truth_mask);
                rec.rand_outer = coc::eval::rand_index(result.segmentation.outer_mask, truth_mask);
            }
            if (row.nucleus_mask_path) {
                const auto truth_mask = coc::load_mask_png(*row.nucleus_mask_path);
                rec.dice_nucleus = coc::eval::dice(result.segmentation.nucleus_mask, truth_mask);
                rec.rand_nucleus =
                    coc::eval::rand_index(result.segmentation.nucleus_mask, truth_mask);
            }
            records.push_back(std::move(rec));
        }
    }

    json report;
    std::vector<coc::Grade> truth, predicted;
    for (const Record& rec : records) {
        if (!rec.truth) continue;
        truth.push_back(*rec.truth);
        predicted.push_back(rec.predicted);
    }
    if (!truth.empty()) {
        const auto [cm, acc] = coc::eval::confusion_and_accuracy(truth, predicted);
        report["accuracy"] = acc;
        json rows = json::array();
        for (const auto& row : cm.m) rows.push_back(row);
        report["confusion"] = rows;
    }
    report["model_oob_error"] = model.oob_error;

    auto mean_of = [&records](std::optional<double> Record::* member) -> std::optional<double> {
        double sum = 0.0;
        int n = 0;
        for (const Record& rec : records)
            if ((rec.*member).has_value()) {
                sum += (rec.*member).value();
                ++n;
            }
        if (n == 0) return std::nullopt;
        return sum / n;
    };
    const auto dice_outer = mean_of(&Record::dice_outer);
    const auto dice_nucleus = mean_of(&Record::dice_nucleus);
    const auto rand_outer = mean_of(&Record::rand_outer);
    const auto rand_nucleus = mean_of(&Record::rand_nucleus);
    if (dice_outer || dice_nucleus) {
        json d;
        if (dice_outer) d["outer"] = *dice_outer;
        if (dice_nucleus) d["nucleus"] = *dice_nucleus;
        report["dice"] = d;
        json r;
        if (rand_outer) r["outer"] = *rand_outer;
        if (rand_nucleus) r["nucleus"] = *rand_nucleus;
        report["rand"] = r;
    }

    json per_image = json::array();
    for (const Record& rec : records) {
        json item;
        item["id"] = rec.id;
        if (rec.truth) item["true"] = std::string(1, coc::grade_letter(*rec.truth));
        item["pred"] = std::string(1, coc::grade_letter(rec.predicted));
        item["posterior"] = posterior_json(rec.posterior);
        per_image.push_back(item);
    }
    report["per_image"] = per_image;
    if (!failures.empty()) report["failures"] = failures;

    const std::string text = report.dump(2) + "\n";
    if (!out_path.empty())
        coc::atomic_write_file(out_path, text);
    else
        std::fputs(text.c_str(), stdout);
    if (report.contains("accuracy"))
        std::printf("accuracy=%.4f over %zu graded images\n",
                    report["accuracy"].get<double>(), truth.size());
    for (const std::string& f : failures)
        std::fprintf(stderr, "segmentation failed: %s\n", f.c_str());
    return failures.empty() ? kExitOk : kExitSegmentation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coc: cumulus-oocyte complex segmentation, features and grading"};
    app.require_subcommand(0, 1);

    bool print_config = false;
    app.add_flag("--print-default-config", print_config,
                 "print the annotated default configuration and exit");

    CommonOpts common;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic phantom dataset");
    int count_per_grade = 10;
    std::uint64_t synth_seed = 7;
    std::string outdir = "synth_out";
    synth->add_option("--count-per-grade", count_per_grade, "phantoms per grade")
        ->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "master seed");
    synth->add_option("--outdir", outdir, "output directory");
    synth->add_option("--config", common.config_path, "config JSON");

    // segment
    auto* segment = app.add_subcommand("segment", "segment one image");
    std::string seg_input, out_overlay, out_masks, out_json_path;
    segment->add_option("--input", seg_input, "input image (PNG/PGM/PPM)")->required();
    segment->add_option("--out-overlay", out_overlay, "overlay PNG path");
    segment->add_option("--out-masks", out_masks, "mask path prefix (suffixes _cell/_nucleus)");
    segment->add_option("--out-json", out_json_path, "write the JSON record here too");
    segment->add_option("--config", common.config_path, "config JSON");

    // features
    auto* features = app.add_subcommand("features", "segment + featurize a manifest");
    std::string manifest_path, features_out;
    features->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
    features->add_option("--out", features_out, "output features CSV")->required();
    features->add_option("--config", common.config_path, "config JSON");

    // train
    auto* train = app.add_subcommand("train", "train a random forest on a features CSV");
    std::string train_features, model_out, feature_group = "all", weight_mode = "uniform";
    coc::rf::ForestParams fp;
    double train_fraction = -1.0;
    std::uint64_t split_seed = 42;
    train->add_option("--features", train_features, "features CSV")->required();
    train->add_option("--out", model_out, "output model JSON")->required();
    train->add_option("--trees", fp.n_trees, "number of trees");
    train->add_option("--depth", fp.max_depth, "max depth (0 = unbounded)");
    train->add_option("--min-leaf", fp.min_leaf, "min samples per leaf");
    auto* mtry_opt = train->add_option("--mtry", fp.mtry, "features tried per split");
    train->add_option("--seed", fp.seed, "training seed");
    train->add_option("--weight-mode", weight_mode, "tree weights: uniform|oob_accuracy");
    train->add_option("--feature-group", feature_group,
                      "columns available to the splitter: all|texture|contour");
    train->add_option("--train-fraction", train_fraction,
                      "stratified split: fraction used for training (rest held out)");
    train->add_option("--split-seed", split_seed, "seed of the stratified split");
    train->add_option("--config", common.config_path, "config JSON");

    // predict
    auto* predict = app.add_subcommand("predict", "predict grades");
    std::string predict_model, predict_input, predict_manifest;
    bool per_pixel = false;
    predict->add_option("--model", predict_model, "model JSON")->required();
    predict->add_option("--input", predict_input, "single input image");
    predict->add_option("--manifest", predict_manifest, "manifest CSV");
    predict->add_flag("--per-pixel", per_pixel,
                      "per-pixel texture votes instead of one vector per image");
    predict->add_option("--config", common.config_path, "config JSON");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a model, write a report");
    std::string eval_model, eval_manifest, eval_features, eval_out;
    bool test_only = false;
    evaluate->add_option("--model", eval_model, "model JSON")->required();
    evaluate->add_option("--manifest", eval_manifest, "manifest CSV (full pipeline)");
    evaluate->add_option("--features", eval_features,
                         "precomputed features CSV (skips segmentation)");
    evaluate->add_option("--out", eval_out, "report JSON path (default stdout)");
    evaluate->add_flag("--test-only", test_only,
                       "score only rows outside the model's recorded training split");
    evaluate->add_option("--config", common.config_path, "config JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (print_config) {
            std::fputs(coc::cli::config_to_json(coc::cli::default_config()).c_str(), stdout);
            return kExitOk;
        }
        if (synth->parsed())
            return cmd_synth(count_per_grade, synth_seed, outdir, common);
        if (segment->parsed())
            return cmd_segment(seg_input, out_overlay, out_masks, out_json_path, common);
        if (features->parsed()) return cmd_features(manifest_path, features_out, common);
        if (train->parsed()) {
            if (weight_mode == "oob_accuracy")
                fp.weight_mode = coc::rf::WeightMode::oob_accuracy;
            else if (weight_mode != "uniform")
                coc::fail(coc::errc::invalid_params, "weight mode must be uniform|oob_accuracy");
            std::optional<double> fraction;
            if (train_fraction >= 0.0) fraction = train_fraction;
            return cmd_train(train_features, model_out, fp, feature_group, fraction, split_seed,
                             mtry_opt->count() > 0, common);
        }
        if (predict->parsed()) {
            if (predict_input.empty() == predict_manifest.empty())
                coc::fail(coc::errc::invalid_params,
                          "predict needs exactly one of --input or --manifest");
            return cmd_predict(predict_model, predict_input, predict_manifest, per_pixel, common);
        }
        if (evaluate->parsed()) {
            if (eval_manifest.empty() && eval_features.empty())
                coc::fail(coc::errc::invalid_params,
                          "evaluate needs --manifest or --features");
            return cmd_evaluate(eval_model, eval_manifest, eval_features, eval_out, test_only,
                                common);
        }
        std::fputs(app.help().c_str(), stdout);
        return kExitOk;
    } catch (const coc::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == coc::errc::segmentation_failed ? kExitSegmentation : kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
}
