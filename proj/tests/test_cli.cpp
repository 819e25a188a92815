#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "coc/config.hpp"
#include "coc/error.hpp"
#include "coc/image_io.hpp"
#include "coc/manifest.hpp"
#include "coc/overlay.hpp"
#include "coc/pipeline.hpp"
#include "coc/rng.hpp"
#include "coc/synthdata.hpp"

using namespace coc;
using namespace coc::cli;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "coc_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string error_text(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("manifest: parses rows, resolves paths, reads optional fields") {
    const fs::path dir = temp_dir("manifest_ok");
    write_text(dir / "m.csv",
               "id,image_path,grade,cell_mask_path,nucleus_mask_path\n"
               "a1,img/a1.png,A,masks/a1_cell.png,masks/a1_nuc.png\n"
               "b2,img/b2.png,,\n"
               "c3,img/c3.png,C,,\n");
    const Manifest m = load_manifest(dir / "m.csv");
    REQUIRE(m.rows.size() == 3);
    CHECK(m.rows[0].id == "a1");
    CHECK(m.rows[0].image_path == dir / "img/a1.png");
    CHECK(m.rows[0].grade == Grade::A);
    CHECK(m.rows[0].cell_mask_path == dir / "masks/a1_cell.png");
    CHECK_FALSE(m.rows[1].grade.has_value());
    CHECK_FALSE(m.rows[1].cell_mask_path.has_value());
    CHECK(m.rows[2].grade == Grade::C);
}

TEST_CASE("manifest: malformed rows report line and column") {
    const fs::path dir = temp_dir("manifest_bad");

    write_text(dir / "grade.csv",
               "id,image_path,grade,cell_mask_path,nucleus_mask_path\n"
               "a1,a1.png,A,,\n"
               "b2,b2.png,X,,\n");
    std::string msg = error_text([&] { load_manifest(dir / "grade.csv"); });
    CHECK(msg.find(":3:") != std::string::npos);      // line of the bad row
    CHECK(msg.find("grade") != std::string::npos);
    CHECK(msg.find("11") != std::string::npos);        // column of the grade field

    write_text(dir / "short.csv",
               "id,image_path,grade,cell_mask_path,nucleus_mask_path\n"
               "only_one_field\n");
    msg = error_text([&] { load_manifest(dir / "short.csv"); });
    CHECK(msg.find(":2:") != std::string::npos);

    write_text(dir / "dup.csv",
               "id,image_path,grade,cell_mask_path,nucleus_mask_path\n"
               "a1,a1.png,A,,\n"
               "a1,a2.png,B,,\n");
    msg = error_text([&] { load_manifest(dir / "dup.csv"); });
    CHECK(msg.find("duplicate id") != std::string::npos);

    write_text(dir / "head.csv", "id,path\none,two\n");
    msg = error_text([&] { load_manifest(dir / "head.csv"); });
    CHECK(msg.find("header") != std::string::npos);
}

TEST_CASE("manifest: save/load round trip") {
    const fs::path dir = temp_dir("manifest_rt");
    Manifest m;
    m.base_dir = dir;
    ManifestRow row;
    row.id = "x1";
    row.image_path = dir / "x1.png";
    row.grade = Grade::D;
    row.cell_mask_path = dir / "x1_cell.png";
    m.rows.push_back(row);
    save_manifest(dir / "m.csv", m);
    const Manifest back = load_manifest(dir / "m.csv");
    REQUIRE(back.rows.size() == 1);
    CHECK(back.rows[0].id == "x1");
    CHECK(back.rows[0].image_path == dir / "x1.png");
    CHECK(back.rows[0].grade == Grade::D);
    CHECK_FALSE(back.rows[0].nucleus_mask_path.has_value());
}

TEST_CASE("features CSV: lossless round trip and schema errors") {
    const fs::path dir = temp_dir("features_csv");
    Rng rng(55);
    std::vector<FeatureRow> rows(3);
    for (int i = 0; i < 3; ++i) {
        rows[i].id = "p" + std::to_string(i);
        for (double& v : rows[i].values) v = rng.next_signed_unit() * 1e3;
        rows[i].grade = i == 1 ? std::nullopt : std::optional<Grade>(static_cast<Grade>(i));
    }
    rows[0].values[7] = 1.0 / 3.0;
    rows[2].values[30] = 1e-17;
    write_features_csv(dir / "f.csv", rows);
    const auto back = read_features_csv(dir / "f.csv");
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].id == rows[i].id);
        CHECK(back[i].grade == rows[i].grade);
        CHECK(back[i].values == rows[i].values); // bit-exact via to_chars
    }

    write_text(dir / "nograde.csv", "id,f01\nx,1\n");
    const std::string msg = error_text([&] { read_features_csv(dir / "nograde.csv"); });
    CHECK(msg.find("33 columns") != std::string::npos);

    std::string header = "id";
    for (int f = 1; f <= 31; ++f)
        header += ",f" + std::string(f < 10 ? "0" : "") + std::to_string(f);
    write_text(dir / "badhead.csv", header + ",label\n");
    const std::string msg2 = error_text([&] { read_features_csv(dir / "badhead.csv"); });
    CHECK(msg2.find("grade") != std::string::npos);
}

TEST_CASE("config: defaults validate and survive a JSON round trip") {
    const PipelineConfig cfg = default_config();
    CHECK_NOTHROW(cfg.validate());
    const std::string text = config_to_json(cfg);
    const PipelineConfig back = config_from_json(text);
    CHECK(back.diffusion.iterations == cfg.diffusion.iterations);
    CHECK(back.snake.balloon == cfg.snake.balloon);
    CHECK(back.region_grow.tau == cfg.region_grow.tau);
    CHECK(back.forest.n_trees == cfg.forest.n_trees);
    CHECK(back.synth.noise_sigma == cfg.synth.noise_sigma);
    CHECK(back.per_pixel_window == cfg.per_pixel_window);
}

TEST_CASE("config: unknown keys and invalid values rejected") {
    try {
        config_from_json("{\"snakes\": {}}");
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == errc::invalid_config);
    }
    CHECK_THROWS_AS(config_from_json("{\"snake\": {\"wiggle\": 1}}"), Error);
    CHECK_THROWS_AS(config_from_json("{\"diffusion\": {\"lambda\": 0.5}}"), Error);
    CHECK_THROWS_AS(config_from_json("not json"), Error);
    // _doc keys are ignored wherever they appear.
    CHECK_NOTHROW(config_from_json("{\"_doc\": \"x\", \"snake\": {\"_doc\": \"y\"}}"));
}

TEST_CASE("process_image + overlay on a phantom") {
    synth::PhantomSpec spec;
    spec.grade = Grade::B;
    spec.seed = 321;
    const synth::Phantom ph = synth::generate(spec);
    const PipelineConfig cfg = default_config();
    const ImageResult res = process_image(ph.image, cfg);
    CHECK(res.features.values.size() == 31);
    CHECK(res.segmentation.outer.r > res.segmentation.nucleus.r);

    const RasterImage overlay = draw_overlay(ph.image, res.segmentation);
    CHECK(overlay.channels == 3);
    // Some pixel on the outer circle is pure red.
    const int x = static_cast<int>(std::lround(res.segmentation.outer.cx +
                                               res.segmentation.outer.r));
    const int y = static_cast<int>(std::lround(res.segmentation.outer.cy));
    CHECK(overlay.at(x, y, 0) == 1.0);
    CHECK(overlay.at(x, y, 1) == 0.0);
}

TEST_CASE("process_manifest: keeps manifest order and isolates failures") {
    const fs::path dir = temp_dir("batch");
    synth::PhantomSpec spec;
    spec.grade = Grade::C;
    spec.seed = 11;
    const synth::Phantom good = synth::generate(spec);
    save_png(dir / "good.png", good.image);
    save_png(dir / "flat.png", RasterImage::make(128, 128, 1, 0.4)); // collapses

    Manifest m;
    m.base_dir = dir;
    m.rows.resize(3);
    m.rows[0] = {"g1", dir / "good.png", Grade::C, std::nullopt, std::nullopt};
    m.rows[1] = {"bad", dir / "flat.png", std::nullopt, std::nullopt, std::nullopt};
    m.rows[2] = {"g2", dir / "good.png", Grade::C, std::nullopt, std::nullopt};

    const BatchOutcome out = process_manifest(m, default_config());
    REQUIRE(out.results.size() == 3);
    CHECK(out.results[0].has_value());
    CHECK_FALSE(out.results[1].has_value());
    CHECK(out.results[2].has_value());
    REQUIRE(out.failures.size() == 1);
    CHECK(out.failures[0].find("bad") != std::string::npos);
    // Identical inputs give identical features regardless of scheduling.
    CHECK(out.results[0]->features.values == out.results[2]->features.values);
}

TEST_CASE("atomic_write_file leaves no temp file behind") {
    const fs::path dir = temp_dir("atomic");
    atomic_write_file(dir / "out.txt", "payload");
    std::ifstream in(dir / "out.txt");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "payload");
    int entries = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);
}

TEST_CASE("per_pixel_votes: flat-textured phantom still yields votes") {
    synth::PhantomSpec spec;
    spec.grade = Grade::A;
    spec.seed = 9;
    const synth::Phantom ph = synth::generate(spec);
    PipelineConfig cfg = default_config();
    cfg.per_pixel_stride = 16;
    const ImageResult res = process_image(ph.image, cfg);

    // A one-leaf forest always votes the same grade.
    rf::ForestModel model;
    rf::Tree t;
    rf::TreeNode leaf;
    leaf.counts = {0, 0, 1, 0};
    t.nodes.push_back(leaf);
    model.trees.push_back(t);
    model.weights = {1.0};

    const auto votes = per_pixel_votes(ph.image, res.segmentation, model, cfg);
    CHECK(votes.size() > 10);
    CHECK(rf::aggregate_votes(votes) == Grade::C);
}
