#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mgml/mgml_c.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("mgml_capi_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string write_config(const fs::path& dir, const std::string& body) {
    const fs::path p = dir / "run.cfg";
    std::ofstream(p) << body;
    return p.string();
}

const char* kTinyRun =
    "backbone.preset = tiny\n"
    "num_classes = 4\n"
    "train.epochs = 2\n"
    "train.batch_size = 8\n"
    "train.runs = 1\n"
    "optimizer.lr = 0.01\n"
    "schedule.milestones = 30\n"
    "data.kind = synthetic\n"
    "data.per_class = 6\n"
    "data.image_size = 64\n";

} // namespace

TEST_CASE("inspect-anchors through the C boundary") {
    char* text = nullptr;
    const mgml_status st = mgml_inspect_anchors(8, 8, 0.5, "7crop", 2, &text);
    REQUIRE(st == MGML_OK);
    REQUIRE(text != nullptr);
    CHECK(std::string(text).rfind("0,0,4,4\n", 0) == 0);
    int lines = 0;
    for (const char* p = text; *p; ++p) lines += *p == '\n';
    CHECK(lines == 7);
    mgml_string_free(text);

    char* grid = nullptr;
    REQUIRE(mgml_inspect_anchors(8, 8, 0.5, "grid", 2, &grid) == MGML_OK);
    int grid_lines = 0;
    for (const char* p = grid; *p; ++p) grid_lines += *p == '\n';
    CHECK(grid_lines == 9);
    mgml_string_free(grid);
}

TEST_CASE("null arguments are config errors with a populated message") {
    char* text = nullptr;
    CHECK(mgml_inspect_anchors(8, 8, 0.5, nullptr, 2, &text) == MGML_ERR_CONFIG);
    CHECK(std::string(mgml_last_error()).size() > 0);
    CHECK(mgml_train(nullptr, "/tmp/x", -1, nullptr) == MGML_ERR_CONFIG);
    CHECK(std::string(mgml_last_error()).find("config") != std::string::npos);
    CHECK(mgml_eval("a.cfg", "b.mgc", nullptr, nullptr) == MGML_ERR_CONFIG);
    mgml_model* m = nullptr;
    CHECK(mgml_model_load(nullptr, "b.mgc", &m) == MGML_ERR_CONFIG);
    CHECK(m == nullptr);
}

TEST_CASE("degenerate anchor geometry surfaces as a config error") {
    char* text = nullptr;
    CHECK(mgml_inspect_anchors(1, 8, 0.5, "7crop", 2, &text) == MGML_ERR_CONFIG);
    CHECK(text == nullptr);
    CHECK(std::string(mgml_last_error()).find("sigma") != std::string::npos);
}

TEST_CASE("missing config file reports MGML_ERR_CONFIG") {
    TempDir dir("miss");
    CHECK(mgml_train((dir.path / "absent.cfg").string().c_str(),
                     (dir.path / "out").string().c_str(), -1,
                     nullptr) == MGML_ERR_CONFIG);
    CHECK(std::string(mgml_last_error()).find("absent.cfg") != std::string::npos);
}

TEST_CASE("train, eval and predict round trip through the C API") {
    TempDir dir("roundtrip");
    const std::string cfg = write_config(dir.path, kTinyRun);
    const fs::path out = dir.path / "out";

    REQUIRE(mgml_train(cfg.c_str(), out.string().c_str(), -1, "mb") == MGML_OK);
    CHECK(fs::exists(out / "metrics.csv"));
    CHECK(fs::exists(out / "checkpoint.mgc"));
    CHECK(fs::exists(out / "summary.json"));

    char* json = nullptr;
    const mgml_status est = mgml_eval(
        cfg.c_str(), (out / "checkpoint.mgc").string().c_str(), "mb", &json);
    REQUIRE(est == MGML_OK);
    REQUIRE(json != nullptr);
    CHECK(std::string(json).find("oa_mb") != std::string::npos);
    mgml_string_free(json);

    mgml_model* model = nullptr;
    REQUIRE(mgml_model_load(cfg.c_str(),
                            (out / "checkpoint.mgc").string().c_str(),
                            &model) == MGML_OK);
    REQUIRE(model != nullptr);
    int classes = 0;
    REQUIRE(mgml_model_num_classes(model, &classes) == MGML_OK);
    CHECK(classes == 4);

    std::vector<double> image(3 * 64 * 64, 0.25);
    int predicted = -1;
    REQUIRE(mgml_model_predict(model, image.data(), 3, 64, 64, &predicted) ==
            MGML_OK);
    CHECK(predicted >= 0);
    CHECK(predicted < 4);

    // wrong geometry is rejected, not crashed on
    CHECK(mgml_model_predict(model, image.data(), 1, 64, 64, &predicted) !=
          MGML_OK);
    mgml_model_free(model);
}

TEST_CASE("gen-data writes a loadable PPM tree") {
    TempDir dir("gendata");
    const std::string cfg = write_config(dir.path, kTinyRun);
    const fs::path out = dir.path / "scenes";
    REQUIRE(mgml_gen_data(cfg.c_str(), out.string().c_str()) == MGML_OK);
    CHECK(fs::exists(out / "manifest.tsv"));
    CHECK(fs::exists(out / "class_0" / "img_0000.ppm"));
    int class_dirs = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        class_dirs += e.is_directory();
    }
    CHECK(class_dirs == 4);
}
