#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "spx/io.hpp"
#include "spx/rng.hpp"

using namespace spx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("spx_io_test_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("tensor file layout matches the documented byte budget") {
    TempDir dir;
    Tensor t(1, 2, 2);
    t.data() = {1, 2, 3, 4};
    auto path = dir.file("t.spt");
    write_tensor(path, t);
    // magic 4 + dtype 1 + rank 1 + pad 2 + 3 dims x 8 + 4 floats x 4
    CHECK(fs::file_size(path) == 48);
    Tensor back = read_tensor(path);
    CHECK(back.channels() == 1);
    CHECK(back.rows() == 2);
    CHECK(back.cols() == 2);
    CHECK(back.data() == t.data());
}

TEST_CASE("tensor file round trip is bit-exact across random tensors") {
    TempDir dir;
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor t = testing::random_tensor(rng, rng.uniform_int(1, 3), rng.uniform_int(1, 6),
                                          rng.uniform_int(1, 6), -100.0, 100.0);
        auto path = dir.file("round.spt");
        write_tensor(path, t);
        std::string first = slurp(path);
        Tensor back = read_tensor(path);
        write_tensor(path, back);
        CHECK(slurp(path) == first);  // write(read(x)) reproduces the bytes
        for (size_t i = 0; i < t.size(); ++i)
            CHECK(static_cast<float>(back.data()[i]) == static_cast<float>(t.data()[i]));
    }
}

TEST_CASE("tensor file malformed inputs get distinct diagnostics") {
    TempDir dir;
    auto path = dir.file("bad.spt");

    spit(path, "");
    CHECK_THROWS_WITH_AS(read_tensor(path), doctest::Contains("bad magic"), std::runtime_error);

    spit(path, "NOPE____________");
    CHECK_THROWS_WITH_AS(read_tensor(path), doctest::Contains("bad magic"), std::runtime_error);

    // valid header for 1x2x2 f32 but payload one float short
    Tensor t(1, 2, 2);
    t.data() = {1, 2, 3, 4};
    write_tensor(path, t);
    std::string good = slurp(path);
    spit(path, good.substr(0, good.size() - 4));
    CHECK_THROWS_WITH_AS(read_tensor(path), doctest::Contains("truncated payload"),
                         std::runtime_error);

    std::string wrong_dtype = good;
    wrong_dtype[4] = 9;
    spit(path, wrong_dtype);
    CHECK_THROWS_WITH_AS(read_tensor(path), doctest::Contains("unknown dtype"),
                         std::runtime_error);
}

TEST_CASE("id map round trip recovers ids and count") {
    TempDir dir;
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        SuperpixelMap sp = testing::random_partition(rng, 6, 7, 4);
        auto path = dir.file("sp.spt");
        write_id_map(path, sp);
        SuperpixelMap back = read_id_map(path);
        CHECK(back.ids == sp.ids);
        CHECK(back.count == sp.count);
    }
}

TEST_CASE("ppm and pgm round trips") {
    TempDir dir;
    Image img(3, 2);
    for (size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<uint8_t>(i * 13);
    write_ppm(dir.file("img.ppm"), img);
    Image back = read_ppm(dir.file("img.ppm"));
    CHECK(back.rows == 3);
    CHECK(back.cols == 2);
    CHECK(back.rgb == img.rgb);

    LabelMap small(2, 3);
    small.labels = {0, 1, 2, 3, 4, 5};
    write_pgm(dir.file("small.pgm"), small);
    CHECK(read_pgm(dir.file("small.pgm")).labels == small.labels);

    LabelMap wide(2, 2);
    wide.labels = {0, 300, 65535, 7};
    write_pgm(dir.file("wide.pgm"), wide);
    CHECK(read_pgm(dir.file("wide.pgm")).labels == wide.labels);

    LabelMap bad(1, 1);
    bad.labels = {-1};
    CHECK_THROWS_AS(write_pgm(dir.file("bad.pgm"), bad), std::invalid_argument);
}

TEST_CASE("edge list and features json round trips") {
    TempDir dir;
    EdgeList el;
    el.kind = WeightKind::Similarity;
    el.edges = {{0, 1, 0.25}, {1, 3, 0.75}};
    write_edges(dir.file("e.json"), el);
    EdgeList eback = read_edges(dir.file("e.json"));
    REQUIRE(eback.edges.size() == 2);
    CHECK(eback.kind == WeightKind::Similarity);
    CHECK(eback.edges[1].j == 3);
    CHECK(eback.edges[1].weight == 0.75);

    SuperpixelFeatures spf;
    spf.count = 2;
    spf.dim = 3;
    spf.rows = 4;
    spf.cols = 5;
    spf.features = Matrix(2, 3);
    spf.features.data() = {0.5, -1.25, 2.0, 3.5, 0.0, -0.125};
    spf.positions = {{1.5, 2.25}, {3.0, 0.5}};
    spf.sizes = {12, 8};
    write_features(dir.file("f.json"), spf);
    SuperpixelFeatures fback = read_features(dir.file("f.json"));
    CHECK(fback.features.data() == spf.features.data());
    CHECK(fback.positions == spf.positions);
    CHECK(fback.sizes == spf.sizes);
    CHECK(fback.rows == 4);
    CHECK(fback.cols == 5);
}

TEST_CASE("instance set RLE round trip") {
    TempDir dir;
    Rng rng(23);
    InstanceSet set = testing::random_instances(rng, 6, 6, 3, 4, true);
    write_instances(dir.file("inst.json"), set);
    InstanceSet back = read_instances(dir.file("inst.json"));
    REQUIRE(back.size() == set.size());
    for (size_t i = 0; i < set.size(); ++i) {
        CHECK(back[i].class_id == set[i].class_id);
        CHECK(back[i].score == set[i].score);
        CHECK(back[i].mask.labels == set[i].mask.labels);
    }
}
