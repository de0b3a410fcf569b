#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wavexp/synthfaces.hpp"

using namespace wavexp;

namespace {

double ks_uniform(std::vector<float> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        const double x = v[i];
        d = std::max(d, std::fabs((static_cast<double>(i) + 1.0) / n - x));
        d = std::max(d, std::fabs(x - static_cast<double>(i) / n));
    }
    return d;
}

double window_ink_mass(const Image& img, double v_lo, double v_hi) {
    const double px = 2.0 / static_cast<double>(img.w);
    double m = 0.0;
    for (int64_t y = 0; y < img.h; ++y) {
        const double v = (y + 0.5) * px - 1.0;
        if (v < v_lo || v >= v_hi) continue;
        for (int64_t x = 0; x < img.w; ++x)
            m += img.at(2, y, x) -
                 0.4 * (static_cast<double>(img.at(0, y, x)) + img.at(1, y, x));
    }
    return m;
}

std::filesystem::path temp_dir(const char* tag) {
    auto p = std::filesystem::temp_directory_path() /
             (std::string("wavexp_") + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("rendering is deterministic") {
    IdentityVec id{0.3f, 1.05f, 0.27f, 0.7f};
    AuVec au{0.2f, 0.8f, 0.5f, 0.1f, 0.9f};
    Image a = render_face(id, au, 64);
    Image b = render_face(id, au, 64);
    REQUIRE(a.data.size() == b.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) REQUIRE(a.data[i] == b.data[i]);
}

TEST_CASE("expression parameters round-trip through pixels on a dense grid") {
    const std::array<IdentityVec, 3> ids = {{{0.05f, 0.82f, 0.38f, 0.32f},
                                             {0.5f, 1.0f, 0.3f, 0.6f},
                                             {0.95f, 1.18f, 0.21f, 0.88f}}};
    const float levels[5] = {0.0f, 0.25f, 0.5f, 0.75f, 1.0f};
    double worst = 0.0;
    AuVec worst_au{};
    int worst_id = -1;
    for (size_t idn = 0; idn < ids.size(); ++idn) {
        for (float a0 : levels)
            for (float a1 : levels)
                for (float a2 : levels)
                    for (float a3 : levels)
                        for (float a4 : levels) {
                            AuVec au{a0, a1, a2, a3, a4};
                            AuVec got = extract_au(render_face(ids[idn], au, 64));
                            for (int k = 0; k < kNumAu; ++k) {
                                const double e = std::fabs(
                                    static_cast<double>(got[static_cast<size_t>(k)]) -
                                    au[static_cast<size_t>(k)]);
                                if (e > worst) {
                                    worst = e;
                                    worst_au = au;
                                    worst_id = static_cast<int>(idn);
                                }
                            }
                        }
    }
    CAPTURE(worst_id);
    CAPTURE(worst_au[0]);
    CAPTURE(worst_au[1]);
    CAPTURE(worst_au[2]);
    CAPTURE(worst_au[3]);
    CAPTURE(worst_au[4]);
    CHECK(worst <= 0.02);
}

TEST_CASE("identity changes do not leak into expression readout") {
    Rng rng(311);
    const std::array<AuVec, 3> aus = {{{0.0f, 0.5f, 1.0f, 0.25f, 0.75f},
                                       {1.0f, 0.0f, 0.2f, 0.9f, 0.1f},
                                       {0.5f, 1.0f, 0.0f, 0.5f, 0.4f}}};
    double worst = 0.0;
    for (const AuVec& au : aus)
        for (int trial = 0; trial < 25; ++trial) {
            IdentityVec id = sample_identity(rng);
            AuVec got = extract_au(render_face(id, au, 64));
            for (int k = 0; k < kNumAu; ++k)
                worst = std::max(worst, std::fabs(static_cast<double>(
                                            got[static_cast<size_t>(k)]) -
                                        au[static_cast<size_t>(k)]));
        }
    CHECK(worst <= 0.05);
}

TEST_CASE("identity parameters round-trip through pixels") {
    Rng rng(312);
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        IdentityVec id = sample_identity(rng);
        AuVec au = sample_au(rng);
        IdentityVec got = extract_identity(render_face(id, au, 64));
        for (int k = 0; k < kNumIdentity; ++k)
            worst = std::max(worst,
                             std::fabs(static_cast<double>(got[static_cast<size_t>(k)]) -
                                       id[static_cast<size_t>(k)]));
    }
    CHECK(worst <= 0.02);
}

TEST_CASE("extraction survives the 8-bit file format") {
    auto dir = temp_dir("png_rt");
    std::filesystem::create_directories(dir);
    Rng rng(313);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        IdentityVec id = sample_identity(rng);
        AuVec au = sample_au(rng);
        const std::string path = (dir / "t.png").string();
        write_png(path, render_face(id, au, 64));
        AuVec got = extract_au(read_png(path));
        for (int k = 0; k < kNumAu; ++k)
            worst = std::max(worst, std::fabs(static_cast<double>(
                                        got[static_cast<size_t>(k)]) -
                                    au[static_cast<size_t>(k)]));
    }
    std::filesystem::remove_all(dir);
    CHECK(worst <= 0.03);
}

TEST_CASE("eye openness moves at least a factor of three in eye-window mass") {
    IdentityVec id{0.4f, 1.0f, 0.3f, 0.65f};
    AuVec closed{0.0f, 0.5f, 0.5f, 0.5f, 0.0f};
    AuVec open = closed;
    open[0] = 1.0f;
    const double m0 = window_ink_mass(render_face(id, closed, 64), -0.40, -0.10);
    const double m1 = window_ink_mass(render_face(id, open, 64), -0.40, -0.10);
    REQUIRE(m0 > 0.0);
    CHECK(m1 / m0 >= 3.0);
}

TEST_CASE("sampled expression coordinates are uniform") {
    Rng rng(314);
    std::array<std::vector<float>, kNumAu> per_coord;
    for (int i = 0; i < 2000; ++i) {
        AuVec au = sample_au(rng);
        for (int k = 0; k < kNumAu; ++k)
            per_coord[static_cast<size_t>(k)].push_back(au[static_cast<size_t>(k)]);
    }
    for (int k = 0; k < kNumAu; ++k) {
        const double d = ks_uniform(per_coord[static_cast<size_t>(k)]);
        CAPTURE(k);
        CHECK(d <= 0.05);
    }
}

TEST_CASE("dataset generation is reproducible and self-describing") {
    DatasetSpec spec;
    spec.n_identities = 6;
    spec.per_identity = 4;
    spec.image_size = 64;
    spec.seed = 99;

    auto d1 = temp_dir("ds1");
    auto d2 = temp_dir("ds2");
    spec.dir = d1.string();
    auto s1 = generate_dataset(spec);
    spec.dir = d2.string();
    auto s2 = generate_dataset(spec);

    REQUIRE(s1.size() == 24);
    REQUIRE(s2.size() == 24);
    CHECK(std::filesystem::exists(d1 / "images" / "000000.png"));
    CHECK(std::filesystem::exists(d1 / "images" / "000023.png"));

    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
    };
    CHECK(slurp(d1 / "labels.jsonl") == slurp(d2 / "labels.jsonl"));
    CHECK(slurp(d1 / "dataset_manifest.json") == slurp(d2 / "dataset_manifest.json"));
    CHECK(slurp(d1 / "images" / "000013.png") == slurp(d2 / "images" / "000013.png"));

    // a different seed must change the content digest
    spec.seed = 100;
    auto d3 = temp_dir("ds3");
    spec.dir = d3.string();
    generate_dataset(spec);
    CHECK(slurp(d1 / "dataset_manifest.json") != slurp(d3 / "dataset_manifest.json"));

    auto loaded = load_labels(d1.string());
    REQUIRE(loaded.size() == s1.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].file == s1[i].file);
        CHECK(loaded[i].id == s1[i].id);
        for (int k = 0; k < kNumAu; ++k)
            CHECK(loaded[i].au[static_cast<size_t>(k)] ==
                  s1[i].au[static_cast<size_t>(k)]);
        for (int k = 0; k < kNumIdentity; ++k)
            CHECK(loaded[i].identity[static_cast<size_t>(k)] ==
                  s1[i].identity[static_cast<size_t>(k)]);
    }

    // labels in one dataset share the identity within an id group
    for (size_t i = 1; i < 4; ++i)
        for (int k = 0; k < kNumIdentity; ++k)
            CHECK(s1[i].identity[static_cast<size_t>(k)] ==
                  s1[0].identity[static_cast<size_t>(k)]);
    CHECK(s1[4].id == 1);

    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
    std::filesystem::remove_all(d3);
}

TEST_CASE("label files from a generated set decode images that match their labels") {
    DatasetSpec spec;
    spec.n_identities = 3;
    spec.per_identity = 2;
    spec.seed = 4242;
    auto dir = temp_dir("ds_rt");
    spec.dir = dir.string();
    auto samples = generate_dataset(spec);
    for (const auto& s : samples) {
        Image img = read_png((dir / s.file).string());
        AuVec got = extract_au(img);
        for (int k = 0; k < kNumAu; ++k)
            CHECK(std::fabs(got[static_cast<size_t>(k)] -
                            s.au[static_cast<size_t>(k)]) <= 0.03);
    }
    std::filesystem::remove_all(dir);
}
