#include "wavexp/synthfaces.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wavexp/common.hpp"

namespace wavexp {

namespace {

// Scene coordinates: u (left->right) and v (top->bottom) both in [-1,1].
// Geometry constants. Glyph extents keep >= 1.5 px of clearance (at 64 px) to
// their extraction window borders and to the face boundary across the whole
// identity box, so window masses stay uncontaminated.
constexpr double kFaceCx = 0.0, kFaceCy = 0.05;
constexpr double kFaceSemiX = 0.65;  // times aspect
constexpr double kFaceSemiY = 0.80;

constexpr double kBrowWinLo = -0.70, kBrowWinHi = -0.40;
constexpr double kBrowBaseV = -0.47, kBrowRaise = -0.10;
constexpr double kBrowHalfU = 0.05, kBrowHalfV = 0.022;

constexpr double kEyeWinLo = -0.40, kEyeWinHi = -0.10;
constexpr double kEyeV = -0.25;
constexpr double kEyeHalfU = 0.07;
// bar-shaped eyes: a rectangle has an exact distance field, so the coverage
// mass stays exactly linear in the half-height even for slit eyes; the
// minimum half-height stays at or above the edge-ramp width, else the
// clipped ramp profile integrates high and bends the linear mass law
constexpr double kEyeMinHalfV = 0.018, kEyeGainHalfV = 0.082;
// placement of the eye pair follows the face width so it stays inside the
// ellipse for every identity
constexpr double kEyeUBase = 0.20, kEyeUGain = 0.65, kEyeUAspectRef = 1.2;

constexpr double kNoseV = 0.06, kNoseHalfU = 0.012, kNoseHalfV = 0.09;

constexpr double kCheekU = 0.33, kCheekV = 0.12;
constexpr double kCheekFullR = 0.08, kCheekEdgeR = 0.10;
constexpr double kCheekStrength = 0.45;
constexpr double kCheekSampleR = 0.06;

constexpr double kMouthWinLo = 0.22, kMouthWinHi = 0.55, kMouthWinHalfU = 0.18;
constexpr double kMouthV = 0.38, kMouthHalfU = 0.16;
constexpr double kMouthMinHalfV = 0.018, kMouthGainHalfV = 0.075;

constexpr double kCornerWinUMax = 0.50;
constexpr double kCornerBaseU = 0.25, kCornerGainU = 0.10;
constexpr double kCornerBaseV = 0.38, kCornerGainV = -0.06;
constexpr double kCornerHalf = 0.03;

constexpr double kChinLoV = 0.60, kChinHiV = 0.72, kChinHalfU = 0.09;

struct Rgb {
    double r, g, b;
};

Rgb skin_color(const IdentityVec& id) {
    const double hue = id[0], tone = id[3];
    return {tone * (0.5 + 0.5 * hue), tone * (1.0 - 0.5 * hue), tone * 0.6};
}

double eye_center_u(const IdentityVec& id) {
    const double es = id[2], aspect = id[1];
    return (kEyeUBase + kEyeUGain * (es - 0.2)) * (aspect / kEyeUAspectRef);
}

// linear edge ramp of one subpixel on each side of the zero level set
double coverage(double sdf, double ramp) {
    const double a = 0.5 - sdf / (2.0 * ramp);
    return a <= 0.0 ? 0.0 : (a >= 1.0 ? 1.0 : a);
}

// Separable box coverage: the product of two 1-D edge ramps integrates to
// exactly (2hu)(2hv) with no corner-rounding deficit, so glyph masses stay
// exactly linear in their encoded dimension.
double rect_coverage(double u, double v, double cu, double cv, double hu,
                     double hv, double ramp) {
    const double au = coverage(std::fabs(u - cu) - hu, ramp);
    const double av = coverage(std::fabs(v - cv) - hv, ramp);
    return au * av;
}

// scaled implicit distance; zero level set is exact, ramp width varies by at
// most the axis ratio, which the symmetric ramp cancels to first order
double ellipse_sdf(double u, double v, double cu, double cv, double a, double b) {
    const double q = std::sqrt((u - cu) * (u - cu) / (a * a) +
                               (v - cv) * (v - cv) / (b * b));
    return (q - 1.0) * std::min(a, b);
}

double cheek_weight(double u, double v) {
    const double du = std::fabs(u) - kCheekU;  // mirrored pair
    const double dv = v - kCheekV;
    const double r = std::sqrt(du * du + dv * dv);
    if (r <= kCheekFullR) return 1.0;
    if (r >= kCheekEdgeR) return 0.0;
    return (kCheekEdgeR - r) / (kCheekEdgeR - kCheekFullR);
}

Rgb shade(const IdentityVec& id, const AuVec& au, double u, double v, double ramp) {
    const double aspect = id[1];
    const double face = coverage(
        ellipse_sdf(u, v, kFaceCx, kFaceCy, kFaceSemiX * aspect, kFaceSemiY), ramp);
    if (face <= 0.0) return {0.0, 0.0, 0.0};

    Rgb skin = skin_color(id);
    const double dark = 1.0 - kCheekStrength * au[4] * cheek_weight(u, v);
    Rgb base{skin.r * dark, skin.g * dark, skin.b * dark};

    // ink glyphs (disjoint by construction; sum of coverages never exceeds 1)
    const double eu = eye_center_u(id);
    double ink = 0.0;
    const double brow_v = kBrowBaseV + kBrowRaise * au[3];
    ink += rect_coverage(std::fabs(u), v, eu, brow_v, kBrowHalfU, kBrowHalfV, ramp);
    const double eye_hv = kEyeMinHalfV + kEyeGainHalfV * au[0];
    ink += rect_coverage(std::fabs(u), v, eu, kEyeV, kEyeHalfU, eye_hv, ramp);
    ink += rect_coverage(u, v, 0.0, kNoseV, kNoseHalfU, kNoseHalfV, ramp);
    const double mouth_hv = kMouthMinHalfV + kMouthGainHalfV * au[2];
    ink += rect_coverage(u, v, 0.0, kMouthV, kMouthHalfU, mouth_hv, ramp);
    const double corner_u = kCornerBaseU + kCornerGainU * au[1];
    const double corner_v = kCornerBaseV + kCornerGainV * au[1];
    ink += rect_coverage(std::fabs(u), v, corner_u, corner_v, kCornerHalf,
                         kCornerHalf, ramp);
    ink = std::min(ink, 1.0);

    return {face * (base.r * (1.0 - ink)),
            face * (base.g * (1.0 - ink)),
            face * (base.b * (1.0 - ink) + ink)};
}

}  // namespace

Image render_face(const IdentityVec& identity, const AuVec& au, int size) {
    check(size >= 32 && size % 2 == 0, "render_face: size must be even and >= 32");
    Image img(3, size, size);
    const double px = 2.0 / size;  // pixel pitch in scene units
    // one subpixel of edge ramp each side of a boundary; clearances between
    // glyphs and window borders are sized for this width
    const double ramp = px / 2.0;
    // 2x2 supersampling at half-pixel midpoints
    const double off[2] = {-0.25 * px, 0.25 * px};
    for (int i = 0; i < size; ++i) {
        const double vc = (i + 0.5) * px - 1.0;
        for (int j = 0; j < size; ++j) {
            const double uc = (j + 0.5) * px - 1.0;
            Rgb acc{0, 0, 0};
            for (double dv : off)
                for (double du : off) {
                    Rgb s = shade(identity, au, uc + du, vc + dv, ramp);
                    acc.r += s.r;
                    acc.g += s.g;
                    acc.b += s.b;
                }
            img.at(0, i, j) = static_cast<float>(acc.r * 0.25);
            img.at(1, i, j) = static_cast<float>(acc.g * 0.25);
            img.at(2, i, j) = static_cast<float>(acc.b * 0.25);
        }
    }
    return img;
}

namespace {

struct WindowStats {
    double mass = 0.0;        // sum of ink coverage, scene-area units
    double centroid_u = 0.0;  // over u > 0 half only
    double centroid_v = 0.0;
    double pos_mass = 0.0;
    double half_mass = 0.0;
};

// ink coverage survives every overlay: skin, cheek shading and the face edge
// all keep b - 0.4(r+g) at zero, ink pushes it to its coverage fraction.
// Returned unclamped so zero-mean sampling noise cancels instead of piling up
// one-sided over the many empty pixels of a window.
double ink_alpha(const Image& img, int64_t y, int64_t x) {
    return img.at(2, y, x) -
           0.4 * (static_cast<double>(img.at(0, y, x)) + img.at(1, y, x));
}

// `ref` is the alpha the flat skin reads on this particular image. After
// 8-bit quantization every skin pixel lands on the same slightly nonzero
// value; left in place it integrates over a window's many empty pixels into
// a bias that can rival a small glyph's own mass, so it is measured on a
// known ink-free patch and subtracted here.
WindowStats window_stats(const Image& img, double v_lo, double v_hi,
                         double u_abs_lo, double u_abs_hi, double ref) {
    WindowStats ws;
    const double px = 2.0 / static_cast<double>(img.w);
    const double cell = px * px;
    for (int64_t y = 0; y < img.h; ++y) {
        const double v = (y + 0.5) * px - 1.0;
        if (v < v_lo || v >= v_hi) continue;
        for (int64_t x = 0; x < img.w; ++x) {
            const double u = (x + 0.5) * px - 1.0;
            const double au_abs = std::fabs(u);
            if (au_abs < u_abs_lo || au_abs > u_abs_hi) continue;
            const double a = (ink_alpha(img, y, x) - ref) * cell;
            ws.mass += a;
            // clamped weights keep centroids sane on noisy generated images
            const double wpos = a < 0.0 ? 0.0 : (a > cell ? cell : a);
            ws.centroid_v += wpos * v;
            ws.pos_mass += wpos;
            if (u > 0.0) {
                ws.half_mass += wpos;
                ws.centroid_u += wpos * u;
            }
        }
    }
    if (ws.pos_mass > 0.0) ws.centroid_v /= ws.pos_mass;
    if (ws.half_mass > 0.0) ws.centroid_u /= ws.half_mass;
    return ws;
}

float clamp_unit(double x) {
    return static_cast<float>(x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x));
}

struct SkinEstimate {
    double r = 0.0, g = 0.0;
    double tone = 0.0, hue = 0.0;
    double alpha = 0.0;  // ink alpha the flat skin reads after quantization
};

SkinEstimate chin_skin(const Image& img) {
    const double px = 2.0 / static_cast<double>(img.w);
    SkinEstimate s;
    int64_t n = 0;
    for (int64_t y = 0; y < img.h; ++y) {
        const double v = (y + 0.5) * px - 1.0;
        if (v < kChinLoV + px || v > kChinHiV - px) continue;
        for (int64_t x = 0; x < img.w; ++x) {
            const double u = (x + 0.5) * px - 1.0;
            if (std::fabs(u) > kChinHalfU - px) continue;
            s.r += img.at(0, y, x);
            s.g += img.at(1, y, x);
            s.alpha += ink_alpha(img, y, x);
            ++n;
        }
    }
    if (n > 0) {
        s.r /= static_cast<double>(n);
        s.g /= static_cast<double>(n);
        s.alpha /= static_cast<double>(n);
    }
    s.tone = (s.r + s.g) / 1.5;
    s.hue = s.tone > 1e-6 ? (s.r - s.g) / s.tone + 0.5 : 0.5;
    return s;
}

// shading ratio over r+g, which is 1.5*tone regardless of hue, so the skin
// reference never gets small enough for quantization to matter
double cheek_mean_darkening(const Image& img, double rg_skin) {
    if (rg_skin <= 1e-6) return 0.0;
    const double px = 2.0 / static_cast<double>(img.w);
    double acc = 0.0;
    int64_t n = 0;
    for (int64_t y = 0; y < img.h; ++y) {
        const double v = (y + 0.5) * px - 1.0;
        for (int64_t x = 0; x < img.w; ++x) {
            const double u = (x + 0.5) * px - 1.0;
            const double du = std::fabs(u) - kCheekU, dv = v - kCheekV;
            // stay a pixel inside the flat core so the weight is exactly 1
            if (du * du + dv * dv >
                (kCheekSampleR - px) * (kCheekSampleR - px))
                continue;
            acc += 1.0 - (static_cast<double>(img.at(0, y, x)) +
                          img.at(1, y, x)) /
                             rg_skin;
            ++n;
        }
    }
    return n > 0 ? acc / static_cast<double>(n) : 0.0;
}

// integral of the cheek weight over one patch (flat core + conic rim)
double cheek_weight_integral() {
    const double r0 = kCheekFullR, r1 = kCheekEdgeR;
    const double rim = 2.0 * M_PI / (r1 - r0) *
                       (r1 * (r1 * r1 - r0 * r0) / 2.0 -
                        (r1 * r1 * r1 - r0 * r0 * r0) / 3.0);
    return M_PI * r0 * r0 + rim;
}

}  // namespace

AuVec extract_au(const Image& img) {
    check(img.c == 3 && img.h == img.w && img.h >= 32,
          "extract_au: need a square rgb image, got ", img.c, "x", img.h, "x", img.w);
    AuVec au{};
    SkinEstimate skin = chin_skin(img);
    const double ref = skin.alpha;

    WindowStats eye = window_stats(img, kEyeWinLo, kEyeWinHi, 0.0, 1.0, ref);
    au[0] = clamp_unit(
        (eye.mass / (8.0 * kEyeHalfU) - kEyeMinHalfV) / kEyeGainHalfV);

    WindowStats corner = window_stats(img, kMouthWinLo, kMouthWinHi,
                                      kMouthWinHalfU, kCornerWinUMax, ref);
    au[1] = clamp_unit((corner.centroid_u - kCornerBaseU) / kCornerGainU);

    WindowStats mouth =
        window_stats(img, kMouthWinLo, kMouthWinHi, 0.0, kMouthWinHalfU, ref);
    au[2] = clamp_unit(
        (mouth.mass / (4.0 * kMouthHalfU) - kMouthMinHalfV) / kMouthGainHalfV);

    WindowStats brow = window_stats(img, kBrowWinLo, kBrowWinHi, 0.0, 1.0, ref);
    au[3] = clamp_unit((brow.centroid_v - kBrowBaseV) / kBrowRaise);

    au[4] = clamp_unit(cheek_mean_darkening(img, skin.r + skin.g) /
                       kCheekStrength);
    return au;
}

IdentityVec extract_identity(const Image& img) {
    check(img.c == 3 && img.h == img.w && img.h >= 32,
          "extract_identity: need a square rgb image, got ", img.c, "x", img.h, "x",
          img.w);
    SkinEstimate skin = chin_skin(img);

    // face area: (r+g)/(1.5 tone) recovers face coverage under skin and its
    // edge ramp, b - 0.4(r+g) adds back the ink-covered part, and the cheek
    // deficit is restored analytically from the extracted shading strength
    const double px = 2.0 / static_cast<double>(img.w);
    const double cell = px * px;
    double area = 0.0;
    if (skin.tone > 1e-6) {
        for (int64_t y = 0; y < img.h; ++y)
            for (int64_t x = 0; x < img.w; ++x) {
                const double rg =
                    static_cast<double>(img.at(0, y, x)) + img.at(1, y, x);
                const double ink = ink_alpha(img, y, x) - skin.alpha;
                area += std::min(1.0, rg / (1.5 * skin.tone) + ink) * cell;
            }
    }
    const double au4 = clamp_unit(cheek_mean_darkening(img, skin.r + skin.g) /
                                  kCheekStrength);
    area += kCheekStrength * au4 * 2.0 * cheek_weight_integral();
    const double semi_x = area / (M_PI * kFaceSemiY);
    const double aspect = semi_x / kFaceSemiX;

    WindowStats eye =
        window_stats(img, kEyeWinLo, kEyeWinHi, 0.0, 1.0, skin.alpha);
    const double eu = eye.centroid_u;
    const double es =
        (eu * kEyeUAspectRef / std::max(aspect, 1e-6) - kEyeUBase) / kEyeUGain + 0.2;

    auto clamp_range = [](double x, IdentityRange r) {
        return static_cast<float>(x < r.lo ? r.lo : (x > r.hi ? r.hi : x));
    };
    IdentityVec id{};
    id[0] = clamp_range(skin.hue, kIdentityRanges[0]);
    id[1] = clamp_range(aspect, kIdentityRanges[1]);
    id[2] = clamp_range(es, kIdentityRanges[2]);
    id[3] = clamp_range(skin.tone, kIdentityRanges[3]);
    return id;
}

IdentityVec sample_identity(Rng& rng) {
    IdentityVec id{};
    for (int k = 0; k < kNumIdentity; ++k)
        id[static_cast<size_t>(k)] =
            rng.uniform(kIdentityRanges[static_cast<size_t>(k)].lo,
                        kIdentityRanges[static_cast<size_t>(k)].hi);
    return id;
}

AuVec sample_au(Rng& rng) {
    AuVec au{};
    for (float& a : au) a = rng.uniform(0.0f, 1.0f);
    return au;
}

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

uint64_t fnv1a64_file(const std::string& path, uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "cannot open for hashing: ", path);
    std::vector<char> buf(1 << 16);
    uint64_t h = seed;
    while (in.good()) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64(buf.data(), static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

}  // namespace

std::vector<DatasetSample> generate_dataset(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    check(spec.n_identities > 0 && spec.per_identity > 0, "generate_dataset: counts");
    fs::create_directories(fs::path(spec.dir) / "images");

    std::vector<DatasetSample> samples;
    samples.reserve(static_cast<size_t>(spec.n_identities) *
                    static_cast<size_t>(spec.per_identity));
    std::ofstream labels(fs::path(spec.dir) / "labels.jsonl", std::ios::binary);
    check(labels.good(), "generate_dataset: cannot write labels in ", spec.dir);

    Rng master(spec.seed);
    int index = 0;
    for (int id = 0; id < spec.n_identities; ++id) {
        Rng id_rng = master.derive(static_cast<uint64_t>(id) * 2 + 1);
        IdentityVec identity = sample_identity(id_rng);
        for (int k = 0; k < spec.per_identity; ++k, ++index) {
            Rng s_rng = id_rng.derive(static_cast<uint64_t>(k) + 17);
            AuVec au = sample_au(s_rng);
            char name[32];
            std::snprintf(name, sizeof(name), "images/%06d.png", index);
            write_png((fs::path(spec.dir) / name).string(),
                      render_face(identity, au, spec.image_size));

            DatasetSample s;
            s.file = name;
            s.au = au;
            s.identity = identity;
            s.id = id;
            samples.push_back(s);

            nlohmann::json row;
            row["file"] = s.file;
            row["au"] = std::vector<float>(au.begin(), au.end());
            row["identity"] = std::vector<float>(identity.begin(), identity.end());
            row["id"] = id;
            labels << row.dump() << "\n";
        }
    }
    labels.close();

    uint64_t digest = fnv1a64_file((fs::path(spec.dir) / "labels.jsonl").string(),
                                   0xcbf29ce484222325ull);
    for (const DatasetSample& s : samples)
        digest = fnv1a64_file((fs::path(spec.dir) / s.file).string(), digest);

    nlohmann::json manifest;
    manifest["image_size"] = spec.image_size;
    manifest["n_identities"] = spec.n_identities;
    manifest["per_identity"] = spec.per_identity;
    manifest["seed"] = spec.seed;
    manifest["samples"] = samples.size();
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(digest));
    manifest["digest_fnv1a64"] = hex;
    std::ofstream mf(fs::path(spec.dir) / "dataset_manifest.json", std::ios::binary);
    mf << manifest.dump(2) << "\n";
    return samples;
}

std::vector<DatasetSample> load_labels(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "labels.jsonl");
    check(in.good(), "load_labels: no labels.jsonl under ", dir);
    std::vector<DatasetSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line);
        DatasetSample s;
        s.file = row.at("file").get<std::string>();
        auto au = row.at("au").get<std::vector<float>>();
        auto ident = row.at("identity").get<std::vector<float>>();
        check(au.size() == kNumAu && ident.size() == kNumIdentity,
              "load_labels: malformed row in ", dir);
        std::copy(au.begin(), au.end(), s.au.begin());
        std::copy(ident.begin(), ident.end(), s.identity.begin());
        s.id = row.at("id").get<int>();
        out.push_back(s);
    }
    return out;
}

}  // namespace wavexp
