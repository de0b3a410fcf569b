// Command-line front end: dataset synthesis, training, expression editing,
// metric reports and wavelet inspection. Every run resolves its flags (plus
// an optional JSON config) into <out>/config.json next to a VERSION stamp,
// so any artifact directory documents how to reproduce itself. Failures exit
// nonzero with a single "wavexp: error: ..." line on stderr.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wavexp/metrics.hpp"
#include "wavexp/ops.hpp"
#include "wavexp/trainer.hpp"
#include "wavexp/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wavexp;

namespace {

constexpr const char* kVersion = "0.1.0";

// Relative output paths land under $WAVEXP_OUT_ROOT when it is set, so a
// batch of runs can be redirected without touching their flags.
fs::path resolve_out(const std::string& out) {
    fs::path p(out);
    if (const char* root = std::getenv("WAVEXP_OUT_ROOT");
        root != nullptr && *root != '\0' && p.is_relative())
        p = fs::path(root) / p;
    std::error_code ec;
    fs::create_directories(p, ec);
    check(!ec, "cannot create output directory ", p.string(), ": ",
          ec.message());
    return p;
}

void stamp_run(const fs::path& dir, const json& resolved) {
    std::ofstream cf(dir / "config.json");
    check(cf.good(), "cannot write ", (dir / "config.json").string());
    cf << resolved.dump(2) << "\n";
    cf.close();
    check(cf.good(), "failed writing ", (dir / "config.json").string());
    std::ofstream vf(dir / "VERSION");
    check(vf.good(), "cannot write ", (dir / "VERSION").string());
    vf << "wavexp " << kVersion << "\n";
}

float parse_float(const std::string& tok, const char* what) {
    size_t pos = 0;
    float v = 0.0f;
    try {
        v = std::stof(tok, &pos);
    } catch (const std::exception&) {
        fail(what, ": '", tok, "' is not a number");
    }
    check(pos == tok.size(), what, ": '", tok, "' is not a number");
    return v;
}

AuVec parse_au_csv(const std::string& s, const char* what) {
    AuVec v{};
    std::stringstream ss(s);
    std::string tok;
    size_t i = 0;
    while (std::getline(ss, tok, ',')) {
        check(i < v.size(), what, ": expected ", kNumAu,
              " comma-separated values, got more in '", s, "'");
        v[i++] = parse_float(tok, what);
    }
    check(i == v.size(), what, ": expected ", kNumAu,
          " comma-separated values, got ", i, " in '", s, "'");
    return v;
}

Tensor images_to_batch(const std::vector<Image>& imgs, int64_t lo,
                       int64_t hi) {
    const Image& first = imgs[static_cast<size_t>(lo)];
    Tensor t = Tensor::zeros({hi - lo, first.c, first.h, first.w});
    float* d = t.mutable_data();
    const int64_t plane = first.c * first.h * first.w;
    for (int64_t k = lo; k < hi; ++k) {
        const Image& img = imgs[static_cast<size_t>(k)];
        check(img.c == first.c && img.h == first.h && img.w == first.w,
              "image ", k, " has shape ", img.c, "x", img.h, "x", img.w,
              ", batch expects ", first.c, "x", first.h, "x", first.w);
        for (int64_t i = 0; i < plane; ++i)
            d[(k - lo) * plane + i] =
                2.0f * img.data[static_cast<size_t>(i)] - 1.0f;
    }
    return t;
}

// ---------------------------------------------------------------- synth --

struct SynthArgs {
    int people = 100;
    int per = 20;
    int size = 64;
    uint64_t seed = 7;
    std::string out;
};

void cmd_synth(const SynthArgs& a) {
    check(a.people >= 1, "synth: --people must be >= 1");
    check(a.per >= 1, "synth: --per must be >= 1");
    check(a.size >= 16 && a.size % 2 == 0,
          "synth: --size must be even and >= 16 (got ", a.size, ")");
    fs::path out = resolve_out(a.out);
    stamp_run(out, json{{"command", "synth"},
                        {"people", a.people},
                        {"per", a.per},
                        {"size", a.size},
                        {"seed", a.seed},
                        {"out", out.string()}});
    DatasetSpec spec;
    spec.dir = out.string();
    spec.n_identities = a.people;
    spec.per_identity = a.per;
    spec.image_size = a.size;
    spec.seed = a.seed;
    const auto rows = generate_dataset(spec);
    std::cout << "wrote " << rows.size() << " images under " << out.string()
              << "\n";
}

// ---------------------------------------------------------------- train --

struct TrainArgs {
    std::string config_path;
    std::string data;
    std::string out;
    std::string preset = "desk";
    std::vector<std::string> ablations;
    bool resume = false;

    int64_t epochs = 0;
    int64_t decay_start = 0;
    int64_t batch_size = 0;
    int64_t critic_iters = 0;
    double lr = 0.0;
    uint64_t seed = 0;
    // set by the parser for flags that were actually passed
    bool has_epochs = false, has_decay = false, has_batch = false,
         has_critic = false, has_lr = false, has_seed = false;
};

TrainConfig resolve_train_config(const TrainArgs& a) {
    TrainConfig cfg = a.preset == "paper" ? TrainConfig::paper_preset()
                                          : TrainConfig::desk_preset();
    if (!a.config_path.empty()) {
        std::ifstream f(a.config_path);
        check(f.good(), "train: cannot open config ", a.config_path);
        json j;
        try {
            f >> j;
        } catch (const json::exception& e) {
            fail("train: bad config ", a.config_path, ": ", e.what());
        }
        j.get_to(cfg);
    }
    if (a.has_epochs) cfg.epochs = a.epochs;
    if (a.has_decay) cfg.decay_start_epoch = a.decay_start;
    if (a.has_batch) cfg.batch_size = a.batch_size;
    if (a.has_critic) cfg.critic_iters = a.critic_iters;
    if (a.has_lr) cfg.lr = a.lr;
    if (a.has_seed) cfg.seed = a.seed;
    for (const std::string& ab : a.ablations) {
        if (ab == "no-skips")
            cfg.arch.use_wavelet_skips = false;
        else if (ab == "no-hf-critic")
            cfg.arch.use_hf_critic = false;
        else if (ab == "no-au-fusion")
            cfg.arch.use_au_fusion = false;
        else
            fail("train: unknown ablation '", ab,
                 "' (choices: no-skips, no-hf-critic, no-au-fusion)");
    }
    cfg.validate();
    return cfg;
}

void write_recon_grid(const TrainState& st, const TrainSet& set,
                      const fs::path& file) {
    const int64_t k = std::min<int64_t>(8, set.size());
    std::vector<int64_t> idx(static_cast<size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    NoGradGuard ng;
    Tensor x = batch_images(set, idx);
    Tensor y = st.gen.forward(x, Tensor::zeros({k, st.cfg.arch.n_au}));
    std::vector<Image> tiles;
    for (int64_t i = 0; i < k; ++i) tiles.push_back(tensor_to_image(x, i));
    for (int64_t i = 0; i < k; ++i) tiles.push_back(tensor_to_image(y, i));
    write_png(file.string(), make_grid(tiles, k));
}

void print_epoch_line(int64_t epoch, int64_t epochs, double lr,
                      const std::vector<LossReport>& reports,
                      int64_t step_base, int64_t critic_iters) {
    double d = 0.0, g = 0.0;
    int64_t gn = 0;
    for (size_t i = 0; i < reports.size(); ++i) {
        d += reports[i].total_d;
        if ((step_base + 1 + static_cast<int64_t>(i)) % critic_iters == 0) {
            g += reports[i].total_g;
            ++gn;
        }
    }
    d /= static_cast<double>(reports.size());
    if (gn > 0) g /= static_cast<double>(gn);
    std::printf("epoch %3lld/%lld  steps %zu  lr %.3g  d %.4f  g %.4f\n",
                static_cast<long long>(epoch), static_cast<long long>(epochs),
                reports.size(), lr, d, g);
    std::fflush(stdout);
}

void cmd_train(const TrainArgs& a) {
    TrainConfig cfg = resolve_train_config(a);
    fs::path out = resolve_out(a.out);
    stamp_run(out, json{{"command", "train"},
                        {"data", a.data},
                        {"out", out.string()},
                        {"resume", a.resume},
                        {"config", cfg}});

    TrainSet set = TrainSet::load(a.data);
    const Image& probe = set.images[0];
    check(probe.h == cfg.arch.image_size && probe.w == cfg.arch.image_size &&
              probe.c == cfg.arch.in_channels,
          "train: dataset images are ", probe.c, "x", probe.h, "x", probe.w,
          ", model expects ", cfg.arch.in_channels, "x", cfg.arch.image_size,
          "x", cfg.arch.image_size);

    const fs::path latest = out / "ckpt_latest";
    TrainState st = a.resume ? load_checkpoint(latest.string(), cfg)
                             : TrainState(cfg);
    if (a.resume) {
        // the arch is pinned by load_checkpoint; schedule fields follow the
        // resolved config so a resume may extend epochs or change the lr
        st.cfg = cfg;
        st.g_opt = Adam(cfg.beta1, cfg.beta2);
        st.di_opt = Adam(cfg.beta1, cfg.beta2);
        st.dh_opt = Adam(cfg.beta1, cfg.beta2);
        std::cout << "resuming after epoch " << st.epochs_done << " (step "
                  << st.step << ")\n";
    }

    const fs::path loss_path = out / "loss.csv";
    const bool fresh_log = !a.resume || !fs::exists(loss_path) ||
                           fs::file_size(loss_path) == 0;
    std::ofstream loss(loss_path,
                       a.resume ? std::ios::app : std::ios::trunc);
    check(loss.good(), "train: cannot write ", loss_path.string());
    if (fresh_log) loss << LossReport::csv_header() << "\n";

    const int64_t first_epoch = st.epochs_done + 1;
    if (first_epoch > cfg.epochs)
        std::cout << "checkpoint already covers " << cfg.epochs
                  << " epochs; nothing to train\n";
    for (int64_t epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
        const int64_t step_base = st.step;
        std::vector<LossReport> reports = train_epoch(st, set, epoch);
        for (size_t i = 0; i < reports.size(); ++i)
            loss << reports[i].csv_row(step_base + 1 + static_cast<int64_t>(i),
                                       epoch)
                 << "\n";
        loss.flush();
        check(loss.good(), "train: failed writing ", loss_path.string());
        save_checkpoint(st, latest.string());
        char name[40];
        std::snprintf(name, sizeof(name), "recon_epoch_%03lld.png",
                      static_cast<long long>(epoch));
        write_recon_grid(st, set, out / name);
        print_epoch_line(epoch, cfg.epochs, lr_at(epoch, cfg), reports,
                         step_base, cfg.critic_iters);
    }
    save_checkpoint(st, (out / "ckpt_final").string());
    std::cout << "final checkpoint: " << (out / "ckpt_final").string()
              << " (step " << st.step << ")\n";
}

// ----------------------------------------------------------------- edit --

struct EditArgs {
    std::string ckpt;
    std::string input;
    std::string out;
    int64_t steps = 8;
    std::vector<std::string> deltas;
    std::string from_csv;
    std::string to_csv;
};

void cmd_edit(const EditArgs& a) {
    check(a.steps >= 1, "edit: --steps must be >= 1");
    const bool sweep = !a.deltas.empty();
    const bool interp = !a.from_csv.empty() || !a.to_csv.empty();
    check(sweep != interp,
          "edit: pass either --delta or --from/--to (exactly one form)");
    if (interp)
        check(!a.from_csv.empty() && !a.to_csv.empty(),
              "edit: --from and --to must be given together");

    TrainState st = load_checkpoint(a.ckpt, peek_checkpoint_config(a.ckpt));
    const int64_t S = st.cfg.arch.image_size;
    const int64_t n_au = st.cfg.arch.n_au;
    Image input = read_png(a.input);
    check(input.h == S && input.w == S, "edit: input is ", input.h, "x",
          input.w, ", checkpoint expects ", S, "x", S);

    std::vector<std::vector<float>> schedule(
        static_cast<size_t>(a.steps), std::vector<float>(
                                          static_cast<size_t>(n_au), 0.0f));
    if (sweep) {
        std::vector<float> delta(static_cast<size_t>(n_au), 0.0f);
        for (const std::string& d : a.deltas) {
            const size_t eq = d.find('=');
            check(eq != std::string::npos,
                  "edit: --delta expects INDEX=VALUE, got '", d, "'");
            const float idx_f = parse_float(d.substr(0, eq), "edit: --delta");
            const int64_t idx = static_cast<int64_t>(idx_f);
            check(static_cast<float>(idx) == idx_f && idx >= 0 && idx < n_au,
                  "edit: coordinate ", d.substr(0, eq), " out of range [0, ",
                  n_au, ")");
            delta[static_cast<size_t>(idx)] =
                parse_float(d.substr(eq + 1), "edit: --delta");
        }
        // ramp from one increment up to the full delta; the input itself
        // stands in for step 0
        for (int64_t k = 1; k <= a.steps; ++k) {
            const float t = static_cast<float>(k) /
                            static_cast<float>(a.steps);
            for (size_t j = 0; j < delta.size(); ++j)
                schedule[static_cast<size_t>(k - 1)][j] = t * delta[j];
        }
    } else {
        check(n_au == kNumAu, "edit: interpolation needs ", kNumAu,
              "-coordinate labels, checkpoint has ", n_au);
        const AuVec from = parse_au_csv(a.from_csv, "edit: --from");
        const AuVec to = parse_au_csv(a.to_csv, "edit: --to");
        const AuVec u_x = extract_au(input);
        for (int64_t k = 0; k < a.steps; ++k) {
            const float t = a.steps == 1
                                ? 0.0f
                                : static_cast<float>(k) /
                                      static_cast<float>(a.steps - 1);
            for (size_t j = 0; j < from.size(); ++j)
                schedule[static_cast<size_t>(k)][j] =
                    from[j] + t * (to[j] - from[j]) - u_x[j];
        }
    }

    fs::path out = resolve_out(a.out);
    stamp_run(out, json{{"command", "edit"},
                        {"ckpt", a.ckpt},
                        {"input", a.input},
                        {"steps", a.steps},
                        {"delta", a.deltas},
                        {"from", a.from_csv},
                        {"to", a.to_csv},
                        {"out", out.string()},
                        {"u_rel", schedule}});

    NoGradGuard ng;
    Tensor xb = Tensor::zeros({a.steps, input.c, S, S});
    Tensor ub = Tensor::zeros({a.steps, n_au});
    {
        float* xd = xb.mutable_data();
        const int64_t plane = input.c * S * S;
        for (int64_t k = 0; k < a.steps; ++k)
            for (int64_t i = 0; i < plane; ++i)
                xd[k * plane + i] =
                    2.0f * input.data[static_cast<size_t>(i)] - 1.0f;
        float* ud = ub.mutable_data();
        for (int64_t k = 0; k < a.steps; ++k)
            for (int64_t j = 0; j < n_au; ++j)
                ud[k * n_au + j] =
                    schedule[static_cast<size_t>(k)][static_cast<size_t>(j)];
    }
    Tensor y = st.gen.forward(xb, ub);

    std::vector<Image> tiles{input};
    for (int64_t k = 0; k < a.steps; ++k)
        tiles.push_back(tensor_to_image(y, k));
    // strip layout: input leftmost, no padding, so width = (steps+1) * S
    write_png((out / "grid.png").string(),
              make_grid(tiles, a.steps + 1, /*pad=*/0));
    std::cout << "grid: " << (out / "grid.png").string() << "\n";
}

// ----------------------------------------------------------------- eval --

struct EvalArgs {
    std::string ckpt;
    std::string data;
    std::string out;
    std::string run = "eval";
    uint64_t seed = 7;
    int64_t limit = 0;
};

void cmd_eval(const EvalArgs& a) {
    TrainState st = load_checkpoint(a.ckpt, peek_checkpoint_config(a.ckpt));
    TrainSet set = TrainSet::load(a.data);
    const int64_t S = st.cfg.arch.image_size;
    check(set.images[0].h == S && set.images[0].w == S,
          "eval: dataset images are ", set.images[0].h, "x", set.images[0].w,
          ", checkpoint expects ", S, "x", S);
    int64_t n = set.size();
    if (a.limit > 0) n = std::min(n, a.limit);
    check(n >= 2, "eval: need at least 2 images to pair inputs with targets");

    fs::path out = resolve_out(a.out);
    stamp_run(out, json{{"command", "eval"},
                        {"ckpt", a.ckpt},
                        {"data", a.data},
                        {"run", a.run},
                        {"seed", a.seed},
                        {"limit", a.limit},
                        {"out", out.string()}});

    // every input gets a seeded partner other than itself; the partner's
    // label is the edit target
    Rng rng = Rng::with_stream(a.seed, 0x20000);
    std::vector<int64_t> partner(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        partner[static_cast<size_t>(i)] =
            (i + 1 +
             static_cast<int64_t>(rng.next_index(
                 static_cast<uint64_t>(n - 1)))) %
            n;

    std::vector<Image> inputs, edited, recon;
    std::vector<AuVec> targets;
    inputs.reserve(static_cast<size_t>(n));
    {
        NoGradGuard ng;
        for (int64_t lo = 0; lo < n; lo += 8) {
            const int64_t hi = std::min<int64_t>(lo + 8, n);
            std::vector<int64_t> idx, tidx;
            for (int64_t i = lo; i < hi; ++i) {
                idx.push_back(i);
                tidx.push_back(partner[static_cast<size_t>(i)]);
            }
            Tensor x = batch_images(set, idx);
            Tensor u_rel = sub(batch_aus(set, tidx), batch_aus(set, idx));
            Tensor e = st.gen.forward(x, u_rel);
            Tensor r = st.gen.forward(
                x, Tensor::zeros({hi - lo, st.cfg.arch.n_au}));
            for (int64_t i = lo; i < hi; ++i) {
                inputs.push_back(set.images[static_cast<size_t>(i)]);
                edited.push_back(tensor_to_image(e, i - lo));
                recon.push_back(tensor_to_image(r, i - lo));
                targets.push_back(
                    set.aus[static_cast<size_t>(
                        partner[static_cast<size_t>(i)])]);
            }
        }
    }

    MetricReport rep;
    double ssim_sum = 0.0, psnr_sum = 0.0, l1_sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const size_t k = static_cast<size_t>(i);
        ssim_sum += ssim(inputs[k], recon[k]);
        const PsnrL1 p = psnr_l1(inputs[k], recon[k]);
        psnr_sum += p.psnr;
        l1_sum += p.l1;
    }
    rep.ssim = ssim_sum / static_cast<double>(n);
    rep.psnr = psnr_sum / static_cast<double>(n);
    rep.l1 = l1_sum / static_cast<double>(n);
    rep.acd = acd(inputs, edited);
    rep.ed = expression_distance(edited, targets);

    FeatureNet net = train_feature_net(set, a.seed);
    std::printf("expression classifier held-out accuracy: %.3f\n",
                net.heldout_accuracy);
    if (net.ok()) {
        std::vector<std::vector<double>> probs;
        std::vector<std::vector<float>> f_real, f_fake;
        for (int64_t lo = 0; lo < n; lo += 64) {
            const int64_t hi = std::min<int64_t>(lo + 64, n);
            for (auto& row : net.probabilities(images_to_batch(edited, lo, hi)))
                probs.push_back(std::move(row));
            for (auto& row : net.features(images_to_batch(inputs, lo, hi)))
                f_real.push_back(std::move(row));
            for (auto& row : net.features(images_to_batch(edited, lo, hi)))
                f_fake.push_back(std::move(row));
        }
        rep.is_score = inception_score(probs);
        rep.fid = fid(gaussian_stats(f_real), gaussian_stats(f_fake));
    } else {
        std::printf("below the 0.90 bar; is/fid reported as na\n");
        rep.is_score = std::numeric_limits<double>::quiet_NaN();
        rep.fid = std::numeric_limits<double>::quiet_NaN();
    }

    const fs::path report = out / "report.csv";
    std::ofstream rf(report);
    check(rf.good(), "eval: cannot write ", report.string());
    rf << MetricReport::csv_header() << "\n"
       << rep.csv_row(a.run, st.step) << "\n";
    rf.close();
    check(rf.good(), "eval: failed writing ", report.string());
    std::cout << MetricReport::csv_header() << "\n"
              << rep.csv_row(a.run, st.step) << "\n";
}

// -------------------------------------------------------------- wavelet --

struct WaveletArgs {
    std::string input;
    std::string out;
};

void place_subband(Image& mosaic, const Tensor& band, int64_t y0,
                   int64_t x0) {
    const Shape& s = band.shape();
    const int64_t c = s[1], h = s[2], w = s[3];
    const float* d = band.data();
    float lo = d[0], hi = d[0];
    for (int64_t i = 0; i < band.size(); ++i) {
        lo = std::min(lo, d[i]);
        hi = std::max(hi, d[i]);
    }
    const float span = hi - lo;  // a constant band renders as black
    for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                const float v = d[(ch * h + y) * w + x];
                mosaic.at(ch, y0 + y, x0 + x) =
                    span > 0.0f ? (v - lo) / span : 0.0f;
            }
}

void cmd_wavelet(const WaveletArgs& a) {
    Image img = read_png(a.input);
    check(img.h % 2 == 0 && img.w % 2 == 0,
          "wavelet: input must have even height and width (got ", img.h, "x",
          img.w, ")");
    fs::path out = resolve_out(a.out);
    stamp_run(out, json{{"command", "wavelet"},
                        {"input", a.input},
                        {"out", out.string()}});

    NoGradGuard ng;
    Subbands sb = dwt2(image_to_tensor(img));
    Image mosaic(img.c, img.h, img.w);
    place_subband(mosaic, sb.ll, 0, 0);
    place_subband(mosaic, sb.hl, 0, img.w / 2);
    place_subband(mosaic, sb.lh, img.h / 2, 0);
    place_subband(mosaic, sb.hh, img.h / 2, img.w / 2);
    write_png((out / "mosaic.png").string(), mosaic);
    std::cout << "mosaic: " << (out / "mosaic.png").string() << "\n";
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavexp: wavelet-conditioned expression editing toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("wavexp ") + kVersion);

    SynthArgs sy;
    CLI::App* synth =
        app.add_subcommand("synth", "render a labeled synthetic face dataset");
    synth->add_option("--people", sy.people, "distinct identities");
    synth->add_option("--per", sy.per, "images per identity");
    synth->add_option("--size", sy.size, "image side in pixels (even)");
    synth->add_option("--seed", sy.seed, "sampling seed");
    synth->add_option("--out", sy.out, "output directory")->required();
    synth->callback([&] { cmd_synth(sy); });

    TrainArgs tr;
    CLI::App* train =
        app.add_subcommand("train", "train the editing model on a dataset");
    train->add_option("--config", tr.config_path,
                      "JSON training config (flags override its values)");
    train->add_option("--data", tr.data, "dataset directory")->required();
    train->add_option("--out", tr.out, "run directory")->required();
    train->add_option("--preset", tr.preset, "base config before overrides")
        ->check(CLI::IsMember({"desk", "paper"}));
    train->add_option("--ablation", tr.ablations,
                      "disable a component (repeatable)")
        ->check(CLI::IsMember({"no-skips", "no-hf-critic", "no-au-fusion"}));
    train->add_flag("--resume", tr.resume,
                    "continue from <out>/ckpt_latest");
    auto* oe = train->add_option("--epochs", tr.epochs, "training epochs");
    auto* od = train->add_option("--decay-start", tr.decay_start,
                                 "first epoch of the linear lr decay");
    auto* ob = train->add_option("--batch-size", tr.batch_size, "batch size");
    auto* oc = train->add_option("--critic-iters", tr.critic_iters,
                                 "critic steps per generator step");
    auto* ol = train->add_option("--lr", tr.lr, "base learning rate");
    auto* os = train->add_option("--seed", tr.seed, "training seed");
    train->callback([&, oe, od, ob, oc, ol, os] {
        tr.has_epochs = oe->count() > 0;
        tr.has_decay = od->count() > 0;
        tr.has_batch = ob->count() > 0;
        tr.has_critic = oc->count() > 0;
        tr.has_lr = ol->count() > 0;
        tr.has_seed = os->count() > 0;
        cmd_train(tr);
    });

    EditArgs ed;
    CLI::App* edit = app.add_subcommand(
        "edit", "render an expression-editing strip from a checkpoint");
    edit->add_option("--ckpt", ed.ckpt, "checkpoint directory")->required();
    edit->add_option("--input", ed.input, "input image (png)")->required();
    edit->add_option("--out", ed.out, "output directory")->required();
    edit->add_option("--steps", ed.steps, "edited frames in the strip");
    edit->add_option("--delta", ed.deltas,
                     "coordinate sweep INDEX=VALUE (repeatable)");
    edit->add_option("--from", ed.from_csv,
                     "interpolation start target (csv of coordinates)");
    edit->add_option("--to", ed.to_csv,
                     "interpolation end target (csv of coordinates)");
    edit->callback([&] { cmd_edit(ed); });

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "score a checkpoint on a dataset and write a metric report");
    eval_cmd->add_option("--ckpt", ev.ckpt, "checkpoint directory")
        ->required();
    eval_cmd->add_option("--data", ev.data, "dataset directory")->required();
    eval_cmd->add_option("--out", ev.out, "output directory")->required();
    eval_cmd->add_option("--run", ev.run, "run label for the csv");
    eval_cmd->add_option("--seed", ev.seed, "pairing and classifier seed");
    eval_cmd->add_option("--limit", ev.limit,
                         "evaluate only the first N images (0 = all)");
    eval_cmd->callback([&] { cmd_eval(ev); });

    WaveletArgs wv;
    CLI::App* wavelet = app.add_subcommand(
        "wavelet", "write the 2x2 subband mosaic of an image");
    wavelet->add_option("--input", wv.input, "input image (png)")->required();
    wavelet->add_option("--out", wv.out, "output directory")->required();
    wavelet->callback([&] { cmd_wavelet(wv); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
        std::cerr << "wavexp: error: " << one_line(e.what()) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "wavexp: error: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
