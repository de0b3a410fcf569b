#include "wavexp/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace wavexp {

void TrainConfig::validate() const {
    check(batch_size >= 1, "TrainConfig: batch_size must be positive");
    check(lr > 0.0, "TrainConfig: lr must be positive");
    check(epochs >= 1, "TrainConfig: epochs must be positive");
    check(decay_start_epoch >= 1 && decay_start_epoch <= epochs,
          "TrainConfig: decay_start_epoch ", decay_start_epoch,
          " out of [1, ", epochs, "]");
    check(critic_iters >= 1, "TrainConfig: critic_iters must be >= 1");
    arch.validate();
}

TrainConfig TrainConfig::desk_preset() {
    TrainConfig c;
    c.arch = ArchConfig::desk_preset();
    c.epochs = 20;
    c.decay_start_epoch = 11;
    return c;
}

TrainConfig TrainConfig::paper_preset() {
    TrainConfig c;
    c.arch = ArchConfig::paper_preset();
    c.epochs = 50;
    c.decay_start_epoch = 31;
    return c;
}

void to_json(nlohmann::json& j, const ArchConfig& a) {
    j = nlohmann::json{{"image_size", a.image_size},
                       {"in_channels", a.in_channels},
                       {"n_down", a.n_down},
                       {"widths", a.widths},
                       {"n_au", a.n_au},
                       {"skip_levels", a.skip_levels},
                       {"critic_base_width", a.critic_base_width},
                       {"use_au_fusion", a.use_au_fusion},
                       {"use_wavelet_skips", a.use_wavelet_skips},
                       {"use_hf_critic", a.use_hf_critic}};
}

void from_json(const nlohmann::json& j, ArchConfig& a) {
    a.image_size = j.value("image_size", a.image_size);
    a.in_channels = j.value("in_channels", a.in_channels);
    a.n_down = j.value("n_down", a.n_down);
    a.widths = j.value("widths", a.widths);
    a.n_au = j.value("n_au", a.n_au);
    a.skip_levels = j.value("skip_levels", a.skip_levels);
    a.critic_base_width = j.value("critic_base_width", a.critic_base_width);
    a.use_au_fusion = j.value("use_au_fusion", a.use_au_fusion);
    a.use_wavelet_skips = j.value("use_wavelet_skips", a.use_wavelet_skips);
    a.use_hf_critic = j.value("use_hf_critic", a.use_hf_critic);
}

void to_json(nlohmann::json& j, const LossWeights& w) {
    j = nlohmann::json{{"lambda_gp", w.lambda_gp},
                       {"lambda1", w.lambda1},
                       {"lambda2", w.lambda2},
                       {"lambda3", w.lambda3}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
    w.lambda_gp = j.value("lambda_gp", w.lambda_gp);
    w.lambda1 = j.value("lambda1", w.lambda1);
    w.lambda2 = j.value("lambda2", w.lambda2);
    w.lambda3 = j.value("lambda3", w.lambda3);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"batch_size", c.batch_size},
                       {"lr", c.lr},
                       {"beta1", c.beta1},
                       {"beta2", c.beta2},
                       {"epochs", c.epochs},
                       {"decay_start_epoch", c.decay_start_epoch},
                       {"critic_iters", c.critic_iters},
                       {"weights", c.weights},
                       {"arch", c.arch},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epochs = j.value("epochs", c.epochs);
    c.decay_start_epoch = j.value("decay_start_epoch", c.decay_start_epoch);
    c.critic_iters = j.value("critic_iters", c.critic_iters);
    if (j.contains("weights")) j.at("weights").get_to(c.weights);
    if (j.contains("arch")) j.at("arch").get_to(c.arch);
    c.seed = j.value("seed", c.seed);
}

double lr_at(int64_t epoch, const TrainConfig& cfg) {
    check(epoch >= 1 && epoch <= cfg.epochs, "lr_at: epoch ", epoch,
          " out of [1, ", cfg.epochs, "]");
    if (epoch < cfg.decay_start_epoch) return cfg.lr;
    const double span =
        static_cast<double>(cfg.epochs + 1 - cfg.decay_start_epoch);
    return cfg.lr * static_cast<double>(cfg.epochs + 1 - epoch) / span;
}

TrainSet TrainSet::load(const std::string& dir) {
    TrainSet set;
    std::vector<DatasetSample> rows = load_labels(dir);
    check(!rows.empty(), "TrainSet::load: no samples in ", dir);
    set.images.reserve(rows.size());
    set.aus.reserve(rows.size());
    set.ids.reserve(rows.size());
    for (const DatasetSample& s : rows) {
        set.images.push_back(
            read_png((std::filesystem::path(dir) / s.file).string()));
        set.aus.push_back(s.au);
        set.ids.push_back(s.id);
    }
    return set;
}

Tensor batch_images(const TrainSet& data, const std::vector<int64_t>& idx) {
    check(!idx.empty(), "batch_images: empty index list");
    const Image& first = data.images[static_cast<size_t>(idx[0])];
    const int64_t n = static_cast<int64_t>(idx.size());
    Tensor t = Tensor::zeros({n, first.c, first.h, first.w});
    float* d = t.mutable_data();
    const int64_t plane = first.c * first.h * first.w;
    for (int64_t k = 0; k < n; ++k) {
        const Image& img = data.images[static_cast<size_t>(idx[k])];
        check(img.c == first.c && img.h == first.h && img.w == first.w,
              "batch_images: sample ", idx[k], " has shape ", img.c, "x",
              img.h, "x", img.w, ", batch expects ", first.c, "x", first.h,
              "x", first.w);
        for (int64_t i = 0; i < plane; ++i)
            d[k * plane + i] = 2.0f * img.data[static_cast<size_t>(i)] - 1.0f;
    }
    return t;
}

Tensor batch_aus(const TrainSet& data, const std::vector<int64_t>& idx) {
    check(!idx.empty(), "batch_aus: empty index list");
    const int64_t n = static_cast<int64_t>(idx.size());
    Tensor t = Tensor::zeros({n, kNumAu});
    float* d = t.mutable_data();
    for (int64_t k = 0; k < n; ++k) {
        const AuVec& au = data.aus[static_cast<size_t>(idx[k])];
        for (int64_t a = 0; a < kNumAu; ++a)
            d[k * kNumAu + a] = au[static_cast<size_t>(a)];
    }
    return t;
}

namespace {

Generator make_generator(const TrainConfig& cfg) {
    Rng r = Rng::with_stream(cfg.seed, 1);
    return Generator(cfg.arch, r);
}

DiscriminatorI make_di(const TrainConfig& cfg) {
    Rng r = Rng::with_stream(cfg.seed, 2);
    return DiscriminatorI(cfg.arch, r);
}

std::unique_ptr<DiscriminatorH> make_dh(const TrainConfig& cfg) {
    if (!cfg.arch.use_hf_critic) return nullptr;
    Rng r = Rng::with_stream(cfg.seed, 3);
    return std::make_unique<DiscriminatorH>(cfg.arch, r);
}

double scalar(const Tensor& t) { return static_cast<double>(t.data()[0]); }

}  // namespace

TrainState::TrainState(const TrainConfig& config)
    : cfg(config),
      gen(make_generator(config)),
      di(make_di(config)),
      dh(make_dh(config)),
      g_opt(config.beta1, config.beta2),
      di_opt(config.beta1, config.beta2),
      dh_opt(config.beta1, config.beta2) {
    cfg.validate();
}

std::vector<LossReport> train_epoch(TrainState& st, const TrainSet& data,
                                    int64_t epoch) {
    st.cfg.validate();
    check(data.size() > 0, "train_epoch: empty dataset");
    check(st.cfg.arch.n_au == kNumAu, "train_epoch: arch expects ",
          st.cfg.arch.n_au, " expression coordinates, labels carry ", kNumAu);
    const int64_t n = data.size();
    const int64_t bs = std::min<int64_t>(st.cfg.batch_size, n);
    const int64_t steps = (n + bs - 1) / bs;
    const double lr = lr_at(epoch, st.cfg);

    // one stream drives shuffling, target pairing and the penalty draws, so
    // a (seed, epoch) pair fixes the whole epoch
    Rng rng = Rng::with_stream(st.cfg.seed, 0x10000 + static_cast<uint64_t>(epoch));
    std::vector<int64_t> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int64_t i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)],
                  perm[static_cast<size_t>(rng.next_index(
                      static_cast<uint64_t>(i + 1)))]);

    std::vector<LossReport> reports;
    reports.reserve(static_cast<size_t>(steps));
    for (int64_t s = 0; s < steps; ++s) {
        const int64_t lo = s * bs;
        const int64_t hi = std::min(lo + bs, n);
        std::vector<int64_t> bi(perm.begin() + lo, perm.begin() + hi);
        std::vector<int64_t> ti(bi.size());
        for (int64_t& t : ti)
            t = static_cast<int64_t>(rng.next_index(static_cast<uint64_t>(n)));

        Tensor x = batch_images(data, bi);
        Tensor u_x = batch_aus(data, bi);
        Tensor u_y = batch_aus(data, ti);
        ++st.step;

        auto dump = [&](const char* what, double value) {
            std::ostringstream os;
            os << "train_epoch: " << what << " is " << value << " at step "
               << st.step << " (epoch " << epoch << ", seed " << st.cfg.seed
               << ", batch";
            for (int64_t b : bi) os << ' ' << b;
            os << ", targets";
            for (int64_t t : ti) os << ' ' << t;
            os << ")";
            throw Error(os.str());
        };

        LossReport rep;
        st.di.params().zero_grads();
        if (st.dh) st.dh->params().zero_grads();
        CriticLosses cl = critic_losses(st.gen, st.di, st.dh.get(), x, u_x,
                                        u_y, st.cfg.weights, rng);
        rep.d_adv = scalar(cl.adv);
        rep.d_hf = scalar(cl.hf_adv);
        rep.d_cond = scalar(cl.cond);
        rep.total_d = scalar(cl.total);
        if (!std::isfinite(rep.total_d)) dump("critic loss", rep.total_d);
        backward(cl.total);
        st.di_opt.step(st.di.params(), lr);
        if (st.dh) st.dh_opt.step(st.dh->params(), lr);

        if (st.step % st.cfg.critic_iters == 0) {
            st.gen.params().zero_grads();
            st.di.params().set_trainable(false);
            if (st.dh) st.dh->params().set_trainable(false);
            GeneratorLosses gl = generator_losses(st.gen, st.di, st.dh.get(),
                                                  x, u_x, u_y, st.cfg.weights);
            rep.g_adv = scalar(gl.adv);
            rep.g_hf = scalar(gl.hf_adv);
            rep.g_cond = scalar(gl.cond);
            rep.rec_self = scalar(gl.rec_self);
            rep.rec_cycle = scalar(gl.rec_cycle);
            rep.total_g = scalar(gl.total);
            const bool bad = !std::isfinite(rep.total_g);
            if (!bad) backward(gl.total);
            st.di.params().set_trainable(true);
            if (st.dh) st.dh->params().set_trainable(true);
            if (bad) dump("generator loss", rep.total_g);
            st.g_opt.step(st.gen.params(), lr);
        }
        reports.push_back(rep);
    }
    st.epochs_done = epoch;
    return reports;
}

namespace {

// Tensors are shared handles, so the copies below alias the live parameters;
// writing through them during load fills the real model.
struct TensorRef {
    std::string name;
    Tensor tensor;
};

std::vector<TensorRef> tensor_index(const TrainState& st) {
    std::vector<TensorRef> out;
    for (const Parameter& p : st.gen.params().params)
        out.push_back({"gen/" + p.name, p.tensor});
    for (const Parameter& p : st.di.params().params)
        out.push_back({"d_img/" + p.name, p.tensor});
    if (st.dh)
        for (const Parameter& p : st.dh->params().params)
            out.push_back({"d_hf/" + p.name, p.tensor});
    return out;
}

}  // namespace

void save_checkpoint(const TrainState& st, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<TensorRef> index = tensor_index(st);

    nlohmann::json tensors = nlohmann::json::array();
    int64_t offset = 0;  // in elements; the blob is packed 32-bit floats
    for (const TensorRef& r : index) {
        tensors.push_back({{"name", r.name},
                           {"shape", r.tensor.shape()},
                           {"offset", offset}});
        offset += r.tensor.size();
    }
    nlohmann::json manifest{{"arch", st.cfg.arch},
                            {"config", st.cfg},
                            {"step", st.step},
                            {"epochs_done", st.epochs_done},
                            {"elements", offset},
                            {"tensors", tensors}};

    const std::filesystem::path base(dir);
    std::ofstream mf(base / "manifest.json");
    check(mf.good(), "save_checkpoint: cannot write manifest under ", dir);
    mf << manifest.dump(2) << "\n";
    mf.close();
    check(mf.good(), "save_checkpoint: failed writing manifest under ", dir);

    std::ofstream bf(base / "params.bin", std::ios::binary);
    check(bf.good(), "save_checkpoint: cannot write params.bin under ", dir);
    for (const TensorRef& r : index)
        bf.write(reinterpret_cast<const char*>(r.tensor.data()),
                 static_cast<std::streamsize>(r.tensor.size() *
                                              sizeof(float)));
    bf.close();
    check(bf.good(), "save_checkpoint: failed writing params.bin under ", dir);
}

namespace {

template <typename T>
void check_arch_field(const char* name, const T& stored, const T& expected) {
    if (stored != expected)
        fail("load_checkpoint: arch mismatch at ", name, " (checkpoint has ",
             stored, ", caller expects ", expected, ")");
}

template <>
void check_arch_field(const char* name, const std::vector<int64_t>& stored,
                      const std::vector<int64_t>& expected) {
    if (stored != expected)
        fail("load_checkpoint: arch mismatch at ", name, " (checkpoint has ",
             shape_str(stored), ", caller expects ", shape_str(expected), ")");
}

void check_arch(const ArchConfig& stored, const ArchConfig& expected) {
    check_arch_field("image_size", stored.image_size, expected.image_size);
    check_arch_field("in_channels", stored.in_channels, expected.in_channels);
    check_arch_field("n_down", stored.n_down, expected.n_down);
    check_arch_field("widths", stored.widths, expected.widths);
    check_arch_field("n_au", stored.n_au, expected.n_au);
    check_arch_field("skip_levels", stored.skip_levels, expected.skip_levels);
    check_arch_field("critic_base_width", stored.critic_base_width,
                     expected.critic_base_width);
    check_arch_field("use_au_fusion", stored.use_au_fusion,
                     expected.use_au_fusion);
    check_arch_field("use_wavelet_skips", stored.use_wavelet_skips,
                     expected.use_wavelet_skips);
    check_arch_field("use_hf_critic", stored.use_hf_critic,
                     expected.use_hf_critic);
}

}  // namespace

namespace {

nlohmann::json read_manifest(const std::string& dir) {
    std::ifstream mf(std::filesystem::path(dir) / "manifest.json");
    check(mf.good(), "load_checkpoint: cannot open manifest under ", dir);
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        fail("load_checkpoint: bad manifest under ", dir, ": ", e.what());
    }
    check(manifest.contains("config") && manifest.contains("arch") &&
              manifest.contains("step") && manifest.contains("tensors"),
          "load_checkpoint: manifest under ", dir, " is missing sections");
    return manifest;
}

}  // namespace

TrainConfig peek_checkpoint_config(const std::string& dir) {
    TrainConfig stored;
    read_manifest(dir).at("config").get_to(stored);
    return stored;
}

TrainState load_checkpoint(const std::string& dir,
                           const TrainConfig& expected) {
    const std::filesystem::path base(dir);
    nlohmann::json manifest = read_manifest(dir);

    TrainConfig stored;
    manifest.at("config").get_to(stored);
    ArchConfig stored_arch;
    manifest.at("arch").get_to(stored_arch);
    check_arch(stored_arch, stored.arch);  // internal consistency
    check_arch(stored_arch, expected.arch);

    TrainState st(stored);
    st.step = manifest.at("step").get<int64_t>();
    st.epochs_done = manifest.value("epochs_done", int64_t{0});

    std::vector<TensorRef> index = tensor_index(st);
    const nlohmann::json& tensors = manifest.at("tensors");
    check(tensors.size() == index.size(), "load_checkpoint: manifest lists ",
          tensors.size(), " tensors, model has ", index.size());
    int64_t offset = 0;
    for (size_t i = 0; i < index.size(); ++i) {
        const nlohmann::json& row = tensors[i];
        const std::string name = row.at("name").get<std::string>();
        check(name == index[i].name, "load_checkpoint: tensor ", i, " is ",
              name, ", model expects ", index[i].name);
        const Shape shape = row.at("shape").get<Shape>();
        check(shape == index[i].tensor.shape(), "load_checkpoint: ", name,
              " has shape ", shape_str(shape), ", model expects ",
              shape_str(index[i].tensor.shape()));
        check(row.at("offset").get<int64_t>() == offset,
              "load_checkpoint: ", name, " offset ",
              row.at("offset").get<int64_t>(), ", expected ", offset);
        offset += index[i].tensor.size();
    }

    std::ifstream bf(base / "params.bin", std::ios::binary | std::ios::ate);
    check(bf.good(), "load_checkpoint: cannot open params.bin under ", dir);
    const int64_t have = static_cast<int64_t>(bf.tellg());
    const int64_t need = offset * static_cast<int64_t>(sizeof(float));
    check(have == need, "load_checkpoint: params.bin holds ", have,
          " bytes, manifest needs ", need);
    bf.seekg(0);
    for (TensorRef& r : index)
        bf.read(reinterpret_cast<char*>(r.tensor.mutable_data()),
                static_cast<std::streamsize>(r.tensor.size() * sizeof(float)));
    check(bf.good(), "load_checkpoint: short read from params.bin under ",
          dir);
    return st;
}

}  // namespace wavexp
