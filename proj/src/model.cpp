#include "tspfcn/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tspfcn/errors.hpp"

namespace tspfcn::net {

std::string to_string(OutputActivation a) {
    return a == OutputActivation::paired_sigmoid ? "paired-sigmoid" : "channel-sigmoid";
}

OutputActivation output_activation_from_string(const std::string& s) {
    if (s == "paired-sigmoid") {
        return OutputActivation::paired_sigmoid;
    }
    if (s == "channel-sigmoid") {
        return OutputActivation::channel_sigmoid;
    }
    throw ConfigError("unknown output activation '" + s +
                      "' (expected paired-sigmoid or channel-sigmoid)");
}

ArchConfig ArchConfig::paper() {
    ArchConfig cfg;
    cfg.input_size = 224;
    cfg.channels = {64, 128, 256, 512, 512};
    cfg.head_channels = 1024;
    cfg.score_channels = 1;
    return cfg;
}

ArchConfig ArchConfig::desk() { return ArchConfig{}; }

void ArchConfig::validate() const {
    if (input_size <= 0 || input_size % 32 != 0) {
        throw ConfigError("input size must be a positive multiple of 32 (five 2x2 pools), got " +
                          std::to_string(input_size));
    }
    for (int b = 0; b < kBlocks; ++b) {
        if (channels[b] <= 0 || convs_per_block[b] <= 0) {
            throw ConfigError("channel schedule and convs per block must be positive");
        }
    }
    if (head_channels <= 0 || score_channels <= 0) {
        throw ConfigError("head and score channels must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout rate must lie in [0, 1)");
    }
}

nlohmann::json to_json(const ArchConfig& cfg) {
    return {{"input_size", cfg.input_size},         {"channels", cfg.channels},
            {"convs_per_block", cfg.convs_per_block}, {"head_channels", cfg.head_channels},
            {"score_channels", cfg.score_channels},   {"dropout_rate", cfg.dropout_rate},
            {"output", to_string(cfg.output)}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
    try {
        ArchConfig cfg;
        cfg.input_size = j.at("input_size").get<int>();
        cfg.channels = j.at("channels").get<std::array<int, kBlocks>>();
        cfg.convs_per_block = j.at("convs_per_block").get<std::array<int, kBlocks>>();
        cfg.head_channels = j.at("head_channels").get<int>();
        cfg.score_channels = j.at("score_channels").get<int>();
        cfg.dropout_rate = j.at("dropout_rate").get<double>();
        cfg.output = output_activation_from_string(j.value("output", "paired-sigmoid"));
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed architecture config: ") + e.what());
    }
}

namespace {

std::string conv_name(int block, int k) {
    return "conv" + std::to_string(block + 1) + "_" + std::to_string(k + 1);
}

constexpr std::array<int, 3> kUpStride{8, 16, 32};
constexpr std::array<const char*, 3> kScoreNames{"score3", "score4", "score5"};
constexpr std::array<const char*, 3> kUpNames{"up3", "up4", "up5"};

} // namespace

template <typename T>
Model<T>::Model(const ArchConfig& cfg) : arch_(cfg) {
    cfg.validate();
    auto add = [&](const std::string& name, Shape w, int out) {
        params_.push_back({name + ".w", Tensor<T>(std::move(w))});
        params_.push_back({name + ".b", Tensor<T>({out})});
    };
    int in = 3;
    for (int b = 0; b < kBlocks; ++b) {
        for (int k = 0; k < cfg.convs_per_block[b]; ++k) {
            add(conv_name(b, k), {cfg.channels[b], in, 3, 3}, cfg.channels[b]);
            in = cfg.channels[b];
        }
    }
    add("head1", {cfg.head_channels, cfg.channels[4], 3, 3}, cfg.head_channels);
    add("head2", {cfg.head_channels, cfg.head_channels, 1, 1}, cfg.head_channels);
    const int sc = cfg.score_channels;
    add("score3", {sc, cfg.channels[2], 1, 1}, sc);
    add("score4", {sc, cfg.channels[3], 1, 1}, sc);
    add("score5", {sc, cfg.head_channels, 1, 1}, sc);
    for (int u = 0; u < 3; ++u) {
        const int k = 2 * kUpStride[static_cast<std::size_t>(u)];
        add(kUpNames[static_cast<std::size_t>(u)], {sc, sc, k, k}, sc);
    }
    add("fuse", {2, 3 * sc, 1, 1}, 2);
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += p.value.size();
    }
    return n;
}

template <typename T>
std::size_t Model<T>::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) {
            return i;
        }
    }
    throw ConfigError("no parameter named '" + name + "'");
}

template <typename T>
Model<T> init_model(const ArchConfig& cfg, std::uint64_t seed) {
    Model<T> model(cfg);
    std::mt19937_64 rng(seed);
    for (auto& p : model.params()) {
        auto& t = p.value;
        if (t.rank() == 1) {
            t.fill(static_cast<T>(0.1));
            continue;
        }
        // Conv weights are {out, in, k, k}, transposed-conv weights {in, out, k, k}; the Xavier
        // bound only depends on the sum of both fans.
        const double receptive = static_cast<double>(t.dim(2)) * t.dim(3);
        const double fan_sum = (t.dim(0) + t.dim(1)) * receptive;
        const double bound = std::sqrt(6.0 / fan_sum);
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : t.values()) {
            v = static_cast<T>(u(rng));
        }
    }
    return model;
}

template <typename T>
Gradients<T> zero_gradients(const Model<T>& model) {
    Gradients<T> g;
    g.reserve(model.params().size());
    for (const auto& p : model.params()) {
        g.emplace_back(p.value.shape());
    }
    return g;
}

template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& image, const ForwardOptions& opts,
                  std::mt19937_64* rng, ForwardCache<T>* cache) {
    const ArchConfig& a = model.arch();
    require_shape(image, {3, a.input_size, a.input_size}, "forward input");
    check_finite(image, "forward input");
    if (opts.training && a.dropout_rate > 0.0 && rng == nullptr) {
        throw ConfigError("training forward pass needs an RNG for dropout");
    }
    ForwardCache<T> local;
    ForwardCache<T>& c = cache ? *cache : local;
    c = ForwardCache<T>{};
    c.input = image;

    const auto& params = model.params();
    std::size_t pi = 0;
    auto conv = [&](const Tensor<T>& x) {
        const auto& w = params[pi].value;
        const auto& b = params[pi + 1].value;
        pi += 2;
        return layers::conv2d(x, w, b, opts.compute);
    };

    Tensor<T> x = image;
    for (int b = 0; b < kBlocks; ++b) {
        for (int k = 0; k < a.convs_per_block[b]; ++k) {
            Tensor<T> y = conv(x);
            layers::relu_inplace(y);
            if (cache) {
                c.conv_in.push_back(std::move(x));
                c.conv_out.push_back(y);
            }
            x = std::move(y);
        }
        c.pool_in_shape[b] = x.shape();
        c.pool_out[b] = layers::maxpool2(x, c.pool_argmax[b]);
        x = c.pool_out[b];
    }

    auto head = [&](const Tensor<T>& in, std::vector<T>& mask) {
        Tensor<T> y = conv(in);
        layers::relu_inplace(y);
        if (opts.training) {
            layers::dropout_inplace(y, a.dropout_rate, *rng, mask);
        }
        return y;
    };
    c.head1_out = head(c.pool_out[4], c.drop1_mask);
    c.head2_out = head(c.head1_out, c.drop2_mask);

    c.score3 = conv(c.pool_out[2]);
    c.score4 = conv(c.pool_out[3]);
    c.score5 = conv(c.head2_out);

    std::array<const Tensor<T>*, 3> scores{&c.score3, &c.score4, &c.score5};
    std::array<Tensor<T>, 3> ups;
    for (std::size_t u = 0; u < 3; ++u) {
        ups[u] = layers::conv_transpose2d(*scores[u], params[pi].value, params[pi + 1].value,
                                          kUpStride[u]);
        pi += 2;
    }
    c.fused_in = layers::concat_channels<T>({&ups[0], &ups[1], &ups[2]});
    Tensor<T> out = conv(c.fused_in);
    if (a.output == OutputActivation::paired_sigmoid) {
        const std::size_t plane = out.size() / 2;
        for (std::size_t i = 0; i < plane; ++i) {
            const T d = out[plane + i] - out[i];
            out[i] = -d;
            out[plane + i] = d;
        }
    }
    layers::sigmoid_inplace(out);
    check_finite(out, "network output");
    if (cache) {
        c.output = out;
    }
    return out;
}

template <typename T>
double loss(const Tensor<T>& probs, const Tensor<T>& label) {
    if (probs.shape() != label.shape() || probs.rank() != 3 || probs.dim(0) != 2) {
        throw ShapeError("loss: prediction " + shape_str(probs.shape()) + " vs label " +
                         shape_str(label.shape()));
    }
    // Extended accumulation keeps finite-difference checks on this value clean.
    long double sum = 0.0L;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double y = std::clamp(static_cast<double>(probs[i]), kLogClamp, 1.0 - kLogClamp);
        sum += static_cast<long double>(label[i]) * std::log(static_cast<long double>(y));
    }
    const double wh = static_cast<double>(probs.dim(1)) * probs.dim(2);
    return static_cast<double>(-sum / (2.0L * wh));
}

template <typename T>
Gradients<T> backward(const Model<T>& model, const ForwardCache<T>& c, const Tensor<T>& label,
                      const layers::Compute& compute) {
    const ArchConfig& a = model.arch();
    require_shape(label, c.output.shape(), "backward label");
    if (c.conv_in.empty()) {
        throw ConfigError("backward needs a forward cache");
    }
    const auto& params = model.params();
    Gradients<T> g = zero_gradients(model);

    // Parameter layout: backbone convs, head1, head2, score3/4/5, up3/4/5, fuse.
    int backbone = 0;
    for (int b = 0; b < kBlocks; ++b) {
        backbone += a.convs_per_block[b];
    }
    const std::size_t head1 = 2 * static_cast<std::size_t>(backbone);
    const std::size_t head2 = head1 + 2;
    const std::size_t score0 = head2 + 2;
    const std::size_t up0 = score0 + 6;
    const std::size_t fuse = up0 + 6;

    auto conv_back = [&](std::size_t p, const Tensor<T>& in, const Tensor<T>& grad_out) {
        return layers::conv2d_backward(in, params[p].value, grad_out, g[p], g[p + 1], compute);
    };

    const double scale = 1.0 / (2.0 * c.output.dim(1) * c.output.dim(2));
    Tensor<T> dz(c.output.shape());
    if (a.output == OutputActivation::paired_sigmoid) {
        // y1 = sigmoid(d), y0 = sigmoid(-d) with d = z1 - z0.
        const std::size_t plane = dz.size() / 2;
        for (std::size_t i = 0; i < plane; ++i) {
            const double y0 = c.output[i];
            const double y1 = c.output[plane + i];
            const double dd = -(label[plane + i] * y0 - label[i] * y1) * scale;
            dz[plane + i] = static_cast<T>(dd);
            dz[i] = static_cast<T>(-dd);
        }
    } else {
        for (std::size_t i = 0; i < dz.size(); ++i) {
            dz[i] = static_cast<T>(-static_cast<double>(label[i]) * (1.0 - c.output[i]) * scale);
        }
    }
    Tensor<T> dfused = conv_back(fuse, c.fused_in, dz);

    const int sc = a.score_channels;
    const std::size_t plane = static_cast<std::size_t>(a.input_size) * a.input_size;
    std::array<const Tensor<T>*, 3> scores{&c.score3, &c.score4, &c.score5};
    std::array<Tensor<T>, 3> dscore;
    for (std::size_t u = 0; u < 3; ++u) {
        Tensor<T> dup({sc, a.input_size, a.input_size});
        std::copy_n(dfused.data() + u * sc * plane, sc * plane, dup.data());
        const std::size_t p = up0 + 2 * u;
        dscore[u] = layers::conv_transpose2d_backward(*scores[u], params[p].value, dup,
                                                      kUpStride[u], g[p], g[p + 1]);
    }

    std::array<Tensor<T>, kBlocks> dpool;
    dpool[2] = conv_back(score0, c.pool_out[2], dscore[0]);
    dpool[3] = conv_back(score0 + 2, c.pool_out[3], dscore[1]);

    auto through_head = [](Tensor<T>& d, const Tensor<T>& out, const std::vector<T>& mask) {
        if (!mask.empty()) {
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] *= mask[i];
            }
        }
        layers::relu_backward_inplace(out, d);
    };
    Tensor<T> dh2 = conv_back(score0 + 4, c.head2_out, dscore[2]);
    through_head(dh2, c.head2_out, c.drop2_mask);
    Tensor<T> dh1 = conv_back(head2, c.head1_out, dh2);
    through_head(dh1, c.head1_out, c.drop1_mask);
    Tensor<T> d = conv_back(head1, c.pool_out[4], dh1);

    int conv_idx = backbone;
    for (int b = kBlocks - 1; b >= 0; --b) {
        if (b == 2 || b == 3) {
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] += dpool[static_cast<std::size_t>(b)][i];
            }
        }
        d = layers::maxpool2_backward(c.pool_in_shape[b], c.pool_argmax[b], d);
        for (int k = a.convs_per_block[b] - 1; k >= 0; --k) {
            --conv_idx;
            const auto ci = static_cast<std::size_t>(conv_idx);
            layers::relu_backward_inplace(c.conv_out[ci], d);
            d = conv_back(2 * ci, c.conv_in[ci], d);
        }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        check_finite(g[i], "gradient of " + params[i].name);
    }
    return g;
}

template <typename T>
AdamState<T> AdamState<T>::zeros(const Model<T>& model) {
    AdamState<T> s;
    s.m = zero_gradients(model);
    s.v = zero_gradients(model);
    return s;
}

template <typename T>
void adam_step(Model<T>& model, const Gradients<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
    auto& params = model.params();
    if (grads.size() != params.size() || state.m.size() != params.size()) {
        throw ShapeError("adam_step: gradient/state count does not match the model");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& w = params[p].value;
        const auto& gr = grads[p];
        auto& m = state.m[p];
        auto& v = state.v[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = gr[i];
            const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double mhat = mi / c1;
            const double vhat = vi / c2;
            w[i] = static_cast<T>(w[i] - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon));
        }
    }
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

void save_checkpoint(const Model<float>& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open " + path + " for writing");
    }
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    const std::string header = to_json(model.arch()).dump();
    put_u32(os, static_cast<std::uint32_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& p : model.params()) {
        for (float f : p.value.values()) {
            put_u32(os, std::bit_cast<std::uint32_t>(f));
        }
    }
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

Model<float> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                           std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof kCheckpointMagic ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
        throw FormatError(path + ": not a TSPFCN01 checkpoint (bad magic or version)");
    }
    std::size_t pos = sizeof kCheckpointMagic;
    if (bytes.size() < pos + 4) {
        throw FormatError(path + ": truncated header");
    }
    const std::uint32_t hlen = get_u32(bytes.data() + pos);
    pos += 4;
    if (bytes.size() < pos + hlen) {
        throw FormatError(path + ": truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                       bytes.begin() + static_cast<std::ptrdiff_t>(pos + hlen));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path + ": bad header JSON: " + e.what());
    }
    pos += hlen;
    Model<float> model(arch_from_json(header));
    const std::size_t expected = pos + 4 * model.parameter_count();
    if (bytes.size() != expected) {
        throw FormatError(path + ": parameter payload is " + std::to_string(bytes.size() - pos) +
                          " bytes, architecture needs " + std::to_string(expected - pos));
    }
    for (auto& p : model.params()) {
        for (float& f : p.value.values()) {
            f = std::bit_cast<float>(get_u32(bytes.data() + pos));
            pos += 4;
        }
    }
    return model;
}

#define TSPFCN_INSTANTIATE(T)                                                                      \
    template class Model<T>;                                                                       \
    template Model<T> init_model<T>(const ArchConfig&, std::uint64_t);                             \
    template Gradients<T> zero_gradients(const Model<T>&);                                         \
    template Tensor<T> forward(const Model<T>&, const Tensor<T>&, const ForwardOptions&,           \
                               std::mt19937_64*, ForwardCache<T>*);                                \
    template double loss(const Tensor<T>&, const Tensor<T>&);                                      \
    template Gradients<T> backward(const Model<T>&, const ForwardCache<T>&, const Tensor<T>&,      \
                                   const layers::Compute&);                                        \
    template struct AdamState<T>;                                                                  \
    template void adam_step(Model<T>&, const Gradients<T>&, AdamState<T>&, const AdamConfig&);

TSPFCN_INSTANTIATE(float)
TSPFCN_INSTANTIATE(double)

#undef TSPFCN_INSTANTIATE

} // namespace tspfcn::net
