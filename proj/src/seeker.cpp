#include "esod/seeker.hpp"

#include "esod/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace esod {

namespace {

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

void require_same_shape(const Grid2D& a, const Grid2D& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": prediction and target differ in shape");
    }
}

std::vector<double> random_normal(std::size_t n, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> out(n);
    for (double& v : out) {
        v = dist(rng);
    }
    return out;
}

}  // namespace

SeekerParams SeekerParams::zeros(int channels) {
    if (channels <= 0) {
        throw ParameterError("seeker channel count must be positive");
    }
    const auto c = static_cast<std::size_t>(channels);
    SeekerParams p;
    p.channels = channels;
    p.dw_weights.assign(c * kSeekerKernel * kSeekerKernel, 0.0);
    p.dw_bias.assign(c, 0.0);
    p.bn = BatchNorm::identity(channels);
    p.bn.eps = 1e-5;
    p.pw = ConvSpec::zeros(channels, 1, 1);
    return p;
}

SeekerParams SeekerParams::random(int channels, std::mt19937_64& rng) {
    SeekerParams p = zeros(channels);
    const auto c = static_cast<std::size_t>(channels);
    p.dw_weights = random_normal(c * kSeekerKernel * kSeekerKernel,
                                 std::sqrt(2.0 / (kSeekerKernel * kSeekerKernel)), rng);
    p.pw.weights = random_normal(c, std::sqrt(2.0 / channels), rng);
    return p;
}

void SeekerParams::validate() const {
    const auto c = static_cast<std::size_t>(channels);
    if (channels <= 0) {
        throw ParameterError("seeker channel count must be positive");
    }
    if (dw_weights.size() != c * kSeekerKernel * kSeekerKernel || dw_bias.size() != c) {
        throw ParameterError("seeker depthwise parameters must be 13x13 per channel");
    }
    bn.validate(channels);
    pw.validate();
    if (pw.out_channels != 1 || pw.in_channels != channels || pw.kernel_h != 1 || pw.kernel_w != 1) {
        throw ParameterError("seeker pointwise layer must be 1x1 with a single output channel");
    }
}

Grid2D seek_logits(const FeatureStack& features, const SeekerParams& params) {
    params.validate();
    if (features.channels() != params.channels) {
        throw ShapeError("seeker expects " + std::to_string(params.channels) + " feature channels, got " +
                         std::to_string(features.channels()));
    }
    FeatureStack x = depthwise_conv(features, kSeekerKernel, params.dw_weights, params.dw_bias);
    x = pointwise(batchnorm_apply(x, params.bn), Pointwise::Relu);
    return conv2d(x, params.pw).channel_grid(0);
}

ObjectnessMask seek(const FeatureStack& features, const SeekerParams& params) {
    return ObjectnessMask{pointwise(seek_logits(features, params), Pointwise::Sigmoid)};
}

void FocalParams::validate() const {
    if (!(gamma >= 0.0)) {
        throw ParameterError("focal gamma must be non-negative");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("focal alpha must lie in (0, 1)");
    }
}

LossValue focal_loss(const Grid2D& logits, const Grid2D& target, const FocalParams& params) {
    require_same_shape(logits, target, "focal_loss");
    params.validate();
    const double a = params.alpha;
    const double g = params.gamma;
    const double n = static_cast<double>(logits.size());

    LossValue out{0.0, Grid2D(logits.height(), logits.width())};
    auto z = logits.values();
    auto y = target.values();
    auto grad = out.grad.values();
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double p = sigmoid(z[i]);
        const double q = sigmoid(-z[i]);  // 1 - p without cancellation
        const double log_p = -softplus(-z[i]);
        const double log_q = -softplus(z[i]);
        const double qg = std::pow(q, g);
        const double pg = std::pow(p, g);
        out.value += -a * y[i] * qg * log_p - (1.0 - a) * (1.0 - y[i]) * pg * log_q;
        grad[i] = (a * y[i] * qg * (g * p * log_p - q) + (1.0 - a) * (1.0 - y[i]) * pg * (p - g * q * log_q)) / n;
    }
    out.value /= n;
    return out;
}

LossValue focal_loss_from_probabilities(const Grid2D& probabilities, const Grid2D& target,
                                        const FocalParams& params) {
    Grid2D logits(probabilities.height(), probabilities.width());
    auto p = probabilities.values();
    auto z = logits.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double clipped = std::clamp(p[i], kProbabilityClip, 1.0 - kProbabilityClip);
        z[i] = std::log(clipped) - std::log1p(-clipped);
    }
    return focal_loss(logits, target, params);
}

LossValue dice_loss(const Grid2D& pred, const Grid2D& target, double smooth) {
    require_same_shape(pred, target, "dice_loss");
    if (!(smooth > 0.0)) {
        throw ParameterError("dice smoothing must be positive");
    }
    auto p = pred.values();
    auto y = target.values();
    double inter = 0.0;
    double sum_p = 0.0;
    double sum_y = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += p[i] * y[i];
        sum_p += p[i];
        sum_y += y[i];
    }
    const double num = 2.0 * inter + smooth;
    const double den = sum_p + sum_y + smooth;

    LossValue out{1.0 - num / den, Grid2D(pred.height(), pred.width())};
    auto grad = out.grad.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        grad[i] = -(2.0 * y[i] * den - num) / (den * den);
    }
    return out;
}

LossValue dice_loss_logits(const Grid2D& logits, const Grid2D& target, double smooth) {
    const Grid2D probs = pointwise(logits, Pointwise::Sigmoid);
    LossValue out = dice_loss(probs, target, smooth);
    auto p = probs.values();
    auto grad = out.grad.values();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad[i] *= p[i] * (1.0 - p[i]);
    }
    return out;
}

LossReport seeker_loss(const Grid2D& logits, const Grid2D& target) {
    LossValue focal = focal_loss(logits, target);
    LossValue dice = dice_loss_logits(logits, target);
    LossReport report{focal.value, dice.value, kFocalWeight * focal.value + kDiceWeight * dice.value,
                      Grid2D(logits.height(), logits.width())};
    auto grad = report.grad.values();
    auto gf = focal.grad.values();
    auto gd = dice.grad.values();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad[i] = kFocalWeight * gf[i] + kDiceWeight * gd[i];
    }
    return report;
}

SeekerGradients seeker_backward(const FeatureStack& features, const SeekerParams& params,
                                const Grid2D& grad_logits) {
    params.validate();
    const int channels = params.channels;
    const int h = features.height();
    const int w = features.width();
    if (features.channels() != channels || grad_logits.height() != h || grad_logits.width() != w) {
        throw ShapeError("seeker_backward: gradient shape does not match features");
    }
    const FeatureStack pre = depthwise_conv(features, kSeekerKernel, params.dw_weights, params.dw_bias);
    const FeatureStack normed = batchnorm_apply(pre, params.bn);
    const auto cs = static_cast<std::size_t>(channels);
    const int pad = kSeekerKernel / 2;

    SeekerGradients g;
    g.dw_weights.assign(params.dw_weights.size(), 0.0);
    g.dw_bias.assign(cs, 0.0);
    g.bn_gamma.assign(cs, 0.0);
    g.bn_beta.assign(cs, 0.0);
    g.pw_weights.assign(cs, 0.0);
    g.pw_bias.assign(1, grad_logits.sum());

    auto gz = grad_logits.values();
    std::vector<double> grad_pre(static_cast<std::size_t>(h) * w);
    for (int c = 0; c < channels; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const double inv_std = 1.0 / std::sqrt(params.bn.var[ci] + params.bn.eps);
        const double scale = params.bn.gamma[ci] * inv_std;
        const double wc = params.pw.weights[ci];
        auto u = normed.plane(c);
        auto v = pre.plane(c);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double act = u[i] > 0.0 ? u[i] : 0.0;
            g.pw_weights[ci] += gz[i] * act;
            const double du = u[i] > 0.0 ? gz[i] * wc : 0.0;
            g.bn_gamma[ci] += du * (v[i] - params.bn.mean[ci]) * inv_std;
            g.bn_beta[ci] += du;
            grad_pre[i] = du * scale;
            g.dw_bias[ci] += grad_pre[i];
        }
        auto src = features.plane(c);
        double* kernel_grad = g.dw_weights.data() + ci * kSeekerKernel * kSeekerKernel;
        for (int ky = 0; ky < kSeekerKernel; ++ky) {
            const int dy = ky - pad;
            for (int kx = 0; kx < kSeekerKernel; ++kx) {
                const int dx = kx - pad;
                double acc = 0.0;
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    const double* row = src.data() + static_cast<std::size_t>(y + dy) * w + dx;
                    const double* grow = grad_pre.data() + static_cast<std::size_t>(y) * w;
                    for (int x = std::max(0, -dx); x < std::min(w, w - dx); ++x) {
                        acc += grow[x] * row[x];
                    }
                }
                kernel_grad[ky * kSeekerKernel + kx] = acc;
            }
        }
    }
    return g;
}

namespace {

class Adam {
public:
    explicit Adam(double lr) : lr_(lr) {}

    void begin_step() { ++t_; }

    void update(std::size_t slot, std::span<double> params, std::span<const double> grads) {
        if (slot >= m_.size()) {
            m_.resize(slot + 1);
            v_.resize(slot + 1);
        }
        if (m_[slot].empty()) {
            m_[slot].assign(params.size(), 0.0);
            v_[slot].assign(params.size(), 0.0);
        }
        const double b1t = 1.0 - std::pow(kBeta1, t_);
        const double b2t = 1.0 - std::pow(kBeta2, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[slot][i] = kBeta1 * m_[slot][i] + (1.0 - kBeta1) * grads[i];
            v_[slot][i] = kBeta2 * v_[slot][i] + (1.0 - kBeta2) * grads[i] * grads[i];
            params[i] -= lr_ * (m_[slot][i] / b1t) / (std::sqrt(v_[slot][i] / b2t) + 1e-8);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    double lr_;
    int t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

void accumulate(std::vector<double>& into, const std::vector<double>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) {
        into[i] += from[i];
    }
}

}  // namespace

std::vector<double> train_seeker(SeekerParams& params, std::span<const FeatureStack> features,
                                 std::span<const Grid2D> targets, const TrainOptions& options) {
    if (features.size() != targets.size() || features.empty()) {
        throw ParameterError("train_seeker needs one target per feature map");
    }
    if (options.steps < 0 || !(options.learning_rate > 0.0)) {
        throw ParameterError("train_seeker: invalid options");
    }
    Adam adam(options.learning_rate);
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(options.steps) + 1);

    auto evaluate = [&](SeekerGradients* grads) {
        double total = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) {
            const LossReport loss = seeker_loss(seek_logits(features[i], params), targets[i]);
            total += loss.total;
            if (grads != nullptr) {
                SeekerGradients g = seeker_backward(features[i], params, loss.grad);
                if (i == 0) {
                    *grads = std::move(g);
                } else {
                    accumulate(grads->dw_weights, g.dw_weights);
                    accumulate(grads->dw_bias, g.dw_bias);
                    accumulate(grads->bn_gamma, g.bn_gamma);
                    accumulate(grads->bn_beta, g.bn_beta);
                    accumulate(grads->pw_weights, g.pw_weights);
                    accumulate(grads->pw_bias, g.pw_bias);
                }
            }
        }
        return total / static_cast<double>(features.size());
    };

    for (int step = 0; step < options.steps; ++step) {
        SeekerGradients g;
        trace.push_back(evaluate(&g));
        adam.begin_step();
        adam.update(0, params.dw_weights, g.dw_weights);
        adam.update(1, params.dw_bias, g.dw_bias);
        adam.update(2, params.bn.gamma, g.bn_gamma);
        adam.update(3, params.bn.beta, g.bn_beta);
        adam.update(4, params.pw.weights, g.pw_weights);
        adam.update(5, params.pw.bias, g.pw_bias);
    }
    trace.push_back(evaluate(nullptr));
    return trace;
}

namespace {

constexpr std::array<char, 8> kParamsMagic = {'E', 'S', 'O', 'D', 'S', 'K', 'R', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
}

void put_f64s(std::string& out, const std::vector<double>& values) {
    for (double v : values) {
        put_f64(out, v);
    }
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint64_t take(int n) {
        if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) {
            throw FormatError("seeker params: truncated file");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
        }
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    double f64() { return std::bit_cast<double>(take(8)); }
    std::vector<double> f64s(std::size_t n) {
        std::vector<double> out(n);
        for (double& v : out) {
            v = f64();
        }
        return out;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_seeker_params(const SeekerParams& params) {
    params.validate();
    std::string out(kParamsMagic.begin(), kParamsMagic.end());
    put_u32(out, static_cast<std::uint32_t>(params.channels));
    put_u32(out, static_cast<std::uint32_t>(kSeekerKernel));
    put_f64s(out, params.dw_weights);
    put_f64s(out, params.dw_bias);
    put_f64s(out, params.bn.mean);
    put_f64s(out, params.bn.var);
    put_f64s(out, params.bn.gamma);
    put_f64s(out, params.bn.beta);
    put_f64(out, params.bn.eps);
    put_f64s(out, params.pw.weights);
    put_f64s(out, params.pw.bias);
    return out;
}

SeekerParams decode_seeker_params(const std::string& bytes) {
    if (bytes.size() < kParamsMagic.size() ||
        !std::equal(kParamsMagic.begin(), kParamsMagic.end(), bytes.begin())) {
        throw FormatError("seeker params: bad magic");
    }
    Reader in(bytes);
    in.take(4);
    in.take(4);
    const std::uint32_t channels = in.u32();
    const std::uint32_t kernel = in.u32();
    if (channels == 0 || channels > 4096) {
        throw FormatError("seeker params: implausible channel count");
    }
    if (kernel != kSeekerKernel) {
        throw FormatError("seeker params: kernel size must be 13");
    }
    const std::size_t c = channels;
    SeekerParams p = SeekerParams::zeros(static_cast<int>(channels));
    p.dw_weights = in.f64s(c * kSeekerKernel * kSeekerKernel);
    p.dw_bias = in.f64s(c);
    p.bn.mean = in.f64s(c);
    p.bn.var = in.f64s(c);
    p.bn.gamma = in.f64s(c);
    p.bn.beta = in.f64s(c);
    p.bn.eps = in.f64();
    p.pw.weights = in.f64s(c);
    p.pw.bias = in.f64s(1);
    if (!in.done()) {
        throw FormatError("seeker params: trailing bytes");
    }
    try {
        p.validate();
    } catch (const ParameterError& e) {
        throw FormatError(std::string("seeker params: ") + e.what());
    }
    return p;
}

void save_seeker_params(const SeekerParams& params, const std::filesystem::path& path) {
    const std::string bytes = encode_seeker_params(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SeekerParams load_seeker_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_seeker_params(bytes);
}

}  // namespace esod
