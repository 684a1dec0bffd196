#include "surveycast/neural.hpp"

#include "surveycast/error.hpp"
#include "surveycast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace surveycast {

LayerSpec LayerSpec::dense(int units) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.out_units = units;
    return s;
}

LayerSpec LayerSpec::conv1d(int out_channels, int kernel_size, int stride, int padding) {
    LayerSpec s;
    s.kind = LayerKind::Conv1d;
    s.out_channels = out_channels;
    s.kernel_size = kernel_size;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::Relu;
    return s;
}

LayerSpec LayerSpec::batchnorm1d() {
    LayerSpec s;
    s.kind = LayerKind::BatchNorm1d;
    return s;
}

LayerSpec LayerSpec::global_avg_pool() {
    LayerSpec s;
    s.kind = LayerKind::GlobalAvgPool;
    return s;
}

LayerSpec LayerSpec::dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.rate = rate;
    return s;
}

LayerSpec LayerSpec::residual_block(int out_channels, int stride) {
    LayerSpec s;
    s.kind = LayerKind::ResidualBlock;
    s.out_channels = out_channels;
    s.stride = stride;
    return s;
}

namespace {

const char* kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::Relu: return "relu";
    case LayerKind::BatchNorm1d: return "batchnorm1d";
    case LayerKind::GlobalAvgPool: return "global_avg_pool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::ResidualBlock: return "residual_block";
    }
    return "?";
}

[[noreturn]] void shape_fail(std::size_t layer_index, LayerKind kind, const std::string& msg) {
    throw ShapeError("layer " + std::to_string(layer_index) + " (" + kind_name(kind) +
                     "): " + msg);
}

int conv_out_len(int len, int kernel, int stride, int padding) {
    return (len + 2 * padding - kernel) / stride + 1;
}

} // namespace

std::vector<std::vector<std::size_t>> propagate_shapes(const NetworkSpec& spec) {
    if (spec.in_channels == 0 || spec.in_length == 0) {
        throw ShapeError("network input shape must be non-zero");
    }
    std::vector<std::vector<std::size_t>> shapes;
    shapes.push_back({spec.in_channels, spec.in_length});

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& ls = spec.layers[i];
        const auto& cur = shapes.back();
        switch (ls.kind) {
        case LayerKind::Dense: {
            if (ls.out_units < 1) shape_fail(i, ls.kind, "out_units must be >= 1");
            shapes.push_back({static_cast<std::size_t>(ls.out_units)});
            break;
        }
        case LayerKind::Conv1d: {
            if (cur.size() != 2) shape_fail(i, ls.kind, "needs a (channels, length) input");
            if (ls.out_channels < 1 || ls.kernel_size < 1 || ls.stride < 1 || ls.padding < 0) {
                shape_fail(i, ls.kind, "invalid hyperparameters");
            }
            const int out_len = conv_out_len(static_cast<int>(cur[1]), ls.kernel_size,
                                             ls.stride, ls.padding);
            if (out_len < 1) shape_fail(i, ls.kind, "kernel does not fit the input length");
            shapes.push_back({static_cast<std::size_t>(ls.out_channels),
                              static_cast<std::size_t>(out_len)});
            break;
        }
        case LayerKind::Relu:
        case LayerKind::Dropout: {
            if (ls.kind == LayerKind::Dropout && !(ls.rate >= 0.0 && ls.rate < 1.0)) {
                shape_fail(i, ls.kind, "rate must lie in [0, 1)");
            }
            shapes.push_back(cur);
            break;
        }
        case LayerKind::BatchNorm1d: {
            if (cur.empty() || cur.size() > 2) {
                shape_fail(i, ls.kind, "needs a (channels) or (channels, length) input");
            }
            shapes.push_back(cur);
            break;
        }
        case LayerKind::GlobalAvgPool: {
            if (cur.size() != 2) shape_fail(i, ls.kind, "needs a (channels, length) input");
            shapes.push_back({cur[0]});
            break;
        }
        case LayerKind::ResidualBlock: {
            if (cur.size() != 2) shape_fail(i, ls.kind, "needs a (channels, length) input");
            if (ls.out_channels < 1 || ls.stride < 1) {
                shape_fail(i, ls.kind, "invalid hyperparameters");
            }
            const int out_len = conv_out_len(static_cast<int>(cur[1]), 3, ls.stride, 1);
            if (out_len < 1) shape_fail(i, ls.kind, "input length too short");
            shapes.push_back({static_cast<std::size_t>(ls.out_channels),
                              static_cast<std::size_t>(out_len)});
            break;
        }
        }
    }
    return shapes;
}

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ParamSlot {
    std::string name;
    Tensor value;
    Tensor grad;
};

class LayerImpl {
public:
    virtual ~LayerImpl() = default;
    virtual Tensor forward(const Tensor& x, bool training, Rng& dropout_rng) = 0;
    virtual Tensor backward(const Tensor& gy) = 0;
    virtual void collect_trainable(std::vector<Network::ParamRef>& out) {
        (void)out;
    }
    virtual void collect_state(std::vector<ParamSlot*>& out) { (void)out; }
    virtual double relu_margin() const { return kInf; }
};

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void init_uniform(Tensor& t, Rng& rng, double limit) {
    for (auto& v : t.v) v = rng.uniform(-limit, limit);
}

// Biases draw from a small nonzero range so relu-dead windows never emit
// exact zeros into downstream preactivations.
constexpr double kBiasInitLimit = 0.1;

class DenseLayer final : public LayerImpl {
public:
    DenseLayer(const std::string& prefix, std::size_t in, std::size_t out, Rng& init)
        : in_(in), out_(out) {
        w_ = {prefix + ".w", Tensor({in, out}), Tensor({in, out})};
        b_ = {prefix + ".b", Tensor({out}), Tensor({out})};
        init_uniform(w_.value, init, glorot_limit(in, out));
        init_uniform(b_.value, init, kBiasInitLimit);
    }

    Tensor forward(const Tensor& x, bool, Rng&) override {
        const std::size_t n = x.shape[0];
        if (x.size() != n * in_) throw ShapeError("dense: input size mismatch");
        in_shape_ = x.shape;
        x_ = x; // cached flat view (N, in)
        Tensor y({n, out_});
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t o = 0; o < out_; ++o) {
                double acc = b_.value.v[o];
                const double* xr = x.v.data() + r * in_;
                for (std::size_t i = 0; i < in_; ++i) acc += xr[i] * w_.value.v[i * out_ + o];
                y.at2(r, o) = acc;
            }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        const std::size_t n = gy.shape[0];
        Tensor gx(in_shape_);
        for (std::size_t r = 0; r < n; ++r) {
            const double* xr = x_.v.data() + r * in_;
            const double* gr = gy.v.data() + r * out_;
            for (std::size_t o = 0; o < out_; ++o) b_.grad.v[o] += gr[o];
            for (std::size_t i = 0; i < in_; ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < out_; ++o) {
                    w_.grad.v[i * out_ + o] += xr[i] * gr[o];
                    acc += gr[o] * w_.value.v[i * out_ + o];
                }
                gx.v[r * in_ + i] = acc;
            }
        }
        return gx;
    }

    void collect_trainable(std::vector<Network::ParamRef>& out) override {
        out.push_back({w_.name, &w_.value, &w_.grad});
        out.push_back({b_.name, &b_.value, &b_.grad});
    }

private:
    std::size_t in_, out_;
    ParamSlot w_, b_;
    Tensor x_;
    std::vector<std::size_t> in_shape_;
};

class Conv1dLayer final : public LayerImpl {
public:
    Conv1dLayer(const std::string& prefix, std::size_t cin, std::size_t cout,
                int kernel, int stride, int padding, Rng& init)
        : cin_(cin), cout_(cout), k_(static_cast<std::size_t>(kernel)), stride_(stride),
          pad_(padding) {
        w_ = {prefix + ".w", Tensor({cout, cin, k_}), Tensor({cout, cin, k_})};
        b_ = {prefix + ".b", Tensor({cout}), Tensor({cout})};
        init_uniform(w_.value, init, glorot_limit(cin * k_, cout * k_));
        init_uniform(b_.value, init, kBiasInitLimit);
    }

    Tensor forward(const Tensor& x, bool, Rng&) override {
        x_ = x;
        const std::size_t n = x.shape[0];
        const std::size_t len = x.shape[2];
        const std::size_t out_len = static_cast<std::size_t>(
            conv_out_len(static_cast<int>(len), static_cast<int>(k_), stride_, pad_));
        Tensor y({n, cout_, out_len});
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t co = 0; co < cout_; ++co) {
                for (std::size_t t = 0; t < out_len; ++t) {
                    double acc = b_.value.v[co];
                    const long long base =
                        static_cast<long long>(t) * stride_ - pad_;
                    for (std::size_t ci = 0; ci < cin_; ++ci) {
                        for (std::size_t k = 0; k < k_; ++k) {
                            const long long j = base + static_cast<long long>(k);
                            if (j < 0 || j >= static_cast<long long>(len)) continue;
                            acc += w_.value.v[(co * cin_ + ci) * k_ + k] *
                                   x.at3(r, ci, static_cast<std::size_t>(j));
                        }
                    }
                    y.at3(r, co, t) = acc;
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        const std::size_t n = x_.shape[0];
        const std::size_t len = x_.shape[2];
        const std::size_t out_len = gy.shape[2];
        Tensor gx(x_.shape);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t co = 0; co < cout_; ++co) {
                for (std::size_t t = 0; t < out_len; ++t) {
                    const double g = gy.at3(r, co, t);
                    b_.grad.v[co] += g;
                    const long long base =
                        static_cast<long long>(t) * stride_ - pad_;
                    for (std::size_t ci = 0; ci < cin_; ++ci) {
                        for (std::size_t k = 0; k < k_; ++k) {
                            const long long j = base + static_cast<long long>(k);
                            if (j < 0 || j >= static_cast<long long>(len)) continue;
                            const std::size_t js = static_cast<std::size_t>(j);
                            w_.grad.v[(co * cin_ + ci) * k_ + k] += g * x_.at3(r, ci, js);
                            gx.at3(r, ci, js) += g * w_.value.v[(co * cin_ + ci) * k_ + k];
                        }
                    }
                }
            }
        }
        return gx;
    }

    void collect_trainable(std::vector<Network::ParamRef>& out) override {
        out.push_back({w_.name, &w_.value, &w_.grad});
        out.push_back({b_.name, &b_.value, &b_.grad});
    }

private:
    std::size_t cin_, cout_, k_;
    int stride_, pad_;
    ParamSlot w_, b_;
    Tensor x_;
};

class ReluLayer final : public LayerImpl {
public:
    Tensor forward(const Tensor& x, bool, Rng&) override {
        x_ = x;
        margin_ = kInf;
        Tensor y(x.shape);
        for (std::size_t i = 0; i < x.v.size(); ++i) {
            margin_ = std::min(margin_, std::abs(x.v[i]));
            y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gx(gy.shape);
        for (std::size_t i = 0; i < gy.v.size(); ++i) {
            gx.v[i] = x_.v[i] > 0.0 ? gy.v[i] : 0.0;
        }
        return gx;
    }

    double relu_margin() const override { return margin_; }

private:
    Tensor x_;
    double margin_ = kInf;
};

class BatchNormLayer final : public LayerImpl {
public:
    BatchNormLayer(const std::string& prefix, std::size_t channels) : c_(channels) {
        gamma_ = {prefix + ".gamma", Tensor({channels}), Tensor({channels})};
        beta_ = {prefix + ".beta", Tensor({channels}), Tensor({channels})};
        rmean_ = {prefix + ".rmean", Tensor({channels}), Tensor{}};
        rvar_ = {prefix + ".rvar", Tensor({channels}), Tensor{}};
        std::fill(gamma_.value.v.begin(), gamma_.value.v.end(), 1.0);
        std::fill(rvar_.value.v.begin(), rvar_.value.v.end(), 1.0);
    }

    Tensor forward(const Tensor& x, bool training, Rng&) override {
        training_ = training;
        const std::size_t n = x.shape[0];
        const std::size_t len = x.rank() == 3 ? x.shape[2] : 1;
        const std::size_t m = n * len;
        inv_sd_.assign(c_, 0.0);
        Tensor y(x.shape);
        xhat_ = Tensor(x.shape);

        for (std::size_t c = 0; c < c_; ++c) {
            double mean, var;
            if (training) {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t l = 0; l < len; ++l) s += elem(x, r, c, l, len);
                }
                mean = s / static_cast<double>(m);
                double sv = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t l = 0; l < len; ++l) {
                        const double d = elem(x, r, c, l, len) - mean;
                        sv += d * d;
                    }
                }
                var = sv / static_cast<double>(m);
                rmean_.value.v[c] = (1.0 - kMomentum) * rmean_.value.v[c] + kMomentum * mean;
                rvar_.value.v[c] = (1.0 - kMomentum) * rvar_.value.v[c] + kMomentum * var;
            } else {
                mean = rmean_.value.v[c];
                var = rvar_.value.v[c];
            }
            const double inv = 1.0 / std::sqrt(var + kEps);
            inv_sd_[c] = inv;
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t l = 0; l < len; ++l) {
                    const double xh = (elem(x, r, c, l, len) - mean) * inv;
                    elem(xhat_, r, c, l, len) = xh;
                    elem(y, r, c, l, len) = gamma_.value.v[c] * xh + beta_.value.v[c];
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        const std::size_t n = gy.shape[0];
        const std::size_t len = gy.rank() == 3 ? gy.shape[2] : 1;
        const std::size_t m = n * len;
        Tensor gx(gy.shape);

        for (std::size_t c = 0; c < c_; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t l = 0; l < len; ++l) {
                    const double g = elem(gy, r, c, l, len);
                    sum_g += g;
                    sum_gx += g * elem(xhat_, r, c, l, len);
                }
            }
            gamma_.grad.v[c] += sum_gx;
            beta_.grad.v[c] += sum_g;

            const double scale = gamma_.value.v[c] * inv_sd_[c];
            if (training_) {
                const double mean_g = sum_g / static_cast<double>(m);
                const double mean_gx = sum_gx / static_cast<double>(m);
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t l = 0; l < len; ++l) {
                        const double g = elem(gy, r, c, l, len);
                        const double xh = elem(xhat_, r, c, l, len);
                        elem(gx, r, c, l, len) = scale * (g - mean_g - xh * mean_gx);
                    }
                }
            } else {
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t l = 0; l < len; ++l) {
                        elem(gx, r, c, l, len) = scale * elem(gy, r, c, l, len);
                    }
                }
            }
        }
        return gx;
    }

    void collect_trainable(std::vector<Network::ParamRef>& out) override {
        out.push_back({gamma_.name, &gamma_.value, &gamma_.grad});
        out.push_back({beta_.name, &beta_.value, &beta_.grad});
    }

    void collect_state(std::vector<ParamSlot*>& out) override {
        out.push_back(&rmean_);
        out.push_back(&rvar_);
    }

private:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

    static double& elem(Tensor& t, std::size_t r, std::size_t c, std::size_t l,
                        std::size_t len) {
        return t.rank() == 3 ? t.v[(r * t.shape[1] + c) * len + l] : t.v[r * t.shape[1] + c];
    }
    static double elem(const Tensor& t, std::size_t r, std::size_t c, std::size_t l,
                       std::size_t len) {
        return t.rank() == 3 ? t.v[(r * t.shape[1] + c) * len + l] : t.v[r * t.shape[1] + c];
    }

    std::size_t c_;
    ParamSlot gamma_, beta_, rmean_, rvar_;
    Tensor xhat_;
    std::vector<double> inv_sd_;
    bool training_ = false;
};

class GapLayer final : public LayerImpl {
public:
    Tensor forward(const Tensor& x, bool, Rng&) override {
        in_shape_ = x.shape;
        const std::size_t n = x.shape[0], c = x.shape[1], len = x.shape[2];
        Tensor y({n, c});
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (std::size_t l = 0; l < len; ++l) s += x.at3(r, ch, l);
                y.at2(r, ch) = s / static_cast<double>(len);
            }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gx(in_shape_);
        const std::size_t n = in_shape_[0], c = in_shape_[1], len = in_shape_[2];
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double g = gy.at2(r, ch) / static_cast<double>(len);
                for (std::size_t l = 0; l < len; ++l) gx.at3(r, ch, l) = g;
            }
        }
        return gx;
    }

private:
    std::vector<std::size_t> in_shape_;
};

class DropoutLayer final : public LayerImpl {
public:
    explicit DropoutLayer(double rate) : rate_(rate) {}

    Tensor forward(const Tensor& x, bool training, Rng& rng) override {
        active_ = training && rate_ > 0.0;
        if (!active_) return x;
        // inverted scaling: inference is a pure pass-through
        const double scale = 1.0 / (1.0 - rate_);
        mask_ = Tensor(x.shape);
        Tensor y(x.shape);
        for (std::size_t i = 0; i < x.v.size(); ++i) {
            mask_.v[i] = rng.uniform() >= rate_ ? scale : 0.0;
            y.v[i] = x.v[i] * mask_.v[i];
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        if (!active_) return gy;
        Tensor gx(gy.shape);
        for (std::size_t i = 0; i < gy.v.size(); ++i) gx.v[i] = gy.v[i] * mask_.v[i];
        return gx;
    }

private:
    double rate_;
    bool active_ = false;
    Tensor mask_;
};

// conv-bn-relu-conv-bn branch plus (optionally projected) skip, relu after
// the addition.
class ResidualBlockLayer final : public LayerImpl {
public:
    ResidualBlockLayer(const std::string& prefix, std::size_t cin, std::size_t cout,
                       int stride, Rng& init)
        : conv1_(prefix + ".conv1", cin, cout, 3, stride, 1, init),
          bn1_(prefix + ".bn1", cout),
          conv2_(prefix + ".conv2", cout, cout, 3, 1, 1, init),
          bn2_(prefix + ".bn2", cout) {
        if (cin != cout || stride != 1) {
            proj_ = std::make_unique<Conv1dLayer>(prefix + ".proj", cin, cout, 1, stride, 0,
                                                  init);
        }
    }

    Tensor forward(const Tensor& x, bool training, Rng& rng) override {
        Tensor b = conv1_.forward(x, training, rng);
        b = bn1_.forward(b, training, rng);
        b = relu1_.forward(b, training, rng);
        b = conv2_.forward(b, training, rng);
        b = bn2_.forward(b, training, rng);
        const Tensor skip = proj_ ? proj_->forward(x, training, rng) : x;
        sum_ = Tensor(b.shape);
        sum_margin_ = kInf;
        Tensor y(b.shape);
        for (std::size_t i = 0; i < b.v.size(); ++i) {
            sum_.v[i] = b.v[i] + skip.v[i];
            sum_margin_ = std::min(sum_margin_, std::abs(sum_.v[i]));
            y.v[i] = sum_.v[i] > 0.0 ? sum_.v[i] : 0.0;
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gsum(gy.shape);
        for (std::size_t i = 0; i < gy.v.size(); ++i) {
            gsum.v[i] = sum_.v[i] > 0.0 ? gy.v[i] : 0.0;
        }
        Tensor gb = bn2_.backward(gsum);
        gb = conv2_.backward(gb);
        gb = relu1_.backward(gb);
        gb = bn1_.backward(gb);
        Tensor gx = conv1_.backward(gb);
        if (proj_) {
            const Tensor gskip = proj_->backward(gsum);
            for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gskip.v[i];
        } else {
            for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gsum.v[i];
        }
        return gx;
    }

    void collect_trainable(std::vector<Network::ParamRef>& out) override {
        conv1_.collect_trainable(out);
        bn1_.collect_trainable(out);
        conv2_.collect_trainable(out);
        bn2_.collect_trainable(out);
        if (proj_) proj_->collect_trainable(out);
    }

    void collect_state(std::vector<ParamSlot*>& out) override {
        bn1_.collect_state(out);
        bn2_.collect_state(out);
    }

    double relu_margin() const override {
        return std::min(relu1_.relu_margin(), sum_margin_);
    }

private:
    Conv1dLayer conv1_;
    BatchNormLayer bn1_;
    ReluLayer relu1_;
    Conv1dLayer conv2_;
    BatchNormLayer bn2_;
    std::unique_ptr<Conv1dLayer> proj_;
    Tensor sum_;
    double sum_margin_ = kInf;
};

} // namespace detail

Network::Network(const NetworkSpec& spec) : spec_(spec) {
    const auto shapes = propagate_shapes(spec);
    Rng init(spec.seed);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& ls = spec.layers[i];
        const auto& in_shape = shapes[i];
        const std::string prefix = "l" + std::to_string(i);
        switch (ls.kind) {
        case LayerKind::Dense:
            layers_.push_back(std::make_unique<detail::DenseLayer>(
                prefix, Tensor::size_of(in_shape), static_cast<std::size_t>(ls.out_units),
                init));
            break;
        case LayerKind::Conv1d:
            layers_.push_back(std::make_unique<detail::Conv1dLayer>(
                prefix, in_shape[0], static_cast<std::size_t>(ls.out_channels),
                ls.kernel_size, ls.stride, ls.padding, init));
            break;
        case LayerKind::Relu:
            layers_.push_back(std::make_unique<detail::ReluLayer>());
            break;
        case LayerKind::BatchNorm1d:
            layers_.push_back(std::make_unique<detail::BatchNormLayer>(prefix, in_shape[0]));
            break;
        case LayerKind::GlobalAvgPool:
            layers_.push_back(std::make_unique<detail::GapLayer>());
            break;
        case LayerKind::Dropout:
            layers_.push_back(std::make_unique<detail::DropoutLayer>(ls.rate));
            break;
        case LayerKind::ResidualBlock:
            layers_.push_back(std::make_unique<detail::ResidualBlockLayer>(
                prefix, in_shape[0], static_cast<std::size_t>(ls.out_channels), ls.stride,
                init));
            break;
        }
    }
    for (auto& layer : layers_) layer->collect_trainable(trainable_);
    dropout_rng_seed_ = Rng::mix(spec.seed, 0x6d61736bULL);
}

Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;
Network::~Network() = default;

Tensor Network::forward(const Tensor& batch, bool training) {
    Tensor x = batch;
    if (x.rank() == 2 && spec_.in_channels == 1) {
        x.shape = {x.shape[0], 1, x.shape[1]};
    }
    if (x.rank() != 3 || x.shape[1] != spec_.in_channels || x.shape[2] != spec_.in_length) {
        throw ShapeError("network input: expected (batch, " +
                         std::to_string(spec_.in_channels) + ", " +
                         std::to_string(spec_.in_length) + ")");
    }
    if (!dropout_rng_) dropout_rng_ = std::make_unique<Rng>(dropout_rng_seed_);
    for (auto& layer : layers_) x = layer->forward(x, training, *dropout_rng_);
    forward_recorded_ = true;
    return x;
}

std::map<std::string, Tensor> Network::backward(const Tensor& output_grad) {
    if (!forward_recorded_) {
        throw StateError("backward: no recorded forward pass");
    }
    forward_recorded_ = false;
    for (auto& p : trainable_) {
        std::fill(p.grad->v.begin(), p.grad->v.end(), 0.0);
    }
    Tensor g = output_grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
    }
    std::map<std::string, Tensor> grads;
    for (const auto& p : trainable_) grads[p.name] = *p.grad;
    return grads;
}

std::map<std::string, Tensor> Network::state() const {
    std::map<std::string, Tensor> out;
    for (const auto& p : trainable_) out[p.name] = *p.value;
    std::vector<detail::ParamSlot*> slots;
    for (const auto& layer : layers_) layer->collect_state(slots);
    for (const auto* slot : slots) out[slot->name] = slot->value;
    return out;
}

void Network::load_state(const std::map<std::string, Tensor>& state) {
    std::size_t loaded = 0;
    auto apply = [&](const std::string& name, Tensor* dst) {
        const auto it = state.find(name);
        if (it == state.end()) throw DataError("network state: missing tensor '" + name + "'");
        if (it->second.shape != dst->shape) {
            throw ShapeError("network state: tensor '" + name + "' has wrong shape");
        }
        *dst = it->second;
        ++loaded;
    };
    for (auto& p : trainable_) apply(p.name, p.value);
    std::vector<detail::ParamSlot*> slots;
    for (const auto& layer : layers_) layer->collect_state(slots);
    for (auto* slot : slots) apply(slot->name, &slot->value);
    if (loaded != state.size()) {
        throw DataError("network state: extra tensors in state map");
    }
}

void Network::reseed_dropout(std::uint64_t seed) {
    dropout_rng_ = std::make_unique<Rng>(seed);
}

double Network::min_relu_input_magnitude() const {
    double margin = detail::kInf;
    for (const auto& layer : layers_) margin = std::min(margin, layer->relu_margin());
    return margin;
}

NetworkSpec build_mlp(int input_features, const std::vector<int>& hidden,
                      std::uint64_t seed) {
    NetworkSpec spec;
    spec.in_channels = 1;
    spec.in_length = static_cast<std::size_t>(input_features);
    spec.seed = seed;
    for (const int h : hidden) {
        spec.layers.push_back(LayerSpec::dense(h));
        spec.layers.push_back(LayerSpec::relu());
    }
    spec.layers.push_back(LayerSpec::dense(1));
    return spec;
}

NetworkSpec build_cnn7(int input_features, const std::vector<int>& channels,
                       std::uint64_t seed) {
    if (channels.size() != 7) {
        throw ConfigError("cnn7: need exactly 7 channel counts, got " +
                          std::to_string(channels.size()));
    }
    NetworkSpec spec;
    spec.in_channels = 1;
    spec.in_length = static_cast<std::size_t>(input_features);
    spec.seed = seed;
    for (const int c : channels) {
        spec.layers.push_back(LayerSpec::conv1d(c, 3, 1, 1));
        spec.layers.push_back(LayerSpec::relu());
    }
    spec.layers.push_back(LayerSpec::global_avg_pool());
    spec.layers.push_back(LayerSpec::dense(64));
    spec.layers.push_back(LayerSpec::relu());
    spec.layers.push_back(LayerSpec::dense(1));
    return spec;
}

NetworkSpec build_resnet1d(int input_features, const std::vector<int>& block_channels,
                           std::uint64_t seed) {
    if (block_channels.size() != 3) {
        throw ConfigError("resnet1d: need exactly 3 block channel counts, got " +
                          std::to_string(block_channels.size()));
    }
    NetworkSpec spec;
    spec.in_channels = 1;
    spec.in_length = static_cast<std::size_t>(input_features);
    spec.seed = seed;
    spec.layers.push_back(LayerSpec::conv1d(block_channels[0], 3, 1, 1)); // stem
    for (std::size_t i = 0; i < 3; ++i) {
        spec.layers.push_back(
            LayerSpec::residual_block(block_channels[i], i == 0 ? 1 : 2));
    }
    spec.layers.push_back(LayerSpec::global_avg_pool());
    spec.layers.push_back(LayerSpec::dense(256));
    spec.layers.push_back(LayerSpec::dropout(0.5));
    spec.layers.push_back(LayerSpec::dense(128));
    spec.layers.push_back(LayerSpec::dropout(0.5));
    spec.layers.push_back(LayerSpec::dense(1));
    return spec;
}

namespace {

double mse_against(const Tensor& out, const Tensor& target) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        const double d = out.v[i] - target.v[i];
        s += d * d;
    }
    return s / static_cast<double>(out.v.size());
}

} // namespace

double grad_check(const NetworkSpec& spec, const Tensor& batch, double h) {
    constexpr std::uint64_t kMaskSeed = 0x647270726f6265ULL;
    Network net(spec);
    if (net.trainable().empty()) return 0.0;

    net.reseed_dropout(kMaskSeed);
    Tensor out = net.forward(batch, true);
    Tensor target(out.shape);
    Rng trng(Rng::mix(spec.seed, 0x74617267ULL));
    for (auto& v : target.v) v = trng.uniform(-1.0, 1.0);

    const double inv = 2.0 / static_cast<double>(out.v.size());
    Tensor loss_grad(out.shape);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        loss_grad.v[i] = inv * (out.v[i] - target.v[i]);
    }
    const auto grads = net.backward(loss_grad);

    auto loss_at = [&]() {
        net.reseed_dropout(kMaskSeed);
        return mse_against(net.forward(batch, true), target);
    };

    double worst = 0.0;
    for (const auto& p : net.trainable()) {
        const Tensor& g = grads.at(p.name);
        for (std::size_t k = 0; k < p.value->v.size(); ++k) {
            const double saved = p.value->v[k];
            p.value->v[k] = saved + h;
            const double lp = loss_at();
            p.value->v[k] = saved - h;
            const double lm = loss_at();
            p.value->v[k] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double dev =
                std::abs(fd - g.v[k]) / std::max({1.0, std::abs(fd), std::abs(g.v[k])});
            worst = std::max(worst, dev);
        }
    }
    return worst;
}

void TrainOptions::validate() const {
    if (lr < 0.0) throw ConfigError("train: lr must be >= 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train: adam betas must lie in [0, 1)");
    }
    if (eps <= 0.0) throw ConfigError("train: adam eps must be > 0");
}

TrainResult train_network(const NetworkSpec& spec, const PanelDataset& train,
                          const TrainOptions& opts) {
    opts.validate();
    if (train.rows.empty()) throw DataError("train_network: empty training set");
    const std::size_t n = train.rows.size();
    const std::size_t F = train.n_features();
    if (spec.in_channels * spec.in_length != F) {
        throw ShapeError("train_network: network expects " +
                         std::to_string(spec.in_channels * spec.in_length) +
                         " features, dataset has " + std::to_string(F));
    }

    Normalization norm;
    norm.x_on = opts.standardize_features;
    norm.y_on = opts.standardize_target;
    norm.x_mean.assign(F, 0.0);
    norm.x_sd.assign(F, 1.0);
    const Matrix X = features_matrix(train);
    const std::vector<double> y = targets(train);
    if (norm.x_on) {
        for (std::size_t j = 0; j < F; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += X.at(i, j);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = X.at(i, j) - mean;
                var += d * d;
            }
            const double sd = std::sqrt(var / static_cast<double>(n));
            norm.x_mean[j] = mean;
            norm.x_sd[j] = sd > 0.0 ? sd : 1.0;
        }
    }
    if (norm.y_on) {
        double mean = 0.0;
        for (const double v : y) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const double v : y) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        norm.y_mean = mean;
        norm.y_sd = sd > 0.0 ? sd : 1.0;
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = (y[i] - norm.y_mean) / norm.y_sd;

    Network net(spec);
    net.reseed_dropout(Rng::mix(opts.seed, 0x64726f70ULL));
    Rng shuffle_rng(Rng::mix(opts.seed, 0x73687566ULL));

    struct AdamSlot {
        std::vector<double> m, v;
    };
    std::vector<AdamSlot> slots(net.trainable().size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        slots[i].m.assign(net.trainable()[i].value->v.size(), 0.0);
        slots[i].v.assign(net.trainable()[i].value->v.size(), 0.0);
    }
    long long step = 0;

    std::vector<std::size_t> index(n);
    for (std::size_t i = 0; i < n; ++i) index[i] = i;

    const std::size_t bs = static_cast<std::size_t>(opts.batch_size);
    TrainResult result;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        shuffle_rng.shuffle(index);
        double sse = 0.0;
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t b = std::min(bs, n - start);
            Tensor xb({b, 1, F});
            Tensor yb({b, 1});
            for (std::size_t r = 0; r < b; ++r) {
                const std::size_t src = index[start + r];
                for (std::size_t j = 0; j < F; ++j) {
                    xb.at3(r, 0, j) = (X.at(src, j) - norm.x_mean[j]) / norm.x_sd[j];
                }
                yb.at2(r, 0) = ys[src];
            }
            const Tensor out = net.forward(xb, true);
            Tensor lg(out.shape);
            const double inv_b = 1.0 / static_cast<double>(b);
            for (std::size_t i = 0; i < out.v.size(); ++i) {
                const double d = out.v[i] - yb.v[i];
                sse += d * d;
                lg.v[i] = 2.0 * d * inv_b;
            }
            const auto grads = net.backward(lg);
            ++step;
            for (std::size_t pi = 0; pi < net.trainable().size(); ++pi) {
                auto& p = net.trainable()[pi];
                const Tensor& g = grads.at(p.name);
                if (opts.optimizer == TrainOptions::Optimizer::Sgd) {
                    for (std::size_t k = 0; k < g.v.size(); ++k) {
                        p.value->v[k] -= opts.lr * g.v[k];
                    }
                } else {
                    auto& slot = slots[pi];
                    const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
                    const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
                    for (std::size_t k = 0; k < g.v.size(); ++k) {
                        slot.m[k] = opts.beta1 * slot.m[k] + (1.0 - opts.beta1) * g.v[k];
                        slot.v[k] = opts.beta2 * slot.v[k] + (1.0 - opts.beta2) * g.v[k] * g.v[k];
                        const double mhat = slot.m[k] / bc1;
                        const double vhat = slot.v[k] / bc2;
                        p.value->v[k] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
                    }
                }
            }
        }
        const double epoch_loss = sse / static_cast<double>(n);
        if (!std::isfinite(epoch_loss)) {
            throw TrainingError("training diverged at epoch " + std::to_string(epoch));
        }
        result.epoch_loss.push_back(epoch_loss);
    }

    result.network.spec = spec;
    result.network.parameters = net.state();
    result.network.normalization = norm;
    return result;
}

std::vector<double> predict_network(const TrainedNetwork& tn, const Matrix& X) {
    const std::size_t F = tn.normalization.x_mean.size();
    if (X.cols != F) {
        throw ShapeError("predict_network: model expects " + std::to_string(F) +
                         " features, input has " + std::to_string(X.cols));
    }
    Network net(tn.spec);
    net.load_state(tn.parameters);

    Tensor xb({X.rows, 1, F});
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t j = 0; j < F; ++j) {
            xb.at3(r, 0, j) =
                (X.at(r, j) - tn.normalization.x_mean[j]) / tn.normalization.x_sd[j];
        }
    }
    const Tensor out = net.forward(xb, false);
    std::vector<double> preds(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) {
        preds[r] = out.v[r] * tn.normalization.y_sd + tn.normalization.y_mean;
    }
    return preds;
}

} // namespace surveycast
