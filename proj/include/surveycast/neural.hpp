#pragma once

#include "surveycast/dataset.hpp"
#include "surveycast/tensor.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace surveycast {

enum class LayerKind {
    Dense,
    Conv1d,
    Relu,
    BatchNorm1d,
    GlobalAvgPool,
    Dropout,
    ResidualBlock,
};

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    int out_units = 0;    // dense
    int out_channels = 0; // conv1d, residual_block
    int kernel_size = 3;  // conv1d
    int stride = 1;       // conv1d, residual_block
    int padding = 0;      // conv1d
    double rate = 0.0;    // dropout, in [0, 1)

    static LayerSpec dense(int units);
    static LayerSpec conv1d(int out_channels, int kernel_size, int stride, int padding);
    static LayerSpec relu();
    static LayerSpec batchnorm1d();
    static LayerSpec global_avg_pool();
    static LayerSpec dropout(double rate);
    static LayerSpec residual_block(int out_channels, int stride);
};

struct NetworkSpec {
    std::size_t in_channels = 1;
    std::size_t in_length = 0;
    std::vector<LayerSpec> layers;
    std::uint64_t seed = 0;
};

// Dense/relu stack ending in a single output unit.
NetworkSpec build_mlp(int input_features, const std::vector<int>& hidden,
                      std::uint64_t seed);

// Seven same-padded conv1d+relu layers over the feature sequence, then
// global average pooling and a dense 64 -> relu -> dense 1 head.
NetworkSpec build_cnn7(int input_features, const std::vector<int>& channels,
                       std::uint64_t seed);

// Stem conv, three residual blocks, global average pooling and the dense
// 256 -> dropout(0.5) -> dense 128 -> dropout(0.5) -> dense 1 head.
NetworkSpec build_resnet1d(int input_features, const std::vector<int>& block_channels,
                           std::uint64_t seed);

// Per-row shapes each layer produces, starting from (in_channels, in_length).
// Validates composition; throws ShapeError naming the offending layer.
std::vector<std::vector<std::size_t>> propagate_shapes(const NetworkSpec& spec);

namespace detail {
class LayerImpl;
}
class Rng;

// Runtime network: seeded parameter initialization, layer-by-layer forward
// with cached activations, and reverse-mode backward producing named
// parameter gradients.
class Network {
public:
    explicit Network(const NetworkSpec& spec);
    Network(Network&&) noexcept;
    Network& operator=(Network&&) noexcept;
    ~Network();

    // batch is (N, C, L); a rank-2 (N, F) batch is accepted when C == 1.
    // Dropout fires and batchnorm uses batch statistics only in training mode.
    Tensor forward(const Tensor& batch, bool training);

    // Reverse-mode pass from d(loss)/d(output). Requires a preceding
    // training-mode forward; calling twice without a new forward is a
    // StateError. Returns gradients for every trainable parameter.
    std::map<std::string, Tensor> backward(const Tensor& output_grad);

    // Full named state: trainable parameters plus batchnorm running stats.
    std::map<std::string, Tensor> state() const;
    void load_state(const std::map<std::string, Tensor>& state);

    struct ParamRef {
        std::string name;
        Tensor* value;
        Tensor* grad;
    };
    const std::vector<ParamRef>& trainable() { return trainable_; }

    // Fixes the dropout mask stream (finite-difference probes reset this
    // before every forward so all evaluations see identical masks).
    void reseed_dropout(std::uint64_t seed);

    // Smallest |relu input| seen during the last forward; +inf when the
    // network has no relu or no forward ran. Probe construction uses this
    // to keep finite differences away from kinks.
    double min_relu_input_magnitude() const;

    const NetworkSpec& spec() const { return spec_; }

private:
    NetworkSpec spec_;
    std::vector<std::unique_ptr<detail::LayerImpl>> layers_;
    std::vector<ParamRef> trainable_;
    std::unique_ptr<Rng> dropout_rng_;
    std::uint64_t dropout_rng_seed_ = 0;
    bool forward_recorded_ = false;
};

// Compares every trainable parameter's reverse-mode gradient against central
// finite differences of an MSE loss at step h; returns the worst relative
// deviation (0 for a parameter-free network). The caller supplies a probe
// batch with relu inputs bounded away from zero.
double grad_check(const NetworkSpec& spec, const Tensor& batch, double h);

struct Normalization {
    std::vector<double> x_mean;
    std::vector<double> x_sd;
    double y_mean = 0.0;
    double y_sd = 1.0;
    bool x_on = true;
    bool y_on = true;
};

struct TrainOptions {
    enum class Optimizer { Adam, Sgd };
    Optimizer optimizer = Optimizer::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t seed = 0;
    bool standardize_features = true;
    bool standardize_target = true;

    void validate() const; // throws ConfigError
};

struct TrainedNetwork {
    NetworkSpec spec;
    std::map<std::string, Tensor> parameters; // includes running statistics
    Normalization normalization;
};

struct TrainResult {
    TrainedNetwork network;
    std::vector<double> epoch_loss; // standardized-scale MSE per epoch
};

// Minibatch MSE training, deterministic for fixed (spec.seed, opts.seed).
// Standardization statistics come from the training split only and are
// stored for inference. Throws TrainingError when the loss goes non-finite.
TrainResult train_network(const NetworkSpec& spec, const PanelDataset& train,
                          const TrainOptions& opts);

// Applies stored normalization, runs an inference-mode forward and
// de-standardizes the output. Deterministic.
std::vector<double> predict_network(const TrainedNetwork& net, const Matrix& X);

} // namespace surveycast
