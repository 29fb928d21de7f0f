#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedtab/data.hpp"
#include "fedtab/mat.hpp"

namespace fedtab {

struct TabNetConfig {
    int input_dim = 0;
    int n_classes = 0;
    int n_d = 5;
    int n_a = 5;
    int n_steps = 3;
    double gamma = 1.3;
    double lambda_sparse = 1e-3;
    double bn_momentum = 0.1;
    double epsilon = 1e-15;  // mask entropy guard

    int hidden() const { return n_d + n_a; }
    void validate() const;  // throws std::invalid_argument
};

struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
    bool trainable = true;

    std::size_t size() const { return values.size(); }
};

// Ordered, named parameter tensors; the order and shapes are fully
// determined by the config, which makes parameter sets from the same
// config element-wise combinable (FedAvg).
struct ModelParams {
    TabNetConfig config;
    std::vector<ParamTensor> tensors;

    ParamTensor& by_name(const std::string& name);
    const ParamTensor& by_name(const std::string& name) const;
};

// Deterministic initialization: Xavier-uniform weights, zero biases,
// ones/zeros for normalization tensors.
ModelParams init_params(const TabNetConfig& config, std::uint64_t seed);

// Euclidean projection onto the probability simplex (sorted-threshold
// algorithm). Output sums to 1, entries >= 0, exact zeros off the support.
std::vector<double> sparsemax(const std::vector<double>& z);
void sparsemax_inplace(double* z, int n);

// Backward of sparsemax: d_in = (d_out - mean_support(d_out)) on the
// support of p, 0 elsewhere.
void sparsemax_backward(const double* p, const double* d_out, double* d_in, int n);

// Caches for one GLU feature-transformer pass.
struct GluCache {
    Mat pre;  // B x 2H
    Mat out;  // B x H
};

struct FtCache {
    Mat input;
    GluCache g0, g1, g2, g3;
    Mat h1, h2, h3;  // residual block outputs; h3 is the transformer output
};

struct StepCache {
    Mat prior;    // prior entering this step
    Mat att_lin;  // a_{i-1} W_att + b_att
    Mat z;        // prior (*) att_lin
    Mat mask;     // sparsemax rows of z
    Mat masked;   // mask (*) f
    FtCache ft;
    Mat d, relu_d, a;
};

struct ForwardTrace {
    Mat xhat;  // normalized input before scale/offset
    Mat f;     // normalized features
    FtCache ft0;
    Mat a0;
    std::vector<StepCache> steps;
    Mat aggregate;
};

struct ForwardResult {
    Mat logits;            // B x C
    double sparsity_loss;  // mean mask entropy over steps and batch
    ForwardTrace trace;
};

// Pure inference/training forward pass; never mutates params (running
// statistics are read, not updated).
ForwardResult forward(const ModelParams& params, const double* x, int batch);

// Mean softmax cross-entropy (max-shifted log-sum-exp).
double cross_entropy(const Mat& logits, const std::vector<int>& labels);

double total_loss(const Mat& logits, const std::vector<int>& labels,
                  double sparsity_loss, double lambda_sparse);

// Per-tensor gradients aligned with ModelParams.tensors (zero vectors for
// non-trainable tensors).
struct Gradients {
    std::vector<std::vector<double>> g;
};

// Exact reverse-mode gradient of total_loss w.r.t. every trainable tensor.
// Returns the loss value.
double loss_and_gradients(const ModelParams& params, const double* x, int batch,
                          const std::vector<int>& labels, Gradients& out);

struct AdamState {
    long step = 0;
    std::vector<std::vector<double>> m, v;
};

AdamState init_adam(const ModelParams& params);
void adam_step(AdamState& state, ModelParams& params, const Gradients& grads, double lr);

inline constexpr double kDefaultLearningRate = 0.02;

// `epochs` passes of seeded-shuffled mini-batches over rows(idx); running
// normalization statistics are folded in per batch with bn_momentum.
ModelParams train_epochs(const ModelParams& params, const TabularDataset& data,
                         const std::vector<std::size_t>& idx, int epochs,
                         int batch_size, std::uint64_t seed,
                         double lr = kDefaultLearningRate);
ModelParams train_epochs(const ModelParams& params, const TabularDataset& data,
                         int epochs, int batch_size, std::uint64_t seed,
                         double lr = kDefaultLearningRate);

// Argmax of logits, ties to the lowest class index.
std::vector<int> predict(const ModelParams& params, const double* x, int batch);

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;  // cross-entropy only
    std::vector<int> predictions;
};

EvalResult evaluate(const ModelParams& params, const TabularDataset& data,
                    const std::vector<std::size_t>& idx);

// Mean over batch and steps of masks weighted by relu(d) row sums,
// normalized to sum 1.
std::vector<double> feature_importance(const ForwardTrace& trace);

}  // namespace fedtab
