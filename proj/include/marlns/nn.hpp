#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "marlns/rng.hpp"

namespace marlns {

// Orthogonal weight init: Gaussian fill, QR via modified Gram-Schmidt with
// re-orthogonalization, sign-fixed, scaled by gain. Row-major rows x cols.
// The smaller dimension ends up orthonormal up to gain.
std::vector<double> orthogonal_init(int rows, int cols, double gain, Rng& rng);

// Scales grads in place so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(std::span<double> grads, double max_norm = 10.0);

struct TensorInfo {
    std::string name;
    int rows = 0;
    int cols = 0;  // 0 for bias vectors
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Per-batch activation cache produced by Mlp::forward, consumed by backward.
struct ForwardCache {
    int batch = 0;
    // acts[0] is the input batch, acts[l+1] the post-activation output of
    // layer l (tanh on hidden layers, identity on the last).
    std::vector<std::vector<double>> acts;
};

// Feed-forward MLP, tanh hidden activations, linear output head. Parameters
// live in one flat vector (per layer: W row-major [out x in], then b) so the
// optimizer and gradient clipping operate on plain spans.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<int> dims, std::string name);

    void init_orthogonal(double hidden_gain, double head_gain, Rng& rng);

    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    const std::vector<int>& dims() const { return dims_; }
    const std::string& name() const { return name_; }

    std::size_t n_params() const { return theta_.size(); }
    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }
    const std::vector<TensorInfo>& tensors() const { return tensors_; }

    // Batched forward pass. x is batch*input_dim row-major, y batch*output_dim.
    // Parallel over rows in ExecMode::OpenMP; bit-identical to the serial
    // reference because rows are independent.
    void forward(const double* x, int batch, double* y, ForwardCache* cache = nullptr) const;

    // Single-sample convenience used by the sampling workers. Thread-safe.
    std::vector<double> forward_one(std::span<const double> x) const;

    // Backward from dLoss/dY. Accumulates parameter gradients into grad
    // (size n_params) and, when dx != nullptr, writes dLoss/dX. The OpenMP
    // path accumulates into per-thread buffers merged in thread order, so
    // results are deterministic for a fixed thread count.
    void backward(const ForwardCache& cache, const double* dy, std::vector<double>& grad,
                  double* dx = nullptr) const;

private:
    std::vector<int> dims_;
    std::string name_;
    std::vector<double> theta_;
    std::vector<TensorInfo> tensors_;  // layer0.W, layer0.b, layer1.W, ...

    void forward_rows(const double* x, int row_begin, int row_end, double* y,
                      ForwardCache* cache) const;
    void backward_rows(const ForwardCache& cache, const double* dy, int row_begin, int row_end,
                       double* grad, double* dx) const;
};

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-5;
    double weight_decay = 0.0;
};

// Bias-corrected Adam over a flat parameter vector.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    // theta -= lr_scale * lr * mhat / (sqrt(vhat) + eps). Throws on
    // non-finite gradients, naming the offending tensor when a layout is
    // given.
    void step(std::span<double> params, std::span<const double> grads, const AdamConfig& cfg,
              double lr_scale = 1.0, const std::vector<TensorInfo>* layout = nullptr);

    long long step_count() const { return t_; }

private:
    std::vector<double> m_, v_;
    long long t_ = 0;
};

// Named-tensor checkpoint file (plain text, exact round-trip via %.17g).
struct NamedTensorView {
    std::string name;
    std::vector<int> shape;
    double* data = nullptr;
    std::size_t size = 0;
};

std::vector<NamedTensorView> named_tensors(Mlp& net, const std::string& prefix);
void save_tensors(const std::string& path, const std::vector<NamedTensorView>& tensors);
void load_tensors(const std::string& path, std::vector<NamedTensorView>& tensors);

}  // namespace marlns
