#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtg/actions.hpp"
#include "mtg/rng.hpp"

namespace mtg {

/**
 * Kernel dispatch: a serial reference implementation and an OpenMP variant.
 * Every parallel kernel assigns each output element to exactly one thread and
 * keeps the per-element accumulation order of the serial loop, so the two
 * modes produce bitwise-identical results.
 */
enum class KernelMode : std::uint8_t { serial, parallel };
void set_kernel_mode(KernelMode mode);
KernelMode kernel_mode();

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
    double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// y = x * w^T + b with x [n, in], w [out, in], b [out], y [n, out]
void linear_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y);
// dx = dy * w; dw += dy^T x; db += column sums of dy. dx may be null.
void linear_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix* dx,
                     Matrix& dw, std::vector<double>& db);
void relu_inplace(Matrix& y);
// dy masked by the post-activation values (dy_ij = 0 where y_ij <= 0)
void relu_backward(const Matrix& y, Matrix& dy);

struct Linear {
    Matrix w;  // [out, in]
    std::vector<double> b;
};

/// Plain feed-forward net: ReLU between layers, linear output.
struct Mlp {
    std::vector<Linear> layers;

    /// Orthogonal-style initialization (Gram-Schmidt over gaussian draws),
    /// gain sqrt(2) on hidden layers and `final_scale` on the output layer.
    static Mlp make(const std::vector<int>& sizes, double final_scale, Rng& rng);

    int in_dim() const { return layers.front().w.cols; }
    int out_dim() const { return layers.back().w.rows; }
};

struct MlpCache {
    std::vector<Matrix> acts;  // acts[0] = input, acts[i+1] = layer i output
};

struct MlpGrads {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;

    static MlpGrads zeros_like(const Mlp& net);
    void zero();
};

/// Returns cache.acts.back(); hidden activations are post-ReLU.
const Matrix& mlp_forward(const Mlp& net, const Matrix& x, MlpCache& cache);
void mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& dout, MlpGrads& grads,
                  Matrix* dx = nullptr);

// Flat parameter plumbing for the optimizer and checkpoints.
std::size_t mlp_param_count(const Mlp& net);
void mlp_copy_params(const Mlp& net, double* out);
void mlp_load_params(Mlp& net, const double* in);
void mlp_grads_copy(const MlpGrads& grads, double* out);

/// Row-wise log-softmax with illegal actions suppressed before normalization;
/// masked-out entries come back as -infinity (probability exactly zero).
void masked_log_softmax(const Matrix& logits, const std::vector<ActionMask>& masks,
                        Matrix& logp);
double masked_entropy_row(const double* logp, const ActionMask& mask);
int argmax_legal(const double* scores, const ActionMask& mask);
int sample_masked(const double* logp, const ActionMask& mask, Rng& rng);

double sigmoid(double x);

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m;
    std::vector<double> v;
    long step_count = 0;

    explicit Adam(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
    void step(std::vector<double>& params, const std::vector<double>& grads, double lr);
};

double global_grad_norm(const std::vector<double>& grads);
/// Scales in place so the global norm is at most max_norm; returns the pre-clip norm.
double clip_grad_norm(std::vector<double>& grads, double max_norm);

}  // namespace mtg
