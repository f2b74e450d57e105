#include "mtg/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mtg {

namespace {
KernelMode g_mode = KernelMode::serial;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

void set_kernel_mode(KernelMode mode) { g_mode = mode; }
KernelMode kernel_mode() { return g_mode; }

void linear_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    Matrix& y) {
    if (x.cols != w.cols || static_cast<int>(b.size()) != w.rows)
        throw std::invalid_argument("linear_forward shape mismatch");
    y = Matrix(x.rows, w.rows);
    const int n = x.rows, out = w.rows, in = w.cols;
    if (g_mode == KernelMode::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            double* yi = y.row(i);
            for (int j = 0; j < out; ++j) {
                const double* wj = w.row(j);
                double acc = b[static_cast<std::size_t>(j)];
                for (int k = 0; k < in; ++k) acc += xi[k] * wj[k];
                yi[j] = acc;
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            double* yi = y.row(i);
            for (int j = 0; j < out; ++j) {
                const double* wj = w.row(j);
                double acc = b[static_cast<std::size_t>(j)];
                for (int k = 0; k < in; ++k) acc += xi[k] * wj[k];
                yi[j] = acc;
            }
        }
    }
}

void linear_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix* dx,
                     Matrix& dw, std::vector<double>& db) {
    const int n = x.rows, out = w.rows, in = w.cols;
    if (dy.rows != n || dy.cols != out) throw std::invalid_argument("linear_backward shapes");
    if (dw.rows != out || dw.cols != in || static_cast<int>(db.size()) != out)
        throw std::invalid_argument("linear_backward grad shapes");
    if (dx) *dx = Matrix(n, in);
    if (g_mode == KernelMode::parallel) {
        if (dx) {
#pragma omp parallel for schedule(static)
            for (int i = 0; i < n; ++i) {
                const double* dyi = dy.row(i);
                double* dxi = dx->row(i);
                for (int j = 0; j < out; ++j) {
                    const double g = dyi[j];
                    const double* wj = w.row(j);
                    for (int k = 0; k < in; ++k) dxi[k] += g * wj[k];
                }
            }
        }
#pragma omp parallel for schedule(static)
        for (int j = 0; j < out; ++j) {
            double* dwj = dw.row(j);
            double acc_b = 0.0;
            for (int i = 0; i < n; ++i) {
                const double g = dy.at(i, j);
                const double* xi = x.row(i);
                for (int k = 0; k < in; ++k) dwj[k] += g * xi[k];
                acc_b += g;
            }
            db[static_cast<std::size_t>(j)] += acc_b;
        }
    } else {
        if (dx) {
            for (int i = 0; i < n; ++i) {
                const double* dyi = dy.row(i);
                double* dxi = dx->row(i);
                for (int j = 0; j < out; ++j) {
                    const double g = dyi[j];
                    const double* wj = w.row(j);
                    for (int k = 0; k < in; ++k) dxi[k] += g * wj[k];
                }
            }
        }
        for (int j = 0; j < out; ++j) {
            double* dwj = dw.row(j);
            double acc_b = 0.0;
            for (int i = 0; i < n; ++i) {
                const double g = dy.at(i, j);
                const double* xi = x.row(i);
                for (int k = 0; k < in; ++k) dwj[k] += g * xi[k];
                acc_b += g;
            }
            db[static_cast<std::size_t>(j)] += acc_b;
        }
    }
}

void relu_inplace(Matrix& y) {
    const std::size_t n = y.a.size();
    if (g_mode == KernelMode::parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            if (y.a[static_cast<std::size_t>(i)] < 0.0) y.a[static_cast<std::size_t>(i)] = 0.0;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (y.a[i] < 0.0) y.a[i] = 0.0;
    }
}

void relu_backward(const Matrix& y, Matrix& dy) {
    if (y.rows != dy.rows || y.cols != dy.cols)
        throw std::invalid_argument("relu_backward shapes");
    const std::size_t n = y.a.size();
    if (g_mode == KernelMode::parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            if (y.a[static_cast<std::size_t>(i)] <= 0.0)
                dy.a[static_cast<std::size_t>(i)] = 0.0;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (y.a[i] <= 0.0) dy.a[i] = 0.0;
    }
}

namespace {

// Orthogonal-style init: gaussian draws, modified Gram-Schmidt over the short
// dimension, rescaled by the gain. Fully determined by the generator state.
Matrix orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
    const bool wide = cols > rows;
    const int nvec = wide ? rows : cols;  // number of vectors to orthonormalize
    const int dim = wide ? cols : rows;
    std::vector<std::vector<double>> basis(static_cast<std::size_t>(nvec),
                                           std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& vec : basis)
        for (double& x : vec) x = rng.next_gaussian();
    for (int i = 0; i < nvec; ++i) {
        auto& vi = basis[static_cast<std::size_t>(i)];
        for (int j = 0; j < i; ++j) {
            const auto& vj = basis[static_cast<std::size_t>(j)];
            double dot = 0.0;
            for (int k = 0; k < dim; ++k)
                dot += vi[static_cast<std::size_t>(k)] * vj[static_cast<std::size_t>(k)];
            for (int k = 0; k < dim; ++k)
                vi[static_cast<std::size_t>(k)] -= dot * vj[static_cast<std::size_t>(k)];
        }
        double norm = 0.0;
        for (double x : vi) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-12) norm = 1.0;  // degenerate draw; keep deterministic
        for (double& x : vi) x /= norm;
    }
    Matrix w(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double val = wide ? basis[static_cast<std::size_t>(r)]
                                           [static_cast<std::size_t>(c)]
                                    : basis[static_cast<std::size_t>(c)]
                                           [static_cast<std::size_t>(r)];
            w.at(r, c) = gain * val;
        }
    return w;
}

}  // namespace

Mlp Mlp::make(const std::vector<int>& sizes, double final_scale, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least in/out sizes");
    Mlp net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const bool last = i + 2 == sizes.size();
        const double gain = last ? final_scale : std::sqrt(2.0);
        Linear layer;
        layer.w = orthogonal_matrix(sizes[i + 1], sizes[i], gain, rng);
        layer.b.assign(static_cast<std::size_t>(sizes[i + 1]), 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (const auto& layer : net.layers) {
        g.dw.emplace_back(layer.w.rows, layer.w.cols);
        g.db.emplace_back(layer.b.size(), 0.0);
    }
    return g;
}

void MlpGrads::zero() {
    for (auto& m : dw) m.zero();
    for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

const Matrix& mlp_forward(const Mlp& net, const Matrix& x, MlpCache& cache) {
    cache.acts.clear();
    cache.acts.push_back(x);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Matrix y;
        linear_forward(cache.acts.back(), net.layers[i].w, net.layers[i].b, y);
        if (i + 1 < net.layers.size()) relu_inplace(y);
        cache.acts.push_back(std::move(y));
    }
    return cache.acts.back();
}

void mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& dout, MlpGrads& grads,
                  Matrix* dx) {
    if (cache.acts.size() != net.layers.size() + 1)
        throw std::invalid_argument("mlp_backward: stale cache");
    Matrix grad = dout;
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const bool first = i == 0;
        Matrix dprev;
        linear_backward(cache.acts[static_cast<std::size_t>(i)], net.layers[i].w, grad,
                        (first && !dx) ? nullptr : &dprev, grads.dw[i], grads.db[i]);
        if (first) {
            if (dx) *dx = std::move(dprev);
            break;
        }
        relu_backward(cache.acts[static_cast<std::size_t>(i)], dprev);
        grad = std::move(dprev);
    }
}

std::size_t mlp_param_count(const Mlp& net) {
    std::size_t n = 0;
    for (const auto& layer : net.layers) n += layer.w.a.size() + layer.b.size();
    return n;
}

void mlp_copy_params(const Mlp& net, double* out) {
    for (const auto& layer : net.layers) {
        out = std::copy(layer.w.a.begin(), layer.w.a.end(), out);
        out = std::copy(layer.b.begin(), layer.b.end(), out);
    }
}

void mlp_load_params(Mlp& net, const double* in) {
    for (auto& layer : net.layers) {
        std::copy(in, in + layer.w.a.size(), layer.w.a.begin());
        in += layer.w.a.size();
        std::copy(in, in + layer.b.size(), layer.b.begin());
        in += layer.b.size();
    }
}

void mlp_grads_copy(const MlpGrads& grads, double* out) {
    for (std::size_t i = 0; i < grads.dw.size(); ++i) {
        out = std::copy(grads.dw[i].a.begin(), grads.dw[i].a.end(), out);
        out = std::copy(grads.db[i].begin(), grads.db[i].end(), out);
    }
}

void masked_log_softmax(const Matrix& logits, const std::vector<ActionMask>& masks,
                        Matrix& logp) {
    if (static_cast<int>(masks.size()) != logits.rows)
        throw std::invalid_argument("masked_log_softmax: mask count mismatch");
    logp = Matrix(logits.rows, logits.cols);
    const int n = logits.rows, m = logits.cols;
    for (const ActionMask& mask : masks)
        if (mask.count() == 0) throw std::invalid_argument("masked_log_softmax: empty mask");
    const auto body = [&](int i) {
        const double* in = logits.row(i);
        double* out = logp.row(i);
        const ActionMask& mask = masks[static_cast<std::size_t>(i)];
        double maxv = kNegInf;
        for (int j = 0; j < m; ++j)
            if (mask.test(j) && in[j] > maxv) maxv = in[j];
        double sum = 0.0;
        for (int j = 0; j < m; ++j)
            if (mask.test(j)) sum += std::exp(in[j] - maxv);
        const double logz = maxv + std::log(sum);
        for (int j = 0; j < m; ++j) out[j] = mask.test(j) ? in[j] - logz : kNegInf;
    };
    if (g_mode == KernelMode::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) body(i);
    } else {
        for (int i = 0; i < n; ++i) body(i);
    }
}

double masked_entropy_row(const double* logp, const ActionMask& mask) {
    double h = 0.0;
    for (int j = 0; j < kNumActions; ++j)
        if (mask.test(j)) {
            const double p = std::exp(logp[j]);
            if (p > 0.0) h -= p * logp[j];
        }
    return h;
}

int argmax_legal(const double* scores, const ActionMask& mask) {
    int best = -1;
    double best_score = kNegInf;
    for (int j = 0; j < kNumActions; ++j)
        if (mask.test(j) && scores[j] > best_score) {
            best_score = scores[j];
            best = j;
        }
    if (best < 0) throw std::invalid_argument("argmax_legal: empty mask");
    return best;
}

int sample_masked(const double* logp, const ActionMask& mask, Rng& rng) {
    const double u = rng.next_double();
    double cum = 0.0;
    int last = -1;
    for (int j = 0; j < kNumActions; ++j) {
        if (!mask.test(j)) continue;
        last = j;
        cum += std::exp(logp[j]);
        if (u < cum) return j;
    }
    if (last < 0) throw std::invalid_argument("sample_masked: empty mask");
    return last;  // guard against rounding at the top of the CDF
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void Adam::step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    if (params.size() != grads.size() || params.size() != m.size())
        throw std::invalid_argument("Adam::step size mismatch");
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    const std::size_t n = params.size();
    if (g_mode == KernelMode::parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k] * grads[k];
            params[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k] * grads[k];
            params[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        }
    }
}

double global_grad_norm(const std::vector<double>& grads) {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    return std::sqrt(sq);
}

double clip_grad_norm(std::vector<double>& grads, double max_norm) {
    const double norm = global_grad_norm(grads);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
    return norm;
}

}  // namespace mtg
