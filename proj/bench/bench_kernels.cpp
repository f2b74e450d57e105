// Times the OpenMP kernels against the serial reference implementations and
// checks that both produce bitwise-identical results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <mtg/nn.hpp>
#include <mtg/observe.hpp>
#include <mtg/rng.hpp>

using namespace mtg;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.a) v = rng.next_gaussian();
    return m;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double time_ms(int reps, const std::function<void()>& fn) {
    fn();  // warm up, and materialize outputs once before timing
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

struct BenchRow {
    std::string name;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    bool identical = false;
};

void print_rows(const std::vector<BenchRow>& rows) {
    std::printf("%-28s %12s %12s %9s %9s\n", "kernel", "serial ms", "parallel ms",
                "speedup", "bitwise");
    for (const BenchRow& r : rows)
        std::printf("%-28s %12.3f %12.3f %8.2fx %9s\n", r.name.c_str(), r.serial_ms,
                    r.parallel_ms, r.serial_ms / r.parallel_ms,
                    r.identical ? "equal" : "DIFFER");
}

}  // namespace

int main() {
    const int batch = 256;
    const int reps = 20;
    Rng rng(42);

    const Matrix obs = random_matrix(batch, kObsDim, rng);
    const Matrix w1 = random_matrix(512, kObsDim, rng);
    const std::vector<double> b1(512, 0.01);
    const Matrix dy1 = random_matrix(batch, 512, rng);

    std::vector<BenchRow> rows;

    {
        BenchRow row{"linear_forward 3077->512", 0, 0, false};
        Matrix y_serial, y_parallel;
        set_kernel_mode(KernelMode::serial);
        row.serial_ms = time_ms(reps, [&] { linear_forward(obs, w1, b1, y_serial); });
        set_kernel_mode(KernelMode::parallel);
        row.parallel_ms = time_ms(reps, [&] { linear_forward(obs, w1, b1, y_parallel); });
        row.identical = bits_equal(y_serial.a, y_parallel.a);
        rows.push_back(row);
    }

    {
        BenchRow row{"linear_backward 3077->512", 0, 0, false};
        Matrix dx_s, dx_p, dw_s(512, kObsDim), dw_p(512, kObsDim);
        std::vector<double> db_s(512), db_p(512);
        set_kernel_mode(KernelMode::serial);
        row.serial_ms = time_ms(reps, [&] {
            dw_s.zero();
            std::fill(db_s.begin(), db_s.end(), 0.0);
            linear_backward(obs, w1, dy1, &dx_s, dw_s, db_s);
        });
        set_kernel_mode(KernelMode::parallel);
        row.parallel_ms = time_ms(reps, [&] {
            dw_p.zero();
            std::fill(db_p.begin(), db_p.end(), 0.0);
            linear_backward(obs, w1, dy1, &dx_p, dw_p, db_p);
        });
        row.identical = bits_equal(dx_s.a, dx_p.a) && bits_equal(dw_s.a, dw_p.a) &&
                        bits_equal(db_s, db_p);
        rows.push_back(row);
    }

    {
        BenchRow row{"mlp fwd+bwd 3077-512-256", 0, 0, false};
        Rng net_rng(7);
        Mlp net = Mlp::make({kObsDim, 512, 256}, 1.0, net_rng);
        const Matrix dout = random_matrix(batch, 256, rng);
        MlpCache cache;
        MlpGrads grads_s = MlpGrads::zeros_like(net), grads_p = MlpGrads::zeros_like(net);
        Matrix dx_s, dx_p;
        set_kernel_mode(KernelMode::serial);
        row.serial_ms = time_ms(reps, [&] {
            grads_s.zero();
            mlp_forward(net, obs, cache);
            mlp_backward(net, cache, dout, grads_s, &dx_s);
        });
        set_kernel_mode(KernelMode::parallel);
        row.parallel_ms = time_ms(reps, [&] {
            grads_p.zero();
            mlp_forward(net, obs, cache);
            mlp_backward(net, cache, dout, grads_p, &dx_p);
        });
        row.identical = bits_equal(dx_s.a, dx_p.a);
        for (std::size_t l = 0; l < grads_s.dw.size(); ++l)
            row.identical = row.identical && bits_equal(grads_s.dw[l].a, grads_p.dw[l].a) &&
                            bits_equal(grads_s.db[l], grads_p.db[l]);
        rows.push_back(row);
    }

    {
        BenchRow row{"masked_log_softmax 478", 0, 0, false};
        const Matrix logits = random_matrix(batch, kNumActions, rng);
        std::vector<ActionMask> masks(batch);
        for (int i = 0; i < batch; ++i) {
            masks[static_cast<std::size_t>(i)].set(ActionCategory::PASS, 0);
            for (int k = 0; k < 8; ++k) {
                const int a = static_cast<int>(rng.next_below(kNumActions));
                masks[static_cast<std::size_t>(i)].set(a);
            }
        }
        Matrix lp_s, lp_p;
        set_kernel_mode(KernelMode::serial);
        row.serial_ms = time_ms(reps, [&] { masked_log_softmax(logits, masks, lp_s); });
        set_kernel_mode(KernelMode::parallel);
        row.parallel_ms = time_ms(reps, [&] { masked_log_softmax(logits, masks, lp_p); });
        row.identical = bits_equal(lp_s.a, lp_p.a);
        rows.push_back(row);
    }

    {
        BenchRow row{"adam step 1.97M params", 0, 0, false};
        const int n = 512 * kObsDim + 512 * 478;
        std::vector<double> params_s(static_cast<std::size_t>(n)),
            grads(static_cast<std::size_t>(n));
        Rng prng(11);
        for (double& v : params_s) v = prng.next_gaussian();
        for (double& v : grads) v = 0.01 * prng.next_gaussian();
        std::vector<double> params_p = params_s;
        Adam opt_s(n), opt_p(n);
        set_kernel_mode(KernelMode::serial);
        row.serial_ms = time_ms(reps, [&] { opt_s.step(params_s, grads, 3e-4); });
        set_kernel_mode(KernelMode::parallel);
        row.parallel_ms = time_ms(reps, [&] { opt_p.step(params_p, grads, 3e-4); });
        // The two optimizers saw the same gradient stream the same number of
        // times, so the parameter vectors must match exactly.
        row.identical = bits_equal(params_s, params_p);
        rows.push_back(row);
    }

    set_kernel_mode(KernelMode::serial);
    print_rows(rows);
    bool all = true;
    for (const BenchRow& r : rows) all = all && r.identical;
    if (!all) {
        std::printf("FAIL: parallel kernels diverge from the serial reference\n");
        return 1;
    }
    return 0;
}
