#include "alfs/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "alfs/rng.hpp"

namespace alfs {

namespace {

constexpr std::uint64_t kMaskTag = 0x6d61736b;    // "mask"
constexpr std::uint64_t kShuffleTag = 0x73687566; // "shuf"
constexpr std::uint64_t kStepTag = 0x64726f70;    // "drop"

std::atomic<int> g_forward_threads{0};

int resolved_threads() {
    const int requested = g_forward_threads.load();
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// Runs fn over [0,n) in fixed chunks. Outputs must go to disjoint slots;
// chunk boundaries do not depend on the thread count, so results never do.
void parallel_chunks(int n, int chunk, const std::function<void(int, int)>& fn) {
    const int nchunks = (n + chunk - 1) / chunk;
    const int nthreads = std::min(resolved_threads(), nchunks);
    if (nthreads <= 1) {
        for (int c = 0; c < nchunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= nchunks) return;
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(nthreads - 1);
    for (int i = 1; i < nthreads; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
}

struct ConvDims {
    int in_ch, out_ch, k, pad, side, pooled;
    double dropout;
    int conv_values() const { return out_ch * side * side; }
    int pooled_values() const { return out_ch * pooled * pooled; }
};

struct FcDims {
    int in, out;
    double dropout;
};

struct Plan {
    std::vector<ConvDims> conv;
    std::vector<FcDims> fc;
    int head_in = 0;
    int classes = 0;
    int input_values = 0;
};

Plan make_plan(const ArchSpec& arch) {
    Plan p;
    p.input_values = arch.channels * arch.resolution * arch.resolution;
    p.classes = arch.class_count;
    int ch = arch.channels;
    int side = arch.resolution;
    for (const auto& b : arch.conv_blocks) {
        ConvDims d;
        d.in_ch = ch;
        d.out_ch = b.filters;
        d.k = b.kernel;
        d.pad = b.kernel / 2;
        d.side = side;
        d.pooled = side / 2;
        d.dropout = b.dropout;
        p.conv.push_back(d);
        ch = b.filters;
        side = d.pooled;
    }
    int features = ch * side * side;
    for (const auto& f : arch.fc_layers) {
        p.fc.push_back({features, f.width, f.dropout});
        features = f.width;
    }
    p.head_in = features;
    return p;
}

// One inverted-dropout mask per layer, shared by every item in the pass.
struct Masks {
    bool active = false;
    std::vector<std::vector<double>> conv; // empty vector when the rate is 0
    std::vector<std::vector<double>> fc;
};

Masks draw_masks(const Plan& plan, std::uint64_t seed) {
    Masks m;
    m.active = true;
    m.conv.resize(plan.conv.size());
    m.fc.resize(plan.fc.size());
    Rng rng(mix_seed(seed, kMaskTag));
    for (std::size_t i = 0; i < plan.conv.size(); ++i) {
        const double rate = plan.conv[i].dropout;
        if (rate == 0.0) continue;
        const double scale = 1.0 / (1.0 - rate);
        auto& mask = m.conv[i];
        mask.resize(plan.conv[i].pooled_values());
        for (auto& v : mask) v = rng.uniform() < rate ? 0.0 : scale;
    }
    for (std::size_t i = 0; i < plan.fc.size(); ++i) {
        const double rate = plan.fc[i].dropout;
        if (rate == 0.0) continue;
        const double scale = 1.0 / (1.0 - rate);
        auto& mask = m.fc[i];
        mask.resize(plan.fc[i].out);
        for (auto& v : mask) v = rng.uniform() < rate ? 0.0 : scale;
    }
    return m;
}

// Same-padding convolution for one item, output pre-initialized with biases.
// The kernel-offset outer loops turn the hot loop into contiguous row AXPYs.
void conv_accumulate(const ConvDims& d, const double* in, const double* weights, double* out) {
    const int S = d.side, k = d.k, pad = d.pad;
    for (int o = 0; o < d.out_ch; ++o) {
        double* out_o = out + static_cast<std::size_t>(o) * S * S;
        for (int ic = 0; ic < d.in_ch; ++ic) {
            const double* x = in + static_cast<std::size_t>(ic) * S * S;
            const double* w = weights + (static_cast<std::size_t>(o) * d.in_ch + ic) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                const int dy = ky - pad;
                const int y0 = std::max(0, -dy), y1 = std::min(S, S - dy);
                for (int kx = 0; kx < k; ++kx) {
                    const int dx = kx - pad;
                    const double wv = w[ky * k + kx];
                    const int x0 = std::max(0, -dx), x1 = std::min(S, S - dx);
                    for (int y = y0; y < y1; ++y) {
                        const double* xr = x + (y + dy) * S + dx;
                        double* orow = out_o + y * S;
                        for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * xr[xx];
                    }
                }
            }
        }
    }
}

void conv_forward(const ConvDims& d, const double* in, const double* weights, const double* biases,
                  double* out) {
    for (int o = 0; o < d.out_ch; ++o)
        std::fill_n(out + static_cast<std::size_t>(o) * d.side * d.side, d.side * d.side, biases[o]);
    conv_accumulate(d, in, weights, out);
    const std::size_t n = static_cast<std::size_t>(d.out_ch) * d.side * d.side;
    for (std::size_t i = 0; i < n; ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
}

// 2x2 stride-2 max pool, floor on odd sides; ties keep the first in scan order.
void pool_forward(const ConvDims& d, const double* a, double* out, int* argmax) {
    const int S = d.side, P = d.pooled;
    for (int c = 0; c < d.out_ch; ++c) {
        const double* ac = a + static_cast<std::size_t>(c) * S * S;
        double* oc = out + static_cast<std::size_t>(c) * P * P;
        int* mc = argmax ? argmax + static_cast<std::size_t>(c) * P * P : nullptr;
        for (int py = 0; py < P; ++py) {
            for (int px = 0; px < P; ++px) {
                const int y = 2 * py, x = 2 * px;
                int best = y * S + x;
                double bv = ac[best];
                const int cand[3] = {y * S + x + 1, (y + 1) * S + x, (y + 1) * S + x + 1};
                for (int idx : cand) {
                    if (ac[idx] > bv) {
                        bv = ac[idx];
                        best = idx;
                    }
                }
                oc[py * P + px] = bv;
                if (mc) mc[py * P + px] = c * S * S + best;
            }
        }
    }
}

void apply_mask(const std::vector<double>& mask, double* v, int n) {
    if (mask.empty()) return;
    for (int i = 0; i < n; ++i) v[i] *= mask[i];
}

void fc_forward(const FcDims& d, const double* x, const double* weights, const double* biases,
                double* y) {
    for (int j = 0; j < d.out; ++j) {
        const double* w = weights + static_cast<std::size_t>(j) * d.in;
        double s = biases[j];
        for (int i = 0; i < d.in; ++i) s += w[i] * x[i];
        y[j] = s;
    }
}

void softmax_inplace(double* z, int k) {
    double mx = z[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, z[i]);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        z[i] = std::exp(z[i] - mx);
        sum += z[i];
    }
    for (int i = 0; i < k; ++i) z[i] /= sum;
}

// Probability rows for a slice of items; scratch buffers are caller-provided
// so parallel chunks stay allocation-free after warmup.
struct ForwardScratch {
    std::vector<double> buf_a; // conv map / fc activations
    std::vector<double> buf_b; // pooled map
};

void forward_item(const Plan& plan, const ModelParams& params, const Masks& masks,
                  const double* x, double* probs_out, ForwardScratch& scratch) {
    std::size_t need = plan.input_values;
    for (const auto& d : plan.conv) need = std::max<std::size_t>(need, d.conv_values());
    for (const auto& d : plan.fc) need = std::max<std::size_t>(need, std::max(d.in, d.out));
    need = std::max<std::size_t>(need, std::max(plan.head_in, plan.classes));
    scratch.buf_a.resize(need);
    scratch.buf_b.resize(need);

    const double* cur = x;
    int layer = 0;
    for (std::size_t bi = 0; bi < plan.conv.size(); ++bi, ++layer) {
        const ConvDims& d = plan.conv[bi];
        conv_forward(d, cur, params.weights[layer].data(), params.biases[layer].data(),
                     scratch.buf_a.data());
        pool_forward(d, scratch.buf_a.data(), scratch.buf_b.data(), nullptr);
        if (masks.active) apply_mask(masks.conv[bi], scratch.buf_b.data(), d.pooled_values());
        std::swap(scratch.buf_a, scratch.buf_b);
        cur = scratch.buf_a.data();
    }
    for (std::size_t fi = 0; fi < plan.fc.size(); ++fi, ++layer) {
        const FcDims& d = plan.fc[fi];
        fc_forward(d, cur, params.weights[layer].data(), params.biases[layer].data(),
                   scratch.buf_b.data());
        for (int j = 0; j < d.out; ++j)
            scratch.buf_b[j] = scratch.buf_b[j] > 0.0 ? scratch.buf_b[j] : 0.0;
        if (masks.active) apply_mask(masks.fc[fi], scratch.buf_b.data(), d.out);
        std::swap(scratch.buf_a, scratch.buf_b);
        cur = scratch.buf_a.data();
    }
    FcDims head{plan.head_in, plan.classes, 0.0};
    fc_forward(head, cur, params.weights[layer].data(), params.biases[layer].data(), probs_out);
    softmax_inplace(probs_out, plan.classes);
}

Gradients zero_gradients(const ModelParams& params) {
    Gradients g;
    g.weights.resize(params.weights.size());
    g.biases.resize(params.biases.size());
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        g.weights[i].assign(params.weights[i].size(), 0.0);
        g.biases[i].assign(params.biases[i].size(), 0.0);
    }
    return g;
}

// Weight/bias gradient contribution of one item's conv layer.
void conv_backward_params(const ConvDims& d, const double* in, const double* dz, double* dW,
                          double* db) {
    const int S = d.side, k = d.k, pad = d.pad;
    for (int o = 0; o < d.out_ch; ++o) {
        const double* dzo = dz + static_cast<std::size_t>(o) * S * S;
        double s = 0.0;
        for (int i = 0; i < S * S; ++i) s += dzo[i];
        db[o] += s;
        for (int ic = 0; ic < d.in_ch; ++ic) {
            const double* x = in + static_cast<std::size_t>(ic) * S * S;
            double* w = dW + (static_cast<std::size_t>(o) * d.in_ch + ic) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                const int dy = ky - pad;
                const int y0 = std::max(0, -dy), y1 = std::min(S, S - dy);
                for (int kx = 0; kx < k; ++kx) {
                    const int dx = kx - pad;
                    const int x0 = std::max(0, -dx), x1 = std::min(S, S - dx);
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* xr = x + (y + dy) * S + dx;
                        const double* dzr = dzo + y * S;
                        for (int xx = x0; xx < x1; ++xx) acc += dzr[xx] * xr[xx];
                    }
                    w[ky * k + kx] += acc;
                }
            }
        }
    }
}

void conv_backward_input(const ConvDims& d, const double* weights, const double* dz, double* din) {
    const int S = d.side, k = d.k, pad = d.pad;
    std::fill_n(din, static_cast<std::size_t>(d.in_ch) * S * S, 0.0);
    for (int o = 0; o < d.out_ch; ++o) {
        const double* dzo = dz + static_cast<std::size_t>(o) * S * S;
        for (int ic = 0; ic < d.in_ch; ++ic) {
            double* xg = din + static_cast<std::size_t>(ic) * S * S;
            const double* w = weights + (static_cast<std::size_t>(o) * d.in_ch + ic) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                const int dy = ky - pad;
                const int y0 = std::max(0, -dy), y1 = std::min(S, S - dy);
                for (int kx = 0; kx < k; ++kx) {
                    const int dx = kx - pad;
                    const double wv = w[ky * k + kx];
                    const int x0 = std::max(0, -dx), x1 = std::min(S, S - dx);
                    for (int y = y0; y < y1; ++y) {
                        double* xr = xg + (y + dy) * S + dx;
                        const double* dzr = dzo + y * S;
                        for (int xx = x0; xx < x1; ++xx) xr[xx] += wv * dzr[xx];
                    }
                }
            }
        }
    }
}

}  // namespace

void set_forward_threads(int n) { g_forward_threads.store(n < 0 ? 0 : n); }
int forward_threads() { return resolved_threads(); }

ProbMatrix forward(const ModelParams& params, const double* images, int n, ForwardMode mode) {
    const Plan plan = make_plan(params.arch);
    const Masks masks = mode.stochastic ? draw_masks(plan, mode.seed) : Masks{};
    ProbMatrix probs;
    probs.rows = n;
    probs.cols = plan.classes;
    probs.v.resize(static_cast<std::size_t>(n) * plan.classes);
    parallel_chunks(n, 64, [&](int begin, int end) {
        ForwardScratch scratch;
        for (int i = begin; i < end; ++i) {
            forward_item(plan, params, masks, images + static_cast<std::size_t>(i) * plan.input_values,
                         probs.v.data() + static_cast<std::size_t>(i) * plan.classes, scratch);
        }
    });
    return probs;
}

ProbMatrix forward(const ModelParams& params, const Dataset& data, ForwardMode mode) {
    if (data.resolution != params.arch.resolution || data.channels != params.arch.channels) {
        std::ostringstream err;
        err << "input shape mismatch: model expects " << params.arch.channels << "x"
            << params.arch.resolution << "x" << params.arch.resolution << ", batch provides "
            << data.channels << "x" << data.resolution << "x" << data.resolution;
        throw std::invalid_argument(err.str());
    }
    return forward(params, data.images.data(), data.size(), mode);
}

LossGrad loss_and_gradients(const ModelParams& params, const double* images, int n,
                            const std::vector<int>& labels, std::uint64_t dropout_seed) {
    if (n <= 0) throw std::invalid_argument("loss_and_gradients: empty batch");
    const Plan plan = make_plan(params.arch);
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= plan.classes) {
            std::ostringstream err;
            err << "label " << labels[i] << " at batch position " << i << " outside [0, "
                << plan.classes << ")";
            throw std::out_of_range(err.str());
        }
    }
    const Masks masks = draw_masks(plan, dropout_seed);

    // Per-layer caches for the whole batch.
    const int nconv = static_cast<int>(plan.conv.size());
    const int nfc = static_cast<int>(plan.fc.size());
    std::vector<std::vector<double>> conv_a(nconv), conv_out(nconv);
    std::vector<std::vector<int>> conv_arg(nconv);
    std::vector<std::vector<double>> fc_a(nfc), fc_out(nfc);
    for (int b = 0; b < nconv; ++b) {
        conv_a[b].resize(static_cast<std::size_t>(n) * plan.conv[b].conv_values());
        conv_out[b].resize(static_cast<std::size_t>(n) * plan.conv[b].pooled_values());
        conv_arg[b].resize(conv_out[b].size());
    }
    for (int f = 0; f < nfc; ++f) {
        fc_a[f].resize(static_cast<std::size_t>(n) * plan.fc[f].out);
        fc_out[f].resize(fc_a[f].size());
    }
    std::vector<double> probs(static_cast<std::size_t>(n) * plan.classes);

    for (int i = 0; i < n; ++i) {
        const double* cur = images + static_cast<std::size_t>(i) * plan.input_values;
        int layer = 0;
        for (int b = 0; b < nconv; ++b, ++layer) {
            const ConvDims& d = plan.conv[b];
            double* a = conv_a[b].data() + static_cast<std::size_t>(i) * d.conv_values();
            double* out = conv_out[b].data() + static_cast<std::size_t>(i) * d.pooled_values();
            int* arg = conv_arg[b].data() + static_cast<std::size_t>(i) * d.pooled_values();
            conv_forward(d, cur, params.weights[layer].data(), params.biases[layer].data(), a);
            pool_forward(d, a, out, arg);
            apply_mask(masks.conv[b], out, d.pooled_values());
            cur = out;
        }
        for (int f = 0; f < nfc; ++f, ++layer) {
            const FcDims& d = plan.fc[f];
            double* a = fc_a[f].data() + static_cast<std::size_t>(i) * d.out;
            double* out = fc_out[f].data() + static_cast<std::size_t>(i) * d.out;
            fc_forward(d, cur, params.weights[layer].data(), params.biases[layer].data(), a);
            for (int j = 0; j < d.out; ++j) a[j] = a[j] > 0.0 ? a[j] : 0.0;
            for (int j = 0; j < d.out; ++j) out[j] = a[j];
            apply_mask(masks.fc[f], out, d.out);
            cur = out;
        }
        double* p = probs.data() + static_cast<std::size_t>(i) * plan.classes;
        FcDims head{plan.head_in, plan.classes, 0.0};
        fc_forward(head, cur, params.weights[layer].data(), params.biases[layer].data(), p);
        softmax_inplace(p, plan.classes);
    }

    LossGrad result;
    result.grad = zero_gradients(params);
    double loss_sum = 0.0;
    const int head_layer = nconv + nfc;

    // Largest gradient vector flowing between layers, and largest conv map.
    std::size_t max_flow = static_cast<std::size_t>(std::max(plan.head_in, plan.input_values));
    std::size_t max_conv = 1;
    for (const auto& d : plan.conv) {
        max_flow = std::max<std::size_t>(max_flow, d.pooled_values());
        max_conv = std::max<std::size_t>(max_conv, d.conv_values());
        max_conv = std::max<std::size_t>(max_conv, static_cast<std::size_t>(d.in_ch) * d.side * d.side);
    }
    for (const auto& d : plan.fc) max_flow = std::max<std::size_t>(max_flow, std::max(d.in, d.out));
    std::vector<double> dcur(max_flow);
    std::vector<double> dnext(max_flow);
    std::vector<double> dz_conv(max_conv);
    std::vector<double> din_conv(max_conv);

    for (int i = 0; i < n; ++i) {
        const double* p = probs.data() + static_cast<std::size_t>(i) * plan.classes;
        loss_sum += -std::log(std::max(p[labels[i]], 1e-300));

        // d(mean loss)/d(logit) = (p - onehot)/n
        std::vector<double> dlogit(plan.classes);
        for (int k = 0; k < plan.classes; ++k) dlogit[k] = p[k] / n;
        dlogit[labels[i]] -= 1.0 / n;

        const double* head_in = nfc > 0
            ? fc_out[nfc - 1].data() + static_cast<std::size_t>(i) * plan.fc[nfc - 1].out
            : (nconv > 0 ? conv_out[nconv - 1].data() +
                               static_cast<std::size_t>(i) * plan.conv[nconv - 1].pooled_values()
                         : images + static_cast<std::size_t>(i) * plan.input_values);
        {
            double* dW = result.grad.weights[head_layer].data();
            double* db = result.grad.biases[head_layer].data();
            const double* W = params.weights[head_layer].data();
            for (int j = 0; j < plan.classes; ++j) {
                const double g = dlogit[j];
                db[j] += g;
                double* wrow = dW + static_cast<std::size_t>(j) * plan.head_in;
                for (int k = 0; k < plan.head_in; ++k) wrow[k] += g * head_in[k];
            }
            for (int k = 0; k < plan.head_in; ++k) {
                double s = 0.0;
                for (int j = 0; j < plan.classes; ++j)
                    s += dlogit[j] * W[static_cast<std::size_t>(j) * plan.head_in + k];
                dcur[k] = s;
            }
        }

        for (int f = nfc - 1; f >= 0; --f) {
            const FcDims& d = plan.fc[f];
            const int layer = nconv + f;
            const double* a = fc_a[f].data() + static_cast<std::size_t>(i) * d.out;
            const double* x = f > 0 ? fc_out[f - 1].data() + static_cast<std::size_t>(i) * plan.fc[f - 1].out
                       : (nconv > 0 ? conv_out[nconv - 1].data() +
                                          static_cast<std::size_t>(i) * plan.conv[nconv - 1].pooled_values()
                                    : images + static_cast<std::size_t>(i) * plan.input_values);
            // back through dropout and relu
            std::vector<double> dz(d.out);
            const auto& mask = masks.fc[f];
            for (int j = 0; j < d.out; ++j) {
                double g = dcur[j];
                if (!mask.empty()) g *= mask[j];
                dz[j] = a[j] > 0.0 ? g : 0.0;
            }
            double* dW = result.grad.weights[layer].data();
            double* db = result.grad.biases[layer].data();
            const double* W = params.weights[layer].data();
            for (int j = 0; j < d.out; ++j) {
                db[j] += dz[j];
                double* wrow = dW + static_cast<std::size_t>(j) * d.in;
                const double g = dz[j];
                for (int k = 0; k < d.in; ++k) wrow[k] += g * x[k];
            }
            for (int k = 0; k < d.in; ++k) {
                double s = 0.0;
                for (int j = 0; j < d.out; ++j) s += dz[j] * W[static_cast<std::size_t>(j) * d.in + k];
                dnext[k] = s;
            }
            std::swap(dcur, dnext);
        }

        for (int b = nconv - 1; b >= 0; --b) {
            const ConvDims& d = plan.conv[b];
            const double* a = conv_a[b].data() + static_cast<std::size_t>(i) * d.conv_values();
            const int* arg = conv_arg[b].data() + static_cast<std::size_t>(i) * d.pooled_values();
            const auto& mask = masks.conv[b];
            // dcur holds d(pooled output); route to conv map through the pool
            std::fill_n(dz_conv.data(), d.conv_values(), 0.0);
            for (int j = 0; j < d.pooled_values(); ++j) {
                double g = dcur[j];
                if (!mask.empty()) g *= mask[j];
                const int src = arg[j];
                if (a[src] > 0.0) dz_conv[src] += g;
            }
            const double* x = b > 0 ? conv_out[b - 1].data() +
                                          static_cast<std::size_t>(i) * plan.conv[b - 1].pooled_values()
                                    : images + static_cast<std::size_t>(i) * plan.input_values;
            conv_backward_params(d, x, dz_conv.data(), result.grad.weights[b].data(),
                                 result.grad.biases[b].data());
            if (b > 0) {
                conv_backward_input(d, params.weights[b].data(), dz_conv.data(), din_conv.data());
                std::copy_n(din_conv.data(), d.in_ch * d.side * d.side, dcur.data());
            }
        }
    }

    result.loss = loss_sum / n;
    return result;
}

LossGrad loss_and_gradients(const ModelParams& params, const Dataset& batch,
                            std::uint64_t dropout_seed) {
    if (batch.resolution != params.arch.resolution || batch.channels != params.arch.channels) {
        std::ostringstream err;
        err << "input shape mismatch: model expects " << params.arch.channels << "x"
            << params.arch.resolution << "x" << params.arch.resolution << ", batch provides "
            << batch.channels << "x" << batch.resolution << "x" << batch.resolution;
        throw std::invalid_argument(err.str());
    }
    return loss_and_gradients(params, batch.images.data(), batch.size(), batch.labels, dropout_seed);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

ModelParams train(const ModelParams& params, const Dataset& data, const TrainConfig& cfg,
                  TrainTrace* trace) {
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("train: empty data set");
    const int n = data.size();
    const int item_values = data.item_values();
    const int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;

    ModelParams out = params;
    Gradients m = zero_gradients(out), v = zero_gradients(out);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<double> batch_images(static_cast<std::size_t>(cfg.batch_size) * item_values);
    std::vector<int> batch_labels(cfg.batch_size);

    if (trace) {
        trace->epoch_mean_loss.clear();
        trace->steps = 0;
    }

    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, kShuffleTag, static_cast<std::uint64_t>(epoch)));
        shuffle(order, shuffle_rng);
        double loss_acc = 0.0;
        for (int s = 0; s < steps_per_epoch; ++s) {
            const int begin = s * cfg.batch_size;
            const int bn = std::min(cfg.batch_size, n - begin);
            for (int i = 0; i < bn; ++i) {
                std::copy_n(data.item(order[begin + i]), item_values,
                            batch_images.data() + static_cast<std::size_t>(i) * item_values);
                batch_labels[i] = data.labels[order[begin + i]];
            }
            batch_labels.resize(bn);
            const std::uint64_t drop_seed =
                mix_seed(cfg.seed, kStepTag, static_cast<std::uint64_t>(step));
            LossGrad lg = loss_and_gradients(out, batch_images.data(), bn, batch_labels, drop_seed);
            batch_labels.resize(cfg.batch_size);
            loss_acc += lg.loss * bn;

            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t layer = 0; layer < out.weights.size(); ++layer) {
                auto adam = [&](std::vector<double>& w, const std::vector<double>& g,
                                std::vector<double>& mw, std::vector<double>& vw) {
                    for (std::size_t k = 0; k < w.size(); ++k) {
                        mw[k] = beta1 * mw[k] + (1.0 - beta1) * g[k];
                        vw[k] = beta2 * vw[k] + (1.0 - beta2) * g[k] * g[k];
                        const double mhat = mw[k] / bc1;
                        const double vhat = vw[k] / bc2;
                        w[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + eps);
                    }
                };
                adam(out.weights[layer], lg.grad.weights[layer], m.weights[layer], v.weights[layer]);
                adam(out.biases[layer], lg.grad.biases[layer], m.biases[layer], v.biases[layer]);
            }
        }
        if (trace) trace->epoch_mean_loss.push_back(loss_acc / n);
    }
    if (trace) trace->steps = step;
    return out;
}

EvalResult evaluate(const ModelParams& params, const Dataset& test) {
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    const int k = params.arch.class_count;
    for (int i = 0; i < test.size(); ++i) {
        if (test.labels[i] < 0 || test.labels[i] >= k) {
            std::ostringstream err;
            err << "test label " << test.labels[i] << " at position " << i << " outside [0, " << k << ")";
            throw std::out_of_range(err.str());
        }
    }
    const ProbMatrix probs = forward(params, test, ForwardMode::deterministic());
    EvalResult r;
    r.per_class_correct.assign(k, 0);
    r.per_class_total.assign(k, 0);
    int correct = 0;
    for (int i = 0; i < test.size(); ++i) {
        const double* row = probs.row(i);
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (row[c] > row[best]) best = c;
        const int label = test.labels[i];
        ++r.per_class_total[label];
        if (best == label) {
            ++correct;
            ++r.per_class_correct[label];
        }
    }
    r.accuracy = static_cast<double>(correct) / test.size();
    r.per_class_accuracy.resize(k);
    for (int c = 0; c < k; ++c) {
        if (r.per_class_total[c] > 0)
            r.per_class_accuracy[c] = static_cast<double>(r.per_class_correct[c]) / r.per_class_total[c];
    }
    return r;
}

}  // namespace alfs
