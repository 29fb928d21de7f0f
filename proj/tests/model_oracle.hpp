// Test-only reference: an independent extended-precision reimplementation
// of the network loss, used as the finite-difference oracle. Written
// against the named tensors only, sharing no code with the library's
// forward pass.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fedtab/model.hpp"

namespace fedtab::testing {

using Vec = std::vector<long double>;

inline Vec ref_linear(const Vec& in, int in_dim, const fedtab::ParamTensor& w,
                      const fedtab::ParamTensor& b, int batch) {
    const int out_dim = w.shape[1];
    Vec out(static_cast<std::size_t>(batch) * out_dim, 0.0L);
    for (int r = 0; r < batch; ++r)
        for (int c = 0; c < out_dim; ++c) {
            long double acc = b.values[c];
            for (int k = 0; k < in_dim; ++k)
                acc += in[static_cast<std::size_t>(r) * in_dim + k] *
                       static_cast<long double>(w.values[static_cast<std::size_t>(k) * out_dim + c]);
            out[static_cast<std::size_t>(r) * out_dim + c] = acc;
        }
    return out;
}

inline Vec ref_glu(const Vec& pre, int batch, int two_h) {
    const int h = two_h / 2;
    Vec out(static_cast<std::size_t>(batch) * h);
    for (int r = 0; r < batch; ++r)
        for (int j = 0; j < h; ++j) {
            const long double a = pre[static_cast<std::size_t>(r) * two_h + j];
            const long double g = pre[static_cast<std::size_t>(r) * two_h + h + j];
            out[static_cast<std::size_t>(r) * h + j] = a / (1.0L + std::exp(-g)) * 1.0L;
        }
    return out;
}

inline Vec ref_sparsemax_row(Vec z) {
    Vec sorted = z;
    std::sort(sorted.begin(), sorted.end(), std::greater<long double>());
    long double cumsum = 0.0L, tau = 0.0L;
    for (std::size_t k = 1; k <= sorted.size(); ++k) {
        cumsum += sorted[k - 1];
        if (1.0L + k * sorted[k - 1] > cumsum) tau = (cumsum - 1.0L) / k;
    }
    for (auto& v : z) v = std::max(v - tau, 0.0L);
    return z;
}

// Full loss (cross-entropy + lambda * mask entropy) in long double.
inline long double loss_oracle(const fedtab::ModelParams& p, const double* x, int batch,
                               const std::vector<int>& labels) {
    const auto& cfg = p.config;
    const int d = cfg.input_dim;
    const int h = cfg.n_d + cfg.n_a;
    const int two_h = 2 * h;

    auto t = [&](const std::string& name) -> const fedtab::ParamTensor& { return p.by_name(name); };

    Vec f(static_cast<std::size_t>(batch) * d);
    for (int r = 0; r < batch; ++r)
        for (int j = 0; j < d; ++j) {
            const long double xh =
                (static_cast<long double>(x[static_cast<std::size_t>(r) * d + j]) -
                 t("norm.running_mean").values[j]) /
                std::sqrt(static_cast<long double>(t("norm.running_var").values[j]) + 1e-5L);
            f[static_cast<std::size_t>(r) * d + j] =
                xh * t("norm.scale").values[j] + t("norm.offset").values[j];
        }

    const long double res_scale = std::sqrt(0.5L);
    auto feature_transform = [&](const Vec& in, int in_dim, int step) {
        Vec a = ref_glu(ref_linear(in, in_dim, t("ft_shared.glu0.weight"),
                                   t("ft_shared.glu0.bias"), batch), batch, two_h);
        auto residual = [&](Vec& cur, const fedtab::ParamTensor& w, const fedtab::ParamTensor& b) {
            const Vec g = ref_glu(ref_linear(cur, h, w, b, batch), batch, two_h);
            for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = (cur[i] + g[i]) * res_scale;
        };
        residual(a, t("ft_shared.glu1.weight"), t("ft_shared.glu1.bias"));
        const std::string base = "ft_step" + std::to_string(step);
        residual(a, t(base + ".glu0.weight"), t(base + ".glu0.bias"));
        residual(a, t(base + ".glu1.weight"), t(base + ".glu1.bias"));
        return a;
    };

    Vec h0 = feature_transform(f, d, 0);
    Vec a_prev(static_cast<std::size_t>(batch) * cfg.n_a);
    for (int r = 0; r < batch; ++r)
        for (int j = 0; j < cfg.n_a; ++j)
            a_prev[static_cast<std::size_t>(r) * cfg.n_a + j] =
                h0[static_cast<std::size_t>(r) * h + cfg.n_d + j];

    Vec prior(static_cast<std::size_t>(batch) * d, 1.0L);
    Vec aggregate(static_cast<std::size_t>(batch) * cfg.n_d, 0.0L);
    long double entropy = 0.0L;

    for (int i = 1; i <= cfg.n_steps; ++i) {
        const std::string base = "att" + std::to_string(i);
        Vec z = ref_linear(a_prev, cfg.n_a, t(base + ".weight"), t(base + ".bias"), batch);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] *= prior[k];

        Vec mask(z.size());
        for (int r = 0; r < batch; ++r) {
            Vec row(z.begin() + static_cast<std::size_t>(r) * d,
                    z.begin() + static_cast<std::size_t>(r + 1) * d);
            row = ref_sparsemax_row(row);
            std::copy(row.begin(), row.end(), mask.begin() + static_cast<std::size_t>(r) * d);
        }
        for (long double m : mask)
            entropy += -m * std::log(m + static_cast<long double>(cfg.epsilon));
        for (std::size_t k = 0; k < prior.size(); ++k)
            prior[k] *= (static_cast<long double>(cfg.gamma) - mask[k]);

        Vec masked(mask.size());
        for (std::size_t k = 0; k < mask.size(); ++k) masked[k] = mask[k] * f[k];
        const Vec hi = feature_transform(masked, d, i);
        for (int r = 0; r < batch; ++r) {
            for (int j = 0; j < cfg.n_d; ++j)
                aggregate[static_cast<std::size_t>(r) * cfg.n_d + j] +=
                    std::max(hi[static_cast<std::size_t>(r) * h + j], 0.0L);
            for (int j = 0; j < cfg.n_a; ++j)
                a_prev[static_cast<std::size_t>(r) * cfg.n_a + j] =
                    hi[static_cast<std::size_t>(r) * h + cfg.n_d + j];
        }
    }

    const Vec logits = ref_linear(aggregate, cfg.n_d, t("final.weight"), t("final.bias"), batch);
    long double ce = 0.0L;
    const int c = cfg.n_classes;
    for (int r = 0; r < batch; ++r) {
        long double mx = logits[static_cast<std::size_t>(r) * c];
        for (int j = 1; j < c; ++j)
            mx = std::max(mx, logits[static_cast<std::size_t>(r) * c + j]);
        long double lse = 0.0L;
        for (int j = 0; j < c; ++j)
            lse += std::exp(logits[static_cast<std::size_t>(r) * c + j] - mx);
        ce += std::log(lse) + mx - logits[static_cast<std::size_t>(r) * c + labels[r]];
    }
    ce /= batch;
    return ce + static_cast<long double>(cfg.lambda_sparse) * entropy /
                    (static_cast<long double>(cfg.n_steps) * batch);
}

// Central finite-difference gradient of the oracle w.r.t. one parameter
// coordinate.
inline long double fd_gradient(fedtab::ModelParams& p, std::size_t tensor, std::size_t coord,
                               const double* x, int batch, const std::vector<int>& labels,
                               double h) {
    const double orig = p.tensors[tensor].values[coord];
    p.tensors[tensor].values[coord] = orig + h;
    const long double lp = loss_oracle(p, x, batch, labels);
    p.tensors[tensor].values[coord] = orig - h;
    const long double lm = loss_oracle(p, x, batch, labels);
    p.tensors[tensor].values[coord] = orig;
    return (lp - lm) / (2.0L * static_cast<long double>(h));
}

}  // namespace fedtab::testing
