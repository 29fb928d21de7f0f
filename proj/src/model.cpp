#include "fedtab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedtab/rng.hpp"

namespace fedtab {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kResidualScale = 0.70710678118654752440;  // sqrt(1/2)

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Canonical tensor indices for a given config.
struct Layout {
    int running_mean, running_var, scale, offset;
    int sh0_w, sh0_b, sh1_w, sh1_b;
    int step_base;  // 4 tensors per transformer, transformers 0..n_steps
    int att_base;   // 2 tensors per decision step, steps 1..n_steps
    int final_w, final_b;
    int count;
};

Layout layout_of(const TabNetConfig& cfg) {
    Layout l{};
    l.running_mean = 0;
    l.running_var = 1;
    l.scale = 2;
    l.offset = 3;
    l.sh0_w = 4;
    l.sh0_b = 5;
    l.sh1_w = 6;
    l.sh1_b = 7;
    l.step_base = 8;
    l.att_base = l.step_base + 4 * (cfg.n_steps + 1);
    l.final_w = l.att_base + 2 * cfg.n_steps;
    l.final_b = l.final_w + 1;
    l.count = l.final_b + 1;
    return l;
}

Mat glu_forward(const Mat& pre) {
    const int h = pre.cols / 2;
    Mat out(pre.rows, h);
    for (int r = 0; r < pre.rows; ++r)
        for (int j = 0; j < h; ++j)
            out.at(r, j) = pre.at(r, j) * sigmoid(pre.at(r, h + j));
    return out;
}

Mat glu_backward(const Mat& pre, const Mat& d_out) {
    const int h = pre.cols / 2;
    Mat d_pre(pre.rows, pre.cols);
    for (int r = 0; r < pre.rows; ++r)
        for (int j = 0; j < h; ++j) {
            const double s = sigmoid(pre.at(r, h + j));
            d_pre.at(r, j) = d_out.at(r, j) * s;
            d_pre.at(r, h + j) = d_out.at(r, j) * pre.at(r, j) * s * (1.0 - s);
        }
    return d_pre;
}

Mat scaled(const Mat& m, double s) {
    Mat out = m;
    for (double& v : out.v) v *= s;
    return out;
}

void add_into(Mat& dst, const Mat& src) {
    for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

}  // namespace

void TabNetConfig::validate() const {
    if (input_dim < 1) throw std::invalid_argument("model: input_dim must be >= 1");
    if (n_classes < 2) throw std::invalid_argument("model: n_classes must be >= 2");
    if (n_d < 1 || n_a < 1) throw std::invalid_argument("model: n_d and n_a must be >= 1");
    if (n_steps < 1) throw std::invalid_argument("model: n_steps must be >= 1");
    if (gamma < 1.0) throw std::invalid_argument("model: gamma must be >= 1");
    if (lambda_sparse < 0.0) throw std::invalid_argument("model: lambda_sparse must be >= 0");
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0))
        throw std::invalid_argument("model: bn_momentum must be in (0,1]");
    if (!(epsilon > 0.0)) throw std::invalid_argument("model: epsilon must be > 0");
}

ParamTensor& ModelParams::by_name(const std::string& name) {
    for (auto& t : tensors)
        if (t.name == name) return t;
    throw std::invalid_argument("no tensor named " + name);
}

const ParamTensor& ModelParams::by_name(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw std::invalid_argument("no tensor named " + name);
}

ModelParams init_params(const TabNetConfig& config, std::uint64_t seed) {
    config.validate();
    const int d = config.input_dim;
    const int h = config.hidden();
    const int c = config.n_classes;
    Rng rng(seed);

    ModelParams p;
    p.config = config;

    auto add = [&p](const std::string& name, std::vector<int> shape, bool trainable,
                    double fill) {
        ParamTensor t;
        t.name = name;
        t.shape = std::move(shape);
        std::size_t sz = 1;
        for (int s : t.shape) sz *= static_cast<std::size_t>(s);
        t.values.assign(sz, fill);
        t.trainable = trainable;
        p.tensors.push_back(std::move(t));
    };
    auto add_xavier = [&](const std::string& name, int fan_in, int fan_out) {
        add(name, {fan_in, fan_out}, true, 0.0);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : p.tensors.back().values) v = rng.uniform(-bound, bound);
    };

    add("norm.running_mean", {d}, false, 0.0);
    add("norm.running_var", {d}, false, 1.0);
    add("norm.scale", {d}, true, 1.0);
    add("norm.offset", {d}, true, 0.0);
    add_xavier("ft_shared.glu0.weight", d, 2 * h);
    add("ft_shared.glu0.bias", {2 * h}, true, 0.0);
    add_xavier("ft_shared.glu1.weight", h, 2 * h);
    add("ft_shared.glu1.bias", {2 * h}, true, 0.0);
    for (int s = 0; s <= config.n_steps; ++s) {
        const std::string base = "ft_step" + std::to_string(s);
        add_xavier(base + ".glu0.weight", h, 2 * h);
        add(base + ".glu0.bias", {2 * h}, true, 0.0);
        add_xavier(base + ".glu1.weight", h, 2 * h);
        add(base + ".glu1.bias", {2 * h}, true, 0.0);
    }
    for (int i = 1; i <= config.n_steps; ++i) {
        const std::string base = "att" + std::to_string(i);
        add_xavier(base + ".weight", config.n_a, d);
        add(base + ".bias", {d}, true, 0.0);
    }
    add_xavier("final.weight", config.n_d, c);
    add("final.bias", {c}, true, 0.0);
    return p;
}

void sparsemax_inplace(double* z, int n) {
    if (n < 1) throw std::invalid_argument("sparsemax: empty input");
    std::vector<double> sorted(z, z + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = 0.0;
    int support = 0;
    for (int k = 1; k <= n; ++k) {
        cumsum += sorted[k - 1];
        if (1.0 + k * sorted[k - 1] > cumsum) {
            support = k;
            tau = (cumsum - 1.0) / k;
        } else {
            // subsequent k only shrink the threshold test; stop at first failure
            break;
        }
    }
    for (int i = 0; i < n; ++i) z[i] = std::max(z[i] - tau, 0.0);
}

std::vector<double> sparsemax(const std::vector<double>& z) {
    std::vector<double> out = z;
    sparsemax_inplace(out.data(), static_cast<int>(out.size()));
    return out;
}

void sparsemax_backward(const double* p, const double* d_out, double* d_in, int n) {
    double sum = 0.0;
    int support = 0;
    for (int i = 0; i < n; ++i)
        if (p[i] > 0.0) {
            sum += d_out[i];
            ++support;
        }
    const double mean = support > 0 ? sum / support : 0.0;
    for (int i = 0; i < n; ++i) d_in[i] = p[i] > 0.0 ? d_out[i] - mean : 0.0;
}

namespace {

// Shared + step-specific GLU chain; caches everything needed for backward.
FtCache ft_forward(const ModelParams& p, const Layout& l, int step, const Mat& x) {
    const auto& t = p.tensors;
    const int two_h = 2 * p.config.hidden();
    const int sb = l.step_base + 4 * step;

    FtCache c;
    c.input = x;
    c.g0.pre = linear(x, t[l.sh0_w].values.data(), t[l.sh0_b].values.data(), two_h);
    c.g0.out = glu_forward(c.g0.pre);
    c.g1.pre = linear(c.g0.out, t[l.sh1_w].values.data(), t[l.sh1_b].values.data(), two_h);
    c.g1.out = glu_forward(c.g1.pre);
    c.h1 = c.g0.out;
    add_into(c.h1, c.g1.out);
    c.h1 = scaled(c.h1, kResidualScale);
    c.g2.pre = linear(c.h1, t[sb + 0].values.data(), t[sb + 1].values.data(), two_h);
    c.g2.out = glu_forward(c.g2.pre);
    c.h2 = c.h1;
    add_into(c.h2, c.g2.out);
    c.h2 = scaled(c.h2, kResidualScale);
    c.g3.pre = linear(c.h2, t[sb + 2].values.data(), t[sb + 3].values.data(), two_h);
    c.g3.out = glu_forward(c.g3.pre);
    c.h3 = c.h2;
    add_into(c.h3, c.g3.out);
    c.h3 = scaled(c.h3, kResidualScale);
    return c;
}

// Returns the gradient w.r.t. the transformer input; accumulates weight
// gradients into `g`.
Mat ft_backward(const ModelParams& p, const Layout& l, int step, const FtCache& c,
                const Mat& d_h3, Gradients& g) {
    const auto& t = p.tensors;
    const int sb = l.step_base + 4 * step;

    // h3 = (h2 + glu3(h2)) * r
    Mat d_h2 = scaled(d_h3, kResidualScale);
    Mat d_pre3 = glu_backward(c.g3.pre, d_h2);
    linear_backward(c.h2, t[sb + 2].values.data(), d_pre3, d_h2,
                    g.g[sb + 2].data(), g.g[sb + 3].data());

    Mat d_h1 = scaled(d_h2, kResidualScale);
    Mat d_pre2 = glu_backward(c.g2.pre, d_h1);
    linear_backward(c.h1, t[sb + 0].values.data(), d_pre2, d_h1,
                    g.g[sb + 0].data(), g.g[sb + 1].data());

    Mat d_g0 = scaled(d_h1, kResidualScale);
    Mat d_pre1 = glu_backward(c.g1.pre, d_g0);
    linear_backward(c.g0.out, t[l.sh1_w].values.data(), d_pre1, d_g0,
                    g.g[l.sh1_w].data(), g.g[l.sh1_b].data());

    Mat d_pre0 = glu_backward(c.g0.pre, d_g0);
    Mat d_x(c.input.rows, c.input.cols);
    linear_backward(c.input, t[l.sh0_w].values.data(), d_pre0, d_x,
                    g.g[l.sh0_w].data(), g.g[l.sh0_b].data());
    return d_x;
}

Mat slice_cols(const Mat& m, int from, int count) {
    Mat out(m.rows, count);
    for (int r = 0; r < m.rows; ++r)
        for (int j = 0; j < count; ++j) out.at(r, j) = m.at(r, from + j);
    return out;
}

}  // namespace

ForwardResult forward(const ModelParams& params, const double* x, int batch) {
    const auto& cfg = params.config;
    cfg.validate();
    if (batch < 1) throw std::invalid_argument("forward: batch must be >= 1");
    const int d = cfg.input_dim;
    const Layout l = layout_of(cfg);
    const auto& t = params.tensors;

    ForwardResult res;
    auto& tr = res.trace;

    tr.xhat = Mat(batch, d);
    tr.f = Mat(batch, d);
    const auto& rm = t[l.running_mean].values;
    const auto& rv = t[l.running_var].values;
    const auto& sc = t[l.scale].values;
    const auto& of = t[l.offset].values;
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < d; ++j) {
            const double xv = x[static_cast<std::size_t>(b) * d + j];
            if (!std::isfinite(xv)) throw std::invalid_argument("forward: non-finite input");
            const double xh = (xv - rm[j]) / std::sqrt(rv[j] + kBnEps);
            tr.xhat.at(b, j) = xh;
            tr.f.at(b, j) = xh * sc[j] + of[j];
        }

    tr.ft0 = ft_forward(params, l, 0, tr.f);
    tr.a0 = slice_cols(tr.ft0.h3, cfg.n_d, cfg.n_a);

    Mat prior(batch, d);
    for (double& v : prior.v) v = 1.0;
    tr.aggregate = Mat(batch, cfg.n_d);
    double entropy_sum = 0.0;

    const Mat* a_prev = &tr.a0;
    tr.steps.resize(cfg.n_steps);
    for (int i = 1; i <= cfg.n_steps; ++i) {
        StepCache& scache = tr.steps[i - 1];
        const int wa = l.att_base + 2 * (i - 1);
        scache.prior = prior;
        scache.att_lin = linear(*a_prev, t[wa].values.data(), t[wa + 1].values.data(), d);
        scache.z = scache.att_lin;
        for (std::size_t k = 0; k < scache.z.v.size(); ++k) scache.z.v[k] *= prior.v[k];
        scache.mask = scache.z;
        for (int b = 0; b < batch; ++b) sparsemax_inplace(scache.mask.row(b), d);

        for (double m : scache.mask.v) entropy_sum += -m * std::log(m + cfg.epsilon);
        for (std::size_t k = 0; k < prior.v.size(); ++k)
            prior.v[k] *= (cfg.gamma - scache.mask.v[k]);

        scache.masked = scache.mask;
        for (std::size_t k = 0; k < scache.masked.v.size(); ++k)
            scache.masked.v[k] *= tr.f.v[k];
        scache.ft = ft_forward(params, l, i, scache.masked);
        scache.d = slice_cols(scache.ft.h3, 0, cfg.n_d);
        scache.a = slice_cols(scache.ft.h3, cfg.n_d, cfg.n_a);
        scache.relu_d = scache.d;
        for (double& v : scache.relu_d.v) v = std::max(v, 0.0);
        add_into(tr.aggregate, scache.relu_d);
        a_prev = &scache.a;
    }

    res.logits = linear(tr.aggregate, t[l.final_w].values.data(),
                        t[l.final_b].values.data(), cfg.n_classes);
    res.sparsity_loss = entropy_sum / (static_cast<double>(cfg.n_steps) * batch);
    return res;
}

double cross_entropy(const Mat& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.rows)
        throw std::invalid_argument("cross_entropy: batch size mismatch");
    double total = 0.0;
    for (int b = 0; b < logits.rows; ++b) {
        if (labels[b] < 0 || labels[b] >= logits.cols)
            throw std::invalid_argument("cross_entropy: label out of range");
        const double* row = logits.row(b);
        double mx = row[0];
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, row[c]);
        double lse = 0.0;
        for (int c = 0; c < logits.cols; ++c) lse += std::exp(row[c] - mx);
        total += std::log(lse) + mx - row[labels[b]];
    }
    return total / logits.rows;
}

double total_loss(const Mat& logits, const std::vector<int>& labels,
                  double sparsity_loss, double lambda_sparse) {
    return cross_entropy(logits, labels) + lambda_sparse * sparsity_loss;
}

double loss_and_gradients(const ModelParams& params, const double* x, int batch,
                          const std::vector<int>& labels, Gradients& out) {
    const auto& cfg = params.config;
    const Layout l = layout_of(cfg);
    const auto& t = params.tensors;
    const int d = cfg.input_dim;
    const int c = cfg.n_classes;
    const int s_count = cfg.n_steps;

    out.g.assign(t.size(), {});
    for (std::size_t i = 0; i < t.size(); ++i) out.g[i].assign(t[i].size(), 0.0);

    ForwardResult res = forward(params, x, batch);
    const auto& tr = res.trace;
    const double loss = total_loss(res.logits, labels, res.sparsity_loss, cfg.lambda_sparse);

    // d loss / d logits = (softmax - onehot) / B
    Mat d_logits(batch, c);
    for (int b = 0; b < batch; ++b) {
        const double* row = res.logits.row(b);
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        for (int j = 0; j < c; ++j)
            d_logits.at(b, j) = (std::exp(row[j] - mx) / z - (labels[b] == j ? 1.0 : 0.0)) / batch;
    }

    Mat d_agg(batch, cfg.n_d);
    linear_backward(tr.aggregate, t[l.final_w].values.data(), d_logits, d_agg,
                    out.g[l.final_w].data(), out.g[l.final_b].data());

    Mat d_f(batch, d);
    Mat d_a_next(batch, cfg.n_a);     // gradient into a_i from step i+1
    Mat d_prior_next(batch, d);        // gradient w.r.t. prior_{i+1}
    const double ent_coef = cfg.lambda_sparse / (static_cast<double>(s_count) * batch);

    for (int i = s_count; i >= 1; --i) {
        const StepCache& sc = tr.steps[i - 1];
        const int wa = l.att_base + 2 * (i - 1);

        // d h3 = [d relu(d_i) through relu | d a_i]
        Mat d_h3(batch, cfg.hidden());
        for (int b = 0; b < batch; ++b) {
            for (int j = 0; j < cfg.n_d; ++j)
                d_h3.at(b, j) = sc.d.at(b, j) > 0.0 ? d_agg.at(b, j) : 0.0;
            for (int j = 0; j < cfg.n_a; ++j) d_h3.at(b, cfg.n_d + j) = d_a_next.at(b, j);
        }
        Mat d_masked = ft_backward(params, l, i, sc.ft, d_h3, out);

        Mat d_mask(batch, d);
        for (std::size_t k = 0; k < d_mask.v.size(); ++k) {
            d_mask.v[k] = d_masked.v[k] * tr.f.v[k];
            d_f.v[k] += d_masked.v[k] * sc.mask.v[k];
        }
        // mask entropy term
        for (std::size_t k = 0; k < d_mask.v.size(); ++k) {
            const double m = sc.mask.v[k];
            d_mask.v[k] += ent_coef * (-std::log(m + cfg.epsilon) - m / (m + cfg.epsilon));
        }
        // prior_{i+1} = prior_i * (gamma - mask_i)
        Mat d_prior(batch, d);
        for (std::size_t k = 0; k < d_mask.v.size(); ++k) {
            d_mask.v[k] += -d_prior_next.v[k] * sc.prior.v[k];
            d_prior.v[k] = d_prior_next.v[k] * (cfg.gamma - sc.mask.v[k]);
        }

        Mat d_z(batch, d);
        for (int b = 0; b < batch; ++b)
            sparsemax_backward(sc.mask.row(b), d_mask.row(b), d_z.row(b), d);

        Mat d_att_lin(batch, d);
        for (std::size_t k = 0; k < d_z.v.size(); ++k) {
            d_prior.v[k] += d_z.v[k] * sc.att_lin.v[k];
            d_att_lin.v[k] = d_z.v[k] * sc.prior.v[k];
        }

        const Mat& a_prev = (i == 1) ? tr.a0 : tr.steps[i - 2].a;
        Mat d_a_prev(batch, cfg.n_a);
        linear_backward(a_prev, t[wa].values.data(), d_att_lin, d_a_prev,
                        out.g[wa].data(), out.g[wa + 1].data());

        d_a_next = d_a_prev;
        d_prior_next = d_prior;
    }

    // Initial transformer: only its attention half is used downstream.
    Mat d_h3_0(batch, cfg.hidden());
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < cfg.n_a; ++j) d_h3_0.at(b, cfg.n_d + j) = d_a_next.at(b, j);
    Mat d_f0 = ft_backward(params, l, 0, tr.ft0, d_h3_0, out);
    add_into(d_f, d_f0);

    // f = xhat * scale + offset; running stats are constants here.
    auto& d_scale = out.g[l.scale];
    auto& d_offset = out.g[l.offset];
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < d; ++j) {
            d_scale[j] += d_f.at(b, j) * tr.xhat.at(b, j);
            d_offset[j] += d_f.at(b, j);
        }

    return loss;
}

AdamState init_adam(const ModelParams& params) {
    AdamState s;
    s.m.resize(params.tensors.size());
    s.v.resize(params.tensors.size());
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        s.m[i].assign(params.tensors[i].size(), 0.0);
        s.v[i].assign(params.tensors[i].size(), 0.0);
    }
    return s;
}

void adam_step(AdamState& state, ModelParams& params, const Gradients& grads, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (grads.g.size() != params.tensors.size())
        throw std::invalid_argument("adam_step: gradient/parameter mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        auto& t = params.tensors[i];
        if (!t.trainable) continue;
        if (grads.g[i].size() != t.size())
            throw std::invalid_argument("adam_step: shape mismatch on " + t.name);
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double g = grads.g[i][k];
            m[k] = beta1 * m[k] + (1.0 - beta1) * g;
            v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
            t.values[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        }
    }
}

ModelParams train_epochs(const ModelParams& params, const TabularDataset& data,
                         const std::vector<std::size_t>& idx, int epochs,
                         int batch_size, std::uint64_t seed, double lr) {
    if (batch_size < 1) throw std::invalid_argument("train_epochs: batch_size must be >= 1");
    if (idx.empty()) throw std::invalid_argument("train_epochs: empty training set");
    if (epochs < 0) throw std::invalid_argument("train_epochs: negative epochs");

    ModelParams p = params;
    if (epochs == 0) return p;

    const int d = p.config.input_dim;
    const double mom = p.config.bn_momentum;
    AdamState opt = init_adam(p);
    Rng rng(seed);

    std::vector<std::size_t> order(idx);
    std::vector<double> batch_x;
    std::vector<int> batch_y;
    const Layout l = layout_of(p.config);

    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            const int b = static_cast<int>(end - start);
            batch_x.resize(static_cast<std::size_t>(b) * d);
            batch_y.resize(b);
            for (int r = 0; r < b; ++r) {
                const double* src = data.row(order[start + r]);
                std::copy(src, src + d, batch_x.begin() + static_cast<std::size_t>(r) * d);
                batch_y[r] = data.labels[order[start + r]];
            }

            // Fold batch statistics into the running estimates, then train
            // against the updated statistics.
            auto& rm = p.tensors[l.running_mean].values;
            auto& rv = p.tensors[l.running_var].values;
            for (int j = 0; j < d; ++j) {
                double bm = 0.0;
                for (int r = 0; r < b; ++r) bm += batch_x[static_cast<std::size_t>(r) * d + j];
                bm /= b;
                double bv = 0.0;
                for (int r = 0; r < b; ++r) {
                    const double dv = batch_x[static_cast<std::size_t>(r) * d + j] - bm;
                    bv += dv * dv;
                }
                bv /= b;
                rm[j] = (1.0 - mom) * rm[j] + mom * bm;
                rv[j] = (1.0 - mom) * rv[j] + mom * bv;
            }

            Gradients grads;
            loss_and_gradients(p, batch_x.data(), b, batch_y, grads);
            adam_step(opt, p, grads, lr);
        }
    }
    return p;
}

ModelParams train_epochs(const ModelParams& params, const TabularDataset& data,
                         int epochs, int batch_size, std::uint64_t seed, double lr) {
    std::vector<std::size_t> idx(data.n());
    std::iota(idx.begin(), idx.end(), 0);
    return train_epochs(params, data, idx, epochs, batch_size, seed, lr);
}

std::vector<int> predict(const ModelParams& params, const double* x, int batch) {
    ForwardResult res = forward(params, x, batch);
    std::vector<int> labels(batch);
    for (int b = 0; b < batch; ++b) {
        const double* row = res.logits.row(b);
        int best = 0;
        for (int c = 1; c < res.logits.cols; ++c)
            if (row[c] > row[best]) best = c;
        labels[b] = best;
    }
    return labels;
}

EvalResult evaluate(const ModelParams& params, const TabularDataset& data,
                    const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw std::invalid_argument("evaluate: empty index set");
    const int d = params.config.input_dim;
    std::vector<double> x(idx.size() * static_cast<std::size_t>(d));
    std::vector<int> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = data.row(idx[i]);
        std::copy(src, src + d, x.begin() + i * d);
        y[i] = data.labels[idx[i]];
    }
    ForwardResult res = forward(params, x.data(), static_cast<int>(idx.size()));

    EvalResult out;
    out.loss = cross_entropy(res.logits, y);
    out.predictions.resize(idx.size());
    std::size_t correct = 0;
    for (int b = 0; b < res.logits.rows; ++b) {
        const double* row = res.logits.row(b);
        int best = 0;
        for (int c = 1; c < res.logits.cols; ++c)
            if (row[c] > row[best]) best = c;
        out.predictions[b] = best;
        if (best == y[b]) ++correct;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
    return out;
}

std::vector<double> feature_importance(const ForwardTrace& trace) {
    if (trace.steps.empty()) throw std::invalid_argument("feature_importance: empty trace");
    const int d = trace.f.cols;
    std::vector<double> imp(d, 0.0);
    for (const auto& step : trace.steps) {
        for (int b = 0; b < step.mask.rows; ++b) {
            double weight = 0.0;
            for (int j = 0; j < step.relu_d.cols; ++j) weight += step.relu_d.at(b, j);
            for (int f = 0; f < d; ++f) imp[f] += weight * step.mask.at(b, f);
        }
    }
    double total = 0.0;
    for (double v : imp) total += v;
    if (total <= 0.0) {
        for (double& v : imp) v = 1.0 / d;
    } else {
        for (double& v : imp) v /= total;
    }
    return imp;
}

}  // namespace fedtab
