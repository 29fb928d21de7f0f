#include "fedtab/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedtab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

const std::vector<std::string>& feature_catalog() {
    static const std::vector<std::string> names = {
        "mean",           "std",           "min",
        "max",            "median",        "q25",
        "q75",            "iqr",           "skewness",
        "kurtosis",       "abs_energy",    "rms",
        "mean_abs_change", "mean_change",  "mean_crossing_rate",
        "peak_rate",      "autocorr_1",    "autocorr_2",
        "autocorr_3",     "autocorr_4",    "autocorr_5",
        "spectral_centroid", "spectral_entropy", "log_length",
    };
    return names;
}

double autocorrelation(const std::vector<double>& values, int lag) {
    if (lag < 1) throw std::invalid_argument("autocorrelation: lag must be >= 1");
    const std::size_t n = values.size();
    if (static_cast<std::size_t>(lag) >= n) return 0.0;

    double mu = 0.0;
    for (double v : values) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    if (var == 0.0) return 0.0;

    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t)
        acc += (values[t] - mu) * (values[t + lag] - mu);
    return acc / (static_cast<double>(n - lag) * var);
}

std::pair<double, double> spectral_features(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("spectral_features: length must be >= 2");

    double mu = 0.0;
    for (double v : values) mu += v;
    mu /= static_cast<double>(n);

    // Goertzel recurrence per bin: same magnitudes as a direct DFT of the
    // detrended series, without per-sample trig calls.
    const std::size_t n_bins = n / 2;
    std::vector<double> mag(n_bins + 1, 0.0);
    for (std::size_t k = 1; k <= n_bins; ++k) {
        const double w = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        const double coeff = 2.0 * std::cos(w);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double s0 = (values[t] - mu) + coeff * s1 - s2;
            s2 = s1;
            s1 = s0;
        }
        const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
        mag[k] = std::sqrt(std::max(power, 0.0));
    }

    double mag_sum = 0.0, pow_sum = 0.0, weighted = 0.0;
    for (std::size_t k = 1; k <= n_bins; ++k) {
        mag_sum += mag[k];
        pow_sum += mag[k] * mag[k];
        weighted += static_cast<double>(k) * mag[k];
    }
    if (mag_sum == 0.0 || pow_sum == 0.0) return {0.0, 0.0};

    const double centroid = weighted / mag_sum;
    double entropy = 0.0;
    for (std::size_t k = 1; k <= n_bins; ++k) {
        const double p = mag[k] * mag[k] / pow_sum;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return {centroid, entropy};
}

std::vector<double> extract_features(const RawSeries& series) {
    const auto& x = series.values;
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("extract_features: series length must be >= 2");

    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, energy = 0.0;
    for (double v : x) {
        const double d = v - mu;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        energy += v * v;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    const double sd = std::sqrt(m2);
    const double skew = m2 > 0.0 ? m3 / (m2 * sd) : 0.0;
    const double kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

    std::vector<double> sorted(x);
    std::sort(sorted.begin(), sorted.end());
    const double q25 = quantile(sorted, 0.25);
    const double q75 = quantile(sorted, 0.75);

    double abs_change = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) abs_change += std::abs(x[t + 1] - x[t]);
    abs_change /= static_cast<double>(n - 1);
    const double mean_change = (x[n - 1] - x[0]) / static_cast<double>(n - 1);

    // Strict sign changes of the mean-centered series, per transition.
    std::size_t crossings = 0;
    for (std::size_t t = 0; t + 1 < n; ++t)
        if ((x[t] - mu) * (x[t + 1] - mu) < 0.0) ++crossings;
    const double crossing_rate = static_cast<double>(crossings) / static_cast<double>(n - 1);

    std::size_t peaks = 0;
    for (std::size_t t = 1; t + 1 < n; ++t)
        if (x[t] > x[t - 1] && x[t] > x[t + 1]) ++peaks;
    const double peak_rate = static_cast<double>(peaks) / static_cast<double>(n);

    const auto [centroid, entropy] = spectral_features(x);

    std::vector<double> out;
    out.reserve(kCatalogDim);
    out.push_back(mu);
    out.push_back(sd);
    out.push_back(sorted.front());
    out.push_back(sorted.back());
    out.push_back(quantile(sorted, 0.5));
    out.push_back(q25);
    out.push_back(q75);
    out.push_back(q75 - q25);
    out.push_back(skew);
    out.push_back(kurt);
    out.push_back(energy);
    out.push_back(std::sqrt(energy / static_cast<double>(n)));
    out.push_back(abs_change);
    out.push_back(mean_change);
    out.push_back(crossing_rate);
    out.push_back(peak_rate);
    for (int lag = 1; lag <= 5; ++lag) out.push_back(autocorrelation(x, lag));
    out.push_back(centroid);
    out.push_back(entropy);
    out.push_back(std::log(static_cast<double>(n)));
    return out;
}

namespace {

TabularDataset featurize_impl(const SeriesDataset& ds, bool parallel) {
    if (ds.examples.empty()) throw std::invalid_argument("featurize_dataset: empty dataset");
    const std::size_t n = ds.examples.size();

    TabularDataset out;
    out.feature_names = feature_catalog();
    out.class_names = ds.class_names;
    out.labels.resize(n);
    out.rows.resize(n * static_cast<std::size_t>(kCatalogDim));

    std::string first_error;

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        try {
            const auto features = extract_features(ds.examples[i]);
            std::copy(features.begin(), features.end(),
                      out.rows.begin() + i * static_cast<long long>(kCatalogDim));
            out.labels[i] = ds.examples[i].label;
        } catch (const std::exception& e) {
#pragma omp critical
            if (first_error.empty())
                first_error = "series " + std::to_string(i) + ": " + e.what();
        }
    }
    if (!first_error.empty()) throw std::runtime_error(first_error);
    return out;
}

}  // namespace

TabularDataset featurize_dataset(const SeriesDataset& ds, bool parallel) {
    return featurize_impl(ds, parallel);
}

TabularDataset featurize_dataset_serial(const SeriesDataset& ds) {
    return featurize_impl(ds, false);
}

}  // namespace fedtab
