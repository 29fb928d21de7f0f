#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fedtab/data.hpp"

namespace fedtab {

inline constexpr const char* kCatalogVersion = "v1";
inline constexpr int kCatalogDim = 24;

// Ordered feature names of catalog v1.
const std::vector<std::string>& feature_catalog();

// r(lag) = sum_t (x_t - mu)(x_{t+lag} - mu) / ((n-lag) * var), population
// mu/var; 0 when var = 0 or lag >= n.
double autocorrelation(const std::vector<double>& values, int lag);

// Magnitudes of the mean-detrended DFT at bins 1..n/2.
// centroid = sum k*m_k / sum m_k, entropy = -sum p_k ln p_k with
// p_k = m_k^2 / sum m_j^2; both 0 on degenerate (all-zero) spectra.
std::pair<double, double> spectral_features(const std::vector<double>& values);

// Fixed 24-feature vector for one series (length >= 2 required).
std::vector<double> extract_features(const RawSeries& series);

// Row i = extract_features(example i). Parallel across series when
// `parallel` is set; results are identical either way.
TabularDataset featurize_dataset(const SeriesDataset& ds, bool parallel = true);

// Serial reference, kept for testing the parallel path against.
TabularDataset featurize_dataset_serial(const SeriesDataset& ds);

}  // namespace fedtab
