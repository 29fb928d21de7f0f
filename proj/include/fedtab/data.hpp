#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedtab {

// One labeled variable-length acceleration time series.
struct RawSeries {
    int label = 0;
    std::vector<double> values;
};

struct SeriesDataset {
    std::string name;
    std::vector<std::string> class_names;
    std::vector<RawSeries> examples;

    int n_classes() const { return static_cast<int>(class_names.size()); }
    std::size_t size() const { return examples.size(); }
};

// N x D feature matrix with labels and class names.
struct TabularDataset {
    std::vector<std::string> feature_names;
    std::vector<double> rows;  // row-major N x D
    std::vector<int> labels;
    std::vector<std::string> class_names;

    std::size_t n() const { return labels.size(); }
    std::size_t dim() const { return feature_names.size(); }
    const double* row(std::size_t i) const { return rows.data() + i * dim(); }
    double* row(std::size_t i) { return rows.data() + i * dim(); }
};

struct SplitSpec {
    double train_frac = 0.10;
    double pool_frac = 0.60;
    double val_frac = 0.10;
    double test_frac = 0.20;

    void validate() const;  // throws std::invalid_argument
};

struct ClientPartition {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> pool_idx;
    std::vector<std::size_t> val_idx;
};

struct PartitionPlan {
    int n_clients = 0;
    std::vector<ClientPartition> per_client;
    std::vector<std::size_t> test_idx;
    std::uint64_t seed = 0;
};

struct ClassStat {
    std::string name;
    std::size_t count = 0;
    double percent = 0.0;
};

// Series file format: optional first line "#classes:name1,name2,...",
// then one series per line as "label,v1,v2,...".
SeriesDataset load_series_file(const std::string& path);

// Tabular CSV: header "label,<f1>,...,<fD>", numeric body. Lines starting
// with '#' are treated as comments.
TabularDataset load_tabular_csv(const std::string& path);
void save_tabular_csv(const TabularDataset& ds, const std::string& path,
                      const std::string& comment = "");

// Four-way split distributed over clients. Test size = round(test_frac*N);
// the residual is divided among train/pool/val by largest remainder, then
// dealt to clients with sizes differing by at most one.
PartitionPlan split_dataset(const TabularDataset& ds, const SplitSpec& spec,
                            int n_clients, std::uint64_t seed, bool stratified = true);

// Gaussian clusters around well-separated class means (separation grows as
// 1/spread relative to unit noise); deterministic under seed.
TabularDataset synth_blobs(int n_classes, int dim, int n_per_class,
                           double spread, std::uint64_t seed);

std::vector<ClassStat> class_distribution(const std::vector<int>& labels,
                                          const std::vector<std::string>& class_names);

}  // namespace fedtab
