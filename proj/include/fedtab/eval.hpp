#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedtab {

struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<long> counts;  // n_classes x n_classes, rows = true class
    std::vector<std::string> class_names;

    long at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth) * n_classes + pred]; }
    long total() const;
    long trace() const;
    std::vector<long> row_sums() const;
    // Row-normalized percentages; rows with no examples render as zeros.
    std::vector<double> row_percent() const;
};

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          int n_classes, std::vector<std::string> class_names = {});

struct HistorySummary {
    double max_acc = 0.0;
    int max_round = 0;
    double final_acc = 0.0;
    double min_loss = 0.0;
};

// Max accuracy with earliest-round tie-break, last-round accuracy, min loss.
HistorySummary summarize(const std::vector<double>& test_acc,
                         const std::vector<double>& test_loss);

std::string render_confusion(const ConfusionMatrix& cm);
void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path);

}  // namespace fedtab
