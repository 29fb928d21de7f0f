#include "fedtab/eval.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedtab {

long ConfusionMatrix::total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
}

long ConfusionMatrix::trace() const {
    long t = 0;
    for (int i = 0; i < n_classes; ++i) t += at(i, i);
    return t;
}

std::vector<long> ConfusionMatrix::row_sums() const {
    std::vector<long> sums(n_classes, 0);
    for (int i = 0; i < n_classes; ++i)
        for (int j = 0; j < n_classes; ++j) sums[i] += at(i, j);
    return sums;
}

std::vector<double> ConfusionMatrix::row_percent() const {
    const auto sums = row_sums();
    std::vector<double> out(counts.size(), 0.0);
    for (int i = 0; i < n_classes; ++i)
        for (int j = 0; j < n_classes; ++j)
            if (sums[i] > 0)
                out[static_cast<std::size_t>(i) * n_classes + j] =
                    100.0 * static_cast<double>(at(i, j)) / static_cast<double>(sums[i]);
    return out;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.empty() || preds.size() != labels.size())
        throw std::invalid_argument("accuracy: inputs must be nonempty and equal length");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          int n_classes, std::vector<std::string> class_names) {
    if (preds.size() != labels.size())
        throw std::invalid_argument("confusion: length mismatch");
    ConfusionMatrix cm;
    cm.n_classes = n_classes;
    cm.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
    if (class_names.empty())
        for (int k = 0; k < n_classes; ++k) class_names.push_back("class_" + std::to_string(k));
    cm.class_names = std::move(class_names);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 0 || preds[i] >= n_classes || labels[i] < 0 || labels[i] >= n_classes)
            throw std::invalid_argument("confusion: class index out of range");
        cm.counts[static_cast<std::size_t>(labels[i]) * n_classes + preds[i]] += 1;
    }
    return cm;
}

HistorySummary summarize(const std::vector<double>& test_acc,
                         const std::vector<double>& test_loss) {
    if (test_acc.empty() || test_acc.size() != test_loss.size())
        throw std::invalid_argument("summarize: empty or mismatched history");
    HistorySummary s;
    s.max_acc = test_acc[0];
    s.max_round = 0;
    s.min_loss = test_loss[0];
    for (std::size_t r = 1; r < test_acc.size(); ++r) {
        if (test_acc[r] > s.max_acc) {
            s.max_acc = test_acc[r];
            s.max_round = static_cast<int>(r);
        }
        if (test_loss[r] < s.min_loss) s.min_loss = test_loss[r];
    }
    s.final_acc = test_acc.back();
    return s;
}

std::string render_confusion(const ConfusionMatrix& cm) {
    std::ostringstream out;
    const auto pct = cm.row_percent();
    out << "confusion matrix (rows = true class; count and row %)\n";
    for (int i = 0; i < cm.n_classes; ++i) {
        out << cm.class_names[i] << ":";
        for (int j = 0; j < cm.n_classes; ++j) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), " %ld (%.2f%%)", cm.at(i, j),
                          pct[static_cast<std::size_t>(i) * cm.n_classes + j]);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write confusion csv: " + path);
    out << "true_class";
    for (const auto& name : cm.class_names) out << "," << name;
    out << "\n";
    for (int i = 0; i < cm.n_classes; ++i) {
        out << cm.class_names[i];
        for (int j = 0; j < cm.n_classes; ++j) out << "," << cm.at(i, j);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure: " + path);
}

}  // namespace fedtab
