#include "fedtab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedtab/rng.hpp"

namespace fedtab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& field, std::size_t line_no, std::size_t col) {
    const std::string t = trim(field);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ", column " +
                                 std::to_string(col + 1) + ": not a number: '" + t + "'");
    if (!std::isfinite(value))
        throw std::runtime_error("line " + std::to_string(line_no) + ", column " +
                                 std::to_string(col + 1) + ": non-finite value");
    return value;
}

int parse_label(const std::string& field, std::size_t line_no) {
    const std::string t = trim(field);
    int value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": label is not an integer: '" + t + "'");
    if (value < 0)
        throw std::runtime_error("line " + std::to_string(line_no) + ": negative label");
    return value;
}

// Largest-remainder apportionment of `total` into shares proportional to
// weights; exact targets are weights[i]/sum * total.
std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& weights) {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<std::size_t> out(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = total * weights[i] / wsum;
        out[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[i];
        rem.push_back({exact - std::floor(exact), i});
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) out[rem[k % rem.size()].second] += 1;
    return out;
}

}  // namespace

void SplitSpec::validate() const {
    const double fr[4] = {train_frac, pool_frac, val_frac, test_frac};
    for (double f : fr)
        if (!(f > 0.0 && f < 1.0))
            throw std::invalid_argument("split fractions must lie in (0,1)");
    const double sum = train_frac + pool_frac + val_frac + test_frac;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");
}

SeriesDataset load_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open series file: " + path);

    SeriesDataset ds;
    ds.name = path;
    std::string line;
    std::size_t line_no = 0;
    bool saw_directive = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.rfind("#classes:", 0) == 0) {
            if (saw_directive || !ds.examples.empty())
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": #classes directive must be the first line");
            for (auto& name : split_fields(t.substr(9), ','))
                ds.class_names.push_back(trim(name));
            saw_directive = true;
            continue;
        }
        if (t[0] == '#') continue;

        auto fields = split_fields(t, ',');
        if (fields.size() < 3)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": a series needs a label and at least 2 values");
        RawSeries s;
        s.label = parse_label(fields[0], line_no);
        s.values.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i)
            s.values.push_back(parse_double(fields[i], line_no, i));
        ds.examples.push_back(std::move(s));
    }

    if (ds.examples.empty()) throw std::runtime_error(path + ": no examples");

    int max_label = 0;
    for (const auto& s : ds.examples) max_label = std::max(max_label, s.label);

    if (ds.class_names.empty()) {
        for (int k = 0; k <= max_label; ++k) ds.class_names.push_back("class_" + std::to_string(k));
    } else if (max_label >= ds.n_classes()) {
        throw std::runtime_error(path + ": label " + std::to_string(max_label) +
                                 " out of range for " + std::to_string(ds.n_classes()) +
                                 " declared classes");
    }

    // Labels must cover 0..C-1.
    std::vector<bool> seen(ds.class_names.size(), false);
    for (const auto& s : ds.examples) seen[s.label] = true;
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k])
            throw std::runtime_error(path + ": class " + std::to_string(k) + " has no examples");
    return ds;
}

TabularDataset load_tabular_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);

    TabularDataset ds;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    int max_label = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.rfind("#classes:", 0) == 0) {
            ds.class_names.clear();
            for (auto& name : split_fields(t.substr(9), ','))
                ds.class_names.push_back(trim(name));
            continue;
        }
        if (t[0] == '#') continue;
        auto fields = split_fields(t, ',');
        if (!have_header) {
            if (trim(fields[0]) != "label")
                throw std::runtime_error(path + ": missing header (first column must be 'label')");
            for (std::size_t i = 1; i < fields.size(); ++i)
                ds.feature_names.push_back(trim(fields[i]));
            if (ds.feature_names.empty())
                throw std::runtime_error(path + ": header declares no features");
            have_header = true;
            continue;
        }
        if (fields.size() != ds.feature_names.size() + 1)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(ds.feature_names.size() + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        ds.labels.push_back(parse_label(fields[0], line_no));
        max_label = std::max(max_label, ds.labels.back());
        for (std::size_t i = 1; i < fields.size(); ++i)
            ds.rows.push_back(parse_double(fields[i], line_no, i));
    }
    if (!have_header) throw std::runtime_error(path + ": missing header");
    if (ds.labels.empty()) throw std::runtime_error(path + ": no data rows");
    if (ds.class_names.empty())
        for (int k = 0; k <= max_label; ++k)
            ds.class_names.push_back("class_" + std::to_string(k));
    if (max_label >= static_cast<int>(ds.class_names.size()))
        throw std::runtime_error(path + ": label " + std::to_string(max_label) +
                                 " out of range for declared classes");
    return ds;
}

void save_tabular_csv(const TabularDataset& ds, const std::string& path,
                      const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv file: " + path);
    if (!comment.empty()) out << "#" << comment << "\n";
    if (!ds.class_names.empty()) {
        out << "#classes:";
        for (std::size_t i = 0; i < ds.class_names.size(); ++i)
            out << (i ? "," : "") << ds.class_names[i];
        out << "\n";
    }
    out << "label";
    for (const auto& f : ds.feature_names) out << "," << f;
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < ds.n(); ++i) {
        out << ds.labels[i];
        const double* r = ds.row(i);
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", r[j]);
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure: " + path);
}

PartitionPlan split_dataset(const TabularDataset& ds, const SplitSpec& spec,
                            int n_clients, std::uint64_t seed, bool stratified) {
    spec.validate();
    if (n_clients < 1) throw std::invalid_argument("n_clients must be >= 1");
    const std::size_t n = ds.n();
    if (n == 0) throw std::invalid_argument("empty dataset");

    // Global partition sizes: test first, then train/pool/val on the residual.
    const std::size_t n_test =
        static_cast<std::size_t>(std::llround(spec.test_frac * static_cast<double>(n)));
    if (n_test >= n) throw std::invalid_argument("dataset too small for requested split");
    const std::size_t residual = n - n_test;
    auto tpv = largest_remainder(residual, {spec.train_frac, spec.pool_frac, spec.val_frac});

    if (tpv[0] < static_cast<std::size_t>(n_clients))
        throw std::invalid_argument("dataset too small: every client needs >= 1 train instance");

    // Partition order: test, then per client train/pool/val.
    const std::size_t n_parts = 1 + 3 * static_cast<std::size_t>(n_clients);
    std::vector<std::size_t> part_size(n_parts, 0);
    part_size[0] = n_test;
    for (int which = 0; which < 3; ++which) {
        const std::size_t total = tpv[which];
        const std::size_t base = total / n_clients;
        const std::size_t extra = total % n_clients;
        for (int c = 0; c < n_clients; ++c)
            part_size[1 + 3 * static_cast<std::size_t>(c) + which] =
                base + (static_cast<std::size_t>(c) < extra ? 1 : 0);
    }

    const int n_classes = static_cast<int>(ds.class_names.size());
    std::vector<std::vector<std::size_t>> assigned(n_parts);
    Rng rng(seed);

    if (stratified) {
        std::vector<std::vector<std::size_t>> by_class(n_classes);
        for (std::size_t i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(i);
        for (auto& cls : by_class) rng.shuffle(cls);

        // Per (partition, class) quota: floor of the exact share, then
        // +1 by largest fractional part subject to per-partition and
        // per-class remainders.
        std::vector<std::vector<std::size_t>> quota(n_parts, std::vector<std::size_t>(n_classes, 0));
        std::vector<std::size_t> part_left = part_size;
        std::vector<std::size_t> class_left(n_classes);
        std::vector<std::tuple<double, std::size_t, int>> fracs;
        for (int c = 0; c < n_classes; ++c) class_left[c] = by_class[c].size();
        for (std::size_t p = 0; p < n_parts; ++p) {
            for (int c = 0; c < n_classes; ++c) {
                const double exact =
                    static_cast<double>(part_size[p]) * by_class[c].size() / static_cast<double>(n);
                const std::size_t base = static_cast<std::size_t>(std::floor(exact));
                quota[p][c] = base;
                part_left[p] -= base;
                class_left[c] -= base;
                fracs.emplace_back(exact - std::floor(exact), p, c);
            }
        }
        std::stable_sort(fracs.begin(), fracs.end(),
                         [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
        bool progress = true;
        while (progress) {
            progress = false;
            for (const auto& [f, p, c] : fracs) {
                if (part_left[p] > 0 && class_left[c] > 0) {
                    quota[p][c] += 1;
                    part_left[p] -= 1;
                    class_left[c] -= 1;
                    progress = true;
                }
            }
        }
        // Deal shuffled class indices to partitions in fixed order.
        std::vector<std::size_t> cursor(n_classes, 0);
        for (std::size_t p = 0; p < n_parts; ++p)
            for (int c = 0; c < n_classes; ++c)
                for (std::size_t k = 0; k < quota[p][c]; ++k)
                    assigned[p].push_back(by_class[c][cursor[c]++]);
    } else {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        std::size_t pos = 0;
        for (std::size_t p = 0; p < n_parts; ++p) {
            assigned[p].assign(order.begin() + pos, order.begin() + pos + part_size[p]);
            pos += part_size[p];
        }
    }

    PartitionPlan plan;
    plan.n_clients = n_clients;
    plan.seed = seed;
    plan.test_idx = assigned[0];
    std::sort(plan.test_idx.begin(), plan.test_idx.end());
    plan.per_client.resize(n_clients);
    for (int c = 0; c < n_clients; ++c) {
        auto& part = plan.per_client[c];
        part.train_idx = assigned[1 + 3 * static_cast<std::size_t>(c) + 0];
        part.pool_idx = assigned[1 + 3 * static_cast<std::size_t>(c) + 1];
        part.val_idx = assigned[1 + 3 * static_cast<std::size_t>(c) + 2];
        std::sort(part.train_idx.begin(), part.train_idx.end());
        std::sort(part.pool_idx.begin(), part.pool_idx.end());
        std::sort(part.val_idx.begin(), part.val_idx.end());
    }
    return plan;
}

TabularDataset synth_blobs(int n_classes, int dim, int n_per_class,
                           double spread, std::uint64_t seed) {
    if (n_classes < 2) throw std::invalid_argument("synth_blobs: n_classes must be >= 2");
    if (dim < 1) throw std::invalid_argument("synth_blobs: dim must be >= 1");
    if (n_per_class < 1) throw std::invalid_argument("synth_blobs: n_per_class must be >= 1");
    if (!(spread > 0.0)) throw std::invalid_argument("synth_blobs: spread must be > 0");

    TabularDataset ds;
    for (int j = 0; j < dim; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    for (int k = 0; k < n_classes; ++k) ds.class_names.push_back("class_" + std::to_string(k));

    // Class k mean = scaled basis vector e_{k mod dim} * (1 + floor(k/dim)),
    // so means are at least unit-separated before the 1/spread scaling.
    Rng rng(seed);
    for (int k = 0; k < n_classes; ++k) {
        std::vector<double> mean(dim, 0.0);
        mean[k % dim] = (1.0 + k / dim) / spread;
        for (int i = 0; i < n_per_class; ++i) {
            ds.labels.push_back(k);
            for (int j = 0; j < dim; ++j) ds.rows.push_back(mean[j] + rng.normal());
        }
    }
    return ds;
}

std::vector<ClassStat> class_distribution(const std::vector<int>& labels,
                                          const std::vector<std::string>& class_names) {
    std::vector<ClassStat> stats(class_names.size());
    for (std::size_t c = 0; c < class_names.size(); ++c) stats[c].name = class_names[c];
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= class_names.size())
            throw std::invalid_argument("label out of range");
        stats[l].count += 1;
    }
    for (auto& s : stats)
        s.percent = labels.empty() ? 0.0 : 100.0 * static_cast<double>(s.count) / labels.size();
    return stats;
}

}  // namespace fedtab
