#include "fedtab/federation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fedtab/checkpoint.hpp"

namespace fedtab {

namespace {

// Seed streams: tags keep the server-init, per-client, and per-round
// selection chains independent of each other.
constexpr std::uint64_t kServerInitTag = 0xA11CEULL;
constexpr std::uint64_t kClientTag = 0xC11E000000ULL;
constexpr std::uint64_t kSelectTag = 0x5E1EC7000000ULL;

std::uint64_t client_seed(std::uint64_t master, int id) {
    return derive_seed(master, kClientTag + static_cast<std::uint64_t>(id));
}

std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

std::string escape_json(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

void check_plan(const TabularDataset& tab, const PartitionPlan& plan,
                const RoundConfig& cfg) {
    if (plan.n_clients != cfg.n_clients)
        throw std::invalid_argument("federation: plan has " + std::to_string(plan.n_clients) +
                                    " clients, config expects " + std::to_string(cfg.n_clients));
    std::size_t covered = plan.test_idx.size();
    auto check_range = [&](const std::vector<std::size_t>& idx) {
        for (std::size_t i : idx)
            if (i >= tab.n()) throw std::invalid_argument("federation: plan index out of range");
    };
    check_range(plan.test_idx);
    for (const auto& c : plan.per_client) {
        check_range(c.train_idx);
        check_range(c.pool_idx);
        check_range(c.val_idx);
        covered += c.train_idx.size() + c.pool_idx.size() + c.val_idx.size();
    }
    if (covered != tab.n())
        throw std::invalid_argument("federation: plan does not cover the dataset exactly");
}

}  // namespace

void RoundConfig::validate() const {
    if (n_clients < 1) throw std::invalid_argument("federation: n_clients must be >= 1");
    if (clients_per_round < 1 || clients_per_round > n_clients)
        throw std::invalid_argument("federation: clients_per_round must be in [1, n_clients]");
    if (instances_per_round < 0)
        throw std::invalid_argument("federation: instances_per_round must be >= 0");
    if (local_epochs < 1) throw std::invalid_argument("federation: local_epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("federation: batch_size must be >= 1");
    if (total_rounds < 1) throw std::invalid_argument("federation: total_rounds must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("federation: lr must be > 0");
}

Federation init_federation(const TabularDataset& tab, const PartitionPlan& plan,
                           const TabNetConfig& model_cfg, const RoundConfig& round_cfg,
                           std::uint64_t seed) {
    round_cfg.validate();
    check_plan(tab, plan, round_cfg);
    if (model_cfg.input_dim != static_cast<int>(tab.dim()))
        throw std::invalid_argument("federation: model input_dim does not match dataset");
    if (model_cfg.n_classes != static_cast<int>(tab.class_names.size()))
        throw std::invalid_argument("federation: model n_classes does not match dataset");

    Federation fed;
    fed.server.params = init_params(model_cfg, derive_seed(seed, kServerInitTag));
    fed.server.round = 0;
    fed.server.test_idx = plan.test_idx;
    fed.server.master_seed = seed;

    fed.clients.resize(plan.n_clients);
    for (int id = 0; id < plan.n_clients; ++id) {
        auto& c = fed.clients[id];
        c.id = id;
        c.train_idx = plan.per_client[id].train_idx;
        c.pool_idx = plan.per_client[id].pool_idx;
        c.val_idx = plan.per_client[id].val_idx;
        c.rng_seed = client_seed(seed, id);
        if (c.train_idx.empty())
            throw std::invalid_argument("federation: client " + std::to_string(id) +
                                        " has an empty training set");
    }
    return fed;
}

ClientUpdate local_round(ClientState& client, const ModelParams& global_params,
                         const TabularDataset& tab, const RoundConfig& round_cfg,
                         int round) {
    if (client.train_idx.empty())
        throw std::invalid_argument("local_round: empty training set");

    ClientUpdate update;
    update.id = client.id;
    update.n_train = client.train_idx.size();

    // (a) train on the current training set
    const std::uint64_t train_seed = derive_seed(client.rng_seed, 2 * static_cast<std::uint64_t>(round));
    update.params = train_epochs(global_params, tab, client.train_idx,
                                 round_cfg.local_epochs, round_cfg.batch_size,
                                 train_seed, round_cfg.lr);

    // (b) grow the training set from the pool (training continues after the
    // pool is exhausted; the move is simply empty then)
    const std::size_t k = std::min<std::size_t>(round_cfg.instances_per_round,
                                                client.pool_idx.size());
    if (k > 0) {
        Rng grow_rng(derive_seed(client.rng_seed, 2 * static_cast<std::uint64_t>(round) + 1));
        auto picks = grow_rng.sample_without_replacement(client.pool_idx.size(), k);
        std::sort(picks.begin(), picks.end(), std::greater<std::size_t>());
        for (std::size_t pos : picks) {
            client.train_idx.push_back(client.pool_idx[pos]);
            client.pool_idx.erase(client.pool_idx.begin() + static_cast<std::ptrdiff_t>(pos));
        }
        std::sort(client.train_idx.begin(), client.train_idx.end());
    }

    // (c) validate the freshly trained model
    if (!client.val_idx.empty()) {
        const EvalResult v = evaluate(update.params, tab, client.val_idx);
        update.val_accuracy = v.accuracy;
        update.val_loss = v.loss;
    }
    return update;
}

std::vector<int> sample_clients(const std::vector<int>& ids, int m, Rng& round_rng) {
    if (m < 0 || static_cast<std::size_t>(m) > ids.size())
        throw std::invalid_argument("sample_clients: m out of range");
    auto picks = round_rng.sample_without_replacement(ids.size(), static_cast<std::size_t>(m));
    std::vector<int> out;
    out.reserve(picks.size());
    for (std::size_t p : picks) out.push_back(ids[p]);
    std::sort(out.begin(), out.end());
    return out;
}

ModelParams fedavg(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw std::invalid_argument("fedavg: empty update list");

    std::vector<const ClientUpdate*> ordered;
    ordered.reserve(updates.size());
    for (const auto& u : updates) ordered.push_back(&u);
    std::sort(ordered.begin(), ordered.end(),
              [](const ClientUpdate* a, const ClientUpdate* b) { return a->id < b->id; });

    double total = 0.0;
    for (const auto* u : ordered) {
        if (u->n_train < 1) throw std::invalid_argument("fedavg: update with n_train < 1");
        total += static_cast<double>(u->n_train);
    }

    const ModelParams& first = ordered.front()->params;
    ModelParams out = first;
    for (auto& t : out.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);

    for (const auto* u : ordered) {
        const double w = static_cast<double>(u->n_train) / total;
        if (u->params.tensors.size() != out.tensors.size())
            throw std::invalid_argument("fedavg: tensor count mismatch");
        for (std::size_t i = 0; i < out.tensors.size(); ++i) {
            const auto& src = u->params.tensors[i];
            auto& dst = out.tensors[i];
            if (src.name != dst.name || src.shape != dst.shape)
                throw std::invalid_argument("fedavg: tensor mismatch on " + dst.name);
            for (std::size_t k = 0; k < dst.values.size(); ++k)
                dst.values[k] += w * src.values[k];
        }
    }

    // Clamp each coordinate into its convex hull; this removes the last-ulp
    // drift of the weighted sum and makes averaging identical updates exact.
    for (std::size_t i = 0; i < out.tensors.size(); ++i) {
        auto& dst = out.tensors[i];
        for (std::size_t k = 0; k < dst.values.size(); ++k) {
            double lo = ordered.front()->params.tensors[i].values[k];
            double hi = lo;
            for (const auto* u : ordered) {
                const double v = u->params.tensors[i].values[k];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            dst.values[k] = std::clamp(dst.values[k], lo, hi);
        }
    }
    return out;
}

RoundReport run_round(Federation& fed, const TabularDataset& tab,
                      const RoundConfig& round_cfg, bool parallel_clients) {
    round_cfg.validate();
    const int r = fed.server.round;

    std::vector<int> ids(fed.clients.size());
    for (std::size_t i = 0; i < fed.clients.size(); ++i) ids[i] = fed.clients[i].id;
    Rng sel_rng(derive_seed(fed.server.master_seed, kSelectTag + static_cast<std::uint64_t>(r)));
    const std::vector<int> selected = sample_clients(ids, round_cfg.clients_per_round, sel_rng);

    std::vector<ClientUpdate> updates(selected.size());
    std::string first_error;
#pragma omp parallel for schedule(dynamic) if (parallel_clients)
    for (long long i = 0; i < static_cast<long long>(selected.size()); ++i) {
        try {
            updates[i] = local_round(fed.clients[selected[i]], fed.server.params, tab,
                                     round_cfg, r);
        } catch (const std::exception& e) {
#pragma omp critical
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) throw std::runtime_error(first_error);

    fed.server.params = fedavg(updates);

    RoundReport report;
    report.round = r;
    report.selected = selected;
    const EvalResult test = evaluate(fed.server.params, tab, fed.server.test_idx);
    report.test_accuracy = test.accuracy;
    report.test_loss = test.loss;
    std::vector<int> test_labels;
    test_labels.reserve(fed.server.test_idx.size());
    for (std::size_t i : fed.server.test_idx) test_labels.push_back(tab.labels[i]);
    report.confusion = confusion(test.predictions, test_labels,
                                 static_cast<int>(tab.class_names.size()), tab.class_names);
    for (const auto& u : updates)
        report.clients.push_back({u.id, u.n_train, u.val_accuracy, u.val_loss});

    fed.server.round += 1;
    fed.server.history.push_back(report);
    return report;
}

std::string history_line(const RoundReport& report) {
    std::string line = "{\"round\":" + std::to_string(report.round) + ",\"selected\":[";
    for (std::size_t i = 0; i < report.selected.size(); ++i)
        line += (i ? "," : "") + std::to_string(report.selected[i]);
    line += "],\"test_acc\":" + fmt_double(report.test_accuracy);
    line += ",\"test_loss\":" + fmt_double(report.test_loss);
    line += ",\"clients\":[";
    for (std::size_t i = 0; i < report.clients.size(); ++i) {
        const auto& c = report.clients[i];
        line += (i ? "," : "");
        line += "{\"id\":" + std::to_string(c.id) + ",\"n_train\":" + std::to_string(c.n_train) +
                ",\"val_acc\":" + fmt_double(c.val_acc) + ",\"val_loss\":" + fmt_double(c.val_loss) +
                "}";
    }
    line += "],\"confusion\":[";
    for (int i = 0; i < report.confusion.n_classes; ++i) {
        line += (i ? "," : "");
        line += "[";
        for (int j = 0; j < report.confusion.n_classes; ++j)
            line += (j ? "," : "") + std::to_string(report.confusion.at(i, j));
        line += "]";
    }
    line += "],\"classes\":[";
    for (std::size_t i = 0; i < report.confusion.class_names.size(); ++i)
        line += (i ? "," : "") + ("\"" + escape_json(report.confusion.class_names[i]) + "\"");
    line += "]}";
    return line;
}

std::vector<RoundReport> run_experiment(Federation& fed, const TabularDataset& tab,
                                        const RoundConfig& round_cfg,
                                        const RunOptions& options) {
    std::ofstream history;
    if (!options.history_path.empty()) {
        history.open(options.history_path, std::ios::trunc);
        if (!history) throw std::runtime_error("cannot write history: " + options.history_path);
    }

    std::vector<RoundReport> reports;
    reports.reserve(round_cfg.total_rounds);
    for (int r = 0; r < round_cfg.total_rounds; ++r) {
        RoundReport report = run_round(fed, tab, round_cfg, options.parallel_clients);
        if (history.is_open()) {
            history << history_line(report) << "\n";
            history.flush();
        }
        if (options.checkpoint_every > 0 && (r + 1) % options.checkpoint_every == 0) {
            const std::string prefix =
                options.checkpoint_path.empty() ? "checkpoint" : options.checkpoint_path;
            save_checkpoint(fed.server.params,
                            prefix + "_round" + std::to_string(r + 1) + ".bin");
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<RoundReport> centralized_train(const TabularDataset& tab,
                                           const PartitionPlan& plan,
                                           const TabNetConfig& model_cfg,
                                           const RoundConfig& round_cfg,
                                           std::uint64_t seed, const RunOptions& options,
                                           ModelParams* final_params) {
    round_cfg.validate();
    check_plan(tab, plan, round_cfg);

    std::vector<std::size_t> union_idx;
    for (const auto& c : plan.per_client) {
        union_idx.insert(union_idx.end(), c.train_idx.begin(), c.train_idx.end());
        union_idx.insert(union_idx.end(), c.pool_idx.begin(), c.pool_idx.end());
    }
    std::sort(union_idx.begin(), union_idx.end());

    ModelParams params = init_params(model_cfg, derive_seed(seed, kServerInitTag));
    const std::uint64_t chain = client_seed(seed, 0);

    std::ofstream history;
    if (!options.history_path.empty()) {
        history.open(options.history_path, std::ios::trunc);
        if (!history) throw std::runtime_error("cannot write history: " + options.history_path);
    }

    std::vector<RoundReport> reports;
    for (int r = 0; r < round_cfg.total_rounds; ++r) {
        params = train_epochs(params, tab, union_idx, round_cfg.local_epochs,
                              round_cfg.batch_size,
                              derive_seed(chain, 2 * static_cast<std::uint64_t>(r)),
                              round_cfg.lr);
        RoundReport report;
        report.round = r;
        const EvalResult test = evaluate(params, tab, plan.test_idx);
        report.test_accuracy = test.accuracy;
        report.test_loss = test.loss;
        std::vector<int> test_labels;
        for (std::size_t i : plan.test_idx) test_labels.push_back(tab.labels[i]);
        report.confusion = confusion(test.predictions, test_labels,
                                     static_cast<int>(tab.class_names.size()), tab.class_names);
        if (history.is_open()) {
            history << history_line(report) << "\n";
            history.flush();
        }
        reports.push_back(std::move(report));
    }
    if (final_params) *final_params = params;
    return reports;
}

}  // namespace fedtab
