#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedtab/data.hpp"
#include "fedtab/eval.hpp"
#include "fedtab/model.hpp"
#include "fedtab/rng.hpp"

namespace fedtab {

struct ClientState {
    int id = 0;
    std::vector<std::size_t> train_idx;  // grows as the pool drains
    std::vector<std::size_t> pool_idx;
    std::vector<std::size_t> val_idx;
    std::uint64_t rng_seed = 0;
};

struct ClientUpdate {
    int id = 0;
    ModelParams params;
    std::size_t n_train = 0;  // sample count used for this round's training
    double val_accuracy = 0.0;
    double val_loss = 0.0;
};

struct RoundConfig {
    int n_clients = 2;
    int clients_per_round = 2;
    int instances_per_round = 10;
    int local_epochs = 5;
    int batch_size = 32;
    int total_rounds = 100;
    double lr = kDefaultLearningRate;

    void validate() const;
};

struct ClientRoundStats {
    int id = 0;
    std::size_t n_train = 0;
    double val_acc = 0.0;
    double val_loss = 0.0;
};

struct RoundReport {
    int round = 0;
    std::vector<int> selected;
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    ConfusionMatrix confusion;
    std::vector<ClientRoundStats> clients;
};

struct ServerState {
    ModelParams params;
    int round = 0;
    std::vector<std::size_t> test_idx;
    std::vector<RoundReport> history;
    std::uint64_t master_seed = 0;
};

struct Federation {
    ServerState server;
    std::vector<ClientState> clients;
};

Federation init_federation(const TabularDataset& tab, const PartitionPlan& plan,
                           const TabNetConfig& model_cfg, const RoundConfig& round_cfg,
                           std::uint64_t seed);

// One client's round, in the protocol's order: train on the current train
// set, then grow it from the pool, then validate. `round` indexes the
// client's per-round seed chain.
ClientUpdate local_round(ClientState& client, const ModelParams& global_params,
                         const TabularDataset& tab, const RoundConfig& round_cfg,
                         int round);

std::vector<int> sample_clients(const std::vector<int>& ids, int m, Rng& round_rng);

// Sample-count-weighted average of every tensor, accumulated in ascending
// client-id order.
ModelParams fedavg(const std::vector<ClientUpdate>& updates);

struct RunOptions {
    std::string history_path;       // empty = do not write
    int checkpoint_every = 0;       // 0 = disabled
    std::string checkpoint_path;    // prefix; "<prefix>_round<k>.bin"
    bool parallel_clients = false;  // OpenMP across selected clients
};

RoundReport run_round(Federation& fed, const TabularDataset& tab,
                      const RoundConfig& round_cfg, bool parallel_clients = false);

std::vector<RoundReport> run_experiment(Federation& fed, const TabularDataset& tab,
                                        const RoundConfig& round_cfg,
                                        const RunOptions& options);

// Centralized baseline: one model trained on the union of all clients'
// train+pool rows, run as total_rounds blocks of local_epochs epochs using
// the client-0 seed chain so a single-client federation is reproduced
// exactly. Evaluated on the same server test set per block.
std::vector<RoundReport> centralized_train(const TabularDataset& tab,
                                           const PartitionPlan& plan,
                                           const TabNetConfig& model_cfg,
                                           const RoundConfig& round_cfg,
                                           std::uint64_t seed, const RunOptions& options,
                                           ModelParams* final_params = nullptr);

// One JSONL history line, exactly the documented schema.
std::string history_line(const RoundReport& report);

}  // namespace fedtab
