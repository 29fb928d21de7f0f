#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fedtab/config.hpp"
#include "fedtab/federation.hpp"
#include "fedtab/rng.hpp"

using namespace fedtab;

namespace {

TabNetConfig small_model(int input_dim, int n_classes) {
    TabNetConfig cfg;
    cfg.input_dim = input_dim;
    cfg.n_classes = n_classes;
    cfg.n_d = 3;
    cfg.n_a = 3;
    cfg.n_steps = 2;
    return cfg;
}

struct Fixture {
    TabularDataset tab;
    PartitionPlan plan;
    TabNetConfig model;
    RoundConfig round;
    Federation fed;

    Fixture(int n_clients, int per_class = 100, std::uint64_t seed = 31) {
        tab = synth_blobs(2, 4, per_class, 0.3, seed);
        plan = split_dataset(tab, SplitSpec{}, n_clients, seed + 1);
        model = small_model(4, 2);
        round.n_clients = n_clients;
        round.clients_per_round = n_clients;
        round.instances_per_round = 10;
        round.local_epochs = 1;
        round.batch_size = 16;
        round.total_rounds = 3;
        fed = init_federation(tab, plan, model, round, seed + 2);
    }
};

ModelParams constant_params(const TabNetConfig& cfg, double value) {
    ModelParams p = init_params(cfg, 1);
    for (auto& t : p.tensors)
        std::fill(t.values.begin(), t.values.end(), value);
    return p;
}

}  // namespace

TEST_CASE("init_federation mirrors the partition plan") {
    Fixture fx(2, 500);  // N = 1000
    CHECK(fx.fed.clients.size() == 2);
    CHECK(fx.fed.server.test_idx.size() == 200);
    std::size_t train = 0, pool = 0, val = 0;
    for (const auto& c : fx.fed.clients) {
        train += c.train_idx.size();
        pool += c.pool_idx.size();
        val += c.val_idx.size();
    }
    CHECK(train == 100);
    CHECK(pool == 600);
    CHECK(val == 100);
    CHECK(fx.fed.server.round == 0);
    CHECK(fx.fed.clients[0].rng_seed != fx.fed.clients[1].rng_seed);
}

TEST_CASE("init_federation rejects a mismatched plan") {
    Fixture fx(2);
    RoundConfig bad = fx.round;
    bad.n_clients = 3;
    bad.clients_per_round = 3;
    CHECK_THROWS_AS(init_federation(fx.tab, fx.plan, fx.model, bad, 1),
                    std::invalid_argument);
}

TEST_CASE("local_round trains, grows, then validates") {
    Fixture fx(2);
    ClientState& c = fx.fed.clients[0];
    const std::size_t train0 = c.train_idx.size();
    const std::size_t pool0 = c.pool_idx.size();

    const ClientUpdate up = local_round(c, fx.fed.server.params, fx.tab, fx.round, 0);
    CHECK(up.id == c.id);
    CHECK(up.n_train == train0);  // trained on the pre-growth train set
    CHECK(c.train_idx.size() == train0 + 10);
    CHECK(c.pool_idx.size() == pool0 - 10);
    CHECK(up.val_accuracy >= 0.0);
    CHECK(up.val_accuracy <= 1.0);

    SUBCASE("growth conserves and never duplicates indices") {
        std::set<std::size_t> all(c.train_idx.begin(), c.train_idx.end());
        all.insert(c.pool_idx.begin(), c.pool_idx.end());
        CHECK(all.size() == train0 + pool0);
    }
    SUBCASE("draw is capped by the remaining pool") {
        RoundConfig big = fx.round;
        big.instances_per_round = 100000;
        local_round(c, fx.fed.server.params, fx.tab, big, 1);
        CHECK(c.pool_idx.empty());
        CHECK(c.train_idx.size() == train0 + pool0);
        // Training continues after exhaustion.
        const ClientUpdate after = local_round(c, fx.fed.server.params, fx.tab, big, 2);
        CHECK(after.n_train == train0 + pool0);
        CHECK(c.pool_idx.empty());
    }
}

TEST_CASE("fedavg") {
    const TabNetConfig cfg = small_model(3, 2);
    SUBCASE("equal weights average element-wise") {
        ClientUpdate a, b;
        a.id = 0; a.params = constant_params(cfg, 2.0); a.n_train = 5;
        b.id = 1; b.params = constant_params(cfg, 4.0); b.n_train = 5;
        const ModelParams avg = fedavg({a, b});
        for (const auto& t : avg.tensors)
            for (double v : t.values) CHECK(v == doctest::Approx(3.0));
    }
    SUBCASE("weights follow sample counts") {
        ClientUpdate a, b;
        a.id = 0; a.params = constant_params(cfg, 0.0); a.n_train = 1;
        b.id = 1; b.params = constant_params(cfg, 4.0); b.n_train = 3;
        const ModelParams avg = fedavg({a, b});
        for (const auto& t : avg.tensors)
            for (double v : t.values) CHECK(v == doctest::Approx(3.0));
    }
    SUBCASE("single update is returned bit-exactly") {
        ClientUpdate a;
        a.id = 0;
        a.params = init_params(cfg, 123);
        a.n_train = 7;
        const ModelParams avg = fedavg({a});
        for (std::size_t i = 0; i < avg.tensors.size(); ++i)
            CHECK(avg.tensors[i].values == a.params.tensors[i].values);
    }
    SUBCASE("average stays inside the per-coordinate envelope") {
        ClientUpdate a, b, c;
        a.id = 0; a.params = init_params(cfg, 1); a.n_train = 2;
        b.id = 1; b.params = init_params(cfg, 2); b.n_train = 9;
        c.id = 2; c.params = init_params(cfg, 3); c.n_train = 4;
        const ModelParams avg = fedavg({a, b, c});
        for (std::size_t i = 0; i < avg.tensors.size(); ++i)
            for (std::size_t k = 0; k < avg.tensors[i].size(); ++k) {
                const double lo = std::min({a.params.tensors[i].values[k],
                                            b.params.tensors[i].values[k],
                                            c.params.tensors[i].values[k]});
                const double hi = std::max({a.params.tensors[i].values[k],
                                            b.params.tensors[i].values[k],
                                            c.params.tensors[i].values[k]});
                CHECK(avg.tensors[i].values[k] >= lo);
                CHECK(avg.tensors[i].values[k] <= hi);
            }
    }
    SUBCASE("order of updates does not matter") {
        ClientUpdate a, b;
        a.id = 0; a.params = init_params(cfg, 1); a.n_train = 2;
        b.id = 1; b.params = init_params(cfg, 2); b.n_train = 5;
        const ModelParams x = fedavg({a, b});
        const ModelParams y = fedavg({b, a});
        for (std::size_t i = 0; i < x.tensors.size(); ++i)
            CHECK(x.tensors[i].values == y.tensors[i].values);
    }
    SUBCASE("empty update list throws") {
        CHECK_THROWS_AS(fedavg({}), std::invalid_argument);
    }
}

TEST_CASE("sample_clients draws uniformly without replacement") {
    Rng rng(2024);
    const std::vector<int> ids = {0, 1, 2};
    std::vector<long> hits(3, 0);
    for (int r = 0; r < 3000; ++r) {
        const std::vector<int> sel = sample_clients(ids, 2, rng);
        REQUIRE(sel.size() == 2);
        CHECK(sel[0] < sel[1]);  // sorted output
        for (int id : sel) ++hits[id];
    }
    // Each id expected 2000 times; allow a generous band.
    for (long h : hits) {
        CHECK(h > 1850);
        CHECK(h < 2150);
    }
}

TEST_CASE("run_round updates server state") {
    Fixture fx(3);
    fx.round.n_clients = 3;
    fx.round.clients_per_round = 2;
    fx.fed = init_federation(fx.tab, fx.plan, fx.model, fx.round, 33);

    const std::size_t pool_before_c0 = fx.fed.clients[0].pool_idx.size();
    const RoundReport rep = run_round(fx.fed, fx.tab, fx.round);
    CHECK(rep.round == 0);
    CHECK(fx.fed.server.round == 1);
    CHECK(rep.selected.size() == 2);
    CHECK(rep.clients.size() == 2);
    CHECK(rep.test_accuracy >= 0.0);
    CHECK(rep.test_accuracy <= 1.0);
    CHECK(rep.confusion.total() == static_cast<long>(fx.fed.server.test_idx.size()));

    // Unselected clients are untouched this round.
    for (int id = 0; id < 3; ++id) {
        const bool selected =
            std::find(rep.selected.begin(), rep.selected.end(), id) != rep.selected.end();
        if (!selected) CHECK(fx.fed.clients[id].pool_idx.size() == pool_before_c0);
    }
}

TEST_CASE("experiments are deterministic in the master seed") {
    Fixture a(2), b(2);
    RunOptions opts;  // no files
    const auto ha = run_experiment(a.fed, a.tab, a.round, opts);
    const auto hb = run_experiment(b.fed, b.tab, b.round, opts);
    REQUIRE(ha.size() == hb.size());
    for (std::size_t r = 0; r < ha.size(); ++r) {
        CHECK(history_line(ha[r]) == history_line(hb[r]));
        for (std::size_t i = 0; i < a.fed.server.params.tensors.size(); ++i)
            CHECK(a.fed.server.params.tensors[i].values ==
                  b.fed.server.params.tensors[i].values);
    }
}

TEST_CASE("single-client federation equals the centralized baseline") {
    // With one client holding everything and no pool to grow from, FedAvg
    // is the identity and the round loop reduces to plain blocks of local
    // training.
    TabularDataset tab = synth_blobs(2, 4, 60, 0.3, 8);
    PartitionPlan plan;  // hand-built: one client, no pool
    plan.n_clients = 1;
    plan.seed = 9;
    plan.per_client.resize(1);
    for (std::size_t i = 0; i < tab.n(); ++i) {
        if (i < 80) plan.per_client[0].train_idx.push_back(i);
        else if (i < 96) plan.per_client[0].val_idx.push_back(i);
        else plan.test_idx.push_back(i);
    }
    const TabNetConfig model = small_model(4, 2);
    RoundConfig rc;
    rc.n_clients = 1;
    rc.clients_per_round = 1;
    rc.instances_per_round = 10;
    rc.local_epochs = 2;
    rc.batch_size = 16;
    rc.total_rounds = 3;

    Federation fed = init_federation(tab, plan, model, rc, 555);
    RunOptions opts;
    const auto fed_hist = run_experiment(fed, tab, rc, opts);

    ModelParams central_params = init_params(model, 1);
    const auto central_hist =
        centralized_train(tab, plan, model, rc, 555, opts, &central_params);

    REQUIRE(fed_hist.size() == central_hist.size());
    CHECK(fed_hist.back().test_accuracy ==
          doctest::Approx(central_hist.back().test_accuracy));
    for (std::size_t i = 0; i < central_params.tensors.size(); ++i)
        CHECK(central_params.tensors[i].values ==
              fed.server.params.tensors[i].values);  // bit-exact
}

TEST_CASE("history_line matches the documented schema") {
    Fixture fx(2);
    const RoundReport rep = run_round(fx.fed, fx.tab, fx.round);
    const std::string line = history_line(rep);
    CHECK(line.find("\"round\":0") != std::string::npos);
    CHECK(line.find("\"selected\":[") != std::string::npos);
    CHECK(line.find("\"test_acc\":") != std::string::npos);
    CHECK(line.find("\"test_loss\":") != std::string::npos);
    CHECK(line.find("\"clients\":[") != std::string::npos);
    CHECK(line.find("\"n_train\":") != std::string::npos);
    CHECK(line.find("\"val_acc\":") != std::string::npos);
    CHECK(line.find("\"val_loss\":") != std::string::npos);
    CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("round config validation") {
    RoundConfig rc;
    rc.clients_per_round = 3;  // > n_clients
    CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
    rc = RoundConfig{};
    rc.batch_size = 0;
    CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
    rc = RoundConfig{};
    rc.lr = 0.0;
    CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
}
