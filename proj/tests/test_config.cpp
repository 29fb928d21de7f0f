#include <doctest.h>

#include <string>

#include "fedtab/config.hpp"

using namespace fedtab;

TEST_CASE("empty config yields defaults") {
    const ExperimentConfig cfg = parse_config_text("");
    CHECK(cfg.seed == 42);
    CHECK(cfg.data_kind == "synth");
    CHECK(cfg.synth_classes == 3);
    CHECK(cfg.synth_dim == 10);
    CHECK(cfg.synth_per_class == 200);
    CHECK(cfg.synth_spread == doctest::Approx(0.25));
    CHECK(cfg.split.train_frac == doctest::Approx(0.10));
    CHECK(cfg.split.pool_frac == doctest::Approx(0.60));
    CHECK(cfg.split.val_frac == doctest::Approx(0.10));
    CHECK(cfg.split.test_frac == doctest::Approx(0.20));
    CHECK(cfg.stratified);
    CHECK(cfg.federation.n_clients == 2);
    CHECK(cfg.federation.clients_per_round == 2);  // defaults to n_clients
    CHECK(cfg.federation.total_rounds == 100);
    CHECK(cfg.federation.instances_per_round == 10);
    CHECK(cfg.federation.local_epochs == 5);
    CHECK(cfg.federation.batch_size == 32);
    CHECK(cfg.federation.lr == doctest::Approx(0.02));
    CHECK_FALSE(cfg.parallel_clients);
    CHECK(cfg.model.n_d == 5);
    CHECK(cfg.model.n_a == 5);
    CHECK(cfg.model.n_steps == 3);
    CHECK(cfg.model.gamma == doctest::Approx(1.3));
    CHECK(cfg.model.lambda_sparse == doctest::Approx(1e-3));
    CHECK(cfg.model.bn_momentum == doctest::Approx(0.1));
    CHECK(cfg.history_path == "history.jsonl");
    CHECK(cfg.checkpoint_every == 0);
}

TEST_CASE("values, comments and whitespace are parsed") {
    const ExperimentConfig cfg = parse_config_text(
        "# experiment\n"
        "seed = 7\n"
        "  federation.n_clients=3  \n"
        "federation.clients_per_round = 2\n"
        "model.lr = 0.005\n"
        "split.stratified = false\n"
        "\n"
        "output.history_path = out/run.jsonl\n");
    CHECK(cfg.seed == 7);
    CHECK(cfg.federation.n_clients == 3);
    CHECK(cfg.federation.clients_per_round == 2);
    CHECK(cfg.federation.lr == doctest::Approx(0.005));
    CHECK_FALSE(cfg.stratified);
    CHECK(cfg.history_path == "out/run.jsonl");
}

TEST_CASE("clients_per_round follows n_clients when unset") {
    const ExperimentConfig cfg = parse_config_text("federation.n_clients = 5\n");
    CHECK(cfg.federation.clients_per_round == 5);
}

TEST_CASE("unknown key is rejected with line and key") {
    try {
        parse_config_text("seed = 1\nmodle.n_d = 4\n");
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("modle.n_d") != std::string::npos);
    }
}

TEST_CASE("malformed lines and values are rejected") {
    CHECK_THROWS_AS(parse_config_text("just words\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("seed = abc\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("model.gamma = 1.2.3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("split.stratified = maybe\n"), std::invalid_argument);
}

TEST_CASE("validation names the offending key") {
    try {
        parse_config_text("federation.n_clients = 2\nfederation.clients_per_round = 3\n");
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("federation") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("data.kind = series\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("data.synth_spread = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("split.test_frac = 0.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("output.checkpoint_every = -1\n"), std::invalid_argument);
}

TEST_CASE("config echo round-trips") {
    const ExperimentConfig cfg = parse_config_text(
        "seed = 99\nfederation.rounds = 17\nmodel.n_steps = 4\ndata.synth_spread = 0.4\n");
    const std::string echoed = config_to_string(cfg);
    const ExperimentConfig back = parse_config_text(echoed);
    CHECK(config_to_string(back) == echoed);
    CHECK(back.seed == 99);
    CHECK(back.federation.total_rounds == 17);
    CHECK(back.model.n_steps == 4);
    CHECK(back.synth_spread == doctest::Approx(0.4));
}
