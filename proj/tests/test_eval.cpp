#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedtab/eval.hpp"

using namespace fedtab;

TEST_CASE("accuracy") {
    CHECK(accuracy({0, 1, 2}, {0, 1, 2}) == doctest::Approx(1.0));
    CHECK(accuracy({0, 0, 0, 0}, {0, 1, 0, 1}) == doctest::Approx(0.5));
    CHECK(accuracy({1}, {0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(accuracy({0}, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
}

TEST_CASE("confusion matrix") {
    // truth:  0 0 1
    // pred:   0 1 1
    const ConfusionMatrix cm = confusion({0, 1, 1}, {0, 0, 1}, 2, {"a", "b"});
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.total() == 3);
    CHECK(cm.trace() == 2);
    CHECK(cm.row_sums() == std::vector<long>{2, 1});
    const auto pct = cm.row_percent();
    CHECK(pct[0] == doctest::Approx(50.0));
    CHECK(pct[1] == doctest::Approx(50.0));
    CHECK(pct[2] == doctest::Approx(0.0));
    CHECK(pct[3] == doctest::Approx(100.0));

    SUBCASE("trace/total equals accuracy") {
        const std::vector<int> preds = {0, 1, 2, 2, 1, 0, 0};
        const std::vector<int> labels = {0, 2, 2, 2, 1, 1, 0};
        const ConfusionMatrix m = confusion(preds, labels, 3);
        CHECK(static_cast<double>(m.trace()) / m.total() ==
              doctest::Approx(accuracy(preds, labels)));
    }
    SUBCASE("empty row renders as zero percent") {
        const ConfusionMatrix m = confusion({0}, {0}, 2);
        const auto p = m.row_percent();
        CHECK(p[2] == 0.0);
        CHECK(p[3] == 0.0);
    }
    SUBCASE("out-of-range prediction throws") {
        CHECK_THROWS_AS(confusion({2}, {0}, 2), std::invalid_argument);
    }
}

TEST_CASE("summarize picks max accuracy with earliest tie-break") {
    const HistorySummary s = summarize({0.5, 0.9, 0.9, 0.7}, {1.0, 0.4, 0.3, 0.6});
    CHECK(s.max_acc == doctest::Approx(0.9));
    CHECK(s.max_round == 1);  // earliest of the tie
    CHECK(s.final_acc == doctest::Approx(0.7));
    CHECK(s.min_loss == doctest::Approx(0.3));
    CHECK_THROWS_AS(summarize({}, {}), std::invalid_argument);
}

TEST_CASE("render_confusion mentions every class name") {
    const ConfusionMatrix cm = confusion({0, 1, 1}, {0, 0, 1}, 2, {"alpha", "beta"});
    const std::string text = render_confusion(cm);
    CHECK(text.find("alpha") != std::string::npos);
    CHECK(text.find("beta") != std::string::npos);
}

TEST_CASE("write_confusion_csv emits a parseable table") {
    const ConfusionMatrix cm = confusion({0, 1, 1, 0}, {0, 0, 1, 1}, 2, {"a", "b"});
    const std::string path = "/tmp/fedtab_test_confusion.csv";
    write_confusion_csv(cm, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string body = ss.str();
    CHECK(body.find("a") != std::string::npos);
    // Every count appears somewhere in the body.
    for (long c : cm.counts) CHECK(body.find(std::to_string(c)) != std::string::npos);
    std::remove(path.c_str());
}
