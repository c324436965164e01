#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "petaxon/errors.hpp"
#include "petaxon/metrics.hpp"
#include "support/oracles.hpp"

using namespace petaxon;

TEST_CASE("accuracy counts exact matches") {
    std::vector<std::string> pred = {"a", "b", "c", "a"};
    std::vector<std::string> truth = {"a", "b", "a", "a"};
    CHECK(accuracy(pred, truth) == doctest::Approx(0.75));

    std::vector<std::string> shorter = {"a"};
    CHECK_THROWS_AS(accuracy(pred, shorter), LengthMismatchError);
    std::vector<std::string> none;
    CHECK_THROWS_AS(accuracy(none, none), LengthMismatchError);
}

TEST_CASE("binary AUC on hand-worked examples") {
    // Perfect ranking.
    std::vector<double> s1 = {0.1, 0.4, 0.35, 0.8};
    std::vector<int> y1 = {0, 0, 0, 1};
    CHECK(roc_auc_binary(s1, y1) == doctest::Approx(1.0));

    // One inversion among 1x3 pairs -> 2.5/3.
    std::vector<double> s2 = {0.9, 0.4, 0.35, 0.8};
    std::vector<int> y2 = {0, 1, 0, 0};
    // pairs: (0.4 vs 0.9)=0, (0.4 vs 0.35)=1, (0.4 vs 0.8)=0 -> 1/3
    CHECK(roc_auc_binary(s2, y2) == doctest::Approx(1.0 / 3.0));

    // All scores tied -> 0.5 exactly.
    std::vector<double> s3 = {0.5, 0.5, 0.5, 0.5};
    std::vector<int> y3 = {0, 1, 0, 1};
    CHECK(roc_auc_binary(s3, y3) == doctest::Approx(0.5));

    std::vector<double> s4 = {0.2, 0.3};
    std::vector<int> y4 = {1, 1};
    CHECK_THROWS_AS(roc_auc_binary(s4, y4), OneClassOnlyError);
}

TEST_CASE("binary AUC matches the pairwise reference") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> draw(0.0, 1.0);
    for (int round = 0; round < 500; ++round) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse grid to force plenty of ties.
            scores[i] = std::floor(draw(rng) * 8.0) / 8.0;
            labels[i] = static_cast<int>(rng() % 2);
        }
        labels[0] = 1;  // guarantee both classes
        labels[1] = 0;

        CHECK(roc_auc_binary(scores, labels) ==
              doctest::Approx(oracles::auc(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("macro AUC averages one-vs-rest over present classes") {
    // 3 columns, but class 2 never appears in the truth: mean of AUC_0, AUC_1.
    std::vector<std::vector<double>> probs = {
        {0.8, 0.1, 0.1},
        {0.2, 0.7, 0.1},
        {0.3, 0.6, 0.1},
        {0.6, 0.3, 0.1},
    };
    std::vector<int> labels = {0, 1, 1, 0};

    std::vector<double> col0 = {0.8, 0.2, 0.3, 0.6};
    std::vector<int> is0 = {1, 0, 0, 1};
    std::vector<double> col1 = {0.1, 0.7, 0.6, 0.3};
    std::vector<int> is1 = {0, 1, 1, 0};
    const double expect = (oracles::auc(col0, is0) + oracles::auc(col1, is1)) / 2.0;
    CHECK(macro_auc(probs, labels) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("fp/fn treat benign as the negative class") {
    std::vector<std::string> truth = {"benign", "benign", "trojan", "worm", "worm"};
    std::vector<std::string> pred = {"benign", "trojan", "benign", "trojan", "worm"};
    auto [fp, fn] = fp_fn(pred, truth);
    CHECK(fp == 1);  // benign called trojan
    CHECK(fn == 1);  // trojan called benign; worm->trojan is neither
}

TEST_CASE("confusion matrix layout and row sums") {
    std::vector<std::string> vocab = {"benign", "trojan", "worm"};
    std::vector<std::string> truth = {"benign", "trojan", "trojan", "worm", "benign", "trojan"};
    std::vector<std::string> pred = {"benign", "worm", "trojan", "worm", "trojan", "trojan"};
    auto cm = confusion(pred, truth, vocab);
    REQUIRE(cm.labels == vocab);
    REQUIRE(cm.counts.size() == 3);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[1][1] == 2);
    CHECK(cm.counts[1][2] == 1);
    CHECK(cm.counts[2][2] == 1);

    // Row sums recover per-class supports.
    std::vector<std::uint64_t> support(3, 0);
    for (const auto& t : truth)
        for (std::size_t i = 0; i < vocab.size(); ++i)
            if (t == vocab[i]) ++support[i];
    for (std::size_t i = 0; i < 3; ++i) {
        std::uint64_t row = 0;
        for (auto c : cm.counts[i]) row += c;
        CHECK(row == support[i]);
    }

    std::vector<std::string> stray = {"benign", "rootkit"};
    std::vector<std::string> t2 = {"benign", "benign"};
    CHECK_THROWS_AS(confusion(stray, t2, vocab), UnknownLabelError);
    CHECK_THROWS_AS(confusion(t2, stray, vocab), UnknownLabelError);
}

TEST_CASE("confusion CSVs: raw counts and row-normalized") {
    ConfusionMatrix cm;
    cm.labels = {"benign", "trojan"};
    cm.counts = {{3, 1}, {0, 0}};

    std::ostringstream raw;
    write_confusion_csv(cm, raw);
    CHECK(raw.str() == "label,benign,trojan\nbenign,3,1\ntrojan,0,0\n");

    std::ostringstream norm;
    write_confusion_normalized_csv(cm, norm);
    // The empty trojan row stays zero rather than dividing by zero.
    CHECK(norm.str() ==
          "label,benign,trojan\nbenign,0.750000,0.250000\ntrojan,0.000000,0.000000\n");
}

TEST_CASE("tpr_at_fpr on hand-worked thresholds") {
    std::vector<double> scores = {0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
    std::vector<int> labels = {1, 1, 0, 1, 0, 0};
    // t=0.9: tpr 1/3 fpr 0; t=0.8: tpr 2/3 fpr 0; t=0.7: fpr 1/3 too high at 0.1
    auto [tpr, thr] = tpr_at_fpr(scores, labels, 0.1);
    CHECK(tpr == doctest::Approx(2.0 / 3.0));
    CHECK(thr == doctest::Approx(0.8));

    // All scores tied: the single threshold has fpr 1, so nothing qualifies.
    std::vector<double> s2 = {0.5, 0.5};
    std::vector<int> y2 = {0, 1};
    auto [t2, th2] = tpr_at_fpr(s2, y2, 0.01);
    CHECK(t2 == 0.0);
    CHECK(std::isinf(th2));

    CHECK_THROWS_AS(tpr_at_fpr(s2, std::vector<int>{1, 1}, 0.1), OneClassOnlyError);
    CHECK_THROWS_AS(tpr_at_fpr(s2, y2, 0.0), ConfigError);
    CHECK_THROWS_AS(tpr_at_fpr(s2, y2, 1.0), ConfigError);
}

TEST_CASE("tpr_at_fpr matches the threshold-sweep reference") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> draw(0.0, 1.0);
    const double targets[] = {0.01, 0.05, 0.1, 0.25, 0.5};
    for (int round = 0; round < 500; ++round) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::floor(draw(rng) * 16.0) / 16.0;
            labels[i] = static_cast<int>(rng() % 2);
        }
        labels[0] = 1;
        labels[1] = 0;

        const double target = targets[rng() % 5];
        auto [tpr, thr] = tpr_at_fpr(scores, labels, target);
        auto [rtpr, rthr] = oracles::tpr_at_fpr(scores, labels, target);
        CHECK(tpr == rtpr);
        if (std::isinf(rthr))
            CHECK(std::isinf(thr));
        else
            CHECK(thr == rthr);
    }
}

TEST_CASE("stage report CSV marks skipped stages") {
    StageReport ran;
    ran.skipped = false;
    ran.samples = 120;
    ran.accuracy = 0.9575;
    ran.auc = 0.9825;
    ran.false_positives = 3;
    ran.false_negatives = 2;

    StageReport off;  // defaults to skipped
    off.skip_reason = "insufficient samples";

    std::vector<std::pair<std::string, StageReport>> stages = {
        {"detection", ran},
        {"behavior", off},
    };
    std::ostringstream out;
    write_stage_report_csv(stages, out);
    const std::string text = out.str();

    CHECK(text.find("metric,detection,behavior") == 0);
    CHECK(text.find("accuracy,0.9575,skipped") != std::string::npos);
    CHECK(text.find("auc,0.9825,skipped") != std::string::npos);
    CHECK(text.find("samples,120,skipped") != std::string::npos);
    CHECK(text.find("false_positives,3,skipped") != std::string::npos);
    CHECK(text.find("false_negatives,2,skipped") != std::string::npos);
}
