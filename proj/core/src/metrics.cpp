#include "petaxon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "petaxon/errors.hpp"

namespace petaxon {

double accuracy(std::span<const std::string> predicted, std::span<const std::string> truth) {
    if (predicted.size() != truth.size())
        throw LengthMismatchError("predicted/truth length mismatch");
    if (truth.empty()) throw LengthMismatchError("accuracy requires at least one sample");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double roc_auc_binary(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw LengthMismatchError("scores/labels length mismatch");
    std::size_t n = labels.size();
    std::size_t n_pos = 0;
    for (int y : labels)
        if (y == 1) ++n_pos;
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw OneClassOnlyError("AUC requires both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks within tied score groups (Mann-Whitney convention).
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double macro_auc(const std::vector<std::vector<double>>& probabilities,
                 std::span<const int> labels) {
    if (probabilities.size() != labels.size())
        throw LengthMismatchError("probabilities/labels length mismatch");
    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2) throw OneClassOnlyError("macro AUC requires at least two classes");

    double total = 0.0;
    for (int k : present) {
        std::vector<double> scores(labels.size());
        std::vector<int> binary(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores[i] = probabilities[i][static_cast<std::size_t>(k)];
            binary[i] = labels[i] == k ? 1 : 0;
        }
        total += roc_auc_binary(scores, binary);
    }
    return total / static_cast<double>(present.size());
}

std::pair<std::size_t, std::size_t> fp_fn(std::span<const std::string> predicted,
                                          std::span<const std::string> truth) {
    if (predicted.size() != truth.size())
        throw LengthMismatchError("predicted/truth length mismatch");
    std::size_t fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool truly_benign = truth[i] == "benign";
        bool predicted_benign = predicted[i] == "benign";
        if (truly_benign && !predicted_benign) ++fp;
        if (!truly_benign && predicted_benign) ++fn;
    }
    return {fp, fn};
}

ConfusionMatrix confusion(std::span<const std::string> predicted,
                          std::span<const std::string> truth,
                          std::span<const std::string> vocabulary) {
    if (predicted.size() != truth.size())
        throw LengthMismatchError("predicted/truth length mismatch");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < vocabulary.size(); ++i) index[vocabulary[i]] = i;

    ConfusionMatrix cm;
    cm.labels.assign(vocabulary.begin(), vocabulary.end());
    cm.counts.assign(vocabulary.size(), std::vector<std::uint64_t>(vocabulary.size(), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto t = index.find(truth[i]);
        auto p = index.find(predicted[i]);
        if (t == index.end()) throw UnknownLabelError("true label '" + truth[i] + "' not in vocabulary");
        if (p == index.end())
            throw UnknownLabelError("predicted label '" + predicted[i] + "' not in vocabulary");
        ++cm.counts[t->second][p->second];
    }
    return cm;
}

void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out) {
    out << "label";
    for (const auto& l : cm.labels) out << "," << l;
    out << "\n";
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
        out << cm.labels[i];
        for (std::size_t j = 0; j < cm.labels.size(); ++j) out << "," << cm.counts[i][j];
        out << "\n";
    }
}

void write_confusion_normalized_csv(const ConfusionMatrix& cm, std::ostream& out) {
    out << "label";
    for (const auto& l : cm.labels) out << "," << l;
    out << "\n";
    out << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
        std::uint64_t row_sum = 0;
        for (auto c : cm.counts[i]) row_sum += c;
        out << cm.labels[i];
        for (std::size_t j = 0; j < cm.labels.size(); ++j) {
            double v = row_sum == 0 ? 0.0
                                    : static_cast<double>(cm.counts[i][j]) /
                                          static_cast<double>(row_sum);
            out << "," << v;
        }
        out << "\n";
    }
}

std::pair<double, double> tpr_at_fpr(std::span<const double> scores, std::span<const int> labels,
                                     double fpr_target) {
    if (scores.size() != labels.size())
        throw LengthMismatchError("scores/labels length mismatch");
    if (!(fpr_target > 0.0 && fpr_target < 1.0))
        throw ConfigError("fpr_target must be in (0,1)");
    std::size_t n_pos = 0;
    for (int y : labels)
        if (y == 1) ++n_pos;
    std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw OneClassOnlyError("tpr_at_fpr requires both classes present");

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double best_tpr = 0.0;
    double best_threshold = std::numeric_limits<double>::infinity();
    bool feasible = false;
    std::size_t cum_pos = 0, cum_neg = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            if (labels[order[i]] == 1)
                ++cum_pos;
            else
                ++cum_neg;
            ++i;
        }
        double fpr = static_cast<double>(cum_neg) / static_cast<double>(n_neg);
        if (fpr <= fpr_target) {
            double tpr = static_cast<double>(cum_pos) / static_cast<double>(n_pos);
            // Descending sweep: strict improvement keeps the largest
            // threshold among those attaining the best TPR.
            if (!feasible || tpr > best_tpr) {
                best_tpr = tpr;
                best_threshold = threshold;
                feasible = true;
            }
        }
    }
    return {best_tpr, best_threshold};
}

void write_stage_report_csv(std::span<const std::pair<std::string, StageReport>> stages,
                            std::ostream& out) {
    out << "metric";
    for (const auto& [name, report] : stages) out << "," << name;
    out << "\n";

    auto row = [&](const char* metric, auto value_of) {
        out << metric;
        for (const auto& [name, report] : stages) {
            out << ",";
            if (report.skipped)
                out << "skipped";
            else
                out << value_of(report);
        }
        out << "\n";
    };
    out << std::setprecision(6);
    row("samples", [](const StageReport& r) { return r.samples; });
    row("accuracy", [](const StageReport& r) { return r.accuracy; });
    row("auc", [](const StageReport& r) { return r.auc; });
    row("false_positives", [](const StageReport& r) { return r.false_positives; });
    row("false_negatives", [](const StageReport& r) { return r.false_negatives; });
}

}  // namespace petaxon
