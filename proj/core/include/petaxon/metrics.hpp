#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace petaxon {

struct ConfusionMatrix {
    std::vector<std::string> labels;                 // row = true, col = predicted
    std::vector<std::vector<std::uint64_t>> counts;  // K x K
};

struct StageReport {
    bool skipped = true;
    std::string skip_reason;
    std::size_t samples = 0;
    double accuracy = 0.0;
    double auc = 0.0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

// Fraction of exact label matches. Throws LengthMismatchError.
double accuracy(std::span<const std::string> predicted, std::span<const std::string> truth);

// Mann-Whitney AUC via rank sums, ties counted 1/2. Throws OneClassOnlyError.
double roc_auc_binary(std::span<const double> scores, std::span<const int> labels);

// Unweighted mean of one-vs-rest AUCs over classes present in the truth.
double macro_auc(const std::vector<std::vector<double>>& probabilities,
                 std::span<const int> labels);

// fp = truly benign assigned any non-benign label; fn = truly malicious
// assigned "benign".
std::pair<std::size_t, std::size_t> fp_fn(std::span<const std::string> predicted,
                                          std::span<const std::string> truth);

// counts[i][j] = |{true=vocabulary[i], predicted=vocabulary[j]}|.
// Throws UnknownLabelError for labels outside the vocabulary.
ConfusionMatrix confusion(std::span<const std::string> predicted,
                          std::span<const std::string> truth,
                          std::span<const std::string> vocabulary);

void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out);
// Row-normalized companion (rows sum to 1; all-zero rows stay zero).
void write_confusion_normalized_csv(const ConfusionMatrix& cm, std::ostream& out);

// Highest TPR attainable at a decision threshold (predict positive when
// score >= t, t drawn from the distinct score values) whose empirical FPR
// stays <= fpr_target; returns that TPR and the largest threshold attaining
// it. No feasible threshold yields (0, +infinity). Throws OneClassOnlyError.
std::pair<double, double> tpr_at_fpr(std::span<const double> scores, std::span<const int> labels,
                                     double fpr_target);

// CSV shaped like the summary table: metric rows x stage columns, "skipped"
// in every cell of a stage that did not run.
void write_stage_report_csv(std::span<const std::pair<std::string, StageReport>> stages,
                            std::ostream& out);

}  // namespace petaxon
