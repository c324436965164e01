#pragma once

// Brute-force reference implementations used to check the library against
// independently coded math. Everything here favors clarity over speed and
// deliberately avoids sharing accumulation strategies with the production
// code paths.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace oracles {

// Shannon entropy in bits over the byte-value distribution.
double entropy(std::span<const std::uint8_t> bytes);

std::array<std::uint64_t, 256> byte_histogram(std::span<const std::uint8_t> bytes);

// Sliding-window (entropy, byte >> 4) joint counts: full windows at stride
// multiples, then one partial tail over whatever the last full window did not
// cover (the whole buffer when it is shorter than one window).
std::array<std::uint64_t, 256> byte_entropy(std::span<const std::uint8_t> bytes,
                                            std::size_t window, std::size_t stride);

// FNV-1a 64-bit, written straight from the published constants.
std::uint64_t fnv1a64(std::string_view s);

// Pairwise Mann-Whitney AUC, ties counted one half. Assumes both classes
// are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Sweep every distinct score as a ">= threshold" rule; keep the highest TPR
// whose FPR stays within target, then the largest threshold attaining it.
// (0, +inf) when no threshold is feasible.
std::pair<double, double> tpr_at_fpr(std::span<const double> scores, std::span<const int> labels,
                                     double fpr_target);

struct SplitRef {
    bool found = false;
    std::size_t threshold_bin = 0;
    double gain = 0.0;
};

struct BinRef {
    double g = 0.0;
    double h = 0.0;
    std::uint64_t count = 0;
};

// Exhaustive threshold scan with left sums recomputed from scratch per
// candidate, by the regularized-gain formula; ties keep the lowest threshold.
SplitRef best_split(std::span<const BinRef> hist, double l2, std::size_t min_samples_leaf);

// Finite-difference derivatives of the training losses, computed in long
// double with fourth-order five-point stencils so the truncation error sits
// far below the comparison tolerance.
double fd_grad_binary(double score, int label, double eps);
double fd_hess_binary(double score, int label, double eps);
double fd_grad_multiclass(std::span<const double> scores, int label, std::size_t cls, double eps);
double fd_hess_multiclass(std::span<const double> scores, int label, std::size_t cls, double eps);

// Mean silhouette coefficient over Euclidean distances; rows of `points` are
// observations with `dims` coordinates each. Singleton clusters score zero.
double silhouette(std::span<const double> points, std::size_t dims, std::span<const int> labels);

}  // namespace oracles
