#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "petaxon/binio.hpp"
#include "petaxon/matrix.hpp"
#include "petaxon/vectorizer.hpp"

namespace petaxon {

enum class Objective : std::uint8_t { binary = 0, multiclass = 1 };

struct TrainParams {
    std::size_t iterations = 100;
    double learning_rate = 0.1;
    std::size_t max_leaves = 31;
    std::size_t min_samples_leaf = 20;
    double l2 = 1.0;
    std::size_t max_bins = 255;
    std::size_t early_stopping_rounds = 0;  // 0 = disabled
};

// Training matrix quantized to per-feature bin indices. bin_edges[f] holds
// the internal cut points (strictly increasing); a value's bin is the number
// of edges <= value, so a constant feature has zero edges and one bin.
struct BinnedMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<double>> bin_edges;
    std::vector<std::uint8_t> data;  // row-major

    std::uint8_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const std::uint8_t* row(std::size_t r) const { return data.data() + r * cols; }
    std::size_t bin_count(std::size_t c) const { return bin_edges[c].size() + 1; }
};

struct TreeNode {
    bool is_leaf = true;
    std::uint32_t feature = 0;
    std::uint16_t threshold_bin = 0;  // go left when bin <= threshold_bin
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;  // leaf output (unscaled by learning rate)
    double gain = 0.0;   // split gain at internal nodes
};

struct Tree {
    std::vector<TreeNode> nodes;

    double output(const std::uint8_t* binned_row) const;
    std::size_t leaf_count() const;
};

struct FeatureImportance {
    std::uint64_t splits = 0;
    double gain = 0.0;
};

struct GbdtModel {
    Objective objective = Objective::binary;
    std::uint32_t num_classes = 2;
    TrainParams params;
    std::uint32_t layout_version = 1;
    std::size_t n_features = 0;
    std::vector<std::vector<double>> bin_edges;
    std::vector<double> base_scores;  // 1 entry for binary, K for multiclass
    std::vector<Tree> trees;          // iteration-major; K trees per iteration for multiclass
    std::vector<FeatureImportance> importance;
    std::size_t best_iteration = 0;  // iterations kept after early stopping

    std::size_t trees_per_iteration() const {
        return objective == Objective::binary ? 1 : num_classes;
    }
};

struct GradHess {
    std::vector<double> g;
    std::vector<double> h;
};

struct HistBin {
    double g = 0.0;
    double h = 0.0;
    std::uint64_t count = 0;
};

struct SplitCandidate {
    std::uint16_t threshold_bin = 0;
    double gain = 0.0;
};

// Quantile binning; deterministic, order-preserving within each feature.
BinnedMatrix quantize(const FloatMatrix& matrix, std::size_t max_bins);

// Bin index of a value under one feature's edges (number of edges <= x).
std::uint16_t bin_index(double x, std::span<const double> edges);

// Binary: scores has one entry per sample; multiclass: row-major n x K.
// g = p - onehot(y), h = p(1-p) per class.
GradHess grad_hess(Objective objective, std::size_t num_classes, std::span<const double> scores,
                   std::span<const int> labels);

// Best threshold for one node/feature histogram by the regularized gain
// G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2); ties keep the lowest
// threshold; nullopt when no strictly positive gain exists.
std::optional<SplitCandidate> best_split(std::span<const HistBin> feature_hist, double l2,
                                         std::size_t min_samples_leaf);

// Leaf-wise growth to max_leaves; leaf value = -sum(g)/(sum(h)+l2).
Tree train_tree(const BinnedMatrix& data, std::span<const double> g, std::span<const double> h,
                const TrainParams& params);

// Full boosting loop with optional early stopping on validation log-loss.
// Throws DegenerateLabelsError when fewer than two classes are present.
GbdtModel train(const FloatMatrix& X, std::span<const int> labels, Objective objective,
                std::size_t num_classes, const TrainParams& params,
                const FloatMatrix* X_val = nullptr, std::span<const int> val_labels = {});

// Per-class probabilities, one row per sample; binary yields (1-p, p).
std::vector<std::vector<double>> predict(const GbdtModel& model, const FloatMatrix& X);
std::vector<double> predict_row(const GbdtModel& model, std::span<const float> row);

struct ImportanceRow {
    std::string name;
    double gain = 0.0;
    std::uint64_t splits = 0;
};

// Per-feature importance ranked by gain, names from the layout manifest.
std::vector<ImportanceRow> feature_importance(const GbdtModel& model, const FeatureLayout& layout);

// Gain summed within each layout block, ranked descending.
std::vector<std::pair<std::string, double>> block_importance(const GbdtModel& model,
                                                             const FeatureLayout& layout);

void save_gbdt(const GbdtModel& model, BinWriter& out);
GbdtModel load_gbdt(BinReader& in);
void save_gbdt_file(const GbdtModel& model, const std::string& path);
GbdtModel load_gbdt_file(const std::string& path);

}  // namespace petaxon
