#include "petaxon/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "petaxon/errors.hpp"

namespace petaxon {

namespace {

void validate_params(const TrainParams& p) {
    if (p.iterations == 0) throw ConfigError("iterations must be positive");
    if (!(p.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (p.max_leaves == 0) throw ConfigError("max_leaves must be positive");
    if (p.min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be positive");
    if (!(p.l2 > 0.0)) throw ConfigError("l2 must be positive");
    if (p.max_bins < 2 || p.max_bins > 255)
        throw ConfigError("max_bins must be between 2 and 255");
}

double clamp_prob(double p) { return std::min(1.0 - 1e-12, std::max(1e-12, p)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax_row(std::span<const double> scores, std::span<double> out) {
    double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        out[k] = std::exp(scores[k] - mx);
        sum += out[k];
    }
    for (std::size_t k = 0; k < scores.size(); ++k) out[k] /= sum;
}

// Per-feature start offsets into a flat histogram covering all features.
std::vector<std::uint32_t> histogram_offsets(const BinnedMatrix& data) {
    std::vector<std::uint32_t> offsets(data.cols + 1, 0);
    for (std::size_t c = 0; c < data.cols; ++c)
        offsets[c + 1] = offsets[c] + static_cast<std::uint32_t>(data.bin_count(c));
    return offsets;
}

struct PendingLeaf {
    std::uint32_t node_id = 0;
    std::vector<std::uint32_t> samples;
    std::vector<HistBin> hist;
    double g_sum = 0.0;
    double h_sum = 0.0;
    bool has_split = false;
    std::uint32_t feature = 0;
    std::uint16_t threshold = 0;
    double gain = 0.0;
};

void build_histogram(std::vector<HistBin>& hist, const BinnedMatrix& data,
                     std::span<const std::uint32_t> offsets, std::span<const std::uint32_t> samples,
                     std::span<const double> g, std::span<const double> h) {
    for (std::uint32_t idx : samples) {
        const std::uint8_t* row = data.row(idx);
        double gi = g[idx], hi = h[idx];
        for (std::size_t f = 0; f < data.cols; ++f) {
            HistBin& b = hist[offsets[f] + row[f]];
            b.g += gi;
            b.h += hi;
            ++b.count;
        }
    }
}

void evaluate_leaf(PendingLeaf& leaf, const BinnedMatrix& data,
                   std::span<const std::uint32_t> offsets, const TrainParams& params) {
    leaf.has_split = false;
    leaf.gain = 0.0;
    for (std::size_t f = 0; f < data.cols; ++f) {
        std::size_t nb = data.bin_count(f);
        if (nb < 2) continue;
        auto cand = best_split(std::span(leaf.hist).subspan(offsets[f], nb), params.l2,
                               params.min_samples_leaf);
        if (cand && cand->gain > leaf.gain) {
            leaf.has_split = true;
            leaf.feature = static_cast<std::uint32_t>(f);
            leaf.threshold = cand->threshold_bin;
            leaf.gain = cand->gain;
        }
    }
}

double logloss(Objective objective, std::size_t num_classes, std::span<const double> scores,
               std::span<const int> labels) {
    double total = 0.0;
    std::size_t n = labels.size();
    if (objective == Objective::binary) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = clamp_prob(sigmoid(scores[i]));
            total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
        }
    } else {
        std::vector<double> probs(num_classes);
        for (std::size_t i = 0; i < n; ++i) {
            softmax_row(scores.subspan(i * num_classes, num_classes), probs);
            total -= std::log(clamp_prob(probs[labels[i]]));
        }
    }
    return total / static_cast<double>(n);
}

// Bin an external matrix with a trained model's edges.
BinnedMatrix bin_with_edges(const FloatMatrix& X, const std::vector<std::vector<double>>& edges) {
    BinnedMatrix out;
    out.rows = X.rows;
    out.cols = X.cols;
    out.bin_edges = edges;
    out.data.resize(X.rows * X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::span<const float> row = X.row(r);
        for (std::size_t c = 0; c < X.cols; ++c)
            out.data[r * X.cols + c] = static_cast<std::uint8_t>(bin_index(row[c], edges[c]));
    }
    return out;
}

void write_params(BinWriter& out, const TrainParams& p) {
    out.u64(p.iterations);
    out.f64(p.learning_rate);
    out.u64(p.max_leaves);
    out.u64(p.min_samples_leaf);
    out.f64(p.l2);
    out.u64(p.max_bins);
    out.u64(p.early_stopping_rounds);
}

TrainParams read_params(BinReader& in) {
    TrainParams p;
    p.iterations = in.u64();
    p.learning_rate = in.f64();
    p.max_leaves = in.u64();
    p.min_samples_leaf = in.u64();
    p.l2 = in.f64();
    p.max_bins = in.u64();
    p.early_stopping_rounds = in.u64();
    return p;
}

}  // namespace

double Tree::output(const std::uint8_t* binned_row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf)
        i = binned_row[nodes[i].feature] <= nodes[i].threshold_bin ? nodes[i].left
                                                                   : nodes[i].right;
    return nodes[i].value;
}

std::size_t Tree::leaf_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes)
        if (node.is_leaf) ++n;
    return n;
}

std::uint16_t bin_index(double x, std::span<const double> edges) {
    return static_cast<std::uint16_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                                      edges.begin());
}

BinnedMatrix quantize(const FloatMatrix& matrix, std::size_t max_bins) {
    if (matrix.rows == 0) throw ConfigError("quantize requires a nonempty matrix");
    if (max_bins < 2 || max_bins > 255) throw ConfigError("max_bins must be between 2 and 255");

    BinnedMatrix out;
    out.rows = matrix.rows;
    out.cols = matrix.cols;
    out.bin_edges.resize(matrix.cols);
    out.data.resize(matrix.rows * matrix.cols);

    std::vector<double> column(matrix.rows);
    for (std::size_t c = 0; c < matrix.cols; ++c) {
        for (std::size_t r = 0; r < matrix.rows; ++r) column[r] = matrix.at(r, c);
        std::sort(column.begin(), column.end());

        std::vector<double> distinct;
        std::vector<std::uint64_t> cumulative;
        for (double v : column) {
            if (distinct.empty() || v != distinct.back()) {
                distinct.push_back(v);
                cumulative.push_back(cumulative.empty() ? 1 : cumulative.back() + 1);
            } else {
                ++cumulative.back();
            }
        }

        auto& edges = out.bin_edges[c];
        std::size_t m = distinct.size();
        if (m <= max_bins) {
            for (std::size_t i = 0; i + 1 < m; ++i)
                edges.push_back((distinct[i] + distinct[i + 1]) / 2.0);
        } else {
            // Count-weighted quantile cuts: edge positions depend only on
            // the rank structure, keeping binning monotone-invariant.
            double n = static_cast<double>(matrix.rows);
            std::size_t pos = 0;
            std::size_t prev = std::numeric_limits<std::size_t>::max();
            for (std::size_t b = 1; b < max_bins; ++b) {
                double target = static_cast<double>(b) * n / static_cast<double>(max_bins);
                while (pos + 1 < m && static_cast<double>(cumulative[pos]) < target) ++pos;
                if (pos + 1 >= m) break;
                if (prev == std::numeric_limits<std::size_t>::max() || pos > prev) {
                    edges.push_back((distinct[pos] + distinct[pos + 1]) / 2.0);
                    prev = pos;
                }
            }
        }

        for (std::size_t r = 0; r < matrix.rows; ++r)
            out.data[r * matrix.cols + c] =
                static_cast<std::uint8_t>(bin_index(matrix.at(r, c), edges));
    }
    return out;
}

GradHess grad_hess(Objective objective, std::size_t num_classes, std::span<const double> scores,
                   std::span<const int> labels) {
    GradHess gh;
    std::size_t n = labels.size();
    if (objective == Objective::binary) {
        if (scores.size() != n) throw LengthMismatchError("scores/labels length mismatch");
        gh.g.resize(n);
        gh.h.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double p = sigmoid(scores[i]);
            gh.g[i] = p - static_cast<double>(labels[i]);
            gh.h[i] = p * (1.0 - p);
        }
    } else {
        if (scores.size() != n * num_classes)
            throw LengthMismatchError("scores/labels length mismatch");
        gh.g.resize(n * num_classes);
        gh.h.resize(n * num_classes);
        std::vector<double> probs(num_classes);
        for (std::size_t i = 0; i < n; ++i) {
            softmax_row(scores.subspan(i * num_classes, num_classes), probs);
            for (std::size_t k = 0; k < num_classes; ++k) {
                double p = probs[k];
                gh.g[i * num_classes + k] =
                    p - (static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0);
                gh.h[i * num_classes + k] = p * (1.0 - p);
            }
        }
    }
    return gh;
}

std::optional<SplitCandidate> best_split(std::span<const HistBin> feature_hist, double l2,
                                         std::size_t min_samples_leaf) {
    double g_total = 0.0, h_total = 0.0;
    std::uint64_t count_total = 0;
    for (const auto& b : feature_hist) {
        g_total += b.g;
        h_total += b.h;
        count_total += b.count;
    }
    if (count_total < 2 * min_samples_leaf) return std::nullopt;

    double parent_term = g_total * g_total / (h_total + l2);
    double g_left = 0.0, h_left = 0.0;
    std::uint64_t count_left = 0;

    std::optional<SplitCandidate> best;
    for (std::size_t t = 0; t + 1 < feature_hist.size(); ++t) {
        g_left += feature_hist[t].g;
        h_left += feature_hist[t].h;
        count_left += feature_hist[t].count;
        std::uint64_t count_right = count_total - count_left;
        if (count_left < min_samples_leaf) continue;
        if (count_right < min_samples_leaf) break;

        double g_right = g_total - g_left;
        double h_right = h_total - h_left;
        double gain = g_left * g_left / (h_left + l2) + g_right * g_right / (h_right + l2) -
                      parent_term;
        if (gain > 0.0 && (!best || gain > best->gain))
            best = SplitCandidate{static_cast<std::uint16_t>(t), gain};
    }
    return best;
}

Tree train_tree(const BinnedMatrix& data, std::span<const double> g, std::span<const double> h,
                const TrainParams& params) {
    auto offsets = histogram_offsets(data);
    std::size_t total_bins = offsets[data.cols];

    Tree tree;
    PendingLeaf root;
    root.node_id = 0;
    root.samples.resize(data.rows);
    std::iota(root.samples.begin(), root.samples.end(), 0);
    root.hist.assign(total_bins, HistBin{});
    build_histogram(root.hist, data, offsets, root.samples, g, h);
    for (std::uint32_t idx : root.samples) {
        root.g_sum += g[idx];
        root.h_sum += h[idx];
    }

    TreeNode root_node;
    root_node.value = -root.g_sum / (root.h_sum + params.l2);
    tree.nodes.push_back(root_node);
    evaluate_leaf(root, data, offsets, params);

    std::vector<PendingLeaf> pending;
    pending.push_back(std::move(root));
    std::size_t leaves = 1;

    while (leaves < params.max_leaves) {
        std::size_t best_idx = pending.size();
        for (std::size_t i = 0; i < pending.size(); ++i) {
            if (!pending[i].has_split) continue;
            if (best_idx == pending.size() || pending[i].gain > pending[best_idx].gain ||
                (pending[i].gain == pending[best_idx].gain &&
                 pending[i].node_id < pending[best_idx].node_id))
                best_idx = i;
        }
        if (best_idx == pending.size()) break;

        PendingLeaf parent = std::move(pending[best_idx]);
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best_idx));

        PendingLeaf left, right;
        for (std::uint32_t idx : parent.samples) {
            if (data.at(idx, parent.feature) <= parent.threshold)
                left.samples.push_back(idx);
            else
                right.samples.push_back(idx);
        }
        for (std::uint32_t idx : left.samples) {
            left.g_sum += g[idx];
            left.h_sum += h[idx];
        }
        right.g_sum = parent.g_sum - left.g_sum;
        right.h_sum = parent.h_sum - left.h_sum;

        left.node_id = static_cast<std::uint32_t>(tree.nodes.size());
        right.node_id = left.node_id + 1;

        TreeNode& up = tree.nodes[parent.node_id];
        up.is_leaf = false;
        up.feature = parent.feature;
        up.threshold_bin = parent.threshold;
        up.gain = parent.gain;
        up.value = 0.0;
        up.left = left.node_id;
        up.right = right.node_id;

        TreeNode left_node, right_node;
        left_node.value = -left.g_sum / (left.h_sum + params.l2);
        right_node.value = -right.g_sum / (right.h_sum + params.l2);
        tree.nodes.push_back(left_node);
        tree.nodes.push_back(right_node);

        // Build the smaller child's histogram; derive the sibling's by
        // subtraction from the parent's.
        PendingLeaf* small = left.samples.size() <= right.samples.size() ? &left : &right;
        PendingLeaf* large = small == &left ? &right : &left;
        small->hist.assign(total_bins, HistBin{});
        build_histogram(small->hist, data, offsets, small->samples, g, h);
        large->hist = std::move(parent.hist);
        for (std::size_t b = 0; b < total_bins; ++b) {
            large->hist[b].g -= small->hist[b].g;
            large->hist[b].h -= small->hist[b].h;
            large->hist[b].count -= small->hist[b].count;
        }

        evaluate_leaf(left, data, offsets, params);
        evaluate_leaf(right, data, offsets, params);
        pending.push_back(std::move(left));
        pending.push_back(std::move(right));
        ++leaves;
    }
    return tree;
}

GbdtModel train(const FloatMatrix& X, std::span<const int> labels, Objective objective,
                std::size_t num_classes, const TrainParams& params, const FloatMatrix* X_val,
                std::span<const int> val_labels) {
    validate_params(params);
    if (X.rows == 0) throw DegenerateLabelsError("no training samples");
    if (labels.size() != X.rows) throw LengthMismatchError("labels/rows length mismatch");
    if (objective == Objective::binary) num_classes = 2;
    if (num_classes < 2) throw ConfigError("multiclass requires at least 2 classes");

    std::vector<std::uint64_t> class_counts(num_classes, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
            throw UnknownLabelError("label " + std::to_string(y) + " out of range");
        ++class_counts[static_cast<std::size_t>(y)];
    }
    std::size_t present = 0;
    for (auto c : class_counts)
        if (c > 0) ++present;
    if (present < 2) throw DegenerateLabelsError("training labels contain a single class");

    BinnedMatrix binned = quantize(X, params.max_bins);

    GbdtModel model;
    model.objective = objective;
    model.num_classes = static_cast<std::uint32_t>(num_classes);
    model.params = params;
    model.n_features = X.cols;
    model.bin_edges = binned.bin_edges;

    double n = static_cast<double>(X.rows);
    std::size_t score_cols = objective == Objective::binary ? 1 : num_classes;
    if (objective == Objective::binary) {
        double p = std::min(1.0 - 1e-6, std::max(1e-6, static_cast<double>(class_counts[1]) / n));
        model.base_scores = {std::log(p / (1.0 - p))};
    } else {
        for (std::size_t k = 0; k < num_classes; ++k) {
            double p = std::max(1e-6, static_cast<double>(class_counts[k]) / n);
            model.base_scores.push_back(std::log(p));
        }
    }

    std::vector<double> scores(X.rows * score_cols);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t k = 0; k < score_cols; ++k)
            scores[i * score_cols + k] = model.base_scores[k];

    bool early_stopping = params.early_stopping_rounds > 0 && X_val != nullptr && X_val->rows > 0;
    BinnedMatrix binned_val;
    std::vector<double> val_scores;
    if (early_stopping) {
        if (X_val->cols != X.cols)
            throw LayoutMismatchError("validation matrix width differs from training");
        if (val_labels.size() != X_val->rows)
            throw LengthMismatchError("validation labels/rows length mismatch");
        for (int y : val_labels)
            if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
                throw UnknownLabelError("validation label out of range");
        binned_val = bin_with_edges(*X_val, model.bin_edges);
        val_scores.resize(X_val->rows * score_cols);
        for (std::size_t i = 0; i < X_val->rows; ++i)
            for (std::size_t k = 0; k < score_cols; ++k)
                val_scores[i * score_cols + k] = model.base_scores[k];
    }

    std::vector<int> label_vec(labels.begin(), labels.end());
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best_iter = 0;
    std::size_t iterations_run = 0;

    std::vector<double> gk(X.rows), hk(X.rows);
    for (std::size_t iter = 0; iter < params.iterations; ++iter) {
        GradHess gh = grad_hess(objective, num_classes, scores, label_vec);
        for (std::size_t k = 0; k < score_cols; ++k) {
            for (std::size_t i = 0; i < X.rows; ++i) {
                gk[i] = gh.g[i * score_cols + k];
                hk[i] = gh.h[i * score_cols + k];
            }
            Tree tree = train_tree(binned, gk, hk, params);
            for (std::size_t i = 0; i < X.rows; ++i)
                scores[i * score_cols + k] += params.learning_rate * tree.output(binned.row(i));
            if (early_stopping)
                for (std::size_t i = 0; i < binned_val.rows; ++i)
                    val_scores[i * score_cols + k] +=
                        params.learning_rate * tree.output(binned_val.row(i));
            model.trees.push_back(std::move(tree));
        }
        iterations_run = iter + 1;
        if (early_stopping) {
            double loss =
                logloss(objective, num_classes, val_scores,
                        std::span<const int>(val_labels.data(), val_labels.size()));
            if (loss < best_loss) {
                best_loss = loss;
                best_iter = iter;
            } else if (iter - best_iter >= params.early_stopping_rounds) {
                break;
            }
        }
    }

    model.best_iteration = early_stopping ? best_iter + 1 : iterations_run;
    model.trees.resize(model.best_iteration * score_cols);

    model.importance.assign(X.cols, FeatureImportance{});
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (!node.is_leaf) {
                ++model.importance[node.feature].splits;
                model.importance[node.feature].gain += node.gain;
            }
    return model;
}

std::vector<double> predict_row(const GbdtModel& model, std::span<const float> row) {
    if (row.size() != model.n_features)
        throw LayoutMismatchError("vector length " + std::to_string(row.size()) +
                                  " does not match model features " +
                                  std::to_string(model.n_features));
    std::vector<std::uint8_t> bins(model.n_features);
    for (std::size_t c = 0; c < model.n_features; ++c)
        bins[c] = static_cast<std::uint8_t>(bin_index(row[c], model.bin_edges[c]));

    std::size_t score_cols = model.objective == Objective::binary ? 1 : model.num_classes;
    std::vector<double> score(model.base_scores);
    for (std::size_t t = 0; t < model.trees.size(); ++t)
        score[t % score_cols] += model.params.learning_rate * model.trees[t].output(bins.data());

    if (model.objective == Objective::binary) {
        double p = sigmoid(score[0]);
        return {1.0 - p, p};
    }
    std::vector<double> probs(model.num_classes);
    softmax_row(score, probs);
    return probs;
}

std::vector<std::vector<double>> predict(const GbdtModel& model, const FloatMatrix& X) {
    if (X.cols != model.n_features)
        throw LayoutMismatchError("matrix width does not match model features");
    std::vector<std::vector<double>> out;
    out.reserve(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) out.push_back(predict_row(model, X.row(r)));
    return out;
}

std::vector<ImportanceRow> feature_importance(const GbdtModel& model,
                                              const FeatureLayout& layout) {
    if (layout.total_length != model.n_features)
        throw LayoutMismatchError("layout length does not match model features");
    auto manifest = layout_manifest(layout);
    std::vector<ImportanceRow> rows;
    rows.reserve(model.n_features);
    for (std::size_t i = 0; i < model.n_features; ++i)
        rows.push_back({manifest[i].second, model.importance[i].gain, model.importance[i].splits});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ImportanceRow& a, const ImportanceRow& b) { return a.gain > b.gain; });
    return rows;
}

std::vector<std::pair<std::string, double>> block_importance(const GbdtModel& model,
                                                             const FeatureLayout& layout) {
    if (layout.total_length != model.n_features)
        throw LayoutMismatchError("layout length does not match model features");
    std::vector<std::pair<std::string, double>> blocks;
    std::size_t offset = 0;
    for (const auto& block : layout.blocks) {
        double gain = 0.0;
        for (std::size_t i = 0; i < block.length; ++i) gain += model.importance[offset + i].gain;
        blocks.emplace_back(block.name, gain);
        offset += block.length;
    }
    std::stable_sort(blocks.begin(), blocks.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return blocks;
}

void save_gbdt(const GbdtModel& model, BinWriter& out) {
    out.magic("GBDT");
    out.u32(1);  // format version
    out.u32(model.layout_version);
    out.u8(static_cast<std::uint8_t>(model.objective));
    out.u32(model.num_classes);
    write_params(out, model.params);
    out.u64(model.n_features);
    for (const auto& edges : model.bin_edges) {
        out.u32(static_cast<std::uint32_t>(edges.size()));
        for (double e : edges) out.f64(e);
    }
    out.u32(static_cast<std::uint32_t>(model.base_scores.size()));
    for (double b : model.base_scores) out.f64(b);
    out.u64(model.best_iteration);
    out.u32(static_cast<std::uint32_t>(model.trees.size()));
    for (const auto& tree : model.trees) {
        out.u32(static_cast<std::uint32_t>(tree.nodes.size()));
        for (const auto& n : tree.nodes) {
            out.u8(n.is_leaf ? 1 : 0);
            out.u32(n.feature);
            out.u16(n.threshold_bin);
            out.u32(n.left);
            out.u32(n.right);
            out.f64(n.value);
            out.f64(n.gain);
        }
    }
    out.u64(model.importance.size());
    for (const auto& imp : model.importance) {
        out.u64(imp.splits);
        out.f64(imp.gain);
    }
}

GbdtModel load_gbdt(BinReader& in) {
    in.expect_magic("GBDT");
    std::uint32_t format = in.u32();
    if (format != 1)
        throw VersionMismatchError("unsupported model format version " + std::to_string(format));

    GbdtModel model;
    model.layout_version = in.u32();
    model.objective = static_cast<Objective>(in.u8());
    model.num_classes = in.u32();
    model.params = read_params(in);
    model.n_features = in.u64();
    model.bin_edges.resize(model.n_features);
    for (auto& edges : model.bin_edges) {
        std::uint32_t ne = in.u32();
        edges.resize(ne);
        for (auto& e : edges) e = in.f64();
    }
    std::uint32_t nb = in.u32();
    model.base_scores.resize(nb);
    for (auto& b : model.base_scores) b = in.f64();
    model.best_iteration = in.u64();
    std::uint32_t nt = in.u32();
    model.trees.resize(nt);
    for (auto& tree : model.trees) {
        std::uint32_t nn = in.u32();
        tree.nodes.resize(nn);
        for (auto& n : tree.nodes) {
            n.is_leaf = in.u8() != 0;
            n.feature = in.u32();
            n.threshold_bin = in.u16();
            n.left = in.u32();
            n.right = in.u32();
            n.value = in.f64();
            n.gain = in.f64();
        }
    }
    std::uint64_t ni = in.u64();
    model.importance.resize(ni);
    for (auto& imp : model.importance) {
        imp.splits = in.u64();
        imp.gain = in.f64();
    }
    return model;
}

void save_gbdt_file(const GbdtModel& model, const std::string& path) {
    BinWriter out;
    save_gbdt(model, out);
    write_file_bytes(path, out.bytes());
}

GbdtModel load_gbdt_file(const std::string& path) {
    auto bytes = read_file_bytes(path);
    BinReader in(bytes);
    return load_gbdt(in);
}

}  // namespace petaxon
