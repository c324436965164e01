#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "petaxon/matrix.hpp"
#include "petaxon/pipeline.hpp"

namespace petaxon {

// Principal-component embedding of a vectorized sample batch. Components are
// mutually orthonormal (within 1e-6) and explained variances non-increasing.
// When the data has fewer than k directions of nonzero variance the result
// carries only the directions that exist and rank_deficient is set.
struct EmbeddingResult {
    std::size_t rows = 0;
    std::size_t k = 0;                            // components actually produced
    std::vector<double> coordinates;              // rows x k, row-major projections
    std::vector<std::vector<double>> components;  // k orthonormal directions
    std::vector<double> explained_variance;       // descending
    bool rank_deficient = false;

    double coordinate(std::size_t row, std::size_t component) const {
        return coordinates[row * k + component];
    }
};

// Top-k principal directions of the mean-centered matrix by power iteration
// with Gram-Schmidt deflation (tolerance 1e-9, at most 1000 iterations per
// component, fixed RNG seed). Sign convention: each component's
// largest-magnitude entry is positive. Requires rows >= k.
EmbeddingResult embed(const FloatMatrix& X, std::size_t k = 3);

// One stage's block-level importance: manifest blocks ranked by summed split
// gain. total_gain covers the whole stage model, not just the kept rows, so
// shares remain meaningful after truncation.
struct StageImportanceTable {
    std::string stage;
    bool trained = false;
    std::vector<std::pair<std::string, double>> blocks;  // top blocks, gain descending
    double total_gain = 0.0;
};

// Per-stage top blocks by gain; untrained stages yield empty tables.
std::vector<StageImportanceTable> importance_tables(const PipelineModel& model,
                                                    std::size_t top_k = 5);

void write_importance_text(std::span<const StageImportanceTable> tables, std::ostream& out);
void write_importance_csv(std::span<const StageImportanceTable> tables, std::ostream& out);

// CSV `sha256,x,y,z,label`, one row per embedded sample; missing components
// (rank-deficient embeddings with k < 3) are written as 0.
void embedding_export(const EmbeddingResult& result, std::span<const std::string> sha256s,
                      std::span<const std::string> labels, const std::string& path);

}  // namespace petaxon
