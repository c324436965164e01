#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "petaxon/pe_parser.hpp"

namespace petaxon {

// Import vocabulary slots in the feature vector (fixed across layout v1).
constexpr std::size_t kImportVocabSize = 151;

// One contiguous slice of the feature vector. index_names, when non-empty,
// carries one human-readable label per slot; otherwise labels are generated
// as "<name>[i]" (or the bare name for single-slot blocks).
struct LayoutBlock {
    std::string name;
    std::size_t length = 0;
    std::vector<std::string> index_names;
};

struct FeatureLayout {
    std::uint32_t version = 1;
    std::vector<LayoutBlock> blocks;
    std::size_t total_length = 0;
    std::map<std::string, std::size_t> hash_bins;
    std::vector<std::string> import_vocabulary;

    // The canonical layout for the given vocabulary (must have exactly
    // kImportVocabSize entries). Throws ConfigError otherwise.
    static FeatureLayout standard(std::vector<std::string> import_vocabulary);

    // Offset of the named block's first slot; throws LayoutMismatchError if absent.
    std::size_t block_offset(std::string_view block_name) const;
};

struct FeatureVector {
    std::vector<float> values;
    std::uint32_t layout_version = 0;
};

// Normalized 256-bin byte frequency distribution (all zeros for empty input).
std::vector<double> byte_histogram(std::span<const std::uint8_t> bytes);
std::array<std::uint64_t, 256> byte_histogram_counts(std::span<const std::uint8_t> bytes);

// Joint (entropy, byte-value) distribution over sliding windows, flattened
// 16x16 row-major with entropy bins as rows. Full windows start at multiples
// of `stride` while start + window <= size; one partial tail window covers
// any remaining bytes after the last full window (the whole buffer when it
// is shorter than `window`). Each window contributes one count per byte in
// it at (entropy_bin, byte >> 4); the result is normalized to sum 1.
std::vector<double> byte_entropy_histogram(std::span<const std::uint8_t> bytes,
                                           std::size_t window = 2048, std::size_t stride = 1024);
std::array<std::uint64_t, 256> byte_entropy_counts(std::span<const std::uint8_t> bytes,
                                                   std::size_t window = 2048,
                                                   std::size_t stride = 1024);

// FNV-1a bucket assignment; stable across platforms and part of the model
// file contract.
std::size_t hash_bucket(std::string_view name, std::size_t bins);

// Sum of `value` contributions per hashed bucket.
std::vector<double> hashed_pairs(std::span<const std::pair<std::string, double>> pairs,
                                 std::size_t bins);

// Occurrence counts of each vocabulary entry ("library.function", lowercase)
// across the record's import table.
std::vector<double> import_vocab_features(
    const std::map<std::string, std::vector<std::string>>& imports,
    std::span<const std::string> vocabulary);

// Top-k "library.function" names ranked by document frequency (count desc,
// name asc), padded with "__pad.<i>" placeholders when fewer than k distinct
// names exist. Throws EmptyStreamError when records is empty.
std::vector<std::string> build_import_vocabulary(std::span<const RawFeatureRecord> records,
                                                 std::size_t k = kImportVocabSize);

// Deterministic record -> fixed-length float vector under the given layout.
FeatureVector vectorize(const RawFeatureRecord& record, const FeatureLayout& layout);

// (index, name) rows covering every slot, in order.
std::vector<std::pair<std::size_t, std::string>> layout_manifest(const FeatureLayout& layout);

// CSV manifest: header "index,name" then one row per slot.
void write_manifest_csv(const FeatureLayout& layout, std::ostream& out);

}  // namespace petaxon
