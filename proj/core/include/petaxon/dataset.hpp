#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "petaxon/pe_parser.hpp"
#include "petaxon/vectorizer.hpp"

namespace petaxon {

struct SampleLabels {
    int malware = 0;
    // Empty string = label absent. Benign samples never carry taxonomy.
    std::string threat_type;
    std::string family;
    std::string behavior;
};

struct LabeledSample {
    RawFeatureRecord record;
    std::optional<FeatureVector> vector;  // computed lazily by consumers
    SampleLabels labels;
};

struct LabelSidecar {
    struct Entry {
        std::string threat_type;
        std::string family;
        std::string behavior;
    };
    std::map<std::string, Entry> entries;  // keyed by sha256
};

struct SplitSpec {
    double validation_fraction = 0.5;
    std::uint64_t seed = 0;
};

struct JsonlReadResult {
    std::vector<RawFeatureRecord> records;
    std::size_t skipped = 0;  // lines that failed to parse
};

struct TaxonomyJoinResult {
    std::vector<LabeledSample> samples;
    std::size_t dropped_unlabeled = 0;   // label = -1 records
    std::size_t missing_sidecar = 0;     // malicious records with no sidecar entry
};

// One record per JSONL line; nullopt when the line does not parse.
std::optional<RawFeatureRecord> record_from_json_line(const std::string& line);
std::string record_to_json_line(const RawFeatureRecord& record);

JsonlReadResult read_jsonl(const std::string& path);
JsonlReadResult read_jsonl_stream(std::istream& in);
void write_jsonl(std::span<const RawFeatureRecord> records, std::ostream& out);

// TSV rows: sha256<TAB>threat_type<TAB>family<TAB>behavior (empty = absent).
LabelSidecar read_label_sidecar(const std::string& path);
LabelSidecar read_label_sidecar_stream(std::istream& in);

// Join on sha256. Unlabeled (-1) records are dropped and counted; benign
// records never receive taxonomy; sidecar fields override record-borne ones.
TaxonomyJoinResult attach_taxonomy(std::vector<RawFeatureRecord> records,
                                   const LabelSidecar& sidecar);

// Top-k families by frequency (ties lexicographic); everything else becomes
// "other". Returns the frozen vocabulary (top-k entries then "other") and the
// relabeled samples. Throws NoFamiliesError when no malicious sample has a
// family label.
std::pair<std::vector<std::string>, std::vector<LabeledSample>> group_families(
    std::vector<LabeledSample> samples, std::size_t k);

// Deterministic hash split on (sha256, seed); stable under reordering.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split(
    std::vector<LabeledSample> samples, const SplitSpec& spec);

// True when (sha256, seed) hashes into the validation share.
bool in_validation_split(std::string_view sha256, const SplitSpec& spec);

// field is one of "threat_type", "family", "behavior"; returns (label, count)
// descending by count, ties lexicographic.
std::vector<std::pair<std::string, std::size_t>> class_frequencies(
    std::span<const LabeledSample> samples, std::string_view field);

void write_frequencies_csv(std::span<const std::pair<std::string, std::size_t>> rows,
                           std::ostream& out);

}  // namespace petaxon
