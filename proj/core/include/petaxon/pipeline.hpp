#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "petaxon/config.hpp"
#include "petaxon/dataset.hpp"
#include "petaxon/gbdt.hpp"
#include "petaxon/metrics.hpp"
#include "petaxon/vectorizer.hpp"

namespace petaxon {

enum class StageId { detection, threat_type, family, behavior, quarantine };
const char* stage_name(StageId id);

struct StageModel {
    bool trained = false;
    std::string skip_reason;
    std::vector<std::string> vocabulary;  // class index -> label
    GbdtModel model;
};

struct PipelineModel {
    FeatureLayout layout;
    StageModel detection;
    StageModel threat_type;
    StageModel family;
    StageModel behavior;
    StageModel quarantine;

    StageModel& stage(StageId id);
    const StageModel& stage(StageId id) const;
};

struct StagePrediction {
    bool executed = false;
    std::string label;
    std::vector<double> probs;
};

struct FinalVerdict {
    int malware = 0;
    // Empty = absent (benign verdict or skipped stage); "unknown" = the
    // stage said benign but quarantine overrode the sample to malicious.
    std::string threat_type;
    std::string family;
    std::string behavior;
};

struct Verdict {
    std::string sha256;
    StagePrediction detection;
    StagePrediction threat_type;
    StagePrediction family;
    StagePrediction behavior;
    StagePrediction quarantine;
    bool quarantined = false;
    FinalVerdict final;
};

struct TrainResult {
    PipelineModel model;
    // Stage name -> validation metrics, in pipeline order.
    std::vector<std::pair<std::string, StageReport>> reports;
    std::size_t dropped_missing_label = 0;  // malicious samples dropped at taxonomic stages
};

// Staged split/train/validate/forward flow; throws InsufficientSamplesError
// when a stage's input is nonempty but below the configured floor and
// DegenerateLabelsError when detection sees a single class.
TrainResult train_pipeline(std::vector<LabeledSample> samples, const PipelineConfig& config);

// True when any executed taxonomic stage predicted "benign".
bool route_quarantine(const StagePrediction& threat_type, const StagePrediction& family,
                      const StagePrediction& behavior);

// Fills `quarantined` and `final` from the stage predictions already present
// in the verdict. quarantine.executed/label must be set by the caller when a
// quarantine decision was made; quarantine_available=false keeps the
// detection verdict with "unknown" for benign-predicted taxonomy fields.
void finalize_verdict(Verdict& v, bool quarantine_available);

Verdict classify(const PipelineModel& model, const FeatureVector& vector,
                 const std::string& sha256);

struct QuarantineReport {
    std::size_t total = 0;
    std::size_t quarantined = 0;
    double share = 0.0;
    std::size_t recovered_benign = 0;
    std::size_t recovered_malicious = 0;
};

// truth maps sha256 -> malware flag (0 benign, 1 malicious).
QuarantineReport quarantine_report(std::span<const Verdict> verdicts,
                                   const std::map<std::string, int>& truth);

std::string verdict_to_json_line(const Verdict& v);
void write_verdicts_jsonl(std::span<const Verdict> verdicts, std::ostream& out);

void save_pipeline(const PipelineModel& model, const std::string& path);
PipelineModel load_pipeline(const std::string& path);

}  // namespace petaxon
