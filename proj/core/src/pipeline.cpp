#include "petaxon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "petaxon/binio.hpp"
#include "petaxon/errors.hpp"

namespace petaxon {

namespace {

using njson = nlohmann::ordered_json;

constexpr const char* kStageNames[] = {"detection", "threat_type", "family", "behavior",
                                       "quarantine"};

std::size_t argmax(std::span<const double> probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;
    return best;
}

// Every stage re-splits its input. The seed must differ per stage: forwarded
// samples were all drawn from the previous validation share, so re-splitting
// with the same seed would leave the stage's train half empty.
std::uint64_t stage_split_seed(std::uint64_t base, int ordinal) {
    return base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(ordinal);
}

// Slimmed-down training view; the bulky records are released once vectors
// are computed.
struct TrainView {
    std::vector<std::string> shas;
    std::vector<SampleLabels> labels;
    FloatMatrix X;

    std::span<const float> row(std::size_t i) const { return X.row(i); }
};

FloatMatrix rows_to_matrix(const std::vector<std::size_t>& idx, const FloatMatrix& X) {
    FloatMatrix out;
    out.rows = idx.size();
    out.cols = X.cols;
    out.data.resize(out.rows * out.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        auto src = X.row(idx[r]);
        std::copy(src.begin(), src.end(), out.data.begin() + r * out.cols);
    }
    return out;
}

void enforce_floors(const char* stage, const std::vector<std::size_t>& input,
                    const std::vector<std::string>& input_labels, std::size_t floor) {
    if (input.size() < floor)
        throw InsufficientSamplesError(
            stage, std::string(stage) + " stage received " + std::to_string(input.size()) +
                       " samples, below the floor of " + std::to_string(floor));
    std::map<std::string, std::size_t> counts;
    for (const auto& l : input_labels) ++counts[l];
    for (const auto& [label, count] : counts)
        if (count < 2)
            throw InsufficientSamplesError(
                stage, std::string(stage) + " stage class '" + label + "' has " +
                           std::to_string(count) + " sample, below the per-class floor of 2");
}

struct StageOutcome {
    StageModel model;
    StageReport report;
    std::vector<std::size_t> forwarded;          // validation samples predicted non-benign
    std::vector<std::size_t> predicted_benign;   // validation samples predicted benign
};

double safe_macro_auc(const std::vector<std::vector<double>>& probs,
                      std::span<const int> labels) {
    try {
        return macro_auc(probs, labels);
    } catch (const OneClassOnlyError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

double safe_binary_auc(std::span<const double> scores, std::span<const int> labels) {
    try {
        return roc_auc_binary(scores, labels);
    } catch (const OneClassOnlyError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// One taxonomic stage: drop unlabeled malicious, enforce floors, split,
// train multiclass over {"benign"} + classes, validate, forward.
StageOutcome run_taxonomic_stage(const char* stage, int ordinal, const TrainView& view,
                                 const std::vector<std::size_t>& forwarded_input,
                                 const std::string SampleLabels::*label_field,
                                 const PipelineConfig& config, bool is_family,
                                 std::size_t& dropped_missing) {
    StageOutcome out;

    std::vector<std::size_t> input;
    std::size_t labeled_malicious = 0;
    for (std::size_t idx : forwarded_input) {
        const SampleLabels& l = view.labels[idx];
        if (l.malware == 1 && (l.*label_field).empty()) {
            ++dropped_missing;
            continue;
        }
        if (l.malware == 1) ++labeled_malicious;
        input.push_back(idx);
    }

    if (labeled_malicious == 0) {
        out.model.skip_reason = "no labeled samples";
        out.report.skipped = true;
        out.report.skip_reason = out.model.skip_reason;
        out.forwarded = forwarded_input;  // pass-through so later stages still train
        return out;
    }

    // The stage's "benign" class is built from the detector's false
    // positives. A detector good enough to forward fewer than two of them
    // cannot support that class, so the stage trains on the taxonomy alone
    // (and never routes to quarantine) instead of failing the whole run.
    const bool include_benign = input.size() - labeled_malicious >= 2;
    if (!include_benign) {
        std::vector<std::size_t> malicious_only;
        for (std::size_t idx : input)
            if (view.labels[idx].malware == 1) malicious_only.push_back(idx);
        input.swap(malicious_only);
    }

    SplitSpec spec{config.validation_fraction, stage_split_seed(config.seed, ordinal)};
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t idx : input)
        (in_validation_split(view.shas[idx], spec) ? val_idx : train_idx).push_back(idx);

    // Family vocabulary is frozen on the train portion; other taxonomies use
    // the whole stage input so validation labels always have a slot.
    std::vector<std::string> classes;
    std::set<std::string> kept_families;
    if (is_family) {
        std::map<std::string, std::size_t> counts;
        for (std::size_t idx : train_idx)
            if (view.labels[idx].malware == 1) ++counts[view.labels[idx].*label_field];
        if (counts.empty())
            throw NoFamiliesError("family stage train split has no family labels");
        std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (std::size_t i = 0; i < ranked.size() && i < config.family_top_k; ++i) {
            classes.push_back(ranked[i].first);
            kept_families.insert(ranked[i].first);
        }
        classes.push_back("other");
    } else {
        std::map<std::string, std::size_t> counts;
        for (std::size_t idx : input)
            if (view.labels[idx].malware == 1) ++counts[view.labels[idx].*label_field];
        std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (const auto& [name, count] : ranked) classes.push_back(name);
    }

    std::vector<std::string> vocabulary;
    if (include_benign) vocabulary.push_back("benign");
    vocabulary.insert(vocabulary.end(), classes.begin(), classes.end());
    std::map<std::string, int> class_index;
    for (std::size_t i = 0; i < vocabulary.size(); ++i)
        class_index[vocabulary[i]] = static_cast<int>(i);

    auto label_of = [&](std::size_t idx) -> std::string {
        const SampleLabels& l = view.labels[idx];
        if (l.malware == 0) return "benign";
        const std::string& raw = l.*label_field;
        if (is_family && kept_families.find(raw) == kept_families.end()) return "other";
        return raw;
    };

    std::vector<std::string> input_labels;
    for (std::size_t idx : input) input_labels.push_back(label_of(idx));
    enforce_floors(stage, input, input_labels, config.min_stage_samples);

    std::vector<int> y_train, y_val;
    for (std::size_t idx : train_idx) y_train.push_back(class_index.at(label_of(idx)));
    for (std::size_t idx : val_idx) y_val.push_back(class_index.at(label_of(idx)));

    FloatMatrix X_train = rows_to_matrix(train_idx, view.X);
    FloatMatrix X_val = rows_to_matrix(val_idx, view.X);

    out.model.vocabulary = vocabulary;
    out.model.model = train(X_train, y_train, Objective::multiclass, vocabulary.size(),
                            config.stage(stage), val_idx.empty() ? nullptr : &X_val, y_val);
    out.model.trained = true;

    std::vector<std::vector<double>> val_probs = predict(out.model.model, X_val);
    std::vector<std::string> predicted, truth;
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
        predicted.push_back(vocabulary[argmax(val_probs[i])]);
        truth.push_back(vocabulary[static_cast<std::size_t>(y_val[i])]);
        if (predicted.back() == "benign")
            out.predicted_benign.push_back(val_idx[i]);
        else
            out.forwarded.push_back(val_idx[i]);
    }

    out.report.skipped = false;
    out.report.samples = val_idx.size();
    if (!val_idx.empty()) {
        out.report.accuracy = accuracy(predicted, truth);
        out.report.auc = safe_macro_auc(val_probs, y_val);
        auto [fp, fn] = fp_fn(predicted, truth);
        out.report.false_positives = fp;
        out.report.false_negatives = fn;
    }
    return out;
}

void save_stage(BinWriter& out, const StageModel& stage) {
    out.u8(stage.trained ? 1 : 0);
    if (!stage.trained) {
        out.str(stage.skip_reason);
        return;
    }
    out.u32(static_cast<std::uint32_t>(stage.vocabulary.size()));
    for (const auto& label : stage.vocabulary) out.str(label);
    BinWriter blob;
    save_gbdt(stage.model, blob);
    auto bytes = blob.bytes();
    out.u64(bytes.size());
    out.raw(bytes);
}

StageModel load_stage(BinReader& in) {
    StageModel stage;
    stage.trained = in.u8() != 0;
    if (!stage.trained) {
        stage.skip_reason = in.str();
        return stage;
    }
    std::uint32_t nv = in.u32();
    stage.vocabulary.resize(nv);
    for (auto& label : stage.vocabulary) label = in.str();
    std::uint64_t blob_len = in.u64();
    auto blob = in.raw(blob_len);
    BinReader blob_reader(blob);
    stage.model = load_gbdt(blob_reader);
    return stage;
}

njson stage_to_json(const StagePrediction& p, bool binary) {
    njson j;
    j["label"] = p.label;
    if (binary)
        j["p"] = p.probs.size() == 2 ? p.probs[1] : 0.0;
    else
        j["probs"] = p.probs;
    return j;
}

}  // namespace

const char* stage_name(StageId id) { return kStageNames[static_cast<int>(id)]; }

StageModel& PipelineModel::stage(StageId id) {
    switch (id) {
        case StageId::detection: return detection;
        case StageId::threat_type: return threat_type;
        case StageId::family: return family;
        case StageId::behavior: return behavior;
        case StageId::quarantine: return quarantine;
    }
    throw ConfigError("invalid stage id");
}

const StageModel& PipelineModel::stage(StageId id) const {
    return const_cast<PipelineModel*>(this)->stage(id);
}

TrainResult train_pipeline(std::vector<LabeledSample> samples, const PipelineConfig& config) {
    if (samples.empty())
        throw InsufficientSamplesError("detection", "no training samples supplied");

    std::vector<RawFeatureRecord> records;
    records.reserve(samples.size());
    for (auto& s : samples) records.push_back(std::move(s.record));

    TrainResult result;
    result.model.layout = FeatureLayout::standard(build_import_vocabulary(records));

    TrainView view;
    view.X.rows = samples.size();
    view.X.cols = result.model.layout.total_length;
    view.X.data.resize(view.X.rows * view.X.cols);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        FeatureVector fv = vectorize(records[i], result.model.layout);
        std::copy(fv.values.begin(), fv.values.end(), view.X.data.begin() + i * view.X.cols);
        view.shas.push_back(records[i].sha256);
        view.labels.push_back(samples[i].labels);
        records[i] = RawFeatureRecord{};  // release the record's memory early
    }
    records.clear();
    samples.clear();

    // --- detection ---
    std::vector<std::size_t> all_idx(view.shas.size());
    for (std::size_t i = 0; i < all_idx.size(); ++i) all_idx[i] = i;
    {
        std::vector<std::string> det_labels;
        for (std::size_t idx : all_idx)
            det_labels.push_back(view.labels[idx].malware == 1 ? "malicious" : "benign");
        enforce_floors("detection", all_idx, det_labels, config.min_stage_samples);
    }

    SplitSpec spec{config.validation_fraction, config.seed};
    std::vector<std::size_t> det_train, det_val;
    for (std::size_t idx : all_idx)
        (in_validation_split(view.shas[idx], spec) ? det_val : det_train).push_back(idx);

    std::vector<int> y_train, y_val;
    for (std::size_t idx : det_train) y_train.push_back(view.labels[idx].malware);
    for (std::size_t idx : det_val) y_val.push_back(view.labels[idx].malware);

    FloatMatrix X_train = rows_to_matrix(det_train, view.X);
    FloatMatrix X_val = rows_to_matrix(det_val, view.X);

    StageModel& det = result.model.detection;
    det.vocabulary = {"benign", "malicious"};
    det.model = train(X_train, y_train, Objective::binary, 2, config.stage("detection"),
                      det_val.empty() ? nullptr : &X_val, y_val);
    det.trained = true;

    StageReport det_report;
    det_report.skipped = false;
    det_report.samples = det_val.size();
    std::vector<std::size_t> forwarded;
    if (!det_val.empty()) {
        auto val_probs = predict(det.model, X_val);
        std::vector<std::string> predicted, truth;
        std::vector<double> scores;
        for (std::size_t i = 0; i < det_val.size(); ++i) {
            bool malicious = val_probs[i][1] > val_probs[i][0];
            predicted.push_back(malicious ? "malicious" : "benign");
            truth.push_back(y_val[i] == 1 ? "malicious" : "benign");
            scores.push_back(val_probs[i][1]);
            if (malicious) forwarded.push_back(det_val[i]);
        }
        det_report.accuracy = accuracy(predicted, truth);
        det_report.auc = safe_binary_auc(scores, y_val);
        auto [fp, fn] = fp_fn(predicted, truth);
        det_report.false_positives = fp;
        det_report.false_negatives = fn;
    }
    result.reports.emplace_back("detection", det_report);

    // --- taxonomic stages ---
    StageOutcome type_out =
        run_taxonomic_stage("threat_type", 1, view, forwarded, &SampleLabels::threat_type,
                            config, false, result.dropped_missing_label);
    result.model.threat_type = std::move(type_out.model);
    result.reports.emplace_back("threat_type", type_out.report);

    StageOutcome family_out =
        run_taxonomic_stage("family", 2, view, type_out.forwarded, &SampleLabels::family,
                            config, true, result.dropped_missing_label);
    result.model.family = std::move(family_out.model);
    result.reports.emplace_back("family", family_out.report);

    StageOutcome behavior_out =
        run_taxonomic_stage("behavior", 3, view, family_out.forwarded, &SampleLabels::behavior,
                            config, false, result.dropped_missing_label);
    result.model.behavior = std::move(behavior_out.model);
    result.reports.emplace_back("behavior", behavior_out.report);

    // --- quarantine: validation samples some executed taxonomic stage
    // called benign, labeled by ground truth ---
    std::set<std::size_t> quarantine_set;
    for (const auto* outcome : {&type_out, &family_out, &behavior_out})
        quarantine_set.insert(outcome->predicted_benign.begin(),
                              outcome->predicted_benign.end());

    StageModel& quar = result.model.quarantine;
    StageReport quar_report;
    std::vector<std::size_t> q_idx(quarantine_set.begin(), quarantine_set.end());
    if (q_idx.size() < config.quarantine_floor) {
        quar.skip_reason = "only " + std::to_string(q_idx.size()) +
                           " quarantine samples, below the floor of " +
                           std::to_string(config.quarantine_floor);
        quar_report.skip_reason = quar.skip_reason;
    } else {
        std::vector<int> q_labels;
        for (std::size_t idx : q_idx) q_labels.push_back(view.labels[idx].malware);
        FloatMatrix X_q = rows_to_matrix(q_idx, view.X);
        try {
            TrainParams q_params = config.stage("quarantine");
            q_params.early_stopping_rounds = 0;  // trained on the full quarantine set
            quar.model = train(X_q, q_labels, Objective::binary, 2, q_params);
            quar.vocabulary = {"benign", "malicious"};
            quar.trained = true;

            // In-sample numbers: the quarantine set is fully consumed by
            // training, so there is no held-out slice to score.
            auto probs = predict(quar.model, X_q);
            std::vector<std::string> predicted, truth;
            std::vector<double> scores;
            for (std::size_t i = 0; i < q_idx.size(); ++i) {
                bool malicious = probs[i][1] > probs[i][0];
                predicted.push_back(malicious ? "malicious" : "benign");
                truth.push_back(q_labels[i] == 1 ? "malicious" : "benign");
                scores.push_back(probs[i][1]);
            }
            quar_report.skipped = false;
            quar_report.samples = q_idx.size();
            quar_report.accuracy = accuracy(predicted, truth);
            quar_report.auc = safe_binary_auc(scores, q_labels);
            auto [fp, fn] = fp_fn(predicted, truth);
            quar_report.false_positives = fp;
            quar_report.false_negatives = fn;
        } catch (const DegenerateLabelsError&) {
            quar.trained = false;
            quar.skip_reason = "quarantine samples all share one class";
            quar_report.skip_reason = quar.skip_reason;
        }
    }
    result.reports.emplace_back("quarantine", quar_report);

    for (StageId id : {StageId::detection, StageId::threat_type, StageId::family,
                       StageId::behavior, StageId::quarantine}) {
        StageModel& s = result.model.stage(id);
        if (s.trained) s.model.layout_version = result.model.layout.version;
    }
    return result;
}

bool route_quarantine(const StagePrediction& threat_type, const StagePrediction& family,
                      const StagePrediction& behavior) {
    for (const auto* p : {&threat_type, &family, &behavior})
        if (p->executed && p->label == "benign") return true;
    return false;
}

void finalize_verdict(Verdict& v, bool quarantine_available) {
    v.final = FinalVerdict{};
    if (!v.detection.executed || v.detection.label == "benign") {
        v.quarantined = false;
        return;
    }

    v.quarantined = route_quarantine(v.threat_type, v.family, v.behavior);
    auto kept = [&](const StagePrediction& p) -> std::string {
        if (!p.executed) return "";
        return p.label == "benign" ? "unknown" : p.label;
    };

    if (!v.quarantined) {
        v.final.malware = 1;
        v.final.threat_type = kept(v.threat_type);
        v.final.family = kept(v.family);
        v.final.behavior = kept(v.behavior);
        return;
    }

    if (quarantine_available && v.quarantine.executed && v.quarantine.label == "benign") {
        v.final.malware = 0;  // quarantine recovered a benign sample
        return;
    }
    // Quarantine confirmed malicious, or no quarantine model exists: keep the
    // detection verdict; benign-predicted taxonomy fields become "unknown".
    v.final.malware = 1;
    v.final.threat_type = kept(v.threat_type);
    v.final.family = kept(v.family);
    v.final.behavior = kept(v.behavior);
}

Verdict classify(const PipelineModel& model, const FeatureVector& vector,
                 const std::string& sha256) {
    if (vector.layout_version != model.layout.version)
        throw LayoutMismatchError("vector layout version " +
                                  std::to_string(vector.layout_version) +
                                  " does not match model layout " +
                                  std::to_string(model.layout.version));
    if (vector.values.size() != model.layout.total_length)
        throw LayoutMismatchError("vector length does not match model layout");
    if (!model.detection.trained) throw ConfigError("pipeline has no trained detection stage");

    Verdict v;
    v.sha256 = sha256;

    v.detection.probs = predict_row(model.detection.model, vector.values);
    v.detection.label = model.detection.vocabulary[argmax(v.detection.probs)];
    v.detection.executed = true;

    if (v.detection.label != "benign") {
        auto run_stage = [&](const StageModel& stage, StagePrediction& pred) {
            if (!stage.trained) return;
            pred.probs = predict_row(stage.model, vector.values);
            pred.label = stage.vocabulary[argmax(pred.probs)];
            pred.executed = true;
        };
        run_stage(model.threat_type, v.threat_type);
        run_stage(model.family, v.family);
        run_stage(model.behavior, v.behavior);

        if (route_quarantine(v.threat_type, v.family, v.behavior) && model.quarantine.trained) {
            v.quarantine.probs = predict_row(model.quarantine.model, vector.values);
            v.quarantine.label = model.quarantine.vocabulary[argmax(v.quarantine.probs)];
            v.quarantine.executed = true;
        }
    }

    finalize_verdict(v, model.quarantine.trained);
    return v;
}

QuarantineReport quarantine_report(std::span<const Verdict> verdicts,
                                   const std::map<std::string, int>& truth) {
    QuarantineReport report;
    report.total = verdicts.size();
    for (const auto& v : verdicts) {
        if (v.quarantined) ++report.quarantined;
        auto it = truth.find(v.sha256);
        if (it == truth.end()) continue;
        bool truly_malicious = it->second == 1;
        if (!truly_malicious && v.final.malware == 0 && v.detection.executed &&
            v.detection.label == "malicious")
            ++report.recovered_benign;
        if (truly_malicious && v.quarantined && v.final.malware == 1)
            ++report.recovered_malicious;
    }
    if (report.total > 0)
        report.share = static_cast<double>(report.quarantined) /
                       static_cast<double>(report.total);
    return report;
}

std::string verdict_to_json_line(const Verdict& v) {
    njson j;
    j["sha256"] = v.sha256;
    njson stages;
    if (v.detection.executed) stages["detection"] = stage_to_json(v.detection, true);
    if (v.threat_type.executed) stages["type"] = stage_to_json(v.threat_type, false);
    if (v.family.executed) stages["family"] = stage_to_json(v.family, false);
    if (v.behavior.executed) stages["behavior"] = stage_to_json(v.behavior, false);
    if (v.quarantine.executed) stages["quarantine"] = stage_to_json(v.quarantine, true);
    j["stages"] = std::move(stages);
    j["quarantined"] = v.quarantined;
    njson final;
    final["malware"] = v.final.malware;
    if (!v.final.threat_type.empty()) final["threat_type"] = v.final.threat_type;
    if (!v.final.family.empty()) final["family"] = v.final.family;
    if (!v.final.behavior.empty()) final["behavior"] = v.final.behavior;
    j["final"] = std::move(final);
    return j.dump();
}

void write_verdicts_jsonl(std::span<const Verdict> verdicts, std::ostream& out) {
    for (const auto& v : verdicts) out << verdict_to_json_line(v) << "\n";
}

void save_pipeline(const PipelineModel& model, const std::string& path) {
    BinWriter out;
    out.magic("PLNE");
    out.u32(1);  // container version
    out.u32(model.layout.version);
    out.u32(static_cast<std::uint32_t>(model.layout.import_vocabulary.size()));
    for (const auto& name : model.layout.import_vocabulary) out.str(name);
    for (StageId id : {StageId::detection, StageId::threat_type, StageId::family,
                       StageId::behavior, StageId::quarantine})
        save_stage(out, model.stage(id));
    write_file_bytes(path, out.bytes());
}

PipelineModel load_pipeline(const std::string& path) {
    auto bytes = read_file_bytes(path);
    BinReader in(bytes);
    in.expect_magic("PLNE");
    std::uint32_t version = in.u32();
    if (version != 1)
        throw VersionMismatchError("unsupported pipeline container version " +
                                   std::to_string(version));
    std::uint32_t layout_version = in.u32();
    if (layout_version != 1)
        throw VersionMismatchError("unsupported feature layout version " +
                                   std::to_string(layout_version));
    std::uint32_t nv = in.u32();
    std::vector<std::string> vocabulary(nv);
    for (auto& name : vocabulary) name = in.str();

    PipelineModel model;
    model.layout = FeatureLayout::standard(std::move(vocabulary));
    for (StageId id : {StageId::detection, StageId::threat_type, StageId::family,
                       StageId::behavior, StageId::quarantine})
        model.stage(id) = load_stage(in);
    if (!in.at_end()) throw VersionMismatchError("trailing bytes after pipeline model");
    return model;
}

}  // namespace petaxon
