#include "petaxon/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "petaxon/errors.hpp"
#include "petaxon/hash.hpp"

namespace petaxon {

namespace {

using njson = nlohmann::ordered_json;

double jnum(const njson& j, const char* key, double def = 0.0) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (it->is_boolean()) return it->get<bool>() ? 1.0 : 0.0;
    if (!it->is_number()) return def;
    return it->get<double>();
}

std::string jstr(const njson& j, const char* key, std::string def = {}) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return def;
    return it->get<std::string>();
}

std::vector<std::string> jstrlist(const njson& j, const char* key) {
    std::vector<std::string> out;
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) return out;
    for (const auto& e : *it)
        if (e.is_string()) out.push_back(e.get<std::string>());
    return out;
}

template <std::size_t N, typename T>
void jcounts(const njson& j, const char* key, std::array<T, N>& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_array()) throw ConfigError(std::string(key) + " is not an array");
    std::size_t n = std::min<std::size_t>(N, it->size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = (*it)[i];
        if (!e.is_number()) throw ConfigError(std::string(key) + " has a non-numeric entry");
        out[i] = static_cast<T>(e.get<double>());
    }
}

RawFeatureRecord record_from_json(const njson& j) {
    RawFeatureRecord rec;
    rec.sha256 = jstr(j, "sha256");
    if (rec.sha256.empty()) throw ConfigError("record has no sha256");

    jcounts(j, "histogram", rec.histogram);
    jcounts(j, "byteentropy", rec.byteentropy);

    if (auto it = j.find("strings"); it != j.end() && it->is_object()) {
        const auto& s = *it;
        rec.strings.numstrings = static_cast<std::uint64_t>(jnum(s, "numstrings"));
        rec.strings.avlength = jnum(s, "avlength");
        jcounts(s, "printabledist", rec.strings.printabledist);
        rec.strings.printables = static_cast<std::uint64_t>(jnum(s, "printables"));
        rec.strings.entropy = jnum(s, "entropy");
        rec.strings.paths = static_cast<std::uint64_t>(jnum(s, "paths"));
        rec.strings.urls = static_cast<std::uint64_t>(jnum(s, "urls"));
        rec.strings.registry = static_cast<std::uint64_t>(jnum(s, "registry"));
        rec.strings.mz = static_cast<std::uint64_t>(jnum(s, "MZ"));
    }

    if (auto it = j.find("general"); it != j.end() && it->is_object()) {
        const auto& g = *it;
        rec.general.size = static_cast<std::uint64_t>(jnum(g, "size"));
        rec.general.vsize = static_cast<std::uint64_t>(jnum(g, "vsize"));
        rec.general.has_debug = jnum(g, "has_debug") != 0;
        rec.general.exports = static_cast<std::uint64_t>(jnum(g, "exports"));
        rec.general.imports = static_cast<std::uint64_t>(jnum(g, "imports"));
        rec.general.has_relocations = jnum(g, "has_relocations") != 0;
        rec.general.has_resources = jnum(g, "has_resources") != 0;
        rec.general.has_signature = jnum(g, "has_signature") != 0;
        rec.general.has_tls = jnum(g, "has_tls") != 0;
        rec.general.symbols = static_cast<std::uint64_t>(jnum(g, "symbols"));
    }

    if (auto it = j.find("header"); it != j.end() && it->is_object()) {
        const auto& h = *it;
        if (auto c = h.find("coff"); c != h.end() && c->is_object()) {
            rec.header.coff.timestamp = static_cast<std::int64_t>(jnum(*c, "timestamp"));
            rec.header.coff.machine = jstr(*c, "machine");
            rec.header.coff.characteristics = jstrlist(*c, "characteristics");
        }
        if (auto o = h.find("optional"); o != h.end() && o->is_object()) {
            auto& opt = rec.header.optional;
            opt.subsystem = jstr(*o, "subsystem");
            opt.dll_characteristics = jstrlist(*o, "dll_characteristics");
            opt.magic = jstr(*o, "magic");
            opt.major_image_version = static_cast<std::uint32_t>(jnum(*o, "major_image_version"));
            opt.minor_image_version = static_cast<std::uint32_t>(jnum(*o, "minor_image_version"));
            opt.major_linker_version =
                static_cast<std::uint32_t>(jnum(*o, "major_linker_version"));
            opt.minor_linker_version =
                static_cast<std::uint32_t>(jnum(*o, "minor_linker_version"));
            opt.major_operating_system_version =
                static_cast<std::uint32_t>(jnum(*o, "major_operating_system_version"));
            opt.minor_operating_system_version =
                static_cast<std::uint32_t>(jnum(*o, "minor_operating_system_version"));
            opt.major_subsystem_version =
                static_cast<std::uint32_t>(jnum(*o, "major_subsystem_version"));
            opt.minor_subsystem_version =
                static_cast<std::uint32_t>(jnum(*o, "minor_subsystem_version"));
            opt.sizeof_code = static_cast<std::uint64_t>(jnum(*o, "sizeof_code"));
            opt.sizeof_headers = static_cast<std::uint64_t>(jnum(*o, "sizeof_headers"));
            opt.sizeof_heap_commit = static_cast<std::uint64_t>(jnum(*o, "sizeof_heap_commit"));
        }
    }

    // EMBER calls this group "section"; accept "sections" too.
    auto sec = j.find("section");
    if (sec == j.end()) sec = j.find("sections");
    if (sec != j.end() && sec->is_object()) {
        rec.sections.entry = jstr(*sec, "entry");
        if (auto list = sec->find("sections"); list != sec->end() && list->is_array()) {
            for (const auto& e : *list) {
                if (!e.is_object()) continue;
                SectionInfo si;
                si.name = jstr(e, "name");
                si.size = static_cast<std::uint64_t>(jnum(e, "size"));
                si.entropy = jnum(e, "entropy");
                si.vsize = static_cast<std::uint64_t>(jnum(e, "vsize"));
                si.properties = jstrlist(e, "props");
                rec.sections.sections.push_back(std::move(si));
            }
        }
    }

    if (auto it = j.find("imports"); it != j.end() && it->is_object()) {
        for (const auto& [lib, fns] : it->items()) {
            if (!fns.is_array()) continue;
            auto& out = rec.imports[lib];
            for (const auto& f : fns)
                if (f.is_string()) out.push_back(f.get<std::string>());
        }
    }
    rec.exports = jstrlist(j, "exports");

    if (auto it = j.find("datadirectories"); it != j.end() && it->is_array()) {
        std::size_t n = std::min<std::size_t>(kDataDirectoryCount, it->size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = (*it)[i];
            if (!e.is_object()) continue;
            rec.datadirectories[i].size = static_cast<std::uint64_t>(jnum(e, "size"));
            rec.datadirectories[i].virtual_address =
                static_cast<std::uint64_t>(jnum(e, "virtual_address"));
        }
    }

    rec.label = static_cast<int>(jnum(j, "label", -1.0));
    rec.avclass_family = jstr(j, "avclass", jstr(j, "family"));
    rec.threat_type = jstr(j, "threat_type");
    rec.behavior = jstr(j, "behavior");
    return rec;
}

njson record_to_json(const RawFeatureRecord& rec) {
    njson j;
    j["sha256"] = rec.sha256;
    j["histogram"] = rec.histogram;
    j["byteentropy"] = rec.byteentropy;
    j["strings"] = {
        {"numstrings", rec.strings.numstrings},
        {"avlength", rec.strings.avlength},
        {"printabledist", rec.strings.printabledist},
        {"printables", rec.strings.printables},
        {"entropy", rec.strings.entropy},
        {"paths", rec.strings.paths},
        {"urls", rec.strings.urls},
        {"registry", rec.strings.registry},
        {"MZ", rec.strings.mz},
    };
    j["general"] = {
        {"size", rec.general.size},
        {"vsize", rec.general.vsize},
        {"has_debug", rec.general.has_debug ? 1 : 0},
        {"exports", rec.general.exports},
        {"imports", rec.general.imports},
        {"has_relocations", rec.general.has_relocations ? 1 : 0},
        {"has_resources", rec.general.has_resources ? 1 : 0},
        {"has_signature", rec.general.has_signature ? 1 : 0},
        {"has_tls", rec.general.has_tls ? 1 : 0},
        {"symbols", rec.general.symbols},
    };
    const auto& opt = rec.header.optional;
    j["header"] = {
        {"coff",
         {{"timestamp", rec.header.coff.timestamp},
          {"machine", rec.header.coff.machine},
          {"characteristics", rec.header.coff.characteristics}}},
        {"optional",
         {{"subsystem", opt.subsystem},
          {"dll_characteristics", opt.dll_characteristics},
          {"magic", opt.magic},
          {"major_image_version", opt.major_image_version},
          {"minor_image_version", opt.minor_image_version},
          {"major_linker_version", opt.major_linker_version},
          {"minor_linker_version", opt.minor_linker_version},
          {"major_operating_system_version", opt.major_operating_system_version},
          {"minor_operating_system_version", opt.minor_operating_system_version},
          {"major_subsystem_version", opt.major_subsystem_version},
          {"minor_subsystem_version", opt.minor_subsystem_version},
          {"sizeof_code", opt.sizeof_code},
          {"sizeof_headers", opt.sizeof_headers},
          {"sizeof_heap_commit", opt.sizeof_heap_commit}}},
    };
    njson section_list = njson::array();
    for (const auto& s : rec.sections.sections) {
        section_list.push_back({{"name", s.name},
                                {"size", s.size},
                                {"entropy", s.entropy},
                                {"vsize", s.vsize},
                                {"props", s.properties}});
    }
    j["section"] = {{"entry", rec.sections.entry}, {"sections", std::move(section_list)}};
    j["imports"] = rec.imports;
    j["exports"] = rec.exports;
    njson dirs = njson::array();
    for (std::size_t i = 0; i < kDataDirectoryCount; ++i) {
        dirs.push_back({{"name", data_directory_names()[i]},
                        {"size", rec.datadirectories[i].size},
                        {"virtual_address", rec.datadirectories[i].virtual_address}});
    }
    j["datadirectories"] = std::move(dirs);
    j["label"] = rec.label;
    if (!rec.avclass_family.empty()) j["avclass"] = rec.avclass_family;
    if (!rec.threat_type.empty()) j["threat_type"] = rec.threat_type;
    if (!rec.behavior.empty()) j["behavior"] = rec.behavior;
    return j;
}

}  // namespace

std::optional<RawFeatureRecord> record_from_json_line(const std::string& line) {
    try {
        return record_from_json(njson::parse(line));
    } catch (...) {
        return std::nullopt;
    }
}

std::string record_to_json_line(const RawFeatureRecord& record) {
    return record_to_json(record).dump();
}

JsonlReadResult read_jsonl_stream(std::istream& in) {
    JsonlReadResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (auto rec = record_from_json_line(line))
            result.records.push_back(std::move(*rec));
        else
            ++result.skipped;
    }
    return result;
}

JsonlReadResult read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_jsonl_stream(in);
}

void write_jsonl(std::span<const RawFeatureRecord> records, std::ostream& out) {
    for (const auto& rec : records) out << record_to_json_line(rec) << "\n";
}

LabelSidecar read_label_sidecar_stream(std::istream& in) {
    LabelSidecar sidecar;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<std::string, 4> cols;
        std::size_t col = 0, start = 0;
        for (std::size_t i = 0; i <= line.size() && col < 4; ++i) {
            if (i == line.size() || line[i] == '\t') {
                cols[col++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (cols[0].empty()) continue;
        sidecar.entries[cols[0]] = {cols[1], cols[2], cols[3]};
    }
    return sidecar;
}

LabelSidecar read_label_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_label_sidecar_stream(in);
}

TaxonomyJoinResult attach_taxonomy(std::vector<RawFeatureRecord> records,
                                   const LabelSidecar& sidecar) {
    TaxonomyJoinResult result;
    for (auto& rec : records) {
        if (rec.label == -1) {
            ++result.dropped_unlabeled;
            continue;
        }
        LabeledSample sample;
        sample.labels.malware = rec.label == 0 ? 0 : 1;
        if (sample.labels.malware == 1) {
            sample.labels.threat_type = rec.threat_type;
            sample.labels.family = rec.avclass_family;
            sample.labels.behavior = rec.behavior;
            auto it = sidecar.entries.find(rec.sha256);
            if (it == sidecar.entries.end()) {
                ++result.missing_sidecar;
            } else {
                if (!it->second.threat_type.empty())
                    sample.labels.threat_type = it->second.threat_type;
                if (!it->second.family.empty()) sample.labels.family = it->second.family;
                if (!it->second.behavior.empty()) sample.labels.behavior = it->second.behavior;
            }
        }
        sample.record = std::move(rec);
        result.samples.push_back(std::move(sample));
    }
    return result;
}

std::pair<std::vector<std::string>, std::vector<LabeledSample>> group_families(
    std::vector<LabeledSample> samples, std::size_t k) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : samples)
        if (s.labels.malware == 1 && !s.labels.family.empty()) ++counts[s.labels.family];
    if (counts.empty()) throw NoFamiliesError("no malicious sample carries a family label");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> vocabulary;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) vocabulary.push_back(ranked[i].first);
    std::vector<std::string> kept(vocabulary);
    vocabulary.push_back("other");

    for (auto& s : samples) {
        if (s.labels.malware != 1) continue;
        if (std::find(kept.begin(), kept.end(), s.labels.family) == kept.end())
            s.labels.family = "other";
    }
    return {std::move(vocabulary), std::move(samples)};
}

bool in_validation_split(std::string_view sha256, const SplitSpec& spec) {
    std::uint8_t seed_bytes[8];
    for (int i = 0; i < 8; ++i)
        seed_bytes[i] = static_cast<std::uint8_t>((spec.seed >> (8 * i)) & 0xFF);
    std::uint64_t h = fnv1a64(fnv1a64(sha256),
                              std::string_view(reinterpret_cast<const char*>(seed_bytes), 8));
    return static_cast<double>(h) * 0x1p-64 < spec.validation_fraction;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split(
    std::vector<LabeledSample> samples, const SplitSpec& spec) {
    if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0))
        throw ConfigError("validation fraction must be in (0,1)");
    std::vector<LabeledSample> train, validation;
    for (auto& s : samples) {
        if (in_validation_split(s.record.sha256, spec))
            validation.push_back(std::move(s));
        else
            train.push_back(std::move(s));
    }
    return {std::move(train), std::move(validation)};
}

std::vector<std::pair<std::string, std::size_t>> class_frequencies(
    std::span<const LabeledSample> samples, std::string_view field) {
    if (field != "threat_type" && field != "family" && field != "behavior")
        throw ConfigError("class_frequencies field must be threat_type, family, or behavior");

    std::map<std::string, std::size_t> counts;
    for (const auto& s : samples) {
        const std::string& label = field == "threat_type" ? s.labels.threat_type
                                   : field == "family"    ? s.labels.family
                                                          : s.labels.behavior;
        if (!label.empty()) ++counts[label];
    }

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

void write_frequencies_csv(std::span<const std::pair<std::string, std::size_t>> rows,
                           std::ostream& out) {
    out << "label,count\n";
    for (const auto& [label, count] : rows) out << label << "," << count << "\n";
}

}  // namespace petaxon
