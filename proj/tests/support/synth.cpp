#include "support/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "petaxon/errors.hpp"

namespace synth {

namespace {

const char* kTypes[] = {"trojan", "worm", "backdoor", "downloader", "virus", "grayware"};
const char* kFamilies[] = {"xtrat", "vtflooder", "sivis",  "upatre",  "zbot",
                           "ramnit", "sality",    "emotet", "lokibot", "fareit"};
const char* kBehaviors[] = {"filemodify", "execdownload", "autorun", "keylog",
                            "inject",     "spread",       "c2",      "ransom"};

std::string nth(const char* const* table, std::size_t table_size, std::size_t i,
                const char* fallback) {
    if (i < table_size) return table[i];
    return fallback + std::to_string(i);
}

std::string hex_sha(std::size_t index) {
    char buf[65];
    std::snprintf(buf, sizeof(buf), "%064zx", index);
    return buf;
}

// The shared import profile. 141 distinct names keep exactly ten vocabulary
// slots free for the frequent-family markers.
struct CommonImports {
    std::vector<std::pair<std::string, std::vector<std::string>>> libraries;

    CommonImports() {
        auto lib = [&](const char* name, std::size_t n) {
            std::vector<std::string> fns;
            for (std::size_t i = 0; i < n; ++i) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "f%02zu", i);
                fns.emplace_back(buf);
            }
            libraries.emplace_back(name, std::move(fns));
        };
        lib("kernel32.dll", 70);
        lib("user32.dll", 40);
        lib("advapi32.dll", 31);
    }
};

double clamp_positive(double v) { return v < 1.0 ? 1.0 : v; }

}  // namespace

SynthCorpus make_corpus(const SynthSpec& spec) {
    static const CommonImports commons;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SynthCorpus corpus;
    corpus.records.reserve(spec.count);

    for (std::size_t i = 0; i < spec.count; ++i) {
        petaxon::RawFeatureRecord rec;
        rec.sha256 = hex_sha(i);

        const bool malicious = unit(rng) < spec.malware_share;
        const bool lookalike = !malicious && unit(rng) < spec.benign_lookalike_rate;
        const bool confused = malicious && unit(rng) < spec.confused_malware_rate;

        std::size_t type_idx = 0, family_idx = 0, behavior_idx = 0;
        bool rare_family = false;
        if (malicious) {
            type_idx = static_cast<std::size_t>(unit(rng) * static_cast<double>(spec.n_types));
            type_idx = std::min(type_idx, spec.n_types - 1);
            rare_family = spec.n_rare_families > 0 && unit(rng) < spec.rare_family_share;
            const std::size_t n_fam = rare_family ? spec.n_rare_families : spec.n_top_families;
            family_idx = std::min(static_cast<std::size_t>(unit(rng) * static_cast<double>(n_fam)),
                                  n_fam - 1);
            behavior_idx = std::min(
                static_cast<std::size_t>(unit(rng) * static_cast<double>(spec.n_behaviors)),
                spec.n_behaviors - 1);
        }

        // --- planted numeric signal ---
        const bool sized_like_malware = malicious || lookalike;
        const double size =
            clamp_positive((sized_like_malware ? 500000.0 : 200000.0) + 30000.0 * gauss(rng));
        double vsize, sizeof_code;
        if (malicious && !confused) {
            vsize = 300000.0 + 50000.0 * static_cast<double>(type_idx) + 10000.0 * gauss(rng);
            sizeof_code =
                100000.0 + 20000.0 * static_cast<double>(behavior_idx) + 5000.0 * gauss(rng);
        } else {
            vsize = 150000.0 + 20000.0 * gauss(rng);
            sizeof_code = 50000.0 + 10000.0 * gauss(rng);
        }
        rec.general.size = static_cast<std::uint64_t>(clamp_positive(size));
        rec.general.vsize = static_cast<std::uint64_t>(clamp_positive(vsize));
        rec.header.optional.sizeof_code = static_cast<std::uint64_t>(clamp_positive(sizeof_code));
        rec.general.has_signature = unit(rng) < (malicious ? 0.05 : 0.80);

        // --- import table: shared profile plus one family marker ---
        for (const auto& [lib, fns] : commons.libraries) {
            auto& out = rec.imports[lib];
            for (const auto& fn : fns)
                if (unit(rng) < 0.97) out.push_back(fn);
            if (out.empty()) rec.imports.erase(lib);
        }
        if (malicious && !confused && !rare_family) {
            const std::string marker =
                nth(kFamilies, std::size(kFamilies), family_idx, "family") + ".dll";
            rec.imports[marker].push_back("run");
        }

        // --- quarantine handle: registry-string count ---
        std::uint64_t registry = unit(rng) < 0.5 ? 0 : 1;
        if (confused) registry = 25 + static_cast<std::uint64_t>(5.0 * unit(rng));
        rec.strings.registry = registry;

        // --- texture: plausible but signal-free filler ---
        for (std::size_t b = 0; b < 256; ++b)
            rec.histogram[b] = 100 + static_cast<std::uint64_t>(100.0 * unit(rng));
        for (std::size_t b = 0; b < 256; ++b)
            rec.byteentropy[b] = (b % 16 < 8) ? 40 + (rng() % 40) : rng() % 10;
        rec.strings.numstrings = 150 + rng() % 100;
        rec.strings.avlength = 7.0 + 2.0 * unit(rng);
        rec.strings.printables =
            static_cast<std::uint64_t>(rec.strings.avlength *
                                       static_cast<double>(rec.strings.numstrings));
        for (std::size_t c = 0; c < 96; ++c)
            rec.strings.printabledist[c] = static_cast<std::uint32_t>(rng() % 50);
        rec.strings.entropy = 4.0 + unit(rng);
        rec.strings.paths = rng() % 3;
        rec.strings.urls = rng() % 2;
        rec.strings.mz = 1;

        rec.general.has_debug = unit(rng) < 0.3;
        rec.general.has_relocations = unit(rng) < 0.6;
        rec.general.has_resources = unit(rng) < 0.7;
        rec.general.has_tls = unit(rng) < 0.2;
        rec.general.exports = rng() % 4;
        std::uint64_t import_count = 0;
        for (const auto& [lib, fns] : rec.imports) import_count += fns.size();
        rec.general.imports = import_count;

        rec.header.coff.timestamp = 1420000000 + static_cast<std::int64_t>(rng() % 190000000);
        rec.header.coff.machine = "I386";
        rec.header.coff.characteristics = {"EXECUTABLE_IMAGE", "LARGE_ADDRESS_AWARE"};
        rec.header.optional.subsystem = "WINDOWS_GUI";
        rec.header.optional.dll_characteristics = {"DYNAMIC_BASE", "NX_COMPAT"};
        rec.header.optional.magic = "PE32";
        rec.header.optional.major_linker_version = 14;
        rec.header.optional.minor_linker_version = rng() % 30;
        rec.header.optional.major_operating_system_version = 6;
        rec.header.optional.minor_operating_system_version = 1;
        rec.header.optional.major_image_version = rng() % 10;
        rec.header.optional.major_subsystem_version = 6;
        rec.header.optional.sizeof_headers = 1024;
        rec.header.optional.sizeof_heap_commit = 4096;

        rec.sections.entry = ".text";
        const char* names[] = {".text", ".data", ".rsrc"};
        const double entropies[] = {6.3, 4.2, 7.1};
        for (std::size_t s = 0; s < 3; ++s) {
            petaxon::SectionInfo sec;
            sec.name = names[s];
            sec.size = rec.general.size / (s + 2);
            sec.vsize = sec.size + rng() % 512;
            sec.entropy = entropies[s] + 0.3 * gauss(rng);
            sec.properties = s == 0 ? std::vector<std::string>{"code", "executable", "readable"}
                                    : std::vector<std::string>{"initialized_data", "readable"};
            rec.sections.sections.push_back(std::move(sec));
        }
        rec.datadirectories[1].virtual_address = 0x2000;
        rec.datadirectories[1].size = 200 + rng() % 100;
        rec.datadirectories[2].virtual_address = 0x3000;
        rec.datadirectories[2].size = rng() % 4096;

        // --- labels ---
        rec.label = malicious ? 1 : 0;
        if (malicious) {
            rec.avclass_family = rare_family
                                     ? "rare" + std::to_string(family_idx)
                                     : nth(kFamilies, std::size(kFamilies), family_idx, "family");
            petaxon::LabelSidecar::Entry entry;
            if (unit(rng) >= spec.missing_type_rate)
                entry.threat_type = nth(kTypes, std::size(kTypes), type_idx, "type");
            if (spec.emit_behavior)
                entry.behavior = nth(kBehaviors, std::size(kBehaviors), behavior_idx, "behavior");
            corpus.sidecar.entries[rec.sha256] = std::move(entry);
        }

        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

std::vector<petaxon::LabeledSample> make_samples(const SynthSpec& spec) {
    auto corpus = make_corpus(spec);
    return petaxon::attach_taxonomy(std::move(corpus.records), corpus.sidecar).samples;
}

void write_corpus(const SynthCorpus& corpus, const std::string& jsonl_path,
                  const std::string& sidecar_path) {
    {
        std::ofstream out(jsonl_path, std::ios::binary);
        if (!out) throw petaxon::IoError("cannot open " + jsonl_path);
        petaxon::write_jsonl(corpus.records, out);
    }
    std::ofstream out(sidecar_path, std::ios::binary);
    if (!out) throw petaxon::IoError("cannot open " + sidecar_path);
    for (const auto& [sha, entry] : corpus.sidecar.entries)
        out << sha << '\t' << entry.threat_type << '\t' << entry.family << '\t' << entry.behavior
            << '\n';
}

petaxon::FloatMatrix cluster_matrix(std::size_t clusters, std::size_t per_cluster,
                                    std::size_t dims, std::uint64_t seed,
                                    std::vector<int>* labels_out) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Centers on scaled coordinate axes so any 3 principal directions keep
    // them far apart relative to the unit within-cluster spread.
    petaxon::FloatMatrix m;
    m.rows = clusters * per_cluster;
    m.cols = dims;
    m.data.resize(m.rows * m.cols, 0.0f);
    if (labels_out) labels_out->clear();

    for (std::size_t c = 0; c < clusters; ++c) {
        for (std::size_t r = 0; r < per_cluster; ++r) {
            const std::size_t row = c * per_cluster + r;
            for (std::size_t d = 0; d < dims; ++d) {
                double v = gauss(rng);
                if (d == c % dims) v += 40.0 * static_cast<double>(1 + c / dims);
                m.data[row * m.cols + d] = static_cast<float>(v);
            }
            if (labels_out) labels_out->push_back(static_cast<int>(c));
        }
    }
    return m;
}

}  // namespace synth
