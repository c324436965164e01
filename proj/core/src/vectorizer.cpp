#include "petaxon/vectorizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "petaxon/errors.hpp"
#include "petaxon/hash.hpp"

namespace petaxon {

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<double> normalize_counts(std::span<const std::uint64_t> counts) {
    std::vector<double> out(counts.size(), 0.0);
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    if (total == 0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i)
        out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return out;
}

double window_entropy(std::span<const std::uint8_t> w) {
    if (w.empty()) return 0.0;
    std::array<std::uint32_t, 256> counts{};
    for (std::uint8_t b : w) ++counts[b];
    double h = 0.0;
    double n = static_cast<double>(w.size());
    for (std::uint32_t c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

void accumulate_window(std::array<std::uint64_t, 256>& counts, std::span<const std::uint8_t> w) {
    if (w.empty()) return;
    double h = window_entropy(w);
    auto entropy_bin = std::min<std::size_t>(static_cast<std::size_t>(h * 2.0), 15);
    for (std::uint8_t b : w) ++counts[entropy_bin * 16 + (b >> 4)];
}

// Shared builder so vectorize() and the block tables in standard() cannot
// drift apart: every block is appended through one list.
struct BlockSpec {
    std::string name;
    std::size_t length;
    std::vector<std::string> index_names;
};

std::vector<BlockSpec> standard_blocks(const std::vector<std::string>& vocabulary) {
    std::vector<BlockSpec> blocks;
    auto add = [&](std::string name, std::size_t length,
                   std::vector<std::string> index_names = {}) {
        blocks.push_back({std::move(name), length, std::move(index_names)});
    };

    add("histogram", 256);
    add("byteentropy", 256);

    add("strings.numstrings", 1);
    add("strings.avlength", 1);
    add("strings.printabledist", 96);
    add("strings.printables", 1);
    add("strings.entropy", 1);
    add("strings.paths", 1);
    add("strings.urls", 1);
    add("strings.registry", 1);
    add("strings.mz", 1);

    add("general.size", 1);
    add("general.vsize", 1);
    add("general.has_debug", 1);
    add("general.exports", 1);
    add("general.imports", 1);
    add("general.has_relocations", 1);
    add("general.has_resources", 1);
    add("general.has_signature", 1);
    add("general.has_tls", 1);
    add("general.symbols", 1);

    add("header.timestamp", 1);
    add("header.machine_hashed", 10);
    add("header.characteristics_hashed", 10);
    add("header.subsystem_hashed", 10);
    add("header.dll_characteristics_hashed", 10);
    add("header.magic_hashed", 10);
    add("header.versions", 8,
        {"image_major", "image_minor", "linker_major", "linker_minor", "os_major", "os_minor",
         "subsystem_major", "subsystem_minor"});
    add("header.sizeof_code", 1);
    add("header.sizeof_headers", 1);
    add("header.sizeof_heap_commit", 1);

    add("sections.general", 5,
        {"count", "count_zero_size", "count_empty_name", "count_rx", "count_w"});
    add("sections.size_hashed", 50);
    add("sections.entropy_hashed", 50);
    add("sections.vsize_hashed", 50);
    add("sections.entry_name_hashed", 50);
    add("sections.entry_props_hashed", 50);

    add("imports.libraries_hashed", 128);
    add("imports.vocab", vocabulary.size(), vocabulary);
    add("exports.hashed", 128);

    for (const char* dir : data_directory_names()) {
        add(std::string("datadirectories.") + dir + ".size", 1);
        add(std::string("datadirectories.") + dir + ".virtual_address", 1);
    }
    return blocks;
}

}  // namespace

FeatureLayout FeatureLayout::standard(std::vector<std::string> import_vocabulary) {
    if (import_vocabulary.size() != kImportVocabSize)
        throw ConfigError("import vocabulary must have exactly " +
                          std::to_string(kImportVocabSize) + " entries, got " +
                          std::to_string(import_vocabulary.size()));
    FeatureLayout layout;
    layout.version = 1;
    layout.import_vocabulary = std::move(import_vocabulary);
    for (auto& spec : standard_blocks(layout.import_vocabulary)) {
        layout.blocks.push_back({spec.name, spec.length, std::move(spec.index_names)});
        layout.total_length += spec.length;
    }
    layout.hash_bins = {
        {"header.machine_hashed", 10},
        {"header.characteristics_hashed", 10},
        {"header.subsystem_hashed", 10},
        {"header.dll_characteristics_hashed", 10},
        {"header.magic_hashed", 10},
        {"sections.size_hashed", 50},
        {"sections.entropy_hashed", 50},
        {"sections.vsize_hashed", 50},
        {"sections.entry_name_hashed", 50},
        {"sections.entry_props_hashed", 50},
        {"imports.libraries_hashed", 128},
        {"exports.hashed", 128},
    };
    return layout;
}

std::size_t FeatureLayout::block_offset(std::string_view block_name) const {
    std::size_t off = 0;
    for (const auto& b : blocks) {
        if (b.name == block_name) return off;
        off += b.length;
    }
    throw LayoutMismatchError("layout has no block named '" + std::string(block_name) + "'");
}

std::vector<double> byte_histogram(std::span<const std::uint8_t> bytes) {
    auto counts = byte_histogram_counts(bytes);
    return normalize_counts(counts);
}

std::array<std::uint64_t, 256> byte_histogram_counts(std::span<const std::uint8_t> bytes) {
    std::array<std::uint64_t, 256> counts{};
    for (std::uint8_t b : bytes) ++counts[b];
    return counts;
}

std::array<std::uint64_t, 256> byte_entropy_counts(std::span<const std::uint8_t> bytes,
                                                   std::size_t window, std::size_t stride) {
    std::array<std::uint64_t, 256> counts{};
    if (bytes.empty() || window == 0 || stride == 0) return counts;

    std::size_t last_full_end = 0;
    for (std::size_t start = 0; start + window <= bytes.size(); start += stride) {
        accumulate_window(counts, bytes.subspan(start, window));
        last_full_end = start + window;
    }
    if (last_full_end < bytes.size())
        accumulate_window(counts, bytes.subspan(last_full_end));
    return counts;
}

std::vector<double> byte_entropy_histogram(std::span<const std::uint8_t> bytes, std::size_t window,
                                           std::size_t stride) {
    auto counts = byte_entropy_counts(bytes, window, stride);
    return normalize_counts(counts);
}

std::size_t hash_bucket(std::string_view name, std::size_t bins) {
    if (bins == 0) throw ConfigError("hash_bucket requires bins > 0");
    return static_cast<std::size_t>(fnv1a64(name) % bins);
}

std::vector<double> hashed_pairs(std::span<const std::pair<std::string, double>> pairs,
                                 std::size_t bins) {
    std::vector<double> out(bins, 0.0);
    for (const auto& [name, value] : pairs) out[hash_bucket(name, bins)] += value;
    return out;
}

std::vector<double> import_vocab_features(
    const std::map<std::string, std::vector<std::string>>& imports,
    std::span<const std::string> vocabulary) {
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < vocabulary.size(); ++i) slot[vocabulary[i]] = i;

    std::vector<double> out(vocabulary.size(), 0.0);
    for (const auto& [library, functions] : imports) {
        std::string lib = to_lower(library);
        for (const auto& fn : functions) {
            auto it = slot.find(lib + "." + to_lower(fn));
            if (it != slot.end()) out[it->second] += 1.0;
        }
    }
    return out;
}

std::vector<std::string> build_import_vocabulary(std::span<const RawFeatureRecord> records,
                                                 std::size_t k) {
    if (records.empty()) throw EmptyStreamError("cannot build import vocabulary from zero records");

    // Document frequency: each record contributes each distinct name once.
    std::map<std::string, std::uint64_t> freq;
    for (const auto& rec : records) {
        std::set<std::string> seen;
        for (const auto& [library, functions] : rec.imports) {
            std::string lib = to_lower(library);
            for (const auto& fn : functions) seen.insert(lib + "." + to_lower(fn));
        }
        for (const auto& name : seen) ++freq[name];
    }

    std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> vocab;
    vocab.reserve(k);
    for (std::size_t i = 0; i < ranked.size() && vocab.size() < k; ++i)
        vocab.push_back(ranked[i].first);
    for (std::size_t i = 0; vocab.size() < k; ++i) vocab.push_back("__pad." + std::to_string(i));
    return vocab;
}

FeatureVector vectorize(const RawFeatureRecord& record, const FeatureLayout& layout) {
    if (layout.version != 1)
        throw VersionMismatchError("unsupported feature layout version " +
                                   std::to_string(layout.version));
    if (layout.import_vocabulary.size() != kImportVocabSize)
        throw LayoutMismatchError("layout vocabulary has " +
                                  std::to_string(layout.import_vocabulary.size()) +
                                  " entries, expected " + std::to_string(kImportVocabSize));

    std::vector<double> v;
    v.reserve(layout.total_length);
    auto push = [&](double x) { v.push_back(x); };
    auto push_all = [&](const std::vector<double>& xs) { v.insert(v.end(), xs.begin(), xs.end()); };
    // Single-string hashed blocks skip empty strings so absent fields stay
    // all-zero instead of lighting a constant bucket.
    auto push_hashed_one = [&](const std::string& name, std::size_t bins) {
        std::vector<std::pair<std::string, double>> pairs;
        if (!name.empty()) pairs.emplace_back(name, 1.0);
        push_all(hashed_pairs(pairs, bins));
    };
    auto push_hashed_tags = [&](const std::vector<std::string>& tags, std::size_t bins) {
        std::vector<std::pair<std::string, double>> pairs;
        for (const auto& t : tags) pairs.emplace_back(t, 1.0);
        push_all(hashed_pairs(pairs, bins));
    };

    push_all(normalize_counts(record.histogram));
    push_all(normalize_counts(record.byteentropy));

    const StringStats& st = record.strings;
    push(static_cast<double>(st.numstrings));
    push(st.avlength);
    for (std::uint32_t c : st.printabledist) push(static_cast<double>(c));
    push(static_cast<double>(st.printables));
    push(st.entropy);
    push(static_cast<double>(st.paths));
    push(static_cast<double>(st.urls));
    push(static_cast<double>(st.registry));
    push(static_cast<double>(st.mz));

    const GeneralInfo& g = record.general;
    push(static_cast<double>(g.size));
    push(static_cast<double>(g.vsize));
    push(g.has_debug ? 1.0 : 0.0);
    push(static_cast<double>(g.exports));
    push(static_cast<double>(g.imports));
    push(g.has_relocations ? 1.0 : 0.0);
    push(g.has_resources ? 1.0 : 0.0);
    push(g.has_signature ? 1.0 : 0.0);
    push(g.has_tls ? 1.0 : 0.0);
    push(static_cast<double>(g.symbols));

    const CoffInfo& coff = record.header.coff;
    const OptionalHeaderInfo& opt = record.header.optional;
    push(static_cast<double>(coff.timestamp));
    push_hashed_one(coff.machine, 10);
    push_hashed_tags(coff.characteristics, 10);
    push_hashed_one(opt.subsystem, 10);
    push_hashed_tags(opt.dll_characteristics, 10);
    push_hashed_one(opt.magic, 10);
    push(static_cast<double>(opt.major_image_version));
    push(static_cast<double>(opt.minor_image_version));
    push(static_cast<double>(opt.major_linker_version));
    push(static_cast<double>(opt.minor_linker_version));
    push(static_cast<double>(opt.major_operating_system_version));
    push(static_cast<double>(opt.minor_operating_system_version));
    push(static_cast<double>(opt.major_subsystem_version));
    push(static_cast<double>(opt.minor_subsystem_version));
    push(static_cast<double>(opt.sizeof_code));
    push(static_cast<double>(opt.sizeof_headers));
    push(static_cast<double>(opt.sizeof_heap_commit));

    const auto& sections = record.sections.sections;
    std::size_t zero_size = 0, empty_name = 0, rx = 0, w = 0;
    auto has_prop = [](const SectionInfo& s, std::string_view p) {
        return std::find(s.properties.begin(), s.properties.end(), p) != s.properties.end();
    };
    for (const auto& s : sections) {
        if (s.size == 0) ++zero_size;
        if (s.name.empty()) ++empty_name;
        if (has_prop(s, "readable") && has_prop(s, "executable")) ++rx;
        if (has_prop(s, "writable")) ++w;
    }
    push(static_cast<double>(sections.size()));
    push(static_cast<double>(zero_size));
    push(static_cast<double>(empty_name));
    push(static_cast<double>(rx));
    push(static_cast<double>(w));

    std::vector<std::pair<std::string, double>> by_size, by_entropy, by_vsize;
    for (const auto& s : sections) {
        by_size.emplace_back(s.name, static_cast<double>(s.size));
        by_entropy.emplace_back(s.name, s.entropy);
        by_vsize.emplace_back(s.name, static_cast<double>(s.vsize));
    }
    push_all(hashed_pairs(by_size, 50));
    push_all(hashed_pairs(by_entropy, 50));
    push_all(hashed_pairs(by_vsize, 50));
    push_hashed_one(record.sections.entry, 50);
    const SectionInfo* entry_section = nullptr;
    for (const auto& s : sections)
        if (!record.sections.entry.empty() && s.name == record.sections.entry) {
            entry_section = &s;
            break;
        }
    push_hashed_tags(entry_section ? entry_section->properties : std::vector<std::string>{}, 50);

    std::set<std::string> libraries;
    for (const auto& [library, functions] : record.imports) libraries.insert(to_lower(library));
    std::vector<std::pair<std::string, double>> lib_pairs;
    for (const auto& lib : libraries) lib_pairs.emplace_back(lib, 1.0);
    push_all(hashed_pairs(lib_pairs, 128));
    push_all(import_vocab_features(record.imports, layout.import_vocabulary));

    std::vector<std::pair<std::string, double>> export_pairs;
    for (const auto& e : record.exports) export_pairs.emplace_back(e, 1.0);
    push_all(hashed_pairs(export_pairs, 128));

    for (const auto& dd : record.datadirectories) {
        push(static_cast<double>(dd.size));
        push(static_cast<double>(dd.virtual_address));
    }

    if (v.size() != layout.total_length)
        throw LayoutMismatchError("assembled " + std::to_string(v.size()) +
                                  " features, layout expects " +
                                  std::to_string(layout.total_length));

    FeatureVector fv;
    fv.layout_version = layout.version;
    fv.values.assign(v.begin(), v.end());
    return fv;
}

std::vector<std::pair<std::size_t, std::string>> layout_manifest(const FeatureLayout& layout) {
    std::vector<std::pair<std::size_t, std::string>> rows;
    rows.reserve(layout.total_length);
    std::size_t index = 0;
    for (const auto& block : layout.blocks) {
        for (std::size_t i = 0; i < block.length; ++i, ++index) {
            std::string name;
            if (!block.index_names.empty() && block.index_names.size() == block.length)
                name = block.name + "[" + block.index_names[i] + "]";
            else if (block.length == 1)
                name = block.name;
            else
                name = block.name + "[" + std::to_string(i) + "]";
            rows.emplace_back(index, std::move(name));
        }
    }
    return rows;
}

void write_manifest_csv(const FeatureLayout& layout, std::ostream& out) {
    auto csv_field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q.push_back(c);
        }
        q += "\"";
        return q;
    };
    out << "index,name\n";
    for (const auto& [index, name] : layout_manifest(layout))
        out << index << "," << csv_field(name) << "\n";
}

}  // namespace petaxon
