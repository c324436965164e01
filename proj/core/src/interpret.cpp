#include "petaxon/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>

#include "petaxon/errors.hpp"

namespace petaxon {

namespace {

constexpr double kTolerance = 1e-9;
constexpr std::size_t kMaxIterations = 1000;
constexpr std::uint64_t kSeed = 0x70617065722035ULL;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// Two classical Gram-Schmidt passes; one pass loses orthogonality once the
// spectrum gets flat.
void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) {
            double proj = dot(v, b);
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * b[j];
        }
}

// w = (Xc^T Xc v)/(n-1) without materializing the centered matrix:
// y_i = x_i.v - m.v, then w_j = (sum_i x_ij y_i - m_j sum_i y_i)/(n-1).
void apply_covariance(const FloatMatrix& X, std::span<const double> mean,
                      std::span<const double> v, std::vector<double>& y,
                      std::vector<double>& w) {
    const std::size_t n = X.rows, d = X.cols;
    double mv = dot(mean, v);
    double y_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = X.row(i);
        double yi = 0.0;
        for (std::size_t j = 0; j < d; ++j) yi += static_cast<double>(row[j]) * v[j];
        yi -= mv;
        y[i] = yi;
        y_sum += yi;
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = X.row(i);
        double yi = y[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += static_cast<double>(row[j]) * yi;
    }
    double scale = 1.0 / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j) w[j] = (w[j] - mean[j] * y_sum) * scale;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string format_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

EmbeddingResult embed(const FloatMatrix& X, std::size_t k) {
    if (k == 0) throw ConfigError("embed requires k >= 1");
    if (X.rows < k)
        throw ConfigError("embed requires at least k rows, got " + std::to_string(X.rows));
    const std::size_t n = X.rows, d = X.cols;

    EmbeddingResult result;
    result.rows = n;

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (auto& m : mean) m /= static_cast<double>(n);

    double total_variance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double diff = static_cast<double>(row[j]) - mean[j];
            total_variance += diff * diff;
        }
    }
    total_variance /= static_cast<double>(n - 1);
    const double zero_variance = std::max(total_variance, 1.0) * 1e-12;

    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> y(n), w(d);

    for (std::size_t c = 0; c < k && result.components.size() == c; ++c) {
        if (total_variance == 0.0) break;

        std::vector<double> v(d);
        double v_norm = 0.0;
        for (int attempt = 0; attempt < 16 && v_norm <= 1e-12; ++attempt) {
            for (auto& x : v) x = gauss(rng);
            orthogonalize(v, result.components);
            v_norm = norm(v);
        }
        if (v_norm <= 1e-12) break;  // no direction left outside the found basis
        for (auto& x : v) x /= v_norm;

        bool degenerate = false;
        for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
            apply_covariance(X, mean, v, y, w);
            orthogonalize(w, result.components);
            double w_norm = norm(w);
            if (w_norm < zero_variance) {
                degenerate = true;  // deflated covariance annihilates v's subspace
                break;
            }
            for (auto& x : w) x /= w_norm;
            double align = dot(v, w);
            if (align < 0.0)
                for (auto& x : w) x = -x;
            v.swap(w);
            if (1.0 - std::abs(align) < kTolerance) break;
        }
        if (degenerate) break;

        apply_covariance(X, mean, v, y, w);
        double lambda = dot(v, w);  // Rayleigh quotient of the final iterate
        if (lambda < zero_variance) break;

        std::size_t largest = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(v[j]) > std::abs(v[largest])) largest = j;
        if (v[largest] < 0.0)
            for (auto& x : v) x = -x;

        result.components.push_back(std::move(v));
        result.explained_variance.push_back(lambda);
    }

    result.k = result.components.size();
    result.rank_deficient = result.k < k;

    result.coordinates.assign(n * result.k, 0.0);
    for (std::size_t c = 0; c < result.k; ++c) {
        const auto& v = result.components[c];
        double mv = dot(mean, v);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = X.row(i);
            double proj = 0.0;
            for (std::size_t j = 0; j < d; ++j) proj += static_cast<double>(row[j]) * v[j];
            result.coordinates[i * result.k + c] = proj - mv;
        }
    }
    return result;
}

std::vector<StageImportanceTable> importance_tables(const PipelineModel& model,
                                                    std::size_t top_k) {
    std::vector<StageImportanceTable> tables;
    for (StageId id : {StageId::detection, StageId::threat_type, StageId::family,
                       StageId::behavior, StageId::quarantine}) {
        const StageModel& stage = model.stage(id);
        StageImportanceTable table;
        table.stage = stage_name(id);
        table.trained = stage.trained;
        if (stage.trained) {
            table.blocks = block_importance(stage.model, model.layout);
            for (const auto& [name, gain] : table.blocks) table.total_gain += gain;
            if (table.blocks.size() > top_k) table.blocks.resize(top_k);
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

void write_importance_text(std::span<const StageImportanceTable> tables, std::ostream& out) {
    for (const auto& table : tables) {
        out << "== " << table.stage << " ==\n";
        if (!table.trained) {
            out << "  (stage not trained)\n\n";
            continue;
        }
        std::size_t width = 5;
        for (const auto& [name, gain] : table.blocks) width = std::max(width, name.size());
        out << "  " << std::left << std::setw(static_cast<int>(width)) << "block"
            << std::right << std::setw(16) << "gain" << std::setw(10) << "share" << "\n";
        for (const auto& [name, gain] : table.blocks) {
            double share = table.total_gain > 0.0 ? gain / table.total_gain : 0.0;
            out << "  " << std::left << std::setw(static_cast<int>(width)) << name
                << std::right << std::setw(16) << format_number(gain) << std::setw(9)
                << format_number(share * 100.0) << "%\n";
        }
        out << "\n";
    }
}

void write_importance_csv(std::span<const StageImportanceTable> tables, std::ostream& out) {
    out << "stage,rank,block,gain,share\n";
    for (const auto& table : tables) {
        if (!table.trained) continue;
        std::size_t rank = 1;
        for (const auto& [name, gain] : table.blocks) {
            double share = table.total_gain > 0.0 ? gain / table.total_gain : 0.0;
            out << csv_quote(table.stage) << ',' << rank++ << ',' << csv_quote(name) << ','
                << format_number(gain) << ',' << format_number(share) << "\n";
        }
    }
}

void embedding_export(const EmbeddingResult& result, std::span<const std::string> sha256s,
                      std::span<const std::string> labels, const std::string& path) {
    if (sha256s.size() != result.rows || labels.size() != result.rows)
        throw LengthMismatchError("embedding export requires one sha256 and label per row");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "sha256,x,y,z,label\n";
    for (std::size_t i = 0; i < result.rows; ++i) {
        out << csv_quote(sha256s[i]);
        for (std::size_t c = 0; c < 3; ++c) {
            double value = c < result.k ? result.coordinate(i, c) : 0.0;
            out << ',' << format_number(value);
        }
        out << ',' << csv_quote(labels[i]) << "\n";
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace petaxon
