#include "jcce/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "jcce/csv.hpp"
#include "jcce/errors.hpp"

namespace jcce {
namespace {

constexpr double kMinNorm = 1e-12;

Matrix pairwise_angles(const Matrix& x) {
    const Eigen::Index n = x.rows();
    Vector inv_norm(n);
    for (Eigen::Index i = 0; i < n; ++i) inv_norm[i] = 1.0 / x.row(i).norm();
    Matrix theta(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        theta(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double c = std::clamp(x.row(i).dot(x.row(j)) * inv_norm[i] * inv_norm[j], -1.0, 1.0);
            theta(i, j) = theta(j, i) = std::acos(c) / std::numbers::pi;
        }
    }
    return theta;
}

/// log sum_k exp(-theta_k / T) over the listed indices, max-shifted.
double log_mass(const Matrix& theta, Eigen::Index i, const std::vector<Eigen::Index>& idx, double t) {
    double m = -std::numeric_limits<double>::infinity();
    for (auto k : idx) m = std::max(m, -theta(i, k) / t);
    double s = 0.0;
    for (auto k : idx) s += std::exp(-theta(i, k) / t - m);
    return m + std::log(s);
}

}  // namespace

double angular_distance(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw ShapeError("angular_distance: lengths differ");
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx < kMinNorm || ny < kMinNorm) throw NumericError("angular_distance: zero-norm vector");
    const double c = std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
    return std::acos(c) / std::numbers::pi;
}

LabeledEmbeddings::LabeledEmbeddings(Matrix emb, std::vector<std::size_t> lab)
    : embeddings(std::move(emb)), labels(std::move(lab)) {
    if (static_cast<std::size_t>(embeddings.rows()) != labels.size()) {
        throw ShapeError("LabeledEmbeddings: one label per row required");
    }
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
        if (!(embeddings.row(i).norm() >= kMinNorm)) {
            throw NumericError("LabeledEmbeddings: zero-norm embedding in row " + std::to_string(i));
        }
    }
}

std::vector<SnnmValue> snnm_grid(const LabeledEmbeddings& sample, std::span<const double> temperatures) {
    const auto n = static_cast<Eigen::Index>(sample.size());
    if (n < 2) throw std::invalid_argument("snnm: need at least two embeddings");
    for (double t : temperatures) {
        if (!(t > 0.0)) throw std::invalid_argument("snnm: temperature must be positive");
    }
    const Matrix theta = pairwise_angles(sample.embeddings);

    std::vector<std::vector<Eigen::Index>> same(static_cast<std::size_t>(n)), others(static_cast<std::size_t>(n));
    std::size_t skipped = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) continue;
            others[static_cast<std::size_t>(i)].push_back(k);
            if (sample.labels[static_cast<std::size_t>(k)] == sample.labels[static_cast<std::size_t>(i)]) {
                same[static_cast<std::size_t>(i)].push_back(k);
            }
        }
        if (same[static_cast<std::size_t>(i)].empty()) ++skipped;
    }
    if (skipped == static_cast<std::size_t>(n)) {
        throw NumericError("snnm: undefined, no embedding has a same-label neighbour");
    }

    std::vector<SnnmValue> out;
    for (double t : temperatures) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& s = same[static_cast<std::size_t>(i)];
            if (s.empty()) continue;
            total += log_mass(theta, i, s, t) - log_mass(theta, i, others[static_cast<std::size_t>(i)], t);
        }
        const double used = static_cast<double>(static_cast<std::size_t>(n) - skipped);
        out.push_back({total == 0.0 ? 0.0 : -total / used, skipped});
    }
    return out;
}

SnnmValue snnm(const LabeledEmbeddings& sample, double temperature) {
    const double t[] = {temperature};
    return snnm_grid(sample, t).front();
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi > lo) || count < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi, count >= 2");
    std::vector<double> grid(count);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i) {
        grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return grid;
}

std::vector<double> default_temperature_grid() { return log_grid(1e-2, 1e2, 20); }

SnnmCurve snnm_sweep(const LabeledEmbeddings& all, std::span<const double> temperatures, std::size_t repetitions,
                     std::size_t n, Rng& rng) {
    if (repetitions < 1) throw std::invalid_argument("snnm_sweep: need at least one repetition");
    if (n < 2 || all.size() < 1) throw std::invalid_argument("snnm_sweep: sample size must be at least 2");
    for (std::size_t i = 1; i < temperatures.size(); ++i) {
        if (!(temperatures[i] > temperatures[i - 1])) {
            throw std::invalid_argument("snnm_sweep: temperature grid must be strictly increasing");
        }
    }
    SnnmCurve curve;
    curve.temperatures.assign(temperatures.begin(), temperatures.end());
    curve.repetitions = repetitions;
    curve.sample_size = n;
    const std::size_t nt = temperatures.size();
    std::vector<std::vector<double>> values(nt);
    curve.skipped.assign(nt, 0);

    const std::size_t available = all.size();
    std::vector<std::size_t> pool(available);
    for (std::size_t r = 0; r < repetitions; ++r) {
        std::vector<std::size_t> pick;
        if (n <= available) {
            std::iota(pool.begin(), pool.end(), std::size_t{0});
            for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.below(available - i)]);
            pick.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
        } else {
            for (std::size_t i = 0; i < n; ++i) pick.push_back(rng.below(available));
        }
        Matrix emb(static_cast<Eigen::Index>(n), all.embeddings.cols());
        std::vector<std::size_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            emb.row(static_cast<Eigen::Index>(i)) = all.embeddings.row(static_cast<Eigen::Index>(pick[i]));
            labels[i] = all.labels[pick[i]];
        }
        const LabeledEmbeddings sample(std::move(emb), std::move(labels));
        const auto vals = snnm_grid(sample, temperatures);
        for (std::size_t t = 0; t < nt; ++t) {
            values[t].push_back(vals[t].value);
            curve.skipped[t] += vals[t].skipped;
        }
    }
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& v = values[t];
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double half = 0.0;
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            half = 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
        }
        curve.means.push_back(mean);
        curve.ci95.push_back(half);
    }
    return curve;
}

LabeledEmbeddings context_embeddings(std::span<const ViewingEvent> log, const JcceModel& model,
                                     const Catalog& catalog) {
    std::vector<Vector> rows;
    std::vector<std::size_t> labels;
    for (const auto& e : log) {
        const auto j = catalog.index_of(e.item);
        if (!j) continue;
        rows.push_back(embed_context(model, vectorize_context(e, model.schema)));
        labels.push_back(*j);
    }
    Matrix emb(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.config.embedding_dim));
    for (std::size_t i = 0; i < rows.size(); ++i) emb.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return LabeledEmbeddings(std::move(emb), std::move(labels));
}

Vector average_context_embedding(std::span<const ViewingEvent> log, const JcceModel& model,
                                 const Attributes& content) {
    const std::string key = canonical_key(content);
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(model.config.embedding_dim));
    std::size_t count = 0;
    for (const auto& e : log) {
        if (canonical_key(e.item) != key) continue;
        sum += embed_context(model, vectorize_context(e, model.schema));
        ++count;
    }
    if (count == 0) throw DataError("average_context_embedding: no events for content " + key);
    return sum / static_cast<double>(count);
}

SimilarityMatrix similarity_matrix(std::span<const ViewingEvent> log, const JcceModel& model,
                                   const Catalog& catalog) {
    const std::size_t m = catalog.size();
    const auto mi = static_cast<Eigen::Index>(m);
    std::vector<std::vector<Vector>> contexts(m);
    for (const auto& e : log) {
        if (const auto j = catalog.index_of(e.item)) {
            contexts[*j].push_back(embed_context(model, vectorize_context(e, model.schema)));
        }
    }
    SimilarityMatrix out;
    out.values = Matrix::Constant(mi, mi, std::numeric_limits<double>::quiet_NaN());
    out.dispersion.assign(m, std::numeric_limits<double>::quiet_NaN());
    out.present.assign(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& ys = contexts[i];
        if (ys.empty()) continue;
        Vector mean = Vector::Zero(catalog.embeddings.cols());
        for (const auto& y : ys) mean += y;
        mean /= static_cast<double>(ys.size());
        for (std::size_t j = 0; j < m; ++j) {
            const Vector item = catalog.embeddings.row(static_cast<Eigen::Index>(j)).transpose();
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 - angular_distance(mean, item);
        }
        double acc = 0.0;
        for (const auto& y : ys) acc += 1.0 - angular_distance(mean, y);
        out.dispersion[i] = acc / static_cast<double>(ys.size());
        out.present[i] = true;
    }
    return out;
}

void export_embeddings(const Matrix& embeddings, std::span<const std::string> labels,
                       const std::filesystem::path& path) {
    if (static_cast<std::size_t>(embeddings.rows()) != labels.size()) {
        throw ShapeError("export_embeddings: one label per row required");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    std::vector<std::string> header{"label"};
    for (Eigen::Index c = 0; c < embeddings.cols(); ++c) header.push_back("e" + std::to_string(c));
    write_csv_row(out, header);
    for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
        std::vector<std::string> row{labels[static_cast<std::size_t>(r)]};
        for (Eigen::Index c = 0; c < embeddings.cols(); ++c) row.push_back(format_double(embeddings(r, c)));
        write_csv_row(out, row);
    }
    if (!out) throw DataError("failed writing " + path.string());
}

ExportedEmbeddings import_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    const auto rows = read_csv(in);
    if (rows.empty() || rows.front().empty() || rows.front().front() != "label") {
        throw DataError("import_embeddings: missing header in " + path.string());
    }
    const auto dim = static_cast<Eigen::Index>(rows.front().size() - 1);
    ExportedEmbeddings out;
    out.embeddings.resize(static_cast<Eigen::Index>(rows.size() - 1), dim);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != dim + 1) {
            throw DataError("import_embeddings: ragged row " + std::to_string(r));
        }
        out.labels.push_back(rows[r][0]);
        for (Eigen::Index c = 0; c < dim; ++c) {
            out.embeddings(static_cast<Eigen::Index>(r - 1), c) = parse_double(rows[r][static_cast<std::size_t>(c + 1)]);
        }
    }
    return out;
}

}  // namespace jcce
