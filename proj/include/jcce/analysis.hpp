#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jcce/model.hpp"

namespace jcce {

/// arccos(cosine) / pi in [0, 1]. Throws NumericError for vectors with norm
/// below 1e-12 and ShapeError for unequal lengths.
double angular_distance(const Vector& x, const Vector& y);

/// Embeddings with one content label per row. Zero-norm rows are rejected.
struct LabeledEmbeddings {
    Matrix embeddings;
    std::vector<std::size_t> labels;

    LabeledEmbeddings() = default;
    LabeledEmbeddings(Matrix embeddings, std::vector<std::size_t> labels);
    std::size_t size() const { return labels.size(); }
};

struct SnnmValue {
    double value = 0.0;
    std::size_t skipped = 0;  // rows without a same-label neighbour
};

/// Soft nearest neighbour measure over angular distances at temperature T.
/// Lower means less entangled classes. Throws NumericError if every row is skipped.
SnnmValue snnm(const LabeledEmbeddings& sample, double temperature);

/// snnm at every temperature, sharing one distance matrix.
std::vector<SnnmValue> snnm_grid(const LabeledEmbeddings& sample, std::span<const double> temperatures);

struct SnnmCurve {
    std::vector<double> temperatures;
    std::vector<double> means;
    std::vector<double> ci95;  // normal-approximation half-width
    std::vector<std::size_t> skipped;  // summed over repetitions
    std::size_t repetitions = 0;
    std::size_t sample_size = 0;
};

/// `count` log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t count);
std::vector<double> default_temperature_grid();  // 20 points over [1e-2, 1e2]

/// Each repetition draws one sample of n rows (without replacement when
/// n <= available) and evaluates it at every temperature.
SnnmCurve snnm_sweep(const LabeledEmbeddings& all, std::span<const double> temperatures, std::size_t repetitions,
                     std::size_t n, Rng& rng);

/// Context embeddings of the test events, labelled by catalog index. Events
/// whose item is not in the catalog are skipped.
LabeledEmbeddings context_embeddings(std::span<const ViewingEvent> log, const JcceModel& model,
                                     const Catalog& catalog);

/// Mean context embedding over events whose item equals `content`. Throws
/// DataError when there is none.
Vector average_context_embedding(std::span<const ViewingEvent> log, const JcceModel& model,
                                 const Attributes& content);

struct SimilarityMatrix {
    Matrix values;                  // M x M: 1 - theta(mean context of i, content j)
    std::vector<double> dispersion;  // mean of 1 - theta(mean context of i, each context of i)
    std::vector<bool> present;       // false: content absent from the log, row left NaN
};

SimilarityMatrix similarity_matrix(std::span<const ViewingEvent> log, const JcceModel& model, const Catalog& catalog);

/// CSV "label,e0,...,e{E-1}" at 17 significant digits.
void export_embeddings(const Matrix& embeddings, std::span<const std::string> labels,
                       const std::filesystem::path& path);

struct ExportedEmbeddings {
    Matrix embeddings;
    std::vector<std::string> labels;
};
ExportedEmbeddings import_embeddings(const std::filesystem::path& path);

}  // namespace jcce
