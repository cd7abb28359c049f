#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "commprobe/backend.hpp"

namespace commprobe::aligneval {

enum class SourceTag { Human, Vanilla, Finetuned };
std::string_view source_tag_name(SourceTag tag);

struct EmbeddingSet {
    Eigen::MatrixXd vectors;  // one row per text
    SourceTag source = SourceTag::Human;
    std::string community;

    static EmbeddingSet from_rows(const std::vector<std::vector<double>>& rows, SourceTag source = SourceTag::Human,
                                  std::string community = {});
};

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // unbiased sample covariance + epsilon * I
};

struct FidOptions {
    double epsilon = 1e-6;
};

GaussianSummary summarize(const EmbeddingSet& set, const FidOptions& options = {});

/// Frechet distance between Gaussians fitted to two embedding sets:
/// |mu_a - mu_b|^2 + Tr(Ca + Cb - 2 (Ca Cb)^{1/2}), clamped to >= 0.
/// The trace of the square root is taken through the symmetric form
/// Ca^{1/2} Cb Ca^{1/2}, with negative eigenvalues clamped to zero.
double fid(const EmbeddingSet& a, const EmbeddingSet& b, const FidOptions& options = {});
double fid(const GaussianSummary& a, const GaussianSummary& b);

/// Symmetric PSD square root by eigendecomposition (negative eigenvalues clamped).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::size_t> counts;

    std::size_t mass() const;
    nlohmann::json to_json() const;
};

Histogram make_histogram(const std::vector<double>& values, std::size_t bins, double lo = 0.0, double hi = 1.0);

struct ToxicitySlice {
    std::vector<double> retained;  // scores >= threshold, input order
    Histogram histogram;
    double threshold = 0.05;

    nlohmann::json to_json() const;
};

/// Keeps scores >= threshold (inclusive) and bins them over [0, 1].
ToxicitySlice toxicity_slice(const std::vector<double>& scores, double threshold = 0.05, std::size_t bins = 20);
ToxicitySlice toxicity_distribution(const std::vector<std::string>& texts, backend::LabelScorer& scorer,
                                    double threshold = 0.05, std::size_t bins = 20);

struct EmotionSlice {
    std::vector<std::size_t> activations;  // per label in emotion_labels() order
    std::vector<double> frequencies;       // empty when degenerate
    std::size_t texts = 0;
    bool degenerate = false;

    nlohmann::json to_json() const;
};

/// Multi-label decision at `decision`; frequencies normalized by total activations.
EmotionSlice emotion_slice(const backend::ScoreRows& rows, double decision = 0.5);
EmotionSlice emotion_distribution(const std::vector<std::string>& texts, backend::LabelScorer& scorer,
                                  double decision = 0.5);

struct AccuracyReport {
    double accuracy = 0.0;
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t unparseable = 0;
    std::vector<std::string> labels;
    /// confusion[gold][pred]; the extra last column counts unparseable predictions.
    std::vector<std::vector<std::size_t>> confusion;

    nlohmann::json to_json() const;
};

/// Lowercases ASCII letters and collapses whitespace.
std::string normalize_label(std::string_view s);

/// Exact match after normalization; anything outside the label space is unparseable.
AccuracyReport classification_accuracy(const std::vector<std::string>& predictions,
                                       const std::vector<std::string>& gold,
                                       const std::vector<std::string>& labels);

/// One greedy completion per classification prompt; an empty string marks a failed request.
std::vector<std::string> classify(backend::GenerationBackend& classifier, const std::vector<std::string>& prompts,
                                  std::size_t concurrency = 4, std::uint64_t seed = 0);

/// Jensen-Shannon divergence in bits. Zero bins are smoothed to 1e-12 before normalizing.
double distribution_distance(const std::vector<double>& pa, const std::vector<double>& pb);

}  // namespace commprobe::aligneval
