#include "commprobe/aligneval.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace commprobe::aligneval {

using nlohmann::json;

std::string_view source_tag_name(SourceTag tag) {
    switch (tag) {
        case SourceTag::Human: return "human";
        case SourceTag::Vanilla: return "vanilla";
        case SourceTag::Finetuned: return "finetuned";
    }
    return "unknown";
}

EmbeddingSet EmbeddingSet::from_rows(const std::vector<std::vector<double>>& rows, SourceTag source,
                                     std::string community) {
    EmbeddingSet set;
    set.source = source;
    set.community = std::move(community);
    const auto d = rows.empty() ? 0 : rows.front().size();
    set.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) throw ValidationError("embedding rows have differing dimensions");
        for (std::size_t k = 0; k < d; ++k) {
            set.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    return set;
}

GaussianSummary summarize(const EmbeddingSet& set, const FidOptions& options) {
    const auto n = set.vectors.rows();
    const auto d = set.vectors.cols();
    if (n < 2) throw ValidationError("FID needs at least 2 vectors per set");
    if (!set.vectors.allFinite()) throw ValidationError("embedding set contains non-finite values");
    if (n < d + 1) {
        log::warn("embedding set (" + std::string(source_tag_name(set.source)) + " " + set.community + ") has n=" +
                  std::to_string(n) + " < d+1=" + std::to_string(d + 1) + "; covariance relies on regularization");
    }
    GaussianSummary g;
    g.mean = set.vectors.colwise().mean().transpose();
    const Eigen::MatrixXd centered = set.vectors.rowwise() - g.mean.transpose();
    g.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    g.cov = 0.5 * (g.cov + g.cov.transpose());
    g.cov.diagonal().array() += options.epsilon;
    return g;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

double fid(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.mean.size() != b.mean.size()) throw ValidationError("FID dimension mismatch");
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const Eigen::MatrixXd root_a = psd_sqrt(a.cov);
    Eigen::MatrixXd inner = root_a * b.cov * root_a;
    inner = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    const double trace_root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * trace_root;
    return std::max(0.0, value);
}

double fid(const EmbeddingSet& a, const EmbeddingSet& b, const FidOptions& options) {
    if (a.vectors.cols() != b.vectors.cols()) throw ValidationError("FID dimension mismatch");
    return fid(summarize(a, options), summarize(b, options));
}

// ---------------------------------------------------------------- histograms

std::size_t Histogram::mass() const {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    return total;
}

json Histogram::to_json() const { return json{{"lo", lo}, {"hi", hi}, {"counts", counts}}; }

Histogram make_histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
    if (bins == 0) throw ValidationError("histogram needs at least one bin");
    if (!(hi > lo)) throw ValidationError("histogram range is empty");
    Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
    for (double v : values) {
        if (v < lo || v > hi) throw ValidationError("value outside histogram range");
        auto idx = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
        ++h.counts[std::min(idx, bins - 1)];
    }
    return h;
}

json ToxicitySlice::to_json() const {
    return json{{"threshold", threshold}, {"retained", retained.size()}, {"histogram", histogram.to_json()}};
}

ToxicitySlice toxicity_slice(const std::vector<double>& scores, double threshold, std::size_t bins) {
    ToxicitySlice slice;
    slice.threshold = threshold;
    for (double s : scores) {
        if (s >= threshold) slice.retained.push_back(s);
    }
    slice.histogram = make_histogram(slice.retained, bins);
    return slice;
}

ToxicitySlice toxicity_distribution(const std::vector<std::string>& texts, backend::LabelScorer& scorer,
                                    double threshold, std::size_t bins) {
    const auto rows = backend::score_labels(scorer, texts, backend::LabelSpace::Toxicity);
    std::vector<double> scores;
    scores.reserve(rows.size());
    for (const auto& r : rows) scores.push_back(r.front());
    return toxicity_slice(scores, threshold, bins);
}

json EmotionSlice::to_json() const {
    json freq = json::object();
    const auto& labels = backend::emotion_labels();
    for (std::size_t k = 0; k < labels.size(); ++k) {
        freq[labels[k]] = frequencies.empty() ? json(nullptr) : json(frequencies[k]);
    }
    return json{{"texts", texts}, {"degenerate", degenerate}, {"activations", activations}, {"frequencies", freq}};
}

EmotionSlice emotion_slice(const backend::ScoreRows& rows, double decision) {
    const auto width = backend::emotion_labels().size();
    EmotionSlice slice;
    slice.activations.assign(width, 0);
    slice.texts = rows.size();
    std::size_t total = 0;
    for (const auto& row : rows) {
        if (row.size() != width) throw ValidationError("emotion row has wrong width");
        for (std::size_t k = 0; k < width; ++k) {
            if (row[k] >= decision) {
                ++slice.activations[k];
                ++total;
            }
        }
    }
    if (total == 0) {
        slice.degenerate = true;
        return slice;
    }
    slice.frequencies.resize(width);
    for (std::size_t k = 0; k < width; ++k) {
        slice.frequencies[k] = static_cast<double>(slice.activations[k]) / static_cast<double>(total);
    }
    return slice;
}

EmotionSlice emotion_distribution(const std::vector<std::string>& texts, backend::LabelScorer& scorer,
                                  double decision) {
    return emotion_slice(backend::score_labels(scorer, texts, backend::LabelSpace::Emotion), decision);
}

// ---------------------------------------------------------------- accuracy

std::string normalize_label(std::string_view s) { return util::collapse_whitespace(util::to_lower_ascii(s)); }

json AccuracyReport::to_json() const {
    return json{{"accuracy", accuracy}, {"total", total},   {"correct", correct},
                {"unparseable", unparseable}, {"labels", labels}, {"confusion", confusion}};
}

AccuracyReport classification_accuracy(const std::vector<std::string>& predictions,
                                       const std::vector<std::string>& gold,
                                       const std::vector<std::string>& labels) {
    if (predictions.empty() || gold.empty()) throw ValidationError("classification accuracy needs non-empty inputs");
    if (predictions.size() != gold.size()) throw ValidationError("predictions and gold differ in length");
    if (labels.empty()) throw ValidationError("label space is empty");
    std::vector<std::string> normalized;
    for (const auto& l : labels) normalized.push_back(normalize_label(l));
    auto index_of = [&](std::string_view s) -> std::optional<std::size_t> {
        auto n = normalize_label(s);
        auto it = std::find(normalized.begin(), normalized.end(), n);
        if (it == normalized.end()) return std::nullopt;
        return static_cast<std::size_t>(it - normalized.begin());
    };

    AccuracyReport report;
    report.labels = labels;
    report.total = gold.size();
    report.confusion.assign(labels.size(), std::vector<std::size_t>(labels.size() + 1, 0));
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto g = index_of(gold[i]);
        if (!g) throw ValidationError("gold label outside the label space: '" + gold[i] + "'");
        auto p = index_of(predictions[i]);
        if (!p) {
            ++report.unparseable;
            ++report.confusion[*g][labels.size()];
            continue;
        }
        ++report.confusion[*g][*p];
        if (*p == *g) ++report.correct;
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    return report;
}

double distribution_distance(const std::vector<double>& pa, const std::vector<double>& pb) {
    if (pa.size() != pb.size()) throw ValidationError("histograms use different binning");
    if (pa.empty()) throw ValidationError("histograms are empty");
    auto normalize = [](const std::vector<double>& h) {
        std::vector<double> p(h.size());
        double total = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (!(h[i] >= 0.0) || !std::isfinite(h[i])) throw ValidationError("histogram has a negative or non-finite bin");
            p[i] = h[i] > 0.0 ? h[i] : 1e-12;
            total += p[i];
        }
        for (auto& x : p) x /= total;
        return p;
    };
    const auto p = normalize(pa);
    const auto q = normalize(pb);
    double jsd = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        jsd += 0.5 * p[i] * std::log2(p[i] / m) + 0.5 * q[i] * std::log2(q[i] / m);
    }
    return std::max(0.0, jsd);
}

std::vector<std::string> classify(backend::GenerationBackend& classifier, const std::vector<std::string>& instructions,
                                  std::size_t concurrency, std::uint64_t seed) {
    std::vector<backend::GenerationRequest> requests;
    requests.reserve(instructions.size());
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        backend::GenerationRequest r;
        r.prompt = instructions[i];
        r.n_samples = 1;
        r.temperature = 0.0;
        r.max_tokens = 16;
        r.seed = util::derive_seed(seed, "classify/" + std::to_string(i));
        requests.push_back(std::move(r));
    }
    std::vector<std::string> out;
    for (const auto& o : backend::generate_batch(classifier, requests, concurrency)) {
        out.push_back(o.result && !o.result->completions.empty() ? o.result->completions.front() : std::string());
    }
    return out;
}

}  // namespace commprobe::aligneval
