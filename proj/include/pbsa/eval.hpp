#pragma once

#include <map>
#include <string>
#include <vector>

#include "pbsa/attribution.hpp"
#include "pbsa/data.hpp"
#include "pbsa/model.hpp"

namespace pbsa {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Undefined ratios (0/0) count as 0.
std::vector<ClassScores> per_class_scores(const std::vector<int>& predictions, const std::vector<int>& labels,
                                          int num_classes);
double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels, int num_classes);

struct AttributionQuality {
    double precision_at_1 = 0.0;
    double mean_reciprocal_rank = 0.0;
    std::size_t samples = 0;
};

// 1-based rank of each real token, most important first; ties go to the lower position.
std::vector<int> importance_ranks(const std::vector<double>& scores, bool lower_is_more_important);

// Results are matched to samples by id. Every sample needs ground-truth causal positions.
AttributionQuality attribution_quality(const std::vector<AttributionResult>& results,
                                       const std::vector<TokenizedSample>& samples,
                                       bool lower_is_more_important);

struct MetricsReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassScores> per_class;
    // Attribution metrics keyed by method name.
    std::map<std::string, AttributionQuality> attribution;
};

std::vector<int> predict_all(const Parameters& params, const std::vector<TokenizedSample>& samples);
std::vector<int> labels_of(const std::vector<TokenizedSample>& samples);

MetricsReport evaluate_classifier(const Parameters& params, const std::vector<TokenizedSample>& samples);

// `key=value` lines, keys prefixed by `prefix` (e.g. "pbsa.test.").
std::string format_metrics(const MetricsReport& report, const std::string& prefix);

}  // namespace pbsa
