#include "pbsa/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "pbsa/errors.hpp"

namespace pbsa {

namespace {

void check_lengths(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw ContractViolation("predictions and labels differ in length");
    }
    if (predictions.empty()) throw ContractViolation("metrics need at least one prediction");
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    check_lengths(predictions, labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<ClassScores> per_class_scores(const std::vector<int>& predictions, const std::vector<int>& labels,
                                          int num_classes) {
    check_lengths(predictions, labels);
    std::vector<double> tp(num_classes, 0.0), fp(num_classes, 0.0), fn(num_classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        const int p = predictions[i];
        if (y < 0 || y >= num_classes || p < 0 || p >= num_classes) {
            throw ContractViolation("class index outside [0, num_classes)");
        }
        if (p == y) {
            tp[y] += 1;
        } else {
            fp[p] += 1;
            fn[y] += 1;
        }
    }
    std::vector<ClassScores> out(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        out[c].precision = safe_ratio(tp[c], tp[c] + fp[c]);
        out[c].recall = safe_ratio(tp[c], tp[c] + fn[c]);
        out[c].f1 = safe_ratio(2.0 * tp[c], 2.0 * tp[c] + fp[c] + fn[c]);
    }
    return out;
}

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels, int num_classes) {
    const auto scores = per_class_scores(predictions, labels, num_classes);
    double sum = 0.0;
    for (const auto& s : scores) sum += s.f1;
    return sum / static_cast<double>(num_classes);
}

std::vector<int> importance_ranks(const std::vector<double>& scores, bool lower_is_more_important) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return lower_is_more_important ? scores[a] < scores[b] : scores[a] > scores[b];
    });
    std::vector<int> rank(scores.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r) + 1;
    return rank;
}

AttributionQuality attribution_quality(const std::vector<AttributionResult>& results,
                                       const std::vector<TokenizedSample>& samples,
                                       bool lower_is_more_important) {
    std::unordered_map<std::uint64_t, const AttributionResult*> by_id;
    for (const auto& r : results) by_id[r.sample_id] = &r;

    AttributionQuality q;
    for (const auto& s : samples) {
        if (s.causal_positions.empty()) {
            throw ContractViolation("sample " + std::to_string(s.id) + " has no ground-truth causal position");
        }
        auto it = by_id.find(s.id);
        if (it == by_id.end()) throw LookupError("no attribution for sample id " + std::to_string(s.id));
        const auto positions = s.real_positions();
        if (it->second->scores.size() != positions.size()) {
            throw ContractViolation("attribution length does not match sample " + std::to_string(s.id));
        }
        const auto rank = importance_ranks(it->second->scores, lower_is_more_important);
        // Best-ranked causal token counts when a sample has several.
        int best = static_cast<int>(positions.size()) + 1;
        for (int cp : s.causal_positions) {
            const auto k = std::find(positions.begin(), positions.end(), cp) - positions.begin();
            if (static_cast<std::size_t>(k) == positions.size()) {
                throw ContractViolation("causal position is not a real token in sample " + std::to_string(s.id));
            }
            best = std::min(best, rank[k]);
        }
        q.precision_at_1 += best == 1 ? 1.0 : 0.0;
        q.mean_reciprocal_rank += 1.0 / best;
        ++q.samples;
    }
    if (q.samples == 0) throw ContractViolation("attribution quality needs at least one sample");
    q.precision_at_1 /= static_cast<double>(q.samples);
    q.mean_reciprocal_rank /= static_cast<double>(q.samples);
    return q;
}

std::vector<int> predict_all(const Parameters& params, const std::vector<TokenizedSample>& samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict(params, s));
    return out;
}

std::vector<int> labels_of(const std::vector<TokenizedSample>& samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
}

MetricsReport evaluate_classifier(const Parameters& params, const std::vector<TokenizedSample>& samples) {
    const auto preds = predict_all(params, samples);
    const auto labels = labels_of(samples);
    const int classes = static_cast<int>(params.config.num_classes);
    MetricsReport r;
    r.accuracy = accuracy(preds, labels);
    r.per_class = per_class_scores(preds, labels, classes);
    r.macro_f1 = macro_f1(preds, labels, classes);
    return r;
}

std::string format_metrics(const MetricsReport& report, const std::string& prefix) {
    std::ostringstream out;
    out << std::setprecision(10);
    out << prefix << "accuracy=" << report.accuracy << '\n';
    out << prefix << "macro_f1=" << report.macro_f1 << '\n';
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& s = report.per_class[c];
        out << prefix << "class" << c << ".precision=" << s.precision << '\n';
        out << prefix << "class" << c << ".recall=" << s.recall << '\n';
        out << prefix << "class" << c << ".f1=" << s.f1 << '\n';
    }
    for (const auto& [method, q] : report.attribution) {
        out << prefix << "attribution." << method << ".precision_at_1=" << q.precision_at_1 << '\n';
        out << prefix << "attribution." << method << ".mrr=" << q.mean_reciprocal_rank << '\n';
    }
    return out.str();
}

}  // namespace pbsa
