#include "msr/transform.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace msr {

void UniverseTransformation::set_label(int64_t element, int label) {
    if (label < 1 || label > k_)
        throw std::invalid_argument("label " + std::to_string(label) + " outside [1, " +
                                    std::to_string(k_) + "]");
    table_[element] = label;
}

int UniverseTransformation::label_of(int64_t element) const {
    auto it = table_.find(element);
    if (it == table_.end())
        throw std::out_of_range("element " + std::to_string(element) + " has no label");
    return it->second;
}

void ProbabilisticTransformation::set_distribution(int64_t element, std::vector<double> probs) {
    if (static_cast<int>(probs.size()) != k_hat_)
        throw std::invalid_argument("distribution for element " + std::to_string(element) +
                                    " has dimension " + std::to_string(probs.size()) +
                                    ", expected " + std::to_string(k_hat_));
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0 || !std::isfinite(p))
            throw std::invalid_argument("distribution for element " + std::to_string(element) +
                                        " has a negative or non-finite component");
        total += p;
    }
    if (std::abs(total - 1.0) > kRealTolerance)
        throw std::invalid_argument("distribution for element " + std::to_string(element) +
                                    " sums to " + std::to_string(total) + ", expected 1");
    table_[element] = std::move(probs);
}

const std::vector<double>& ProbabilisticTransformation::distribution_of(int64_t element) const {
    auto it = table_.find(element);
    if (it == table_.end())
        throw std::out_of_range("element " + std::to_string(element) + " has no distribution");
    return it->second;
}

ProbabilisticTransformation ProbabilisticTransformation::point_mass(
    const UniverseTransformation& t) {
    ProbabilisticTransformation out(t.k());
    for (const auto& [element, label] : t.table()) {
        std::vector<double> probs(t.k(), 0.0);
        probs[label - 1] = 1.0;
        out.set_distribution(element, std::move(probs));
    }
    return out;
}

LabelVector pushforward(const UniverseTransformation& t, const Multiset& a) {
    LabelVector out(t.k());
    for (const auto& [element, m] : a.entries()) {
        int label = t.label_of(element);
        out[label - 1] += m;
    }
    return out;
}

LabelVector expectation_transform(const ProbabilisticTransformation& l, const Multiset& a) {
    LabelVector out(l.k_hat());
    for (const auto& [element, m] : a.entries()) {
        const auto& probs = l.distribution_of(element);
        for (int i = 0; i < l.k_hat(); ++i) out[i] += m * probs[i];
    }
    return out;
}

GroundTruthPair ground_truth_pair(const UniverseTransformation& t, const Multiset& a,
                                  const Multiset& b) {
    LabelVector ra = pushforward(t, a);
    LabelVector rb = pushforward(t, b);
    GroundTruthPair out;
    out.symdiff = symdiff_size_from_reps(ra, rb);
    out.intersection = intersection_size_from_reps(ra, rb);
    out.relation = containment_relation(ra, rb);
    return out;
}

std::string to_text(const UniverseTransformation& t) {
    std::string out;
    for (const auto& [element, label] : t.table()) {
        out += std::to_string(element);
        out += ' ';
        out += std::to_string(label);
        out += '\n';
    }
    return out;
}

UniverseTransformation labels_from_text(const std::string& text, int k) {
    UniverseTransformation out(k);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int64_t element;
        int label;
        if (!(ls >> element >> label))
            throw std::invalid_argument("bad label line " + std::to_string(lineno) + ": '" +
                                        line + "'");
        out.set_label(element, label);
    }
    return out;
}

std::string to_text(const ProbabilisticTransformation& l) {
    std::string out;
    char buf[64];
    for (const auto& [element, probs] : l.table()) {
        out += std::to_string(element);
        for (double p : probs) {
            std::snprintf(buf, sizeof(buf), " %.17g", p);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

ProbabilisticTransformation distributions_from_text(const std::string& text, int k_hat) {
    ProbabilisticTransformation out(k_hat);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int64_t element;
        if (!(ls >> element))
            throw std::invalid_argument("bad distribution line " + std::to_string(lineno));
        std::vector<double> probs(k_hat);
        for (int i = 0; i < k_hat; ++i) {
            if (!(ls >> probs[i]))
                throw std::invalid_argument("distribution line " + std::to_string(lineno) +
                                            " has fewer than " + std::to_string(k_hat) +
                                            " components");
        }
        out.set_distribution(element, std::move(probs));
    }
    return out;
}

}  // namespace msr
