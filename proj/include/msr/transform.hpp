// Transformations from object multisets to label multisets: the exact
// pushforward of an element-wise labeling, and the expectation transformation
// induced by per-element label distributions. Both preserve cardinality;
// ground-truth targets for training pairs come from the pushforward.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msr/multiset.hpp"

namespace msr {

// Total labeling of element ids by labels in {1, ..., k}.
class UniverseTransformation {
public:
    UniverseTransformation() = default;
    explicit UniverseTransformation(int k) : k_(k) {}

    int k() const { return k_; }
    void set_label(int64_t element, int label);
    // Throws std::out_of_range naming the element when it is unlabeled.
    int label_of(int64_t element) const;
    bool has_label(int64_t element) const { return table_.count(element) != 0; }
    const std::map<int64_t, int>& table() const { return table_; }

private:
    int k_ = 0;
    std::map<int64_t, int> table_;
};

// Per-element probability vector over {1, ..., k_hat}. Each vector must be
// non-negative and sum to 1 within kRealTolerance.
class ProbabilisticTransformation {
public:
    ProbabilisticTransformation() = default;
    explicit ProbabilisticTransformation(int k_hat) : k_hat_(k_hat) {}

    int k_hat() const { return k_hat_; }
    void set_distribution(int64_t element, std::vector<double> probs);
    const std::vector<double>& distribution_of(int64_t element) const;
    bool has_distribution(int64_t element) const { return table_.count(element) != 0; }
    const std::map<int64_t, std::vector<double>>& table() const { return table_; }

    // Point mass on the element's label under t; matches pushforward exactly.
    static ProbabilisticTransformation point_mass(const UniverseTransformation& t);

private:
    int k_hat_ = 0;
    std::map<int64_t, std::vector<double>> table_;
};

// Label multiset of A under t, as a dense vector over [k]: component y-1
// accumulates the multiplicity of A's elements labeled y. Preserves
// cardinality.
LabelVector pushforward(const UniverseTransformation& t, const Multiset& a);

// Expected label multiset sum_x m_A(x) * l(x). Preserves cardinality.
LabelVector expectation_transform(const ProbabilisticTransformation& l, const Multiset& a);

struct GroundTruthPair {
    double symdiff = 0.0;
    double intersection = 0.0;
    ContainmentRelation relation = ContainmentRelation::Incomparable;
};

// Exact targets for a pair: |T(A) triangle T(B)|, |T(A) intersect T(B)|, and
// the containment relation between the label multisets.
GroundTruthPair ground_truth_pair(const UniverseTransformation& t, const Multiset& a,
                                  const Multiset& b);

// Text tables: "<element-id> <label>" lines, and
// "<element-id> p1 ... pk" lines, both sorted by element id.
std::string to_text(const UniverseTransformation& t);
UniverseTransformation labels_from_text(const std::string& text, int k);
std::string to_text(const ProbabilisticTransformation& l);
ProbabilisticTransformation distributions_from_text(const std::string& text, int k_hat);

}  // namespace msr
