// Exact multiset algebra over finite universes with real-valued
// multiplicities. Multisets are finite-support membership functions; the
// dominating measure is the counting measure, so cardinality is the sum of
// multiplicities. Classical bags are the special case of whole-number
// multiplicities, which the type tracks so parity-based guarantees apply.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace msr {

enum class ContainmentRelation {
    Equal = 0,
    ProperSubset = 1,
    ProperSuperset = 2,
    Incomparable = 3,
};

const char* to_string(ContainmentRelation r);

// Absolute tolerance for comparing real multiplicities and sizes.
inline constexpr double kRealTolerance = 1e-9;

// Finite-support map from element id to strictly positive multiplicity.
// Zero entries are never stored, so equality of multisets is equality of
// the stored maps.
class Multiset {
public:
    Multiset() = default;
    Multiset(std::initializer_list<std::pair<int64_t, double>> items);

    // Accumulates multiplicity onto an element. Throws std::invalid_argument
    // on negative or non-finite multiplicity; adding zero is a no-op.
    void add(int64_t element, double multiplicity);

    double multiplicity(int64_t element) const;
    const std::map<int64_t, double>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t support_size() const { return entries_.size(); }

    // True when every stored multiplicity is a whole number.
    bool integer_valued() const { return integer_valued_; }

    bool operator==(const Multiset& other) const { return entries_ == other.entries_; }

private:
    std::map<int64_t, double> entries_;
    bool integer_valued_ = true;
};

// The five binary operations, coordinate-wise on membership functions:
// min, max, sum, clamped subtraction, absolute difference.
Multiset intersect(const Multiset& a, const Multiset& b);
Multiset union_of(const Multiset& a, const Multiset& b);
Multiset msum(const Multiset& a, const Multiset& b);
Multiset difference(const Multiset& a, const Multiset& b);
Multiset sym_difference(const Multiset& a, const Multiset& b);

// Total multiplicity mass under the counting measure.
double cardinality(const Multiset& a);

// Exact containment: A subset of B iff m_A(x) <= m_B(x) everywhere, with an
// absolute tolerance on each comparison.
ContainmentRelation containment_relation(const Multiset& a, const Multiset& b,
                                         double tol = kRealTolerance);

// Dense multiplicity vector of a multiset over the finite universe
// {1, ..., k}. Component i-1 holds the multiplicity of label i.
struct LabelVector {
    std::vector<double> components;

    LabelVector() = default;
    explicit LabelVector(std::size_t k) : components(k, 0.0) {}
    LabelVector(std::initializer_list<double> values) : components(values) {}

    std::size_t size() const { return components.size(); }
    double& operator[](std::size_t i) { return components[i]; }
    double operator[](std::size_t i) const { return components[i]; }
    bool operator==(const LabelVector& other) const = default;

    double cardinality() const;
};

// |R triangle S| as the l1 distance between natural representations.
// Throws std::invalid_argument on dimension mismatch.
double symdiff_size_from_reps(const LabelVector& r, const LabelVector& s);

// |R intersect S| as the sum of coordinate-wise minima.
double intersection_size_from_reps(const LabelVector& r, const LabelVector& s);

struct ClampedValue {
    double value = 0.0;
    bool clamped = false;
};

// Recovers an intersection size from |A|, |B| and a (possibly predicted)
// symmetric-difference size via (a + b - d) / 2, clamped to [0, min(a, b)].
ClampedValue intersection_from_symdiff(double a, double b, double d);

ContainmentRelation containment_relation(const LabelVector& r, const LabelVector& s,
                                         double tol = kRealTolerance);

// Size-based decision rule: given |A|, |B| and a predicted symmetric
// difference size, pick the containment class within margin tau.
ContainmentRelation relation_from_sizes(double a, double b, double d_hat, double tau);

// Text form: one "<element-id> <multiplicity>" line per element, sorted by
// id. Multiplicities round-trip exactly.
std::string to_text(const Multiset& a);
Multiset multiset_from_text(const std::string& text);

}  // namespace msr
