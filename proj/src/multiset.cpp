#include "msr/multiset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace msr {

namespace {

bool is_whole(double x) { return std::floor(x) == x; }

// Applies a coordinate-wise combiner over the merged support of a and b.
template <typename F>
Multiset combine(const Multiset& a, const Multiset& b, F&& f) {
    Multiset out;
    auto ia = a.entries().begin(), ea = a.entries().end();
    auto ib = b.entries().begin(), eb = b.entries().end();
    while (ia != ea || ib != eb) {
        int64_t id;
        double ma = 0.0, mb = 0.0;
        if (ib == eb || (ia != ea && ia->first < ib->first)) {
            id = ia->first;
            ma = ia->second;
            ++ia;
        } else if (ia == ea || ib->first < ia->first) {
            id = ib->first;
            mb = ib->second;
            ++ib;
        } else {
            id = ia->first;
            ma = ia->second;
            mb = ib->second;
            ++ia;
            ++ib;
        }
        double m = f(ma, mb);
        if (m > 0.0) out.add(id, m);
    }
    return out;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

const char* to_string(ContainmentRelation r) {
    switch (r) {
        case ContainmentRelation::Equal: return "equal";
        case ContainmentRelation::ProperSubset: return "proper_subset";
        case ContainmentRelation::ProperSuperset: return "proper_superset";
        case ContainmentRelation::Incomparable: return "incomparable";
    }
    return "invalid";
}

Multiset::Multiset(std::initializer_list<std::pair<int64_t, double>> items) {
    for (const auto& [id, m] : items) add(id, m);
}

void Multiset::add(int64_t element, double multiplicity) {
    if (!std::isfinite(multiplicity) || multiplicity < 0.0)
        throw std::invalid_argument("multiset multiplicity must be finite and non-negative");
    if (multiplicity == 0.0) return;
    double& slot = entries_[element];
    slot += multiplicity;
    if (!is_whole(slot)) integer_valued_ = false;
}

double Multiset::multiplicity(int64_t element) const {
    auto it = entries_.find(element);
    return it == entries_.end() ? 0.0 : it->second;
}

Multiset intersect(const Multiset& a, const Multiset& b) {
    return combine(a, b, [](double x, double y) { return std::min(x, y); });
}

Multiset union_of(const Multiset& a, const Multiset& b) {
    return combine(a, b, [](double x, double y) { return std::max(x, y); });
}

Multiset msum(const Multiset& a, const Multiset& b) {
    return combine(a, b, [](double x, double y) { return x + y; });
}

Multiset difference(const Multiset& a, const Multiset& b) {
    return combine(a, b, [](double x, double y) { return std::max(x - y, 0.0); });
}

Multiset sym_difference(const Multiset& a, const Multiset& b) {
    return combine(a, b, [](double x, double y) { return std::abs(x - y); });
}

double cardinality(const Multiset& a) {
    double total = 0.0;
    for (const auto& [id, m] : a.entries()) total += m;
    return total;
}

ContainmentRelation containment_relation(const Multiset& a, const Multiset& b, double tol) {
    bool a_in_b = true, b_in_a = true;
    for (const auto& [id, m] : a.entries())
        if (m > b.multiplicity(id) + tol) a_in_b = false;
    for (const auto& [id, m] : b.entries())
        if (m > a.multiplicity(id) + tol) b_in_a = false;
    if (a_in_b && b_in_a) return ContainmentRelation::Equal;
    if (a_in_b) return ContainmentRelation::ProperSubset;
    if (b_in_a) return ContainmentRelation::ProperSuperset;
    return ContainmentRelation::Incomparable;
}

double LabelVector::cardinality() const {
    double total = 0.0;
    for (double c : components) total += c;
    return total;
}

static void require_same_dim(const LabelVector& r, const LabelVector& s) {
    if (r.size() != s.size())
        throw std::invalid_argument("label vectors have mismatched dimensions: " +
                                    std::to_string(r.size()) + " vs " + std::to_string(s.size()));
}

double symdiff_size_from_reps(const LabelVector& r, const LabelVector& s) {
    require_same_dim(r, s);
    double total = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) total += std::abs(r[i] - s[i]);
    return total;
}

double intersection_size_from_reps(const LabelVector& r, const LabelVector& s) {
    require_same_dim(r, s);
    double total = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) total += std::min(r[i], s[i]);
    return total;
}

ClampedValue intersection_from_symdiff(double a, double b, double d) {
    double raw = (a + b - d) / 2.0;
    ClampedValue out{raw, false};
    double hi = std::min(a, b);
    if (raw < 0.0) {
        out.value = 0.0;
        out.clamped = true;
    } else if (raw > hi) {
        out.value = hi;
        out.clamped = true;
    }
    return out;
}

ContainmentRelation containment_relation(const LabelVector& r, const LabelVector& s, double tol) {
    require_same_dim(r, s);
    bool r_in_s = true, s_in_r = true;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] > s[i] + tol) r_in_s = false;
        if (s[i] > r[i] + tol) s_in_r = false;
    }
    if (r_in_s && s_in_r) return ContainmentRelation::Equal;
    if (r_in_s) return ContainmentRelation::ProperSubset;
    if (s_in_r) return ContainmentRelation::ProperSuperset;
    return ContainmentRelation::Incomparable;
}

ContainmentRelation relation_from_sizes(double a, double b, double d_hat, double tau) {
    // The sizes a and b are exact inputs; only d_hat carries prediction
    // noise, so tau margins the d_hat test alone. For whole-number multisets
    // d and |b - a| differ by an even integer, making any tau in (0, 2)
    // reproduce the exact relation when d_hat is exact.
    double gap = b - a;
    if (std::abs(gap) <= kRealTolerance)
        return d_hat <= tau ? ContainmentRelation::Equal : ContainmentRelation::Incomparable;
    if (gap > 0.0)
        return d_hat <= gap + tau ? ContainmentRelation::ProperSubset
                                  : ContainmentRelation::Incomparable;
    return d_hat <= -gap + tau ? ContainmentRelation::ProperSuperset
                               : ContainmentRelation::Incomparable;
}

std::string to_text(const Multiset& a) {
    std::string out;
    for (const auto& [id, m] : a.entries()) {
        out += std::to_string(id);
        out += ' ';
        out += format_double(m);
        out += '\n';
    }
    return out;
}

Multiset multiset_from_text(const std::string& text) {
    Multiset out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int64_t id;
        double m;
        if (!(ls >> id >> m)) {
            throw std::invalid_argument("bad multiset line " + std::to_string(lineno) + ": '" +
                                        line + "'");
        }
        std::string rest;
        if (ls >> rest)
            throw std::invalid_argument("trailing tokens on multiset line " +
                                        std::to_string(lineno));
        out.add(id, m);
    }
    return out;
}

}  // namespace msr
