#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "msr/multiset.hpp"
#include "msr/rng.hpp"

using namespace msr;

namespace {

// A = {1,1,1,2,2}, B = {1,1,2,3} as membership maps.
Multiset example_a() { return Multiset{{1, 3.0}, {2, 2.0}}; }
Multiset example_b() { return Multiset{{1, 2.0}, {2, 1.0}, {3, 1.0}}; }

Multiset random_integer_multiset(Rng& rng, int max_universe = 8, int max_mult = 5) {
    Multiset out;
    int support = static_cast<int>(rng.uniform_int(0, max_universe));
    for (int i = 0; i < support; ++i) {
        int64_t id = rng.uniform_int(1, max_universe);
        int64_t mult = rng.uniform_int(0, max_mult);
        if (mult > 0) out.add(id, static_cast<double>(mult));
    }
    return out;
}

}  // namespace

TEST_CASE("intersection takes coordinate-wise minima") {
    Multiset r = intersect(example_a(), example_b());
    CHECK(r == Multiset{{1, 2.0}, {2, 1.0}});
    CHECK(intersect(Multiset{}, example_b()).empty());
    CHECK(intersect(Multiset{{1, 0.5}}, Multiset{{1, 1.2}}) == Multiset{{1, 0.5}});
}

TEST_CASE("union takes coordinate-wise maxima") {
    CHECK(union_of(example_a(), example_b()) == Multiset{{1, 3.0}, {2, 2.0}, {3, 1.0}});
    CHECK(union_of(Multiset{}, example_b()) == example_b());
    CHECK(union_of(example_a(), example_a()) == example_a());
}

TEST_CASE("msum adds memberships") {
    CHECK(msum(example_a(), example_b()) == Multiset{{1, 5.0}, {2, 3.0}, {3, 1.0}});
    CHECK(msum(Multiset{}, example_b()) == example_b());
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        Multiset a = random_integer_multiset(rng);
        Multiset b = random_integer_multiset(rng);
        CHECK(cardinality(msum(a, b)) == cardinality(a) + cardinality(b));
    }
}

TEST_CASE("difference clamps at zero") {
    CHECK(difference(example_a(), example_b()) == Multiset{{1, 1.0}, {2, 1.0}});
    CHECK(difference(example_a(), example_a()).empty());
    // A \ (A \ B) recovers the intersection.
    Multiset lhs = difference(example_a(), difference(example_a(), example_b()));
    CHECK(lhs == intersect(example_a(), example_b()));
}

TEST_CASE("symmetric difference is the absolute membership gap") {
    CHECK(sym_difference(example_a(), example_b()) == Multiset{{1, 1.0}, {2, 1.0}, {3, 1.0}});
    CHECK(sym_difference(example_a(), example_a()).empty());
    CHECK(sym_difference(example_a(), Multiset{}) == example_a());
}

TEST_CASE("cardinality sums multiplicities") {
    CHECK(cardinality(example_a()) == 5.0);
    CHECK(cardinality(Multiset{}) == 0.0);
    CHECK(cardinality(Multiset{{1, 0.25}, {7, 0.75}}) == 1.0);
}

TEST_CASE("containment relation covers all four classes") {
    CHECK(containment_relation(Multiset{{1, 1.0}}, Multiset{{1, 1.0}}) ==
          ContainmentRelation::Equal);
    CHECK(containment_relation(Multiset{{1, 1.0}}, Multiset{{1, 2.0}, {3, 1.0}}) ==
          ContainmentRelation::ProperSubset);
    CHECK(containment_relation(Multiset{{1, 2.0}, {3, 1.0}}, Multiset{{1, 1.0}}) ==
          ContainmentRelation::ProperSuperset);
    CHECK(containment_relation(Multiset{{1, 2.0}}, Multiset{{1, 1.0}, {3, 1.0}}) ==
          ContainmentRelation::Incomparable);
}

TEST_CASE("multiset invariants: no zero entries, integer flag") {
    Multiset m;
    m.add(4, 0.0);
    CHECK(m.empty());
    m.add(4, 2.0);
    CHECK(m.integer_valued());
    m.add(5, 0.5);
    CHECK_FALSE(m.integer_valued());
    CHECK_THROWS_AS(m.add(6, -1.0), std::invalid_argument);
}

TEST_CASE("size computations from natural representations") {
    LabelVector r{3.0, 2.0, 0.0};
    LabelVector s{2.0, 1.0, 1.0};
    CHECK(symdiff_size_from_reps(r, s) == 3.0);
    CHECK(symdiff_size_from_reps(r, r) == 0.0);
    CHECK(symdiff_size_from_reps(LabelVector{1.0, 0.0}, LabelVector{0.0, 1.0}) == 2.0);
    CHECK(intersection_size_from_reps(r, s) == 3.0);
    CHECK(intersection_size_from_reps(r, r) == r.cardinality());
    CHECK(intersection_size_from_reps(LabelVector{2.0, 0.0}, LabelVector{0.0, 3.0}) == 0.0);
    CHECK_THROWS_AS(symdiff_size_from_reps(r, LabelVector{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(intersection_size_from_reps(r, LabelVector{1.0}), std::invalid_argument);
}

TEST_CASE("intersection size from symmetric difference size") {
    CHECK(intersection_from_symdiff(5.0, 4.0, 3.0).value == 3.0);
    CHECK_FALSE(intersection_from_symdiff(5.0, 4.0, 3.0).clamped);
    CHECK(intersection_from_symdiff(3.0, 3.0, 0.0).value == 3.0);
    CHECK(intersection_from_symdiff(2.0, 2.0, 4.0).value == 0.0);
    auto low = intersection_from_symdiff(2.0, 2.0, 5.0);
    CHECK(low.value == 0.0);
    CHECK(low.clamped);
    auto high = intersection_from_symdiff(2.0, 3.0, 0.2);
    CHECK(high.value == 2.0);
    CHECK(high.clamped);
}

TEST_CASE("relation from sizes with decision margin") {
    CHECK(relation_from_sizes(2.0, 3.0, 1.05, 1.0) == ContainmentRelation::ProperSubset);
    CHECK(relation_from_sizes(3.0, 2.0, 1.05, 1.0) == ContainmentRelation::ProperSuperset);
    CHECK(relation_from_sizes(2.0, 2.0, 0.1, 1.0) == ContainmentRelation::Equal);
    CHECK(relation_from_sizes(2.0, 2.0, 4.0, 1.0) == ContainmentRelation::Incomparable);
}

TEST_CASE("algebraic identities hold exactly on random integer multisets") {
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        Multiset a = random_integer_multiset(rng);
        Multiset b = random_integer_multiset(rng);
        double da = cardinality(a), db = cardinality(b);
        double dsym = cardinality(sym_difference(a, b));
        double dint = cardinality(intersect(a, b));

        REQUIRE(dsym == da + db - 2.0 * dint);
        REQUIRE(difference(a, difference(a, b)) == intersect(a, b));
        REQUIRE(sym_difference(a, b) == msum(difference(a, b), difference(b, a)));
        REQUIRE(dsym >= std::abs(da - db));

        REQUIRE(intersect(a, b) == intersect(b, a));
        REQUIRE(union_of(a, b) == union_of(b, a));
        REQUIRE(msum(a, b) == msum(b, a));
        REQUIRE(sym_difference(a, b) == sym_difference(b, a));
        REQUIRE(intersect(a, a) == a);
        REQUIRE(union_of(a, a) == a);
    }
}

TEST_CASE("containment iff symmetric difference equals the size gap") {
    Rng rng(13);
    for (int i = 0; i < 10000; ++i) {
        Multiset a = random_integer_multiset(rng);
        Multiset b = random_integer_multiset(rng);
        ContainmentRelation rel = containment_relation(a, b);
        bool contained =
            rel == ContainmentRelation::Equal || rel == ContainmentRelation::ProperSubset;
        double dsym = cardinality(sym_difference(a, b));
        bool size_test = dsym == cardinality(b) - cardinality(a);
        REQUIRE(contained == size_test);
    }
}

TEST_CASE("relation from exact sizes reproduces containment on integer pairs") {
    Rng rng(17);
    for (double tau : {0.25, 0.5, 1.0, 1.5, 1.9}) {
        for (int i = 0; i < 2000; ++i) {
            Multiset a = random_integer_multiset(rng);
            Multiset b = random_integer_multiset(rng);
            double d = cardinality(sym_difference(a, b));
            REQUIRE(relation_from_sizes(cardinality(a), cardinality(b), d, tau) ==
                    containment_relation(a, b));
        }
    }
}

TEST_CASE("text serialization round-trips") {
    Multiset m{{-3, 1.5}, {1, 3.0}, {42, 0.125}};
    Multiset back = multiset_from_text(to_text(m));
    CHECK(back == m);
    CHECK(to_text(Multiset{}).empty());
    CHECK(multiset_from_text("").empty());
    CHECK_THROWS_AS(multiset_from_text("1 two\n"), std::invalid_argument);
    CHECK_THROWS_AS(multiset_from_text("1 2 3\n"), std::invalid_argument);

    Rng rng(19);
    for (int i = 0; i < 200; ++i) {
        Multiset a;
        int support = static_cast<int>(rng.uniform_int(0, 6));
        for (int s = 0; s < support; ++s) a.add(rng.uniform_int(-100, 100), rng.uniform(0.001, 9.0));
        REQUIRE(multiset_from_text(to_text(a)) == a);
    }
}
