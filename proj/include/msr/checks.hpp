// Executable invariant suites over every module: the algebra identities,
// representation-operation equivalences, cardinality preservation, gradient
// agreement, sampler guarantees, and the clustering certificate properties.
// The CLI selfcheck runs all of them; the acceptance suite runs them at the
// pinned criterion counts.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msr {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Sizes for one full invariant sweep.
struct CheckCounts {
    int algebra_pairs = 10000;
    int rep_pairs = 10000;
    int transform_draws = 1000;
    int simplex_draws = 1000;
    int gradient_draws_per_variant = 3;
    int sampler_pairs = 2000;
    int balanced_draws = 10000;
    int cluster_instances = 25;
    uint64_t seed = 0;
};

// Lemma-1 identity, difference/symmetric-difference identities, the size
// lower bound, commutativity, and idempotence on random integer multisets.
CheckResult check_algebra_identities(int pairs, uint64_t seed);

// Containment holds iff |A triangle B| = |B| - |A|.
CheckResult check_containment_equivalence(int pairs, uint64_t seed);

// Size computations on natural representations equal the exact multiset
// operations.
CheckResult check_representation_ops(int pairs, uint64_t seed);

// relation_from_sizes with exact d reproduces the exact relation for any
// margin in (0, 2).
CheckResult check_relation_rule(int pairs, uint64_t seed);

// Pushforward and expectation transformations preserve cardinality; point
// masses collapse one onto the other; expectation is linear over msum.
CheckResult check_transform_cardinality(int draws, uint64_t seed);

// Simplex representations are non-negative with l1 mass |A| for random
// untrained models.
CheckResult check_simplex_mass(int draws, uint64_t seed);

// Bit-exact permutation invariance, multiplicity consistency, and pair
// symmetry of predictions for every model variant.
CheckResult check_model_symmetries(uint64_t seed);

// Tape gradients match central finite differences for all six variants,
// excluding kink-adjacent draws.
CheckResult check_gradients(int draws_per_variant, uint64_t seed);

// Repeating an Adam run bit-for-bit.
CheckResult check_adam_determinism(uint64_t seed);

// Sampled pairs carry exact targets (Lemma-1 identity, parity, decision-rule
// consistency); streams are seed-reproducible; pools are id-disjoint; the
// balanced sampler hits each relation class at 1/4 +- 0.02.
CheckResult check_sampler_invariants(int pairs, int balanced_draws, uint64_t seed);

// Certificates have exactly n-1 queries, accept the truth, reject merge /
// split / swap perturbations, and adaptive recovery is exact.
CheckResult check_clustering(int instances, uint64_t seed);

// The full sweep in a fixed order.
std::vector<CheckResult> run_selfcheck(const CheckCounts& counts);

}  // namespace msr
