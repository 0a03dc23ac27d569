#include "msr/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "msr/clustering.hpp"
#include "msr/datagen.hpp"
#include "msr/harness.hpp"
#include "msr/model.hpp"
#include "msr/multiset.hpp"
#include "msr/rng.hpp"
#include "msr/tensor.hpp"
#include "msr/transform.hpp"

namespace msr {

namespace {

std::string format(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

// Wraps a check body with timing and exception capture. The body returns a
// detail string and throws on violation.
CheckResult run_check(const std::string& name, const std::function<std::string()>& body) {
    CheckResult result;
    result.name = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        result.detail = body();
        result.passed = true;
    } catch (const std::exception& e) {
        result.detail = e.what();
        result.passed = false;
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

[[noreturn]] void fail(const std::string& message) { throw std::runtime_error(message); }

Multiset random_integer_multiset(Rng& rng, int max_universe = 8, int max_mult = 5) {
    Multiset out;
    int support = static_cast<int>(rng.uniform_int(0, max_universe));
    for (int i = 0; i < support; ++i) {
        int64_t mult = rng.uniform_int(0, max_mult);
        if (mult > 0) out.add(rng.uniform_int(1, max_universe), static_cast<double>(mult));
    }
    return out;
}

ModelConfig small_model_config(Variant v, Head h) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.head = h;
    cfg.task = Task::SymDiff;
    cfg.input_dim = 4;
    cfg.rep_dim = 3;
    cfg.featurizer_hidden = {8, 7};
    cfg.rho1_widths = {9, 6};
    cfg.rho2_widths = {10};
    return cfg;
}

const std::vector<std::pair<Variant, Head>>& variant_grid() {
    static const std::vector<std::pair<Variant, Head>> grid = {
        {Variant::Simplex, Head::SymDiffL1},      {Variant::Simplex, Head::LearnedOp},
        {Variant::Unrestricted, Head::SymDiffL1}, {Variant::Unrestricted, Head::LearnedOp},
        {Variant::DeepSets, Head::SymDiffL1},     {Variant::DeepSets, Head::LearnedOp},
    };
    return grid;
}

WeightedItems random_items(Rng& rng, int dim, int count) {
    WeightedItems out;
    for (int i = 0; i < count; ++i) {
        std::vector<double> f(dim);
        for (double& v : f) v = rng.uniform(-2.0, 2.0);
        out.add(std::move(f), static_cast<double>(rng.uniform_int(1, 3)));
    }
    return out;
}

}  // namespace

CheckResult check_algebra_identities(int pairs, uint64_t seed) {
    return run_check("algebra_identities", [=] {
        Rng rng(seed);
        for (int i = 0; i < pairs; ++i) {
            Multiset a = random_integer_multiset(rng);
            Multiset b = random_integer_multiset(rng);
            double da = cardinality(a), db = cardinality(b);
            double dsym = cardinality(sym_difference(a, b));
            if (dsym != da + db - 2.0 * cardinality(intersect(a, b)))
                fail("size identity |AtB| = |A|+|B|-2|AnB| violated");
            if (!(difference(a, difference(a, b)) == intersect(a, b)))
                fail("A \\ (A \\ B) != A n B");
            if (!(sym_difference(a, b) == msum(difference(a, b), difference(b, a))))
                fail("A t B != (A \\ B) + (B \\ A)");
            if (dsym < std::abs(da - db)) fail("|A t B| < ||A| - |B||");
            if (!(intersect(a, b) == intersect(b, a)) || !(union_of(a, b) == union_of(b, a)) ||
                !(msum(a, b) == msum(b, a)) || !(sym_difference(a, b) == sym_difference(b, a)))
                fail("a binary operation is not commutative");
            if (!(intersect(a, a) == a) || !(union_of(a, a) == a))
                fail("intersection or union is not idempotent");
        }
        return format("%d random integer pairs, all identities exact", pairs);
    });
}

CheckResult check_containment_equivalence(int pairs, uint64_t seed) {
    return run_check("containment_equivalence", [=] {
        Rng rng(seed + 1);
        for (int i = 0; i < pairs; ++i) {
            Multiset a = random_integer_multiset(rng);
            Multiset b = random_integer_multiset(rng);
            ContainmentRelation rel = containment_relation(a, b);
            bool contained =
                rel == ContainmentRelation::Equal || rel == ContainmentRelation::ProperSubset;
            bool size_test =
                cardinality(sym_difference(a, b)) == cardinality(b) - cardinality(a);
            if (contained != size_test) fail("containment does not match the size test");
        }
        return format("%d pairs, containment <=> |AtB| = |B|-|A|", pairs);
    });
}

CheckResult check_representation_ops(int pairs, uint64_t seed) {
    return run_check("representation_ops", [=] {
        Rng rng(seed + 2);
        const int k = 8;
        for (int i = 0; i < pairs; ++i) {
            Multiset a = random_integer_multiset(rng, k);
            Multiset b = random_integer_multiset(rng, k);
            LabelVector ra(k), rb(k);
            for (const auto& [id, m] : a.entries()) ra[id - 1] = m;
            for (const auto& [id, m] : b.entries()) rb[id - 1] = m;
            if (symdiff_size_from_reps(ra, rb) != cardinality(sym_difference(a, b)))
                fail("l1 distance of representations != |A t B|");
            if (intersection_size_from_reps(ra, rb) != cardinality(intersect(a, b)))
                fail("min-sum of representations != |A n B|");
            if (containment_relation(ra, rb) != containment_relation(a, b))
                fail("representation relation != multiset relation");
        }
        return format("%d pairs, representation ops exact", pairs);
    });
}

CheckResult check_relation_rule(int pairs, uint64_t seed) {
    return run_check("relation_rule", [=] {
        Rng rng(seed + 3);
        const double taus[] = {0.1, 0.5, 1.0, 1.5, 1.9};
        for (int i = 0; i < pairs; ++i) {
            Multiset a = random_integer_multiset(rng);
            Multiset b = random_integer_multiset(rng);
            double d = cardinality(sym_difference(a, b));
            ContainmentRelation want = containment_relation(a, b);
            for (double tau : taus)
                if (relation_from_sizes(cardinality(a), cardinality(b), d, tau) != want)
                    fail(format("decision rule disagrees at tau=%.2f", tau));
        }
        return format("%d pairs x 5 margins, decision rule exact", pairs);
    });
}

CheckResult check_transform_cardinality(int draws, uint64_t seed) {
    return run_check("transform_cardinality", [=] {
        Rng rng(seed + 4);
        const int n_elements = 20, k = 5;
        for (int i = 0; i < draws; ++i) {
            UniverseTransformation t(k);
            ProbabilisticTransformation l(k);
            for (int64_t e = 0; e < n_elements; ++e) {
                t.set_label(e, static_cast<int>(rng.uniform_int(1, k)));
                std::vector<double> p(k);
                double total = 0.0;
                for (double& v : p) total += (v = rng.uniform(0.01, 1.0));
                for (double& v : p) v /= total;
                double s = 0.0;
                for (double v : p) s += v;
                p.back() += 1.0 - s;
                l.set_distribution(e, std::move(p));
            }
            Multiset a;
            int count = static_cast<int>(rng.uniform_int(1, 6));
            for (int c = 0; c < count; ++c)
                a.add(rng.uniform_int(0, n_elements - 1),
                      i % 2 == 0 ? 1.0 : rng.uniform(0.1, 3.0));

            if (std::abs(pushforward(t, a).cardinality() - cardinality(a)) > 1e-9)
                fail("pushforward changed cardinality");
            if (std::abs(expectation_transform(l, a).cardinality() - cardinality(a)) > 1e-9)
                fail("expectation transform changed cardinality");
            if (!(expectation_transform(ProbabilisticTransformation::point_mass(t), a) ==
                  pushforward(t, a)))
                fail("point-mass expectation differs from pushforward");

            Multiset b;
            for (int c = 0; c < 3; ++c) b.add(rng.uniform_int(0, n_elements - 1), 1.0);
            LabelVector joint = expectation_transform(l, msum(a, b));
            LabelVector la = expectation_transform(l, a);
            LabelVector lb = expectation_transform(l, b);
            for (std::size_t j = 0; j < joint.size(); ++j)
                if (std::abs(joint[j] - (la[j] + lb[j])) > 1e-9)
                    fail("expectation transform is not linear over msum");
        }
        return format("%d random transformations, cardinality preserved within 1e-9", draws);
    });
}

CheckResult check_simplex_mass(int draws, uint64_t seed) {
    return run_check("simplex_mass", [=] {
        Rng rng(seed + 5);
        double worst = 0.0;
        for (int i = 0; i < draws; ++i) {
            Model m(small_model_config(Variant::Simplex, Head::SymDiffL1), rng.next_u64());
            WeightedItems a = random_items(rng, 4, 1 + static_cast<int>(rng.uniform_int(0, 4)));
            double mass = 0.0;
            for (double v : m.represent(a)) {
                if (v < 0.0) fail("simplex representation has a negative component");
                mass += v;
            }
            worst = std::max(worst, std::abs(mass - a.total_weight()));
            if (worst > 1e-9) fail(format("mass deviates by %.3g > 1e-9", worst));
        }
        return format("%d untrained models, max |mass - |A|| = %.3g", draws, worst);
    });
}

CheckResult check_model_symmetries(uint64_t seed) {
    return run_check("model_symmetries", [=] {
        Rng rng(seed + 6);
        for (auto [variant, head] : variant_grid()) {
            Model m(small_model_config(variant, head), rng.next_u64());
            for (int i = 0; i < 50; ++i) {
                WeightedItems a = random_items(rng, 4, 5);
                std::vector<double> base = m.represent(a);

                WeightedItems shuffled;
                for (std::size_t idx : {4u, 1u, 3u, 0u, 2u})
                    shuffled.add(a.features[idx], a.weights[idx]);
                if (m.represent(shuffled) != base)
                    fail(format("representation not permutation invariant (%s)",
                                to_string(variant)));

                WeightedItems doubled, listed;
                doubled.add(a.features[0], 2.0);
                listed.add(a.features[0], 1.0);
                listed.add(a.features[0], 1.0);
                if (m.represent(doubled) != m.represent(listed))
                    fail("multiplicity 2 differs from listing the item twice");

                WeightedItems b = random_items(rng, 4, 3);
                std::vector<double> ra = m.represent(a), rb = m.represent(b);
                if (m.predict(ra, rb) != m.predict(rb, ra))
                    fail(format("prediction not symmetric (%s/%s)", to_string(variant),
                                to_string(head)));
            }
        }
        return "6 variants x 50 draws: permutation, multiplicity, and pair symmetry exact";
    });
}

CheckResult check_gradients(int draws_per_variant, uint64_t seed) {
    return run_check("gradients", [=] {
        Rng rng(seed + 7);
        double worst = 0.0;
        for (auto [variant, head] : variant_grid()) {
            int accepted = 0, attempts = 0;
            while (accepted < draws_per_variant) {
                if (++attempts > draws_per_variant * 20) fail("too many kink-adjacent draws");
                Model m(small_model_config(variant, head), rng.next_u64());
                WeightedItems a = random_items(rng, 4, 3);
                WeightedItems b = random_items(rng, 4, 2);
                double target = rng.uniform(0.0, 4.0);

                auto result = m.loss(a, b, target);
                if (result.kink_gap < 1e-4) continue;
                ++accepted;

                auto fd = finite_difference_gradient(
                    [&](const ParameterStore& p) { return m.loss_value(p, a, b, target); },
                    m.params());
                for (const auto& [name, grad] : fd) {
                    const Tensor& got = result.grads.at(name);
                    for (std::size_t i = 0; i < grad.numel(); ++i) {
                        double err = std::abs(got.data[i] - grad.data[i]) /
                                     std::max(1.0, std::abs(grad.data[i]));
                        worst = std::max(worst, err);
                        if (err > 1e-4)
                            fail(format("gradient of %s off by rel %.2e (%s/%s)", name.c_str(),
                                        err, to_string(variant), to_string(head)));
                    }
                }
            }
        }
        return format("6 variants x %d draws, max rel err %.2e", draws_per_variant, worst);
    });
}

CheckResult check_adam_determinism(uint64_t seed) {
    return run_check("adam_determinism", [=] {
        auto run = [&] {
            Rng rng(seed + 8);
            ParameterStore store;
            Tensor init = Tensor::zeros({4, 3});
            for (double& v : init.data) v = rng.uniform(-1.0, 1.0);
            store.add("w", init);
            for (int i = 0; i < 100; ++i) {
                Tensor g = Tensor::zeros({4, 3});
                for (double& v : g.data) v = rng.uniform(-1.0, 1.0);
                adam_step(store, {{"w", g}}, AdamConfig{});
            }
            return store.value("w").data;
        };
        if (run() != run()) fail("repeated Adam runs differ");
        return std::string("100-step Adam run repeats bit-for-bit");
    });
}

CheckResult check_sampler_invariants(int pairs, int balanced_draws, uint64_t seed) {
    return run_check("sampler_invariants", [=] {
        SyntheticUniverseSpec spec;
        spec.k = 5;
        spec.d = 8;
        spec.n_train = 500;
        spec.n_eval = 250;
        spec.seed = seed + 9;
        UniversePools pools = gen_universe(spec);

        for (const auto& train_obj : pools.train.objects())
            for (const auto& eval_obj : pools.eval.objects())
                if (train_obj.id == eval_obj.id) fail("train and eval pools share an object id");

        PairSampler sampler(pools.train, SamplerConfig{2, 5, SamplerMode::Uniform, seed + 10});
        for (int i = 0; i < pairs; ++i) {
            PairSample p = sampler.sample();
            double a = cardinality(p.ids_a), b = cardinality(p.ids_b);
            if (p.target_symdiff != a + b - 2.0 * p.target_intersection)
                fail("pair targets violate the size identity");
            if (std::fmod(p.target_symdiff + a + b, 2.0) != 0.0)
                fail("symmetric difference parity violated");
            if (relation_from_sizes(a, b, p.target_symdiff, 1.0) != p.relation)
                fail("pair relation inconsistent with the decision rule");
        }

        auto stream = [&](uint64_t s) {
            PairSampler smp(pools.train, SamplerConfig{2, 5, SamplerMode::Uniform, s});
            std::vector<double> out;
            for (int i = 0; i < 100; ++i) out.push_back(smp.sample().target_symdiff);
            return out;
        };
        if (stream(seed + 11) != stream(seed + 11)) fail("sampler stream not reproducible");

        PairSampler balanced(pools.train,
                             SamplerConfig{2, 5, SamplerMode::RelationBalanced, seed + 12});
        std::array<int, 4> counts{};
        for (int i = 0; i < balanced_draws; ++i)
            counts[static_cast<int>(balanced.sample().relation)] += 1;
        for (int c = 0; c < 4; ++c) {
            double frac = static_cast<double>(counts[c]) / balanced_draws;
            if (frac < 0.23 || frac > 0.27)
                fail(format("balanced class %d frequency %.3f outside [0.23, 0.27]", c, frac));
        }
        return format("%d uniform pairs exact, %d balanced draws within 1/4 +- 0.02", pairs,
                      balanced_draws);
    });
}

CheckResult check_clustering(int instances, uint64_t seed) {
    return run_check("clustering", [=] {
        Rng rng(seed + 13);
        for (int trial = 0; trial < instances; ++trial) {
            int k = static_cast<int>(rng.uniform_int(1, 8));
            int n = static_cast<int>(rng.uniform_int(std::max(k, 2), 50));
            ClusterInstance inst = ClusterInstance::random(n, k, rng);
            auto truth = true_clusters(inst);

            Certificate cert = build_certificate(inst, truth);
            if (cert.queries.size() != static_cast<std::size_t>(n - 1))
                fail(format("certificate has %zu queries, expected n-1 = %d",
                            cert.queries.size(), n - 1));
            if (cert.split_count != static_cast<std::size_t>(k - 1))
                fail("certificate split-query count is not k-1");
            if (!verify_certificate(cert, inst)) fail("verifier rejected the true clustering");

            if (k >= 2) {
                auto merged = truth;
                merged[0].insert(merged[0].end(), merged[1].begin(), merged[1].end());
                merged.erase(merged.begin() + 1);
                if (verify_certificate(build_certificate(inst, merged), inst))
                    fail("verifier accepted a merged clustering");

                auto swapped = truth;
                if (swapped[0].size() > 1) {
                    int moved = swapped[0].back();
                    swapped[0].pop_back();
                    swapped[1].push_back(moved);
                    if (verify_certificate(build_certificate(inst, swapped), inst))
                        fail("verifier accepted a swapped clustering");
                }
            }
            auto split = truth;
            for (auto& cluster : split) {
                if (cluster.size() > 1) {
                    std::vector<int> half(cluster.begin() + cluster.size() / 2, cluster.end());
                    cluster.resize(cluster.size() / 2);
                    split.push_back(half);
                    if (verify_certificate(build_certificate(inst, split), inst))
                        fail("verifier accepted a split clustering");
                    break;
                }
            }

            if (!same_partition(recover_adaptive(inst), truth))
                fail("adaptive recovery returned a wrong partition");
        }
        return format(
            "%d instances: n-1 certificates verified, perturbations rejected, recovery exact",
            instances);
    });
}

std::vector<CheckResult> run_selfcheck(const CheckCounts& c) {
    return {
        check_algebra_identities(c.algebra_pairs, c.seed),
        check_containment_equivalence(c.algebra_pairs, c.seed),
        check_representation_ops(c.rep_pairs, c.seed),
        check_relation_rule(c.sampler_pairs, c.seed),
        check_transform_cardinality(c.transform_draws, c.seed),
        check_simplex_mass(c.simplex_draws, c.seed),
        check_model_symmetries(c.seed),
        check_gradients(c.gradient_draws_per_variant, c.seed),
        check_adam_determinism(c.seed),
        check_sampler_invariants(c.sampler_pairs, c.balanced_draws, c.seed),
        check_clustering(c.cluster_instances, c.seed),
    };
}

}  // namespace msr
