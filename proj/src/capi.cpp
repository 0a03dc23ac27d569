#include "msetrep.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "msr/checks.hpp"
#include "msr/clustering.hpp"
#include "msr/datagen.hpp"
#include "msr/harness.hpp"
#include "msr/model.hpp"
#include "msr/multiset.hpp"
#include "msr/transform.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

msr_status classify(const std::exception& e) {
    if (dynamic_cast<const std::invalid_argument*>(&e) ||
        dynamic_cast<const std::out_of_range*>(&e) || dynamic_cast<const json::exception*>(&e))
        return MSR_ERR_INVALID_ARGUMENT;
    std::string what = e.what();
    if (what.find("cannot open") != std::string::npos ||
        what.find("truncated") != std::string::npos ||
        what.find("writing") != std::string::npos || what.find("CSV") != std::string::npos)
        return MSR_ERR_IO;
    if (what.find("non-finite") != std::string::npos ||
        what.find("aborted at iteration") != std::string::npos ||
        what.find("not strictly positive") != std::string::npos)
        return MSR_ERR_NUMERIC;
    return MSR_ERR_INTERNAL;
}

template <typename F>
msr_status guard(F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    } catch (...) {
        set_error("unknown error");
        return MSR_ERR_INTERNAL;
    }
}

template <typename F>
auto guard_ptr(F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    } catch (...) {
        set_error("unknown error");
        return nullptr;
    }
}

const msr::Multiset& unwrap(const msr_multiset* m) {
    return *reinterpret_cast<const msr::Multiset*>(m);
}

msr_multiset* wrap(msr::Multiset&& m) {
    return reinterpret_cast<msr_multiset*>(new msr::Multiset(std::move(m)));
}

msr_multiset* require(const msr_multiset* a, const msr_multiset* b = nullptr,
                      bool need_b = false) {
    if (!a || (need_b && !b)) {
        set_error("null multiset handle");
        return nullptr;
    }
    return const_cast<msr_multiset*>(a);
}

// ---- run configuration parsing -------------------------------------------

msr::ObjectPool load_pool(const std::string& data_dir, const char* which) {
    return msr::pool_from_csv((std::filesystem::path(data_dir) / which).string());
}

msr::ModelConfig parse_model_config(const json& j, int pool_k, int pool_d) {
    msr::ModelConfig cfg;
    cfg.task = msr::task_from_string(j.value("task", "symdiff"));
    cfg.variant = msr::variant_from_string(j.value("variant", "simplex"));
    std::string head = j.value("head", "");
    cfg.head = head.empty() ? msr::ModelConfig::matched_head(cfg.task)
                            : msr::head_from_string(head);
    cfg.input_dim = j.value("input_dim", pool_d);
    cfg.rep_dim = j.value("rep_dim", pool_k);
    cfg.featurizer_hidden = j.value("hidden", std::vector<int>{64, 64});
    cfg.rho1_widths = j.value("rho1", std::vector<int>{100, 100});
    cfg.rho2_widths = j.value("rho2", std::vector<int>{100});
    cfg.validate();
    return cfg;
}

msr::TrainConfig parse_train_config(const json& j, const msr::ObjectPool& pool) {
    msr::TrainConfig cfg;
    cfg.model = parse_model_config(j, pool.label_count(), pool.feature_dim());
    cfg.sampler.size_min = j.value("size_min", 2);
    cfg.sampler.size_max = j.value("size_max", 5);
    cfg.sampler.mode = msr::SamplerMode::Uniform;
    cfg.seed = j.value("seed", uint64_t{0});
    // The data stream gets its own stream id unless pinned explicitly.
    cfg.sampler.seed = j.value("sampler_seed", cfg.seed ^ 0x6d736574ull);
    cfg.iterations = j.value("iterations", int64_t{30000});
    cfg.learning_rate = j.value("learning_rate", 5e-5);
    cfg.beta1 = j.value("beta1", 0.9);
    cfg.beta2 = j.value("beta2", 0.999);
    cfg.checkpoint_path = j.value("checkpoint", "");
    cfg.metrics_path = j.value("metrics", "");
    cfg.validate();
    return cfg;
}

}  // namespace

extern "C" {

const char* msr_version(void) { return "msetrep 1.0.0"; }

const char* msr_last_error(void) { return g_last_error.c_str(); }

void msr_string_free(char* s) { std::free(s); }

// ---- multiset algebra -----------------------------------------------------

msr_multiset* msr_multiset_new(void) {
    return guard_ptr([] { return wrap(msr::Multiset{}); });
}

msr_multiset* msr_multiset_clone(const msr_multiset* m) {
    if (!require(m)) return nullptr;
    return guard_ptr([&] { return wrap(msr::Multiset(unwrap(m))); });
}

void msr_multiset_free(msr_multiset* m) {
    delete reinterpret_cast<msr::Multiset*>(m);
}

int msr_multiset_add(msr_multiset* m, int64_t element, double multiplicity) {
    if (!require(m)) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&] {
        reinterpret_cast<msr::Multiset*>(m)->add(element, multiplicity);
        return MSR_OK;
    });
}

double msr_multiset_multiplicity(const msr_multiset* m, int64_t element) {
    return require(m) ? unwrap(m).multiplicity(element) : 0.0;
}

double msr_multiset_cardinality(const msr_multiset* m) {
    return require(m) ? msr::cardinality(unwrap(m)) : 0.0;
}

size_t msr_multiset_support_size(const msr_multiset* m) {
    return require(m) ? unwrap(m).support_size() : 0;
}

int msr_multiset_integer_valued(const msr_multiset* m) {
    return require(m) && unwrap(m).integer_valued() ? 1 : 0;
}

#define MSR_BINARY_OP(c_name, cpp_name)                                     \
    msr_multiset* c_name(const msr_multiset* a, const msr_multiset* b) {    \
        if (!require(a, b, true)) return nullptr;                           \
        return guard_ptr([&] { return wrap(cpp_name(unwrap(a), unwrap(b))); }); \
    }

MSR_BINARY_OP(msr_multiset_intersect, msr::intersect)
MSR_BINARY_OP(msr_multiset_union, msr::union_of)
MSR_BINARY_OP(msr_multiset_sum, msr::msum)
MSR_BINARY_OP(msr_multiset_difference, msr::difference)
MSR_BINARY_OP(msr_multiset_sym_difference, msr::sym_difference)

#undef MSR_BINARY_OP

msr_relation msr_multiset_relation(const msr_multiset* a, const msr_multiset* b) {
    if (!require(a, b, true)) return MSR_RELATION_ERROR;
    return static_cast<msr_relation>(msr::containment_relation(unwrap(a), unwrap(b)));
}

msr_relation msr_relation_from_sizes(double a, double b, double d_hat, double tau) {
    if (a < 0.0 || b < 0.0 || tau <= 0.0) {
        set_error("relation_from_sizes needs a, b >= 0 and tau > 0");
        return MSR_RELATION_ERROR;
    }
    return static_cast<msr_relation>(msr::relation_from_sizes(a, b, d_hat, tau));
}

int msr_multiset_to_text(const msr_multiset* m, char** out_text) {
    if (!require(m) || !out_text) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&] {
        *out_text = copy_string(msr::to_text(unwrap(m)));
        return *out_text ? MSR_OK : MSR_ERR_INTERNAL;
    });
}

msr_multiset* msr_multiset_from_text(const char* text) {
    if (!text) {
        set_error("null text");
        return nullptr;
    }
    return guard_ptr([&] { return wrap(msr::multiset_from_text(text)); });
}

// ---- experiment entry points -----------------------------------------------

int msr_gen_data(const char* config_json) {
    if (!config_json) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&] {
        json j = json::parse(config_json);
        msr::SyntheticUniverseSpec spec;
        spec.k = j.value("k", spec.k);
        spec.d = j.value("d", spec.d);
        spec.n_train = j.value("n_train", spec.n_train);
        spec.n_eval = j.value("n_eval", spec.n_eval);
        spec.prototype_scale = j.value("prototype_scale", spec.prototype_scale);
        spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
        spec.seed = j.value("seed", spec.seed);
        spec.validate();

        std::string out_dir = j.at("out_dir").get<std::string>();
        std::filesystem::create_directories(out_dir);
        msr::UniversePools pools = msr::gen_universe(spec);
        msr::pool_to_csv(pools.train, (std::filesystem::path(out_dir) / "train.csv").string());
        msr::pool_to_csv(pools.eval, (std::filesystem::path(out_dir) / "eval.csv").string());

        json meta = {{"k", spec.k},
                     {"d", spec.d},
                     {"n_train", spec.n_train},
                     {"n_eval", spec.n_eval},
                     {"prototype_scale", spec.prototype_scale},
                     {"noise_sigma", spec.noise_sigma},
                     {"seed", spec.seed}};
        std::ofstream meta_out((std::filesystem::path(out_dir) / "meta.json").string());
        if (!meta_out) throw std::runtime_error("cannot open meta.json for writing");
        meta_out << meta.dump(2) << "\n";
        return MSR_OK;
    });
}

int msr_train(const char* config_json, char** report_json) {
    if (!config_json || !report_json) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&] {
        json j = json::parse(config_json);
        msr::ObjectPool train_pool = load_pool(j.at("data_dir").get<std::string>(), "train.csv");
        msr::TrainConfig cfg = parse_train_config(j, train_pool);
        msr::TrainResult result = msr::train(cfg, train_pool);

        json report = {{"config_hash", result.hash},
                       {"iterations", cfg.iterations},
                       {"final_loss", result.loss_curve.back().second},
                       {"checkpoint", cfg.checkpoint_path}};
        *report_json = copy_string(report.dump());
        return *report_json ? MSR_OK : MSR_ERR_INTERNAL;
    });
}

int msr_eval(const char* config_json, char** report_json) {
    if (!config_json || !report_json) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&] {
        json j = json::parse(config_json);
        msr::Model model = msr::load_checkpoint(j.at("checkpoint").get<std::string>());
        msr::ObjectPool eval_pool = load_pool(j.at("data_dir").get<std::string>(), "eval.csv");

        bool containment = j.value("containment", false);
        int size_min = j.value("size_min", 2);
        int size_max = j.value("size_max", containment ? 5 : 20);
        int64_t pairs = j.value("pairs", int64_t{30000});
        uint64_t seed = j.value("seed", uint64_t{0});
        double tau = j.value("tau", 1.0);

        msr::ModelPredictor predictor(model);
        msr::EvalReport report =
            containment
                ? msr::evaluate_containment(predictor, eval_pool, pairs, tau, size_min, size_max,
                                            seed)
                : msr::evaluate_sizes(predictor, eval_pool, size_min, size_max, pairs, seed);

        std::string dump_path = j.value("dump_reps", "");
        if (!dump_path.empty()) msr::dump_representations(model, eval_pool, dump_path);

        std::string metrics = j.value("metrics", "");
        if (!metrics.empty()) msr::append_eval_event(metrics, report, "", seed);

        *report_json = copy_string(msr::to_json(report));
        return *report_json ? MSR_OK : MSR_ERR_INTERNAL;
    });
}

int msr_cross_wire(const char* config_json, char** report_json) {
    if (!config_json || !report_json) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&] {
        json j = json::parse(config_json);
        std::string data_dir = j.at("data_dir").get<std::string>();
        msr::ObjectPool train_pool = load_pool(data_dir, "train.csv");
        msr::ObjectPool eval_pool = load_pool(data_dir, "eval.csv");
        msr::TrainConfig cfg = parse_train_config(j, train_pool);

        int eval_min = j.value("eval_size_min", 2);
        int eval_max = j.value("eval_size_max", 5);
        int64_t eval_pairs = j.value("eval_pairs", int64_t{5000});
        uint64_t eval_seed = j.value("eval_seed", uint64_t{1});

        msr::CrossWireReport report =
            msr::run_cross_wire(cfg, train_pool, eval_pool, eval_min, eval_max, eval_pairs,
                                eval_seed);
        *report_json = copy_string(msr::to_json(report));
        return *report_json ? MSR_OK : MSR_ERR_INTERNAL;
    });
}

int msr_cluster_demo(const char* config_json, char** report_json) {
    if (!config_json || !report_json) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&] {
        json j = json::parse(config_json);
        int n = j.value("n", 20);
        int k = j.value("k", 4);
        int instances = j.value("instances", 100);
        uint64_t seed = j.value("seed", uint64_t{0});
        if (instances < 1) throw std::invalid_argument("instances must be >= 1");

        msr::Rng rng(seed);
        int64_t adaptive_total = 0;
        int recovered = 0;
        for (int i = 0; i < instances; ++i) {
            msr::ClusterInstance inst = msr::ClusterInstance::random(n, k, rng);
            auto truth = msr::true_clusters(inst);
            msr::Certificate cert = msr::build_certificate(inst, truth);
            if (cert.queries.size() != static_cast<std::size_t>(n - 1))
                throw std::runtime_error("certificate size is not n-1");
            if (!msr::verify_certificate(cert, inst))
                throw std::runtime_error("verifier rejected the true clustering");
            int64_t queries = 0;
            if (msr::same_partition(msr::recover_adaptive(inst, &queries), truth)) ++recovered;
            adaptive_total += queries;
        }

        json report = {{"instances", instances},
                       {"n", n},
                       {"k", k},
                       {"certificate_queries", n - 1},
                       {"all_certificates_verified", true},
                       {"recovered_exactly", recovered},
                       {"adaptive_queries_mean",
                        static_cast<double>(adaptive_total) / instances}};
        *report_json = copy_string(report.dump());
        return *report_json ? MSR_OK : MSR_ERR_INTERNAL;
    });
}

int msr_selfcheck(char** report_json) {
    if (!report_json) return MSR_ERR_INVALID_ARGUMENT;
    return guard([&]() -> msr_status {
        std::vector<msr::CheckResult> results = msr::run_selfcheck(msr::CheckCounts{});
        json report = json::array();
        bool all_passed = true;
        for (const auto& r : results) {
            all_passed = all_passed && r.passed;
            report.push_back({{"name", r.name},
                              {"passed", r.passed},
                              {"detail", r.detail},
                              {"seconds", r.seconds}});
        }
        *report_json = copy_string(report.dump());
        if (!*report_json) return MSR_ERR_INTERNAL;
        if (!all_passed) {
            set_error("selfcheck found failing invariants");
            return MSR_ERR_CHECK_FAILED;
        }
        return MSR_OK;
    });
}

}  // extern "C"
