#include "msr/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace msr {

void TrainConfig::validate() const {
    model.validate();
    sampler.validate();
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
}

std::string to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["model"] = nlohmann::json::parse(to_json(cfg.model));
    j["sampler"] = {{"size_min", cfg.sampler.size_min},
                    {"size_max", cfg.sampler.size_max},
                    {"mode", cfg.sampler.mode == SamplerMode::Uniform ? "uniform" : "balanced"},
                    {"seed", cfg.sampler.seed}};
    j["iterations"] = cfg.iterations;
    j["learning_rate"] = cfg.learning_rate;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["seed"] = cfg.seed;
    j["checkpoint_path"] = cfg.checkpoint_path;
    j["metrics_path"] = cfg.metrics_path;
    return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig cfg;
    cfg.model = model_config_from_json(j.at("model").dump());
    const auto& s = j.at("sampler");
    cfg.sampler.size_min = s.at("size_min").get<int>();
    cfg.sampler.size_max = s.at("size_max").get<int>();
    std::string mode = s.value("mode", "uniform");
    if (mode == "uniform")
        cfg.sampler.mode = SamplerMode::Uniform;
    else if (mode == "balanced")
        cfg.sampler.mode = SamplerMode::RelationBalanced;
    else
        throw std::invalid_argument("unknown sampler mode: " + mode);
    cfg.sampler.seed = s.at("seed").get<uint64_t>();
    cfg.iterations = j.at("iterations").get<int64_t>();
    cfg.learning_rate = j.value("learning_rate", 5e-5);
    cfg.beta1 = j.value("beta1", 0.9);
    cfg.beta2 = j.value("beta2", 0.999);
    cfg.seed = j.at("seed").get<uint64_t>();
    cfg.checkpoint_path = j.value("checkpoint_path", "");
    cfg.metrics_path = j.value("metrics_path", "");
    cfg.validate();
    return cfg;
}

std::string config_hash(const TrainConfig& cfg) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : to_json(cfg)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

double task_target(const PairSample& pair, Task task) {
    return task == Task::SymDiff ? pair.target_symdiff : pair.target_intersection;
}

void append_line(const std::string& path, const std::string& line) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open metrics file: " + path);
    out << line << "\n";
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const ObjectPool& train_pool) {
    cfg.validate();
    Model model(cfg.model, cfg.seed);
    PairSampler sampler(train_pool, cfg.sampler);
    AdamConfig adam{cfg.learning_rate, cfg.beta1, cfg.beta2, 1e-8};
    std::string hash = config_hash(cfg);

    std::ofstream metrics;
    if (!cfg.metrics_path.empty()) {
        metrics.open(cfg.metrics_path, std::ios::app);
        if (!metrics) throw std::runtime_error("cannot open metrics file: " + cfg.metrics_path);
    }

    std::vector<std::pair<int64_t, double>> curve;
    double window_sum = 0.0;
    int64_t window_n = 0;
    for (int64_t iter = 1; iter <= cfg.iterations; ++iter) {
        PairSample pair = sampler.sample();
        Model::LossResult result;
        try {
            result = model.loss(pair.a, pair.b, task_target(pair, cfg.model.task));
        } catch (const std::exception& e) {
            throw std::runtime_error("training aborted at iteration " + std::to_string(iter) +
                                     ": " + e.what());
        }
        adam_step(model.params(), result.grads, adam);
        window_sum += result.loss;
        window_n += 1;
        if (iter % 100 == 0 || iter == cfg.iterations) {
            double mean = window_sum / static_cast<double>(window_n);
            curve.emplace_back(iter, mean);
            if (metrics.is_open()) {
                nlohmann::json line = {{"event", "train_step"},
                                       {"iter", iter},
                                       {"loss", mean},
                                       {"config_hash", hash},
                                       {"seed", cfg.seed}};
                metrics << line.dump() << "\n";
            }
            window_sum = 0.0;
            window_n = 0;
        }
    }

    if (!cfg.checkpoint_path.empty()) save_checkpoint(model, cfg.checkpoint_path);
    return TrainResult{std::move(model), std::move(curve), std::move(hash)};
}

std::string to_json(const EvalReport& report) {
    nlohmann::json j;
    j["event"] = "eval";
    j["mae_symdiff"] = report.mae_symdiff;
    j["mae_intersection"] = report.mae_intersection;
    j["n_pairs"] = report.n_pairs;
    j["size_min"] = report.size_min;
    j["size_max"] = report.size_max;
    if (report.has_containment) {
        j["containment_accuracy"] = report.containment_accuracy;
        j["tau"] = report.tau;
        std::vector<int64_t> flat;
        for (const auto& row : report.confusion)
            for (int64_t v : row) flat.push_back(v);
        j["confusion"] = flat;
    }
    return j.dump();
}

EvalReport evaluate_sizes(const PairPredictor& predictor, const ObjectPool& pool, int size_min,
                          int size_max, int64_t n_pairs, uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("evaluation needs n_pairs >= 1");
    SamplerConfig cfg{size_min, size_max, SamplerMode::Uniform, seed};
    PairSampler sampler(pool, cfg);
    double sum_sym = 0.0, sum_int = 0.0;
    for (int64_t i = 0; i < n_pairs; ++i) {
        PairSample pair = sampler.sample();
        double a = cardinality(pair.ids_a);
        double b = cardinality(pair.ids_b);
        double p = predictor.predict(pair);
        double d_hat, i_hat;
        if (predictor.task() == Task::SymDiff) {
            d_hat = p;
            i_hat = intersection_from_symdiff(a, b, p).value;
        } else {
            i_hat = p;
            d_hat = a + b - 2.0 * p;
        }
        sum_sym += std::abs(d_hat - pair.target_symdiff);
        sum_int += std::abs(i_hat - pair.target_intersection);
    }
    EvalReport report;
    report.mae_symdiff = sum_sym / static_cast<double>(n_pairs);
    report.mae_intersection = sum_int / static_cast<double>(n_pairs);
    report.n_pairs = n_pairs;
    report.size_min = size_min;
    report.size_max = size_max;
    return report;
}

EvalReport evaluate_containment(const PairPredictor& predictor, const ObjectPool& pool,
                                int64_t n_pairs, double tau, int size_min, int size_max,
                                uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("evaluation needs n_pairs >= 1");
    if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
    SamplerConfig cfg{size_min, size_max, SamplerMode::RelationBalanced, seed};
    PairSampler sampler(pool, cfg);
    EvalReport report;
    int64_t correct = 0;
    for (int64_t i = 0; i < n_pairs; ++i) {
        PairSample pair = sampler.sample();
        double a = cardinality(pair.ids_a);
        double b = cardinality(pair.ids_b);
        double p = predictor.predict(pair);
        double d_hat = predictor.task() == Task::SymDiff ? p : a + b - 2.0 * p;
        ContainmentRelation predicted = relation_from_sizes(a, b, d_hat, tau);
        report.confusion[static_cast<int>(pair.relation)][static_cast<int>(predicted)] += 1;
        if (predicted == pair.relation) ++correct;
    }
    report.containment_accuracy = static_cast<double>(correct) / static_cast<double>(n_pairs);
    report.has_containment = true;
    report.n_pairs = n_pairs;
    report.size_min = size_min;
    report.size_max = size_max;
    report.tau = tau;
    return report;
}

std::string to_json(const CrossWireReport& report) {
    nlohmann::json j;
    j["task"] = to_string(report.task);
    j["matched_mae"] = report.matched_mae;
    j["crossed_mae"] = report.crossed_mae;
    j["ratio"] = report.ratio;
    return j.dump();
}

CrossWireReport run_cross_wire(const TrainConfig& cfg, const ObjectPool& train_pool,
                               const ObjectPool& eval_pool, int eval_size_min, int eval_size_max,
                               int64_t eval_pairs, uint64_t eval_seed) {
    if (cfg.model.head == Head::LearnedOp)
        throw std::invalid_argument("cross-wiring applies to the fixed operation heads");
    TrainConfig matched_cfg = cfg;
    matched_cfg.model.head = ModelConfig::matched_head(cfg.model.task);
    matched_cfg.checkpoint_path.clear();
    matched_cfg.metrics_path.clear();
    TrainConfig crossed_cfg = matched_cfg;
    crossed_cfg.model = cross_wire(matched_cfg.model);

    TrainResult matched = train(matched_cfg, train_pool);
    TrainResult crossed = train(crossed_cfg, train_pool);

    ModelPredictor matched_pred(matched.model);
    ModelPredictor crossed_pred(crossed.model);
    EvalReport matched_eval =
        evaluate_sizes(matched_pred, eval_pool, eval_size_min, eval_size_max, eval_pairs, eval_seed);
    EvalReport crossed_eval =
        evaluate_sizes(crossed_pred, eval_pool, eval_size_min, eval_size_max, eval_pairs, eval_seed);

    CrossWireReport report;
    report.task = cfg.model.task;
    report.matched_mae = cfg.model.task == Task::SymDiff ? matched_eval.mae_symdiff
                                                         : matched_eval.mae_intersection;
    report.crossed_mae = cfg.model.task == Task::SymDiff ? crossed_eval.mae_symdiff
                                                         : crossed_eval.mae_intersection;
    report.ratio = report.crossed_mae / report.matched_mae;
    return report;
}

void dump_representations(const Model& model, const ObjectPool& pool, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open representation dump for writing: " + path);
    int k = model.config().rep_dim;
    out << "id,label";
    for (int j = 1; j <= k; ++j) out << ",e" << j;
    out << "\n";
    char buf[64];
    for (const auto& obj : pool.objects()) {
        std::vector<double> e = model.object_embedding(obj.features);
        out << obj.id << ',' << obj.label;
        for (double v : e) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing representation dump: " + path);
}

double basis_alignment(const Model& model, const ObjectPool& pool, double tol) {
    if (pool.empty()) return 0.0;
    std::size_t k = static_cast<std::size_t>(model.config().rep_dim);
    std::size_t aligned = 0;
    for (const auto& obj : pool.objects()) {
        std::vector<double> e = model.object_embedding(obj.features);
        double best = 1e300;
        for (std::size_t basis = 0; basis < k; ++basis) {
            double dist = 0.0;
            for (std::size_t j = 0; j < e.size(); ++j)
                dist += std::abs(e[j] - (j == basis ? 1.0 : 0.0));
            best = std::min(best, dist);
        }
        if (best <= tol) ++aligned;
    }
    return static_cast<double>(aligned) / static_cast<double>(pool.size());
}

void append_eval_event(const std::string& metrics_path, const EvalReport& report,
                       const std::string& hash, uint64_t seed) {
    nlohmann::json j = nlohmann::json::parse(to_json(report));
    j["config_hash"] = hash;
    j["seed"] = seed;
    append_line(metrics_path, j.dump());
}

}  // namespace msr
