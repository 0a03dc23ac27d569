// Training and evaluation harness: the per-pair Adam loop, size-MAE and
// 4-way containment evaluation, the cross-wiring experiment, and JSONL
// metrics persistence. Every reported number is fixed by (seed, config).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "msr/datagen.hpp"
#include "msr/model.hpp"

namespace msr {

struct TrainConfig {
    ModelConfig model;
    SamplerConfig sampler;
    int64_t iterations = 30000;
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    uint64_t seed = 0;
    std::string checkpoint_path;  // written when non-empty
    std::string metrics_path;     // JSONL, appended when non-empty

    void validate() const;
};

std::string to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

// FNV-1a over the canonical JSON form; identifies a run in metrics streams.
std::string config_hash(const TrainConfig& cfg);

struct TrainResult {
    Model model;
    // (iteration, mean loss over the trailing 100-iteration window).
    std::vector<std::pair<int64_t, double>> loss_curve;
    std::string hash;
};

// Per-pair updates for cfg.iterations pairs drawn fresh from the train
// pool. Deterministic given the config. Aborts with diagnostics on a
// non-finite loss.
TrainResult train(const TrainConfig& cfg, const ObjectPool& train_pool);

struct EvalReport {
    double mae_symdiff = 0.0;
    double mae_intersection = 0.0;
    double containment_accuracy = 0.0;
    bool has_containment = false;
    // Row = true relation, column = predicted, in enum order.
    std::array<std::array<int64_t, 4>, 4> confusion{};
    int64_t n_pairs = 0;
    int size_min = 0;
    int size_max = 0;
    double tau = 0.0;
};

std::string to_json(const EvalReport& report);

// Anything that turns a sampled pair into an estimate of its task quantity.
class PairPredictor {
public:
    virtual ~PairPredictor() = default;
    virtual double predict(const PairSample& pair) const = 0;
    virtual Task task() const = 0;
};

// Predicts through a trained model's representations and head.
class ModelPredictor : public PairPredictor {
public:
    explicit ModelPredictor(const Model& model) : model_(&model) {}
    double predict(const PairSample& pair) const override {
        return model_->predict_pair(pair.a, pair.b);
    }
    Task task() const override { return model_->config().task; }

private:
    const Model* model_;
};

// Answers with the exact target; the reference point for evaluation tests.
class OraclePredictor : public PairPredictor {
public:
    explicit OraclePredictor(Task t) : task_(t) {}
    double predict(const PairSample& pair) const override {
        return task_ == Task::SymDiff ? pair.target_symdiff : pair.target_intersection;
    }
    Task task() const override { return task_; }

private:
    Task task_;
};

// Mean absolute error of the predictor's task quantity over uniform pairs,
// with the other task's error derived through the size identity.
EvalReport evaluate_sizes(const PairPredictor& predictor, const ObjectPool& pool, int size_min,
                          int size_max, int64_t n_pairs, uint64_t seed);

// 4-way containment classification over relation-balanced pairs: converts
// the prediction to a symmetric-difference size and applies the size-based
// decision rule with margin tau.
EvalReport evaluate_containment(const PairPredictor& predictor, const ObjectPool& pool,
                                int64_t n_pairs, double tau, int size_min, int size_max,
                                uint64_t seed);

struct CrossWireReport {
    Task task = Task::SymDiff;
    double matched_mae = 0.0;
    double crossed_mae = 0.0;
    double ratio = 0.0;
};

std::string to_json(const CrossWireReport& report);

// Trains a matched-head model and its cross-wired twin on identical seeds
// and data streams, then compares their task MAEs on the eval pool.
CrossWireReport run_cross_wire(const TrainConfig& cfg, const ObjectPool& train_pool,
                               const ObjectPool& eval_pool, int eval_size_min, int eval_size_max,
                               int64_t eval_pairs, uint64_t eval_seed);

// CSV "id,label,e1..ek" of per-object embeddings over the pool.
void dump_representations(const Model& model, const ObjectPool& pool, const std::string& path);

// Fraction of pool objects whose embedding lies within l1 distance tol of a
// standard basis vector.
double basis_alignment(const Model& model, const ObjectPool& pool, double tol = 0.1);

// Appends one JSONL eval event carrying the report plus run identity.
void append_eval_event(const std::string& metrics_path, const EvalReport& report,
                       const std::string& hash, uint64_t seed);

}  // namespace msr
