// The learnable multiset representation models and their prediction heads.
// Three pooling variants (simplex-constrained, unrestricted sum, post-pooled
// DeepSets) cross two prediction modes (the fixed size operations or a
// learned symmetric network) cover every configuration the experiments use.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msr/tensor.hpp"

namespace msr {

enum class Variant { Simplex, Unrestricted, DeepSets };
enum class Head { SymDiffL1, IntersectionMin, LearnedOp };
enum class Task { SymDiff, Intersection };

const char* to_string(Variant v);
const char* to_string(Head h);
const char* to_string(Task t);
Variant variant_from_string(const std::string& s);
Head head_from_string(const std::string& s);
Task task_from_string(const std::string& s);

struct ModelConfig {
    Variant variant = Variant::Simplex;
    Head head = Head::SymDiffL1;
    Task task = Task::SymDiff;
    int input_dim = 2;
    int rep_dim = 2;  // label dimension k-hat of the hypothesis universe
    std::vector<int> featurizer_hidden = {64, 64};
    std::vector<int> rho1_widths = {100, 100};
    std::vector<int> rho2_widths = {100};

    // Throws std::invalid_argument when the combination is unusable.
    void validate() const;

    // Dimension of multiset representations this config produces.
    int representation_dim() const;

    static Head matched_head(Task t) {
        return t == Task::SymDiff ? Head::SymDiffL1 : Head::IntersectionMin;
    }
};

std::string to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

// One multiset of featurized objects: parallel feature rows and positive
// multiplicities.
struct WeightedItems {
    std::vector<std::vector<double>> features;
    std::vector<double> weights;

    void add(std::vector<double> feature, double weight = 1.0);
    std::size_t size() const { return features.size(); }
    double total_weight() const;
};

class Model {
public:
    // Fresh parameters, uniform in +-1/sqrt(fan_in) per layer.
    Model(ModelConfig cfg, uint64_t seed);
    Model(ModelConfig cfg, ParameterStore params);

    const ModelConfig& config() const { return cfg_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    // Raw featurizer output phi(x).
    std::vector<double> featurize(const std::vector<double>& x) const;

    // Per-object embedding as used inside represent: the simplex row for the
    // Simplex variant, phi(x) otherwise.
    std::vector<double> object_embedding(const std::vector<double>& x) const;

    // Multiset representation. Permutation invariant bit-for-bit: rows are
    // canonicalized (exact duplicates merged, then sorted) before pooling.
    // The empty multiset maps to the zero vector (rho1(0) for DeepSets).
    std::vector<double> represent(const WeightedItems& a) const;

    // Prediction head on two representations from this model. Estimates the
    // configured task's quantity; symmetric in (a, b) for every head.
    double predict(const std::vector<double>& rep_a, const std::vector<double>& rep_b) const;

    // End-to-end prediction for a pair of multisets.
    double predict_pair(const WeightedItems& a, const WeightedItems& b) const;

    struct LossResult {
        double loss = 0.0;
        std::map<std::string, Tensor> grads;
        // Smallest kink distance seen in the forward pass; finite-difference
        // comparisons discard draws where this is tiny.
        double kink_gap = 0.0;
    };

    // Squared error of the head output against target, with gradients for
    // every parameter. Throws on non-finite loss.
    LossResult loss(const WeightedItems& a, const WeightedItems& b, double target) const;

    // Loss value only, at the given parameters (finite-difference oracle hook).
    double loss_value(const ParameterStore& at, const WeightedItems& a, const WeightedItems& b,
                      double target) const;

private:
    struct Forward {
        std::map<std::string, ValueId> param_ids;
        ValueId output = 0;
    };
    ValueId emit_params_and_rep(Tape& tape, const ParameterStore& params,
                                std::map<std::string, ValueId>& param_ids,
                                const WeightedItems& a) const;
    ValueId emit_mlp(Tape& tape, const std::map<std::string, ValueId>& param_ids,
                     const std::string& prefix, std::size_t n_layers, ValueId x,
                     bool tanh_hidden) const;
    ValueId emit_head(Tape& tape, const std::map<std::string, ValueId>& param_ids, ValueId rep_a,
                      ValueId rep_b) const;
    std::map<std::string, ValueId> emit_param_inputs(Tape& tape,
                                                     const ParameterStore& params) const;

    ModelConfig cfg_;
    ParameterStore params_;
};

// Swaps the two fixed size heads, leaving the task unchanged. Throws for the
// learned-operation head, which has no counterpart.
Model cross_wire(const Model& m);
ModelConfig cross_wire(ModelConfig cfg);

// Checkpoint = parameter binary plus "<path>.json" config sidecar.
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace msr
