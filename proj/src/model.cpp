#include "msr/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "msr/rng.hpp"

namespace msr {

namespace {

// Layer input/output sizes for one of the three sub-networks.
std::vector<std::pair<int, int>> layer_dims(const std::vector<int>& widths, int in_dim,
                                            int out_dim, bool append_out) {
    std::vector<std::pair<int, int>> dims;
    int prev = in_dim;
    for (int w : widths) {
        dims.emplace_back(prev, w);
        prev = w;
    }
    if (append_out) dims.emplace_back(prev, out_dim);
    return dims;
}

std::string param_name(const std::string& prefix, std::size_t layer, const char* kind) {
    return prefix + "." + std::to_string(layer) + "." + kind;
}

// Canonical form of a multiset of feature rows: exact duplicates merged,
// rows sorted lexicographically (weight as tiebreak). Pooling the canonical
// form makes represent() independent of input order, bit for bit.
WeightedItems canonicalize(const WeightedItems& a) {
    std::vector<std::size_t> order(a.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto row_less = [&](std::size_t x, std::size_t y) {
        if (a.features[x] != a.features[y]) return a.features[x] < a.features[y];
        return a.weights[x] < a.weights[y];
    };
    std::sort(order.begin(), order.end(), row_less);
    WeightedItems out;
    for (std::size_t idx : order) {
        if (!out.features.empty() && out.features.back() == a.features[idx])
            out.weights.back() += a.weights[idx];
        else
            out.add(a.features[idx], a.weights[idx]);
    }
    return out;
}

}  // namespace

const char* to_string(Variant v) {
    switch (v) {
        case Variant::Simplex: return "simplex";
        case Variant::Unrestricted: return "unrestricted";
        case Variant::DeepSets: return "deepsets";
    }
    return "invalid";
}

const char* to_string(Head h) {
    switch (h) {
        case Head::SymDiffL1: return "symdiff-l1";
        case Head::IntersectionMin: return "intersection-min";
        case Head::LearnedOp: return "learned-op";
    }
    return "invalid";
}

const char* to_string(Task t) {
    return t == Task::SymDiff ? "symdiff" : "intersection";
}

Variant variant_from_string(const std::string& s) {
    if (s == "simplex") return Variant::Simplex;
    if (s == "unrestricted") return Variant::Unrestricted;
    if (s == "deepsets") return Variant::DeepSets;
    throw std::invalid_argument("unknown variant: " + s);
}

Head head_from_string(const std::string& s) {
    if (s == "symdiff-l1") return Head::SymDiffL1;
    if (s == "intersection-min") return Head::IntersectionMin;
    if (s == "learned-op") return Head::LearnedOp;
    throw std::invalid_argument("unknown head: " + s);
}

Task task_from_string(const std::string& s) {
    if (s == "symdiff") return Task::SymDiff;
    if (s == "intersection") return Task::Intersection;
    throw std::invalid_argument("unknown task: " + s);
}

void ModelConfig::validate() const {
    if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    if (rep_dim < 1) throw std::invalid_argument("rep_dim must be >= 1");
    if (variant == Variant::DeepSets && rho1_widths.empty())
        throw std::invalid_argument("DeepSets variant requires rho1 widths");
    if (head == Head::LearnedOp && rho2_widths.empty())
        throw std::invalid_argument("learned-op head requires rho2 widths");
    for (int w : featurizer_hidden)
        if (w < 1) throw std::invalid_argument("featurizer widths must be >= 1");
    for (int w : rho1_widths)
        if (w < 1) throw std::invalid_argument("rho1 widths must be >= 1");
    for (int w : rho2_widths)
        if (w < 1) throw std::invalid_argument("rho2 widths must be >= 1");
}

int ModelConfig::representation_dim() const {
    return variant == Variant::DeepSets ? rho1_widths.back() : rep_dim;
}

std::string to_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["variant"] = to_string(cfg.variant);
    j["head"] = to_string(cfg.head);
    j["task"] = to_string(cfg.task);
    j["input_dim"] = cfg.input_dim;
    j["rep_dim"] = cfg.rep_dim;
    j["featurizer_hidden"] = cfg.featurizer_hidden;
    j["rho1_widths"] = cfg.rho1_widths;
    j["rho2_widths"] = cfg.rho2_widths;
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    ModelConfig cfg;
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    cfg.head = head_from_string(j.at("head").get<std::string>());
    cfg.task = task_from_string(j.at("task").get<std::string>());
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.rep_dim = j.at("rep_dim").get<int>();
    cfg.featurizer_hidden = j.at("featurizer_hidden").get<std::vector<int>>();
    cfg.rho1_widths = j.at("rho1_widths").get<std::vector<int>>();
    cfg.rho2_widths = j.at("rho2_widths").get<std::vector<int>>();
    cfg.validate();
    return cfg;
}

void WeightedItems::add(std::vector<double> feature, double weight) {
    if (weight <= 0.0) throw std::invalid_argument("item weight must be positive");
    features.push_back(std::move(feature));
    weights.push_back(weight);
}

double WeightedItems::total_weight() const {
    double total = 0.0;
    for (double w : weights) total += w;
    return total;
}

Model::Model(ModelConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    auto init_layer = [&](const std::string& prefix, std::size_t layer, int fan_in, int fan_out) {
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Tensor w = Tensor::zeros({static_cast<std::size_t>(fan_in), static_cast<std::size_t>(fan_out)});
        for (double& v : w.data) v = rng.uniform(-bound, bound);
        Tensor b = Tensor::zeros({static_cast<std::size_t>(fan_out)});
        for (double& v : b.data) v = rng.uniform(-bound, bound);
        params_.add(param_name(prefix, layer, "W"), std::move(w));
        params_.add(param_name(prefix, layer, "b"), std::move(b));
    };

    auto phi = layer_dims(cfg_.featurizer_hidden, cfg_.input_dim, cfg_.rep_dim, true);
    for (std::size_t i = 0; i < phi.size(); ++i) init_layer("phi", i, phi[i].first, phi[i].second);

    if (cfg_.variant == Variant::DeepSets) {
        auto rho1 = layer_dims(cfg_.rho1_widths, cfg_.rep_dim, 0, false);
        for (std::size_t i = 0; i < rho1.size(); ++i)
            init_layer("rho1", i, rho1[i].first, rho1[i].second);
    }
    if (cfg_.head == Head::LearnedOp) {
        auto rho2 = layer_dims(cfg_.rho2_widths, cfg_.representation_dim(), 1, true);
        for (std::size_t i = 0; i < rho2.size(); ++i)
            init_layer("rho2", i, rho2[i].first, rho2[i].second);
    }
}

Model::Model(ModelConfig cfg, ParameterStore params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
}

std::map<std::string, ValueId> Model::emit_param_inputs(Tape& tape,
                                                        const ParameterStore& params) const {
    std::map<std::string, ValueId> ids;
    for (const auto& [name, slot] : params.params) ids[name] = tape.input(slot.value);
    return ids;
}

ValueId Model::emit_mlp(Tape& tape, const std::map<std::string, ValueId>& param_ids,
                        const std::string& prefix, std::size_t n_layers, ValueId x,
                        bool tanh_hidden) const {
    ValueId cur = x;
    for (std::size_t i = 0; i < n_layers; ++i) {
        cur = tape.linear(cur, param_ids.at(param_name(prefix, i, "W")),
                          param_ids.at(param_name(prefix, i, "b")));
        if (i + 1 < n_layers) cur = tanh_hidden ? tape.tanh_act(cur) : tape.relu(cur);
    }
    return cur;
}

ValueId Model::emit_params_and_rep(Tape& tape, const ParameterStore& params,
                                   std::map<std::string, ValueId>& param_ids,
                                   const WeightedItems& raw) const {
    if (param_ids.empty()) param_ids = emit_param_inputs(tape, params);
    WeightedItems a = canonicalize(raw);
    std::size_t n = a.size();
    std::size_t k = static_cast<std::size_t>(cfg_.rep_dim);
    std::size_t phi_layers = cfg_.featurizer_hidden.size() + 1;

    ValueId pooled;
    if (n == 0) {
        pooled = tape.input(Tensor::zeros({1, k}));
    } else {
        Tensor rows = Tensor::zeros({n, static_cast<std::size_t>(cfg_.input_dim)});
        for (std::size_t i = 0; i < n; ++i) {
            if (a.features[i].size() != static_cast<std::size_t>(cfg_.input_dim))
                throw std::invalid_argument("feature dimension mismatch: got " +
                                            std::to_string(a.features[i].size()) + ", expected " +
                                            std::to_string(cfg_.input_dim));
            for (std::size_t j = 0; j < a.features[i].size(); ++j) rows.at(i, j) = a.features[i][j];
        }
        ValueId x = tape.input(std::move(rows));
        ValueId phi = emit_mlp(tape, param_ids, "phi", phi_layers, x, /*tanh_hidden=*/false);
        ValueId per_object = phi;
        if (cfg_.variant == Variant::Simplex)
            per_object = tape.normalize_l1(tape.softplus(phi));
        pooled = tape.sum_rows(tape.scale_rows(per_object, a.weights));
    }
    if (cfg_.variant == Variant::DeepSets)
        pooled = emit_mlp(tape, param_ids, "rho1", cfg_.rho1_widths.size(), pooled,
                          /*tanh_hidden=*/true);
    return pooled;
}

ValueId Model::emit_head(Tape& tape, const std::map<std::string, ValueId>& param_ids,
                         ValueId rep_a, ValueId rep_b) const {
    switch (cfg_.head) {
        case Head::SymDiffL1:
            return tape.l1_distance(rep_a, rep_b);
        case Head::IntersectionMin:
            return tape.min_pool_sum(rep_a, rep_b);
        case Head::LearnedOp:
            return emit_mlp(tape, param_ids, "rho2", cfg_.rho2_widths.size() + 1,
                            tape.add(rep_a, rep_b), /*tanh_hidden=*/true);
    }
    throw std::logic_error("invalid head");
}

std::vector<double> Model::featurize(const std::vector<double>& x) const {
    if (x.size() != static_cast<std::size_t>(cfg_.input_dim))
        throw std::invalid_argument("feature dimension mismatch: got " + std::to_string(x.size()) +
                                    ", expected " + std::to_string(cfg_.input_dim));
    Tape tape;
    auto param_ids = emit_param_inputs(tape, params_);
    Tensor row({1, x.size()}, x);
    ValueId out = emit_mlp(tape, param_ids, "phi", cfg_.featurizer_hidden.size() + 1,
                           tape.input(std::move(row)), false);
    return tape.value(out).data;
}

std::vector<double> Model::object_embedding(const std::vector<double>& x) const {
    Tape tape;
    auto param_ids = emit_param_inputs(tape, params_);
    Tensor row({1, x.size()}, x);
    ValueId phi = emit_mlp(tape, param_ids, "phi", cfg_.featurizer_hidden.size() + 1,
                           tape.input(std::move(row)), false);
    if (cfg_.variant == Variant::Simplex) phi = tape.normalize_l1(tape.softplus(phi));
    return tape.value(phi).data;
}

std::vector<double> Model::represent(const WeightedItems& a) const {
    Tape tape;
    std::map<std::string, ValueId> param_ids;
    ValueId rep = emit_params_and_rep(tape, params_, param_ids, a);
    return tape.value(rep).data;
}

double Model::predict(const std::vector<double>& rep_a, const std::vector<double>& rep_b) const {
    if (rep_a.size() != rep_b.size())
        throw std::invalid_argument("representation dimension mismatch");
    Tape tape;
    std::map<std::string, ValueId> param_ids;
    if (cfg_.head == Head::LearnedOp) param_ids = emit_param_inputs(tape, params_);
    ValueId a = tape.input(Tensor({1, rep_a.size()}, rep_a));
    ValueId b = tape.input(Tensor({1, rep_b.size()}, rep_b));
    return tape.scalar_value(emit_head(tape, param_ids, a, b));
}

double Model::predict_pair(const WeightedItems& a, const WeightedItems& b) const {
    Tape tape;
    std::map<std::string, ValueId> param_ids;
    ValueId rep_a = emit_params_and_rep(tape, params_, param_ids, a);
    ValueId rep_b = emit_params_and_rep(tape, params_, param_ids, b);
    return tape.scalar_value(emit_head(tape, param_ids, rep_a, rep_b));
}

Model::LossResult Model::loss(const WeightedItems& a, const WeightedItems& b,
                              double target) const {
    Tape tape;
    std::map<std::string, ValueId> param_ids;
    ValueId rep_a = emit_params_and_rep(tape, params_, param_ids, a);
    ValueId rep_b = emit_params_and_rep(tape, params_, param_ids, b);
    ValueId head = emit_head(tape, param_ids, rep_a, rep_b);
    ValueId loss_id = tape.squared_error(head, target);

    LossResult out;
    out.loss = tape.scalar_value(loss_id);
    out.kink_gap = tape.min_kink_gap();
    if (!std::isfinite(out.loss)) throw std::runtime_error("non-finite loss");
    tape.backward(loss_id);
    for (const auto& [name, id] : param_ids) {
        const Tensor& g = tape.grad(id);
        out.grads[name] = g.data.empty() ? Tensor::zeros(tape.value(id).shape) : g;
    }
    return out;
}

double Model::loss_value(const ParameterStore& at, const WeightedItems& a,
                         const WeightedItems& b, double target) const {
    Tape tape;
    std::map<std::string, ValueId> param_ids = emit_param_inputs(tape, at);
    ValueId rep_a = emit_params_and_rep(tape, at, param_ids, a);
    ValueId rep_b = emit_params_and_rep(tape, at, param_ids, b);
    ValueId head = emit_head(tape, param_ids, rep_a, rep_b);
    return tape.scalar_value(tape.squared_error(head, target));
}

ModelConfig cross_wire(ModelConfig cfg) {
    switch (cfg.head) {
        case Head::SymDiffL1:
            cfg.head = Head::IntersectionMin;
            return cfg;
        case Head::IntersectionMin:
            cfg.head = Head::SymDiffL1;
            return cfg;
        case Head::LearnedOp:
            throw std::invalid_argument("cannot cross-wire the learned-op head");
    }
    throw std::logic_error("invalid head");
}

Model cross_wire(const Model& m) { return Model(cross_wire(m.config()), m.params()); }

void save_checkpoint(const Model& m, const std::string& path) {
    save_parameters(m.params(), path);
    std::string sidecar = path + ".json";
    std::ofstream out(sidecar);
    if (!out) throw std::runtime_error("cannot open config sidecar for writing: " + sidecar);
    out << to_json(m.config()) << "\n";
}

Model load_checkpoint(const std::string& path) {
    std::string sidecar = path + ".json";
    std::ifstream in(sidecar);
    if (!in) throw std::runtime_error("cannot open config sidecar: " + sidecar);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Model(model_config_from_json(text), load_parameters(path));
}

}  // namespace msr
