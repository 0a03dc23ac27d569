// Dense-tensor compute with reverse-mode differentiation, the Adam
// optimizer, and a finite-difference gradient oracle. Everything runs in
// 64-bit floating point on flat row-major buffers; the op set is exactly
// what the pooling models need.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace msr {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }

    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

using ValueId = std::size_t;

// Records every primitive executed in a forward pass; backward() replays the
// record in reverse and accumulates gradients into every node. One tape per
// loss evaluation; parameters enter as leaf inputs.
class Tape {
public:
    ValueId input(Tensor value);

    // y = x W + b with x:[n,din], W:[din,dout], b:[dout].
    ValueId linear(ValueId x, ValueId w, ValueId b);

    ValueId relu(ValueId x);
    ValueId tanh_act(ValueId x);
    ValueId softplus(ValueId x);

    // Divides each row of x:[n,k] by its sum. Throws when a row sum falls
    // at or below 1e-30.
    ValueId normalize_l1(ValueId x);

    // Multiplies row i of x:[n,k] by weights[i]; weights are constants.
    ValueId scale_rows(ValueId x, std::vector<double> weights);

    // Column sums of x:[n,k], giving [1,k].
    ValueId sum_rows(ValueId x);

    ValueId add(ValueId a, ValueId b);

    // sum_i |u_i - v_i| as a [1,1] scalar.
    ValueId l1_distance(ValueId u, ValueId v);

    // sum_i min(u_i, v_i) as a [1,1] scalar.
    ValueId min_pool_sum(ValueId u, ValueId v);

    // (pred - target)^2 for a [1,1] pred.
    ValueId squared_error(ValueId pred, double target);

    // Seeds d(root) = 1 and accumulates gradients for every node that
    // influenced it. root must be a [1,1] scalar.
    void backward(ValueId root);

    const Tensor& value(ValueId id) const { return nodes_[id].value; }
    const Tensor& grad(ValueId id) const { return nodes_[id].grad; }
    double scalar_value(ValueId id) const { return nodes_[id].value.data[0]; }

    // Smallest distance to a relu / |.| / min kink observed during forward;
    // +inf when no kinked op ran. Finite-difference checks use this to
    // discard draws whose oracle window would straddle a kink.
    double min_kink_gap() const { return min_kink_gap_; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, std::size_t)> backprop;
    };

    ValueId push(Tensor value, std::function<void(Tape&, std::size_t)> backprop);
    Tensor& grad_slot(ValueId id);
    void note_kink(double gap);

    std::vector<Node> nodes_;
    double min_kink_gap_ = 1e300;
};

struct AdamConfig {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Named parameter tensors with paired Adam moment state. Iteration order is
// name order, which keeps optimizer sweeps and serialization deterministic.
struct ParameterStore {
    struct Slot {
        Tensor value;
        Tensor adam_m;
        Tensor adam_v;
    };

    std::map<std::string, Slot> params;
    uint64_t step = 0;

    Tensor& add(const std::string& name, Tensor init);
    Tensor& value(const std::string& name);
    const Tensor& value(const std::string& name) const;
    bool has(const std::string& name) const { return params.count(name) != 0; }
};

// One bias-corrected Adam update over every parameter. Parameters missing
// from grads receive a zero gradient. Throws on non-finite gradients or
// shape mismatches.
void adam_step(ParameterStore& store, const std::map<std::string, Tensor>& grads,
               const AdamConfig& cfg);

// Central-difference gradient of loss_fn at the store's current values.
// loss_fn must be pure and deterministic.
std::map<std::string, Tensor> finite_difference_gradient(
    const std::function<double(const ParameterStore&)>& loss_fn, const ParameterStore& store,
    double h = 1e-5);

// Flat binary checkpoint format, little-endian throughout:
//   magic "MSLB" | u32 version | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | rank x u64 dims
//               | numel x f64 data
// Parameters are written in name order together with their Adam moments
// ("<name>.adam_m", "<name>.adam_v") and the step counter ("adam.step").
void save_parameters(const ParameterStore& store, const std::string& path);
ParameterStore load_parameters(const std::string& path);

}  // namespace msr
