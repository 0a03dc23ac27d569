#include "msr/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace msr {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

double stable_softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size())
        throw std::invalid_argument("tensor data length does not match shape");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

bool Tensor::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

ValueId Tape::push(Tensor value, std::function<void(Tape&, std::size_t)> backprop) {
    nodes_.push_back({std::move(value), Tensor{}, std::move(backprop)});
    return nodes_.size() - 1;
}

Tensor& Tape::grad_slot(ValueId id) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
    return n.grad;
}

void Tape::note_kink(double gap) {
    if (gap < min_kink_gap_) min_kink_gap_ = gap;
}

ValueId Tape::input(Tensor value) { return push(std::move(value), nullptr); }

ValueId Tape::linear(ValueId x, ValueId w, ValueId b) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wv = nodes_[w].value;
    const Tensor& bv = nodes_[b].value;
    if (xv.shape.size() != 2 || wv.shape.size() != 2)
        throw std::invalid_argument("linear expects 2-d input and weight");
    std::size_t n = xv.shape[0], din = xv.shape[1], dout = wv.shape[1];
    if (wv.shape[0] != din)
        throw std::invalid_argument("linear shape mismatch: x has " + std::to_string(din) +
                                    " columns, W has " + std::to_string(wv.shape[0]) + " rows");
    if (bv.numel() != dout) throw std::invalid_argument("linear bias dimension mismatch");

    Tensor out = Tensor::zeros({n, dout});
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = &out.data[i * dout];
        for (std::size_t j = 0; j < dout; ++j) orow[j] = bv.data[j];
        const double* xrow = &xv.data[i * din];
        for (std::size_t k = 0; k < din; ++k) {
            double xk = xrow[k];
            const double* wrow = &wv.data[k * dout];
            for (std::size_t j = 0; j < dout; ++j) orow[j] += xk * wrow[j];
        }
    }
    return push(std::move(out), [x, w, b, n, din, dout](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv = t.nodes_[x].value;
        const Tensor& wv = t.nodes_[w].value;
        Tensor& gx = t.grad_slot(x);
        Tensor& gw = t.grad_slot(w);
        Tensor& gb = t.grad_slot(b);
        for (std::size_t i = 0; i < n; ++i) {
            const double* grow = &g.data[i * dout];
            const double* xrow = &xv.data[i * din];
            double* gxrow = &gx.data[i * din];
            for (std::size_t k = 0; k < din; ++k) {
                const double* wrow = &wv.data[k * dout];
                double* gwrow = &gw.data[k * dout];
                double acc = 0.0;
                double xk = xrow[k];
                for (std::size_t j = 0; j < dout; ++j) {
                    acc += grow[j] * wrow[j];
                    gwrow[j] += xk * grow[j];
                }
                gxrow[k] += acc;
            }
            for (std::size_t j = 0; j < dout; ++j) gb.data[j] += grow[j];
        }
    });
}

ValueId Tape::relu(ValueId x) {
    const Tensor& xv = nodes_[x].value;
    Tensor out = xv;
    for (double& v : out.data) {
        note_kink(std::abs(v));
        if (v < 0.0) v = 0.0;
    }
    return push(std::move(out), [x](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv = t.nodes_[x].value;
        Tensor& gx = t.grad_slot(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (xv.data[i] > 0.0) gx.data[i] += g.data[i];
    });
}

ValueId Tape::tanh_act(ValueId x) {
    Tensor out = nodes_[x].value;
    for (double& v : out.data) v = std::tanh(v);
    return push(std::move(out), [x](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& yv = t.nodes_[self].value;
        Tensor& gx = t.grad_slot(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            gx.data[i] += g.data[i] * (1.0 - yv.data[i] * yv.data[i]);
    });
}

ValueId Tape::softplus(ValueId x) {
    Tensor out = nodes_[x].value;
    for (double& v : out.data) v = stable_softplus(v);
    return push(std::move(out), [x](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv = t.nodes_[x].value;
        Tensor& gx = t.grad_slot(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            gx.data[i] += g.data[i] * sigmoid(xv.data[i]);
    });
}

ValueId Tape::normalize_l1(ValueId x) {
    const Tensor& xv = nodes_[x].value;
    if (xv.shape.size() != 2) throw std::invalid_argument("normalize_l1 expects a 2-d tensor");
    std::size_t n = xv.shape[0], k = xv.shape[1];
    Tensor out = xv;
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += xv.data[i * k + j];
        if (s <= 1e-30)
            throw std::runtime_error("normalize_l1: row " + std::to_string(i) +
                                     " sum is not strictly positive");
        sums[i] = s;
        for (std::size_t j = 0; j < k; ++j) out.data[i * k + j] /= s;
    }
    return push(std::move(out), [x, n, k, sums](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& yv = t.nodes_[self].value;
        Tensor& gx = t.grad_slot(x);
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < k; ++j) dot += g.data[i * k + j] * yv.data[i * k + j];
            for (std::size_t j = 0; j < k; ++j)
                gx.data[i * k + j] += (g.data[i * k + j] - dot) / sums[i];
        }
    });
}

ValueId Tape::scale_rows(ValueId x, std::vector<double> weights) {
    const Tensor& xv = nodes_[x].value;
    if (xv.shape.size() != 2) throw std::invalid_argument("scale_rows expects a 2-d tensor");
    std::size_t n = xv.shape[0], k = xv.shape[1];
    if (weights.size() != n) throw std::invalid_argument("scale_rows weight count mismatch");
    Tensor out = xv;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) out.data[i * k + j] *= weights[i];
    return push(std::move(out), [x, n, k, w = std::move(weights)](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.grad_slot(x);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) gx.data[i * k + j] += g.data[i * k + j] * w[i];
    });
}

ValueId Tape::sum_rows(ValueId x) {
    const Tensor& xv = nodes_[x].value;
    if (xv.shape.size() != 2) throw std::invalid_argument("sum_rows expects a 2-d tensor");
    std::size_t n = xv.shape[0], k = xv.shape[1];
    Tensor out = Tensor::zeros({1, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) out.data[j] += xv.data[i * k + j];
    return push(std::move(out), [x, n, k](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.grad_slot(x);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) gx.data[i * k + j] += g.data[j];
    });
}

ValueId Tape::add(ValueId a, ValueId b) {
    const Tensor& av = nodes_[a].value;
    const Tensor& bv = nodes_[b].value;
    if (!av.same_shape(bv)) throw std::invalid_argument("add shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
    return push(std::move(out), [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_slot(a);
        Tensor& gb = t.grad_slot(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[i];
        }
    });
}

ValueId Tape::l1_distance(ValueId u, ValueId v) {
    const Tensor& uv = nodes_[u].value;
    const Tensor& vv = nodes_[v].value;
    if (!uv.same_shape(vv)) throw std::invalid_argument("l1_distance shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < uv.numel(); ++i) {
        double d = uv.data[i] - vv.data[i];
        note_kink(std::abs(d));
        total += std::abs(d);
    }
    return push(Tensor::scalar(total), [u, v](Tape& t, std::size_t self) {
        double g = t.nodes_[self].grad.data[0];
        const Tensor& uv = t.nodes_[u].value;
        const Tensor& vv = t.nodes_[v].value;
        Tensor& gu = t.grad_slot(u);
        Tensor& gv = t.grad_slot(v);
        for (std::size_t i = 0; i < uv.numel(); ++i) {
            double d = uv.data[i] - vv.data[i];
            // sign(0) = 0: ties contribute nothing to either side.
            double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            gu.data[i] += g * s;
            gv.data[i] -= g * s;
        }
    });
}

ValueId Tape::min_pool_sum(ValueId u, ValueId v) {
    const Tensor& uv = nodes_[u].value;
    const Tensor& vv = nodes_[v].value;
    if (!uv.same_shape(vv)) throw std::invalid_argument("min_pool_sum shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < uv.numel(); ++i) {
        note_kink(std::abs(uv.data[i] - vv.data[i]));
        total += std::min(uv.data[i], vv.data[i]);
    }
    return push(Tensor::scalar(total), [u, v](Tape& t, std::size_t self) {
        double g = t.nodes_[self].grad.data[0];
        const Tensor& uv = t.nodes_[u].value;
        const Tensor& vv = t.nodes_[v].value;
        Tensor& gu = t.grad_slot(u);
        Tensor& gv = t.grad_slot(v);
        for (std::size_t i = 0; i < uv.numel(); ++i) {
            // Gradient goes to the strictly smaller argument; ties get 0/0.
            if (uv.data[i] < vv.data[i])
                gu.data[i] += g;
            else if (vv.data[i] < uv.data[i])
                gv.data[i] += g;
        }
    });
}

ValueId Tape::squared_error(ValueId pred, double target) {
    const Tensor& pv = nodes_[pred].value;
    if (pv.numel() != 1) throw std::invalid_argument("squared_error expects a scalar prediction");
    double r = pv.data[0] - target;
    return push(Tensor::scalar(r * r), [pred, target](Tape& t, std::size_t self) {
        double g = t.nodes_[self].grad.data[0];
        Tensor& gp = t.grad_slot(pred);
        gp.data[0] += g * 2.0 * (t.nodes_[pred].value.data[0] - target);
    });
}

void Tape::backward(ValueId root) {
    if (nodes_[root].value.numel() != 1)
        throw std::invalid_argument("backward root must be a scalar");
    grad_slot(root).data[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backprop && !n.grad.data.empty()) n.backprop(*this, i);
    }
}

Tensor& ParameterStore::add(const std::string& name, Tensor init) {
    auto [it, inserted] = params.emplace(
        name, Slot{std::move(init), Tensor{}, Tensor{}});
    if (!inserted) throw std::invalid_argument("duplicate parameter name: " + name);
    it->second.adam_m = Tensor::zeros(it->second.value.shape);
    it->second.adam_v = Tensor::zeros(it->second.value.shape);
    return it->second.value;
}

Tensor& ParameterStore::value(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second.value;
}

const Tensor& ParameterStore::value(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second.value;
}

void adam_step(ParameterStore& store, const std::map<std::string, Tensor>& grads,
               const AdamConfig& cfg) {
    for (const auto& [name, g] : grads) {
        if (!store.has(name)) throw std::invalid_argument("gradient for unknown parameter " + name);
        if (!g.same_shape(store.value(name)))
            throw std::invalid_argument("gradient shape mismatch for " + name);
        if (!g.all_finite()) throw std::runtime_error("non-finite gradient for " + name);
    }
    store.step += 1;
    double t = static_cast<double>(store.step);
    double bc1 = 1.0 - std::pow(cfg.beta1, t);
    double bc2 = 1.0 - std::pow(cfg.beta2, t);
    static const Tensor kEmpty;
    for (auto& [name, slot] : store.params) {
        auto git = grads.find(name);
        const Tensor& g = git == grads.end() ? kEmpty : git->second;
        for (std::size_t i = 0; i < slot.value.numel(); ++i) {
            double gi = g.data.empty() ? 0.0 : g.data[i];
            double m = cfg.beta1 * slot.adam_m.data[i] + (1.0 - cfg.beta1) * gi;
            double v = cfg.beta2 * slot.adam_v.data[i] + (1.0 - cfg.beta2) * gi * gi;
            slot.adam_m.data[i] = m;
            slot.adam_v.data[i] = v;
            double m_hat = m / bc1;
            double v_hat = v / bc2;
            slot.value.data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

std::map<std::string, Tensor> finite_difference_gradient(
    const std::function<double(const ParameterStore&)>& loss_fn, const ParameterStore& store,
    double h) {
    ParameterStore work = store;
    std::map<std::string, Tensor> out;
    for (auto& [name, slot] : work.params) {
        Tensor g = Tensor::zeros(slot.value.shape);
        for (std::size_t i = 0; i < slot.value.numel(); ++i) {
            double saved = slot.value.data[i];
            slot.value.data[i] = saved + h;
            double up = loss_fn(work);
            slot.value.data[i] = saved - h;
            double down = loss_fn(work);
            slot.value.data[i] = saved;
            g.data[i] = (up - down) / (2.0 * h);
        }
        out.emplace(name, std::move(g));
    }
    return out;
}

namespace {

void write_u32(std::ofstream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ofstream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ofstream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated checkpoint");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t read_u64(std::ifstream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated checkpoint");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::ifstream& in) {
    uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) write_u64(out, d);
    for (double v : t.data) write_f64(out, v);
}

}  // namespace

void save_parameters(const ParameterStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write("MSLB", 4);
    write_u32(out, 1);
    write_u32(out, static_cast<uint32_t>(store.params.size() * 3 + 1));
    for (const auto& [name, slot] : store.params) {
        write_tensor(out, name, slot.value);
        write_tensor(out, name + ".adam_m", slot.adam_m);
        write_tensor(out, name + ".adam_v", slot.adam_v);
    }
    write_tensor(out, "adam.step", Tensor({1}, {static_cast<double>(store.step)}));
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

ParameterStore load_parameters(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "MSLB", 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    uint32_t version = read_u32(in);
    if (version != 1)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    uint32_t count = read_u32(in);

    std::map<std::string, Tensor> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw std::runtime_error("truncated checkpoint");
        uint32_t rank = read_u32(in);
        std::vector<std::size_t> shape(rank);
        std::size_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            shape[r] = static_cast<std::size_t>(read_u64(in));
            numel *= shape[r];
        }
        std::vector<double> data(numel);
        for (std::size_t j = 0; j < numel; ++j) data[j] = read_f64(in);
        tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
    }

    ParameterStore store;
    auto ends_with = [](const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    for (auto& [name, tensor] : tensors) {
        if (name == "adam.step" || ends_with(name, ".adam_m") || ends_with(name, ".adam_v"))
            continue;
        store.add(name, tensor);
    }
    for (auto& [name, slot] : store.params) {
        auto m = tensors.find(name + ".adam_m");
        if (m != tensors.end() && m->second.same_shape(slot.value)) slot.adam_m = m->second;
        auto v = tensors.find(name + ".adam_v");
        if (v != tensors.end() && v->second.same_shape(slot.value)) slot.adam_v = v->second;
    }
    auto st = tensors.find("adam.step");
    if (st != tensors.end() && st->second.numel() == 1)
        store.step = static_cast<uint64_t>(st->second.data[0]);
    return store;
}

}  // namespace msr
