#include "msr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace msr {

void SyntheticUniverseSpec::validate() const {
    if (k < 2) throw std::invalid_argument("universe needs k >= 2 labels");
    if (d < 2) throw std::invalid_argument("universe needs d >= 2 feature dimensions");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    if (prototype_scale <= 0.0) throw std::invalid_argument("prototype_scale must be > 0");
    if (n_train < 1 || n_eval < 1) throw std::invalid_argument("pool sizes must be >= 1");
}

ObjectPool::ObjectPool(std::vector<PoolObject> objects) : objects_(std::move(objects)) {
    for (const auto& obj : objects_) {
        if (obj.label < 1) throw std::invalid_argument("object labels must be >= 1");
        k_ = std::max(k_, obj.label);
    }
    by_label_.assign(k_ + 1, {});
    for (std::size_t i = 0; i < objects_.size(); ++i)
        by_label_[objects_[i].label].push_back(i);
}

const std::vector<std::size_t>& ObjectPool::with_label(int label) const {
    if (label < 1 || label > k_) throw std::out_of_range("label " + std::to_string(label) +
                                                         " outside pool labels");
    return by_label_[label];
}

UniverseTransformation ObjectPool::label_table() const {
    UniverseTransformation t(k_);
    for (const auto& obj : objects_) t.set_label(obj.id, obj.label);
    return t;
}

UniversePools gen_universe(const SyntheticUniverseSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // Random orthonormal frame, scaled: mutually orthogonal prototypes make
    // class separability depend on (prototype_scale, noise_sigma) alone
    // rather than on lucky draws. Beyond d prototypes orthogonality is
    // impossible; later ones fall back to plain random unit vectors.
    std::vector<std::vector<double>> prototypes;
    while (static_cast<int>(prototypes.size()) < spec.k) {
        std::vector<double> v(spec.d);
        for (double& x : v) x = rng.normal();
        if (static_cast<int>(prototypes.size()) < spec.d) {
            for (const auto& p : prototypes) {
                double dot = 0.0;
                for (int i = 0; i < spec.d; ++i) dot += v[i] * p[i];
                for (int i = 0; i < spec.d; ++i) v[i] -= dot * p[i];
            }
        }
        double norm2 = 0.0;
        for (double x : v) norm2 += x * x;
        if (norm2 < 1e-12) continue;
        double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
        prototypes.push_back(std::move(v));
    }
    for (auto& p : prototypes)
        for (double& x : p) x *= spec.prototype_scale;

    auto make_pool = [&](int count, int64_t id_base) {
        std::vector<PoolObject> objects(count);
        for (int i = 0; i < count; ++i) {
            PoolObject& obj = objects[i];
            obj.id = id_base + i;
            obj.label = i % spec.k + 1;
            obj.features = prototypes[obj.label - 1];
            for (double& v : obj.features) v += rng.normal(0.0, spec.noise_sigma);
        }
        return ObjectPool(std::move(objects));
    };

    UniversePools pools;
    pools.train = make_pool(spec.n_train, 0);
    pools.eval = make_pool(spec.n_eval, spec.n_train);
    return pools;
}

void SamplerConfig::validate() const {
    if (size_min < 2 || size_min > size_max)
        throw std::invalid_argument("sampler needs 2 <= size_min <= size_max");
}

PairSampler::PairSampler(const ObjectPool& pool, SamplerConfig cfg)
    : pool_(pool), cfg_(cfg), table_(pool.label_table()), rng_(cfg.seed) {
    cfg_.validate();
    if (pool_.empty()) throw std::invalid_argument("sampler needs a non-empty pool");
}

Multiset PairSampler::sample_multiset() {
    int size = static_cast<int>(rng_.uniform_int(cfg_.size_min, cfg_.size_max));
    Multiset out;
    for (int i = 0; i < size; ++i) {
        std::size_t idx = static_cast<std::size_t>(rng_.uniform_int(0, pool_.size() - 1));
        out.add(pool_.object(idx).id, 1.0);
    }
    return out;
}

PairSample PairSampler::finish(Multiset ids_a, Multiset ids_b) const {
    PairSample out;
    GroundTruthPair gt = ground_truth_pair(table_, ids_a, ids_b);
    out.a = items_from_ids(pool_, ids_a);
    out.b = items_from_ids(pool_, ids_b);
    out.ids_a = std::move(ids_a);
    out.ids_b = std::move(ids_b);
    out.target_symdiff = gt.symdiff;
    out.target_intersection = gt.intersection;
    out.relation = gt.relation;
    return out;
}

PairSample PairSampler::sample_uniform() { return finish(sample_multiset(), sample_multiset()); }

// Draws one object per label unit, uniformly from that label's class.
Multiset PairSampler::sample_with_label_multiset(const LabelVector& labels) {
    Multiset out;
    for (std::size_t label = 1; label <= labels.size(); ++label) {
        int count = static_cast<int>(std::llround(labels[label - 1]));
        const auto& candidates = pool_.with_label(static_cast<int>(label));
        if (count > 0 && candidates.empty())
            throw std::runtime_error("pool has no objects with label " + std::to_string(label));
        for (int c = 0; c < count; ++c) {
            std::size_t idx = candidates[rng_.uniform_int(0, candidates.size() - 1)];
            out.add(pool_.object(idx).id, 1.0);
        }
    }
    return out;
}

PairSample PairSampler::sample_balanced() {
    int which = static_cast<int>(rng_.uniform_int(0, 3));
    switch (which) {
        case 0: {  // Equal: same label multiset realized twice.
            Multiset a = sample_multiset();
            LabelVector labels = pushforward(table_, a);
            return finish(std::move(a), sample_with_label_multiset(labels));
        }
        case 1:
        case 2: {  // Proper containment: delete label units from the larger side.
            Multiset big = sample_multiset();
            LabelVector labels = pushforward(table_, big);
            int total = static_cast<int>(std::llround(labels.cardinality()));
            int remove = static_cast<int>(rng_.uniform_int(1, total - 1));
            // Remove `remove` units uniformly without replacement.
            for (int r = 0; r < remove; ++r) {
                int pick = static_cast<int>(rng_.uniform_int(1, total - r));
                for (std::size_t j = 0; j < labels.size(); ++j) {
                    int units = static_cast<int>(std::llround(labels[j]));
                    if (pick <= units) {
                        labels[j] -= 1.0;
                        break;
                    }
                    pick -= units;
                }
            }
            Multiset small = sample_with_label_multiset(labels);
            return which == 1 ? finish(std::move(small), std::move(big))
                              : finish(std::move(big), std::move(small));
        }
        default: {  // Incomparable: rejection from the uniform distribution.
            for (int attempt = 0; attempt < 1000; ++attempt) {
                PairSample s = sample_uniform();
                if (s.relation == ContainmentRelation::Incomparable) return s;
            }
            throw std::runtime_error(
                "balanced sampler failed to draw an incomparable pair in 1000 attempts");
        }
    }
}

PairSample PairSampler::sample() {
    return cfg_.mode == SamplerMode::Uniform ? sample_uniform() : sample_balanced();
}

WeightedItems items_from_ids(const ObjectPool& pool, const Multiset& ids) {
    // Pools are small enough that a linear id lookup table is cheap to build
    // once per call; callers in hot loops hold multisets over pool ids.
    WeightedItems out;
    for (const auto& [id, mult] : ids.entries()) {
        const PoolObject* found = nullptr;
        // Ids are assigned contiguously from a base; exploit that first.
        if (!pool.empty()) {
            int64_t base = pool.object(0).id;
            int64_t offset = id - base;
            if (offset >= 0 && offset < static_cast<int64_t>(pool.size()) &&
                pool.object(static_cast<std::size_t>(offset)).id == id)
                found = &pool.object(static_cast<std::size_t>(offset));
        }
        if (!found) {
            for (const auto& obj : pool.objects())
                if (obj.id == id) {
                    found = &obj;
                    break;
                }
        }
        if (!found) throw std::out_of_range("object id " + std::to_string(id) + " not in pool");
        out.add(found->features, mult);
    }
    return out;
}

void pool_to_csv(const ObjectPool& pool, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open pool CSV for writing: " + path);
    out << "id,label";
    for (int j = 1; j <= pool.feature_dim(); ++j) out << ",f" << j;
    out << "\n";
    char buf[64];
    for (const auto& obj : pool.objects()) {
        out << obj.id << ',' << obj.label;
        for (double v : obj.features) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing pool CSV: " + path);
}

ObjectPool pool_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pool CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty pool CSV: " + path);
    std::vector<PoolObject> objects;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        PoolObject obj;
        if (!std::getline(ls, field, ',')) break;
        obj.id = std::stoll(field);
        if (!std::getline(ls, field, ','))
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + " has no label");
        obj.label = std::stoi(field);
        while (std::getline(ls, field, ',')) obj.features.push_back(std::stod(field));
        if (obj.features.empty())
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + " has no features");
        objects.push_back(std::move(obj));
    }
    return ObjectPool(std::move(objects));
}

namespace {

uint32_t read_be_u32(std::ifstream& in, const std::string& path, std::size_t& offset) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(path + ": truncated at byte offset " + std::to_string(offset));
    offset += 4;
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

}  // namespace

ObjectPool read_idx(const std::string& images_path, const std::string& labels_path,
                    int64_t id_base) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw std::runtime_error("cannot open IDX image file: " + images_path);
    std::size_t img_off = 0;
    uint32_t magic = read_be_u32(images, images_path, img_off);
    if (magic != 0x00000803)
        throw std::runtime_error(images_path + ": bad image magic " + std::to_string(magic) +
                                 ", expected 2051");
    uint32_t count = read_be_u32(images, images_path, img_off);
    uint32_t rows = read_be_u32(images, images_path, img_off);
    uint32_t cols = read_be_u32(images, images_path, img_off);

    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw std::runtime_error("cannot open IDX label file: " + labels_path);
    std::size_t lab_off = 0;
    uint32_t label_magic = read_be_u32(labels, labels_path, lab_off);
    if (label_magic != 0x00000801)
        throw std::runtime_error(labels_path + ": bad label magic " + std::to_string(label_magic) +
                                 ", expected 2049");
    uint32_t label_count = read_be_u32(labels, labels_path, lab_off);
    if (label_count != count)
        throw std::runtime_error("IDX count mismatch: " + std::to_string(count) + " images vs " +
                                 std::to_string(label_count) + " labels");

    std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<PoolObject> objects(count);
    std::vector<unsigned char> buf(pixels);
    for (uint32_t i = 0; i < count; ++i) {
        if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
            throw std::runtime_error(images_path + ": truncated at byte offset " +
                                     std::to_string(img_off));
        img_off += pixels;
        unsigned char digit;
        if (!labels.read(reinterpret_cast<char*>(&digit), 1))
            throw std::runtime_error(labels_path + ": truncated at byte offset " +
                                     std::to_string(lab_off));
        lab_off += 1;
        PoolObject& obj = objects[i];
        obj.id = id_base + i;
        obj.label = digit + 1;
        obj.features.resize(pixels);
        for (std::size_t p = 0; p < pixels; ++p) obj.features[p] = buf[p] / 255.0;
    }
    return ObjectPool(std::move(objects));
}

}  // namespace msr
