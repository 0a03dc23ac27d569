// Synthetic labeled universes, multiset pair sampling (uniform and
// relation-balanced), exact target computation, and IDX image ingestion.
// Every sampler owns a private PRNG and reproduces its stream from the
// configured seed.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msr/model.hpp"
#include "msr/multiset.hpp"
#include "msr/rng.hpp"
#include "msr/transform.hpp"

namespace msr {

struct SyntheticUniverseSpec {
    int k = 5;
    int d = 16;
    double prototype_scale = 4.0;
    double noise_sigma = 1.0;
    int n_train = 5000;
    int n_eval = 2000;
    uint64_t seed = 0;

    void validate() const;
};

struct PoolObject {
    int64_t id = 0;
    int label = 0;
    std::vector<double> features;
};

class ObjectPool {
public:
    ObjectPool() = default;
    explicit ObjectPool(std::vector<PoolObject> objects);

    std::size_t size() const { return objects_.size(); }
    bool empty() const { return objects_.empty(); }
    const PoolObject& object(std::size_t index) const { return objects_[index]; }
    const std::vector<PoolObject>& objects() const { return objects_; }

    int label_count() const { return k_; }
    int feature_dim() const { return objects_.empty() ? 0 : static_cast<int>(objects_[0].features.size()); }

    // Indices of objects carrying the given label.
    const std::vector<std::size_t>& with_label(int label) const;

    // Exact labeling table over this pool's objects.
    UniverseTransformation label_table() const;

private:
    std::vector<PoolObject> objects_;
    std::vector<std::vector<std::size_t>> by_label_;
    int k_ = 0;
};

struct UniversePools {
    ObjectPool train;
    ObjectPool eval;
};

// Objects are prototype(label) * prototype_scale + N(0, sigma^2) noise per
// coordinate; prototypes are random unit vectors. Labels are assigned
// round-robin, so counts are balanced within one. Train and eval ids are
// disjoint.
UniversePools gen_universe(const SyntheticUniverseSpec& spec);

enum class SamplerMode { Uniform, RelationBalanced };

struct SamplerConfig {
    int size_min = 2;
    int size_max = 5;
    SamplerMode mode = SamplerMode::Uniform;
    uint64_t seed = 0;

    void validate() const;
};

struct PairSample {
    WeightedItems a;
    WeightedItems b;
    Multiset ids_a;
    Multiset ids_b;
    double target_symdiff = 0.0;
    double target_intersection = 0.0;
    ContainmentRelation relation = ContainmentRelation::Incomparable;
};

// Draws multisets and exact-target pairs from one object pool. The
// RelationBalanced mode constructs all four containment classes with equal
// probability; Uniform matches the plain training distribution.
class PairSampler {
public:
    PairSampler(const ObjectPool& pool, SamplerConfig cfg);

    // Cardinality uniform on [size_min, size_max]; elements i.i.d. uniform
    // with replacement.
    Multiset sample_multiset();

    PairSample sample();

    const UniverseTransformation& label_table() const { return table_; }

private:
    PairSample sample_uniform();
    PairSample sample_balanced();
    PairSample finish(Multiset ids_a, Multiset ids_b) const;
    Multiset sample_with_label_multiset(const LabelVector& labels);

    const ObjectPool& pool_;
    SamplerConfig cfg_;
    UniverseTransformation table_;
    Rng rng_;
};

WeightedItems items_from_ids(const ObjectPool& pool, const Multiset& ids);

// CSV pool format: header "id,label,f1..fd", one row per object.
void pool_to_csv(const ObjectPool& pool, const std::string& path);
ObjectPool pool_from_csv(const std::string& path);

// Parses an IDX image/label file pair (big-endian magics 0x00000803 and
// 0x00000801). Pixels are scaled to [0,1]; digit labels shift to 1-based.
// Object ids are id_base, id_base+1, ...
ObjectPool read_idx(const std::string& images_path, const std::string& labels_path,
                    int64_t id_base = 0);

}  // namespace msr
