#include "msr/clustering.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"
#include "msr/multiset.hpp"

namespace msr {

void ClusterInstance::validate() const {
    if (k < 1) throw std::invalid_argument("instance needs k >= 1");
    std::vector<bool> seen(k + 1, false);
    for (int label : labels) {
        if (label < 1 || label > k)
            throw std::invalid_argument("label " + std::to_string(label) + " outside [1, " +
                                        std::to_string(k) + "]");
        seen[label] = true;
    }
    for (int c = 1; c <= k; ++c)
        if (!seen[c]) throw std::invalid_argument("label " + std::to_string(c) + " never occurs");
}

ClusterInstance ClusterInstance::random(int n, int k, Rng& rng) {
    if (k < 1 || n < k) throw std::invalid_argument("random instance needs 1 <= k <= n");
    ClusterInstance inst;
    inst.k = k;
    inst.labels.resize(n);
    for (int i = 0; i < n; ++i)
        inst.labels[i] = i < k ? i + 1 : static_cast<int>(rng.uniform_int(1, k));
    for (int i = n - 1; i > 0; --i)
        std::swap(inst.labels[i], inst.labels[rng.uniform_int(0, i)]);
    inst.validate();
    return inst;
}

int64_t delta_oracle(const ClusterInstance& inst, const std::vector<int>& a,
                     const std::vector<int>& b) {
    Multiset ma, mb;
    for (int obj : a) ma.add(inst.labels.at(obj), 1.0);
    for (int obj : b) mb.add(inst.labels.at(obj), 1.0);
    return static_cast<int64_t>(cardinality(sym_difference(ma, mb)));
}

namespace {

// Recursive halving over cluster groups: one query per internal node of the
// binary tree, k-1 in total.
void emit_split_queries(const std::vector<std::vector<int>>& clusters, std::size_t lo,
                        std::size_t hi, std::vector<ClusterQuery>& out) {
    std::size_t count = hi - lo;
    if (count < 2) return;
    std::size_t mid = lo + (count + 1) / 2;
    ClusterQuery q;
    for (std::size_t i = lo; i < mid; ++i)
        q.left.insert(q.left.end(), clusters[i].begin(), clusters[i].end());
    for (std::size_t i = mid; i < hi; ++i)
        q.right.insert(q.right.end(), clusters[i].begin(), clusters[i].end());
    q.expected = static_cast<int64_t>(q.left.size() + q.right.size());
    out.push_back(std::move(q));
    emit_split_queries(clusters, lo, mid, out);
    emit_split_queries(clusters, mid, hi, out);
}

}  // namespace

Certificate build_certificate(const ClusterInstance& inst,
                              const std::vector<std::vector<int>>& clusters) {
    std::size_t total = 0;
    for (const auto& c : clusters) {
        if (c.empty()) throw std::invalid_argument("claimed clustering has an empty cluster");
        total += c.size();
    }
    if (total != static_cast<std::size_t>(inst.n()))
        throw std::invalid_argument("claimed clustering does not cover the instance");

    Certificate cert;
    cert.clusters = clusters;
    emit_split_queries(clusters, 0, clusters.size(), cert.queries);
    cert.split_count = cert.queries.size();
    for (auto& cluster : cert.clusters) std::sort(cluster.begin(), cluster.end());
    for (const auto& cluster : cert.clusters) {
        for (std::size_t i = 0; i + 1 < cluster.size(); ++i) {
            ClusterQuery q;
            q.left = {cluster[i]};
            q.right = {cluster[i + 1]};
            q.expected = 0;
            cert.queries.push_back(std::move(q));
        }
    }
    return cert;
}

bool verify_certificate(const Certificate& cert, const ClusterInstance& inst) {
    for (const auto& q : cert.queries)
        if (delta_oracle(inst, q.left, q.right) != q.expected) return false;
    return true;
}

std::vector<std::vector<int>> recover_adaptive(const ClusterInstance& inst,
                                               int64_t* queries_used) {
    std::vector<std::vector<int>> clusters;
    std::vector<int> representatives;
    int64_t queries = 0;
    for (int obj = 0; obj < inst.n(); ++obj) {
        bool placed = false;
        for (std::size_t c = 0; c < representatives.size(); ++c) {
            ++queries;
            if (delta_oracle(inst, {obj}, {representatives[c]}) == 0) {
                clusters[c].push_back(obj);
                placed = true;
                break;
            }
        }
        if (!placed) {
            clusters.push_back({obj});
            representatives.push_back(obj);
        }
    }
    if (queries_used) *queries_used = queries;
    return clusters;
}

bool same_partition(const std::vector<std::vector<int>>& a,
                    const std::vector<std::vector<int>>& b) {
    auto normalize = [](std::vector<std::vector<int>> p) {
        for (auto& c : p) std::sort(c.begin(), c.end());
        std::sort(p.begin(), p.end());
        return p;
    };
    return normalize(a) == normalize(b);
}

std::vector<std::vector<int>> true_clusters(const ClusterInstance& inst) {
    std::vector<std::vector<int>> out(inst.k);
    for (int obj = 0; obj < inst.n(); ++obj) out[inst.labels[obj] - 1].push_back(obj);
    return out;
}

std::string to_json(const ClusterInstance& inst, bool include_labels) {
    nlohmann::json j;
    j["n"] = inst.n();
    j["k"] = inst.k;
    if (include_labels) j["labels"] = inst.labels;
    return j.dump();
}

ClusterInstance instance_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ClusterInstance inst;
    inst.k = j.at("k").get<int>();
    if (j.contains("labels")) {
        inst.labels = j.at("labels").get<std::vector<int>>();
        if (j.contains("n") && j.at("n").get<int>() != inst.n())
            throw std::invalid_argument("instance n does not match label count");
        inst.validate();
    } else {
        inst.labels.assign(j.at("n").get<int>(), 0);
    }
    return inst;
}

std::string to_json(const Certificate& cert) {
    nlohmann::json j;
    j["split_count"] = cert.split_count;
    j["clusters"] = cert.clusters;
    j["queries"] = nlohmann::json::array();
    for (const auto& q : cert.queries)
        j["queries"].push_back({{"left", q.left}, {"right", q.right}, {"expected", q.expected}});
    return j.dump();
}

Certificate certificate_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Certificate cert;
    cert.split_count = j.at("split_count").get<std::size_t>();
    cert.clusters = j.at("clusters").get<std::vector<std::vector<int>>>();
    for (const auto& q : j.at("queries")) {
        ClusterQuery cq;
        cq.left = q.at("left").get<std::vector<int>>();
        cq.right = q.at("right").get<std::vector<int>>();
        cq.expected = q.at("expected").get<int64_t>();
        cert.queries.push_back(std::move(cq));
    }
    return cert;
}

}  // namespace msr
