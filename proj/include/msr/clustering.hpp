// Clustering from symmetric-difference queries over cluster-label multisets:
// the exact oracle, the (k-1) + (n-k) = n-1 query certificate with its
// verifier, and an adaptive recovery baseline using singleton probes.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msr/rng.hpp"

namespace msr {

// n objects (ids 0..n-1) with hidden labels in {1, ..., k}; every label
// occurs at least once.
struct ClusterInstance {
    std::vector<int> labels;
    int k = 0;

    int n() const { return static_cast<int>(labels.size()); }
    void validate() const;

    static ClusterInstance random(int n, int k, Rng& rng);
};

// Size of the symmetric difference between the label multisets of two
// object subsets.
int64_t delta_oracle(const ClusterInstance& inst, const std::vector<int>& a,
                     const std::vector<int>& b);

struct ClusterQuery {
    std::vector<int> left;
    std::vector<int> right;
    int64_t expected = 0;
};

// Ordered query list plus the claimed clustering it certifies. The first
// split_count queries recursively halve the cluster groups (expected answer
// |left| + |right|, label-disjoint sides); the rest compare consecutive
// same-cluster singletons (expected answer 0).
struct Certificate {
    std::vector<ClusterQuery> queries;
    std::vector<std::vector<int>> clusters;
    std::size_t split_count = 0;
};

// Builds the n-1 query certificate for a claimed k-clustering of n objects.
Certificate build_certificate(const ClusterInstance& inst,
                              const std::vector<std::vector<int>>& clusters);

// True iff every oracle answer matches the certificate's expected answer,
// which holds iff the claimed clustering is the true one up to permutation.
bool verify_certificate(const Certificate& cert, const ClusterInstance& inst);

// Exact recovery with one representative probe per discovered cluster;
// at most n*k queries. Returns clusters ordered by first-seen object.
std::vector<std::vector<int>> recover_adaptive(const ClusterInstance& inst,
                                               int64_t* queries_used = nullptr);

// True when the two partitions agree up to cluster permutation.
bool same_partition(const std::vector<std::vector<int>>& a,
                    const std::vector<std::vector<int>>& b);

// Ground-truth partition of an instance, clusters keyed by label.
std::vector<std::vector<int>> true_clusters(const ClusterInstance& inst);

std::string to_json(const ClusterInstance& inst, bool include_labels = true);
ClusterInstance instance_from_json(const std::string& text);
std::string to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);

}  // namespace msr
