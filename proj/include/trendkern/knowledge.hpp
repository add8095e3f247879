#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "trendkern/dataio.hpp"
#include "trendkern/tensor.hpp"

namespace trendkern::knowledge {

/// External knowledge: one parent category per fashion element.
struct Taxonomy {
    std::unordered_map<int, int> parent_of;
    int category_vocab_size = 0;

    int parent(int element_id) const;  // missing entry -> configuration error
};

Taxonomy load_taxonomy(const std::string& path);
void save_taxonomy(const Taxonomy& taxonomy, const std::string& path);

/// parent = element_id % categories; the stand-in used for synthetic data
/// and whenever no taxonomy file is configured.
Taxonomy modulo_taxonomy(int element_vocab_size, int categories);

/// Per-sample embedding ids: [element, group] or [element, group, parent].
std::vector<int> build_feature_ids(const dataio::TrendSample& sample, const Taxonomy* taxonomy, bool ext_kg);

enum class DistanceMetric { kEuclidean };

struct Neighbor {
    int sample_id = 0;
    double distance = 0.0;
};

/// For each anchor, other samples ranked by ascending input-window distance.
/// Samples from the anchor's own series are excluded (overlapping windows
/// would dominate the top ranks). Ties break by ascending sample_id.
struct TripletIndex {
    std::vector<int> anchor_ids;                   // sample ids, set order
    std::vector<std::vector<Neighbor>> ranked;     // parallel to anchor_ids
    std::string metric = "euclidean";

    const std::vector<Neighbor>& neighbors(int anchor_id) const;

private:
    friend TripletIndex rank_neighbors(const dataio::SampleSet&, DistanceMetric, int);
    std::unordered_map<int, size_t> position_;
};

/// max_rank > 0 keeps only that many nearest neighbors per anchor (all
/// sample_triplet needs is 2 * sample_range); 0 keeps full rankings.
TripletIndex rank_neighbors(const dataio::SampleSet& samples,
                            DistanceMetric metric = DistanceMetric::kEuclidean,
                            int max_rank = 0);

/// Anchor k, positive p, negative q with rank(p) < rank(q).
struct Triplet {
    int anchor_id = 0;
    int positive_id = 0;
    int negative_id = 0;
};

/// p uniform over ranks [1, R], q uniform over ranks [R+1, 2R]. Shrinking R
/// draws both from nearer ranks.
Triplet sample_triplet(const TripletIndex& index, int anchor_id, int sample_range, num::Rng& rng);

}  // namespace trendkern::knowledge
