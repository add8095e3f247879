#include "trendkern/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trendkern::knowledge {

int Taxonomy::parent(int element_id) const {
    auto it = parent_of.find(element_id);
    if (it == parent_of.end()) {
        throw std::runtime_error("taxonomy has no parent for element_id " + std::to_string(element_id));
    }
    return it->second;
}

Taxonomy load_taxonomy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open taxonomy file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty taxonomy file");
    const std::string prefix = "category_vocab_size=";
    if (line.rfind(prefix, 0) != 0) {
        throw std::runtime_error("'" + path + "' line 1: expected header '" + prefix + "<n>'");
    }
    Taxonomy tax;
    try {
        tax.category_vocab_size = std::stoi(line.substr(prefix.size()));
    } catch (const std::exception&) {
        throw std::runtime_error("'" + path + "' line 1: malformed category_vocab_size");
    }
    if (tax.category_vocab_size < 1) throw std::runtime_error("'" + path + "': category_vocab_size must be >= 1");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        int element, parent;
        char tab;
        if (!(row >> element) || !row.get(tab) || tab != '\t' || !(row >> parent)) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) +
                                     ": expected 'element_id<TAB>parent_category_id'");
        }
        if (parent < 0 || parent >= tax.category_vocab_size) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) + ": parent " +
                                     std::to_string(parent) + " outside category vocab " +
                                     std::to_string(tax.category_vocab_size));
        }
        if (!tax.parent_of.emplace(element, parent).second) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) +
                                     ": duplicate entry for element " + std::to_string(element));
        }
    }
    return tax;
}

void save_taxonomy(const Taxonomy& taxonomy, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write taxonomy file '" + path + "'");
    out << "category_vocab_size=" << taxonomy.category_vocab_size << '\n';
    std::vector<int> elements;
    elements.reserve(taxonomy.parent_of.size());
    for (const auto& [element, parent] : taxonomy.parent_of) elements.push_back(element);
    std::sort(elements.begin(), elements.end());
    for (int element : elements) out << element << '\t' << taxonomy.parent_of.at(element) << '\n';
}

Taxonomy modulo_taxonomy(int element_vocab_size, int categories) {
    if (element_vocab_size < 1 || categories < 1) {
        throw std::invalid_argument("modulo_taxonomy: counts must be >= 1");
    }
    Taxonomy tax;
    tax.category_vocab_size = categories;
    for (int e = 0; e < element_vocab_size; ++e) tax.parent_of.emplace(e, e % categories);
    return tax;
}

std::vector<int> build_feature_ids(const dataio::TrendSample& sample, const Taxonomy* taxonomy, bool ext_kg) {
    if (!ext_kg) return {sample.element_id, sample.group_id};
    if (taxonomy == nullptr) {
        throw std::runtime_error("build_feature_ids: ext_kg is enabled but no taxonomy was provided");
    }
    return {sample.element_id, sample.group_id, taxonomy->parent(sample.element_id)};
}

const std::vector<Neighbor>& TripletIndex::neighbors(int anchor_id) const {
    auto it = position_.find(anchor_id);
    if (it == position_.end()) {
        throw std::out_of_range("TripletIndex: unknown anchor sample_id " + std::to_string(anchor_id));
    }
    return ranked[it->second];
}

TripletIndex rank_neighbors(const dataio::SampleSet& samples, DistanceMetric metric, int max_rank) {
    (void)metric;  // single metric; the label is recorded on the index
    const auto& all = samples.samples;
    const int n = static_cast<int>(all.size());
    if (n < 3) throw std::invalid_argument("rank_neighbors: need at least 3 samples to form triplets");
    const size_t input_len = all.front().input.size();
    for (const auto& s : all) {
        if (s.input.size() != input_len) {
            throw std::invalid_argument("rank_neighbors: sample " + std::to_string(s.sample_id) +
                                        " has a different input length");
        }
    }

    TripletIndex index;
    index.anchor_ids.reserve(static_cast<size_t>(n));
    index.ranked.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        index.anchor_ids.push_back(all[static_cast<size_t>(i)].sample_id);
        index.position_.emplace(all[static_cast<size_t>(i)].sample_id, static_cast<size_t>(i));
    }

    std::vector<Neighbor> candidates;
    for (int i = 0; i < n; ++i) {
        const auto& anchor = all[static_cast<size_t>(i)];
        candidates.clear();
        candidates.reserve(static_cast<size_t>(n));
        bool has_eligible = false;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto& other = all[static_cast<size_t>(j)];
            if (other.series_id == anchor.series_id) continue;
            double acc = 0.0;
            for (size_t k = 0; k < input_len; ++k) {
                const double d = anchor.input[k] - other.input[k];
                acc += d * d;
            }
            candidates.push_back(Neighbor{other.sample_id, std::sqrt(acc)});
            has_eligible = true;
        }
        if (!has_eligible || candidates.size() < 2) {
            throw std::runtime_error("rank_neighbors: anchor sample " + std::to_string(anchor.sample_id) +
                                     " has fewer than 2 eligible neighbors (triplets impossible)");
        }
        auto by_distance_then_id = [](const Neighbor& a, const Neighbor& b) {
            if (a.distance != b.distance) return a.distance < b.distance;
            return a.sample_id < b.sample_id;
        };
        if (max_rank > 0 && candidates.size() > static_cast<size_t>(max_rank)) {
            std::partial_sort(candidates.begin(), candidates.begin() + max_rank, candidates.end(),
                              by_distance_then_id);
            candidates.resize(static_cast<size_t>(max_rank));
        } else {
            std::sort(candidates.begin(), candidates.end(), by_distance_then_id);
        }
        index.ranked[static_cast<size_t>(i)] = candidates;
    }
    return index;
}

Triplet sample_triplet(const TripletIndex& index, int anchor_id, int sample_range, num::Rng& rng) {
    if (sample_range < 1) throw std::invalid_argument("sample_triplet: sample_range must be >= 1");
    const auto& ranked = index.neighbors(anchor_id);
    const size_t need = 2 * static_cast<size_t>(sample_range);
    if (ranked.size() < need) {
        throw std::runtime_error("sample_triplet: anchor " + std::to_string(anchor_id) + " has only " +
                                 std::to_string(ranked.size()) + " ranked neighbors, need 2*sample_range = " +
                                 std::to_string(need) + "; use a smaller sample_range");
    }
    // Ranks are 1-based: p from [1, R], q from [R+1, 2R].
    const int p_rank = rng.uniform_int(1, sample_range);
    const int q_rank = rng.uniform_int(sample_range + 1, 2 * sample_range);
    return Triplet{anchor_id, ranked[static_cast<size_t>(p_rank - 1)].sample_id,
                   ranked[static_cast<size_t>(q_rank - 1)].sample_id};
}

}  // namespace trendkern::knowledge
