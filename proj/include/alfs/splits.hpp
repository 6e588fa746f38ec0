#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "alfs/corpus.hpp"

namespace alfs {

// Unlabeled images, same layout as Dataset minus the labels.
struct ImageSet {
    int resolution = 0;
    int channels = 1;
    int count = 0;
    std::vector<double> images;

    int item_values() const { return channels * resolution * resolution; }
    const double* item(int i) const { return images.data() + static_cast<std::size_t>(i) * item_values(); }
    void append(const std::vector<double>& image) {
        images.insert(images.end(), image.begin(), image.end());
        ++count;
    }
};

struct SplitSpec {
    double test_fraction = 0.1;
    int initial_per_class = 2;
    std::uint64_t seed = 0;

    bool operator==(const SplitSpec&) const = default;
    void validate() const;
};

// Partition of a corpus into the growing labeled set, the unlabeled pool
// (with its labels hidden behind acquire()), and the held-out test set.
// Pool indices are stable for the lifetime of the state.
class PoolState {
public:
    PoolState() = default;
    PoolState(Dataset labeled, ImageSet pool, std::vector<int> hidden_labels, Dataset test);

    const Dataset& labeled() const { return labeled_; }
    const Dataset& test() const { return test_; }
    const ImageSet& pool() const { return pool_; }

    int pool_size() const { return pool_.count; }
    bool is_acquired(int pool_index) const;
    int active_pool_size() const { return pool_.count - static_cast<int>(acquired_order_.size()); }
    // Unacquired pool indices, ascending.
    std::vector<int> active_indices() const;
    // Compacted copy of the unacquired pool, in active_indices() order.
    ImageSet active_pool_features() const;

    const std::vector<std::pair<int, int>>& acquired_order() const { return acquired_order_; }

    // The simulated oracle: reveals the hidden label of a not-yet-acquired
    // pool item, records (round, index), and moves the item into the labeled
    // set. A given index can be acquired at most once.
    int acquire(int round, int pool_index);

private:
    Dataset labeled_;
    ImageSet pool_;
    std::vector<int> hidden_labels_; // oracle-only; no other accessor exists
    Dataset test_;
    std::vector<bool> acquired_;
    std::vector<std::pair<int, int>> acquired_order_;
};

// Stratified split: per class, test_fraction (floor, but at least 1 when the
// class can spare it) into test, then initial_per_class drawn uniformly into
// the labeled set, remainder into the pool. Deterministic in spec.seed.
PoolState make_splits(const Corpus& corpus, const SplitSpec& spec);

}  // namespace alfs
