#include "alfs/splits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "alfs/rng.hpp"

namespace alfs {

void SplitSpec::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split test_fraction must lie in (0,1)");
    if (initial_per_class < 1)
        throw std::invalid_argument("split initial_per_class must be >= 1");
}

PoolState::PoolState(Dataset labeled, ImageSet pool, std::vector<int> hidden_labels, Dataset test)
    : labeled_(std::move(labeled)),
      pool_(std::move(pool)),
      hidden_labels_(std::move(hidden_labels)),
      test_(std::move(test)) {
    if (static_cast<int>(hidden_labels_.size()) != pool_.count)
        throw std::invalid_argument("pool/hidden-label size mismatch");
    acquired_.assign(hidden_labels_.size(), false);
}

bool PoolState::is_acquired(int pool_index) const {
    if (pool_index < 0 || pool_index >= pool_.count) {
        std::ostringstream err;
        err << "pool index " << pool_index << " outside [0, " << pool_.count << ")";
        throw std::out_of_range(err.str());
    }
    return acquired_[static_cast<std::size_t>(pool_index)];
}

std::vector<int> PoolState::active_indices() const {
    std::vector<int> idx;
    idx.reserve(active_pool_size());
    for (int i = 0; i < pool_.count; ++i)
        if (!acquired_[static_cast<std::size_t>(i)]) idx.push_back(i);
    return idx;
}

ImageSet PoolState::active_pool_features() const {
    ImageSet s;
    s.resolution = pool_.resolution;
    s.channels = pool_.channels;
    for (int i = 0; i < pool_.count; ++i) {
        if (acquired_[static_cast<std::size_t>(i)]) continue;
        s.images.insert(s.images.end(), pool_.item(i), pool_.item(i) + pool_.item_values());
        ++s.count;
    }
    return s;
}

int PoolState::acquire(int round, int pool_index) {
    if (pool_index < 0 || pool_index >= pool_.count) {
        std::ostringstream err;
        err << "oracle query for pool index " << pool_index << " outside [0, " << pool_.count << ")";
        throw std::out_of_range(err.str());
    }
    if (acquired_[static_cast<std::size_t>(pool_index)]) {
        std::ostringstream err;
        err << "pool index " << pool_index << " was already acquired";
        throw std::logic_error(err.str());
    }
    acquired_[static_cast<std::size_t>(pool_index)] = true;
    acquired_order_.emplace_back(round, pool_index);
    const int label = hidden_labels_[static_cast<std::size_t>(pool_index)];
    labeled_.images.insert(labeled_.images.end(), pool_.item(pool_index),
                           pool_.item(pool_index) + pool_.item_values());
    labeled_.labels.push_back(label);
    return label;
}

PoolState make_splits(const Corpus& corpus, const SplitSpec& spec) {
    corpus.validate();
    spec.validate();

    std::vector<std::vector<int>> by_class(corpus.class_count());
    for (int i = 0; i < corpus.size(); ++i) by_class[corpus.labels[i]].push_back(i);

    Rng rng(mix_seed(spec.seed, 0x73706c74)); // "splt"
    std::vector<int> test_idx, labeled_idx, pool_idx;
    for (int c = 0; c < corpus.class_count(); ++c) {
        auto& members = by_class[c];
        const int n = static_cast<int>(members.size());
        int t = static_cast<int>(std::floor(spec.test_fraction * n));
        if (t == 0 && n - 1 >= spec.initial_per_class) t = 1;
        if (n - t < spec.initial_per_class) {
            std::ostringstream err;
            err << "class '" << corpus.alphabet[c] << "' has " << n << " items; test share " << t
                << " leaves fewer than initial_per_class = " << spec.initial_per_class;
            throw std::invalid_argument(err.str());
        }
        shuffle(members, rng);
        for (int i = 0; i < t; ++i) test_idx.push_back(members[i]);
        for (int i = t; i < t + spec.initial_per_class; ++i) labeled_idx.push_back(members[i]);
        for (int i = t + spec.initial_per_class; i < n; ++i) pool_idx.push_back(members[i]);
    }
    if (test_idx.empty())
        throw std::invalid_argument("test set is empty under the requested test_fraction");

    // Stable ordering: sets are listed by original corpus position.
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(labeled_idx.begin(), labeled_idx.end());
    std::sort(pool_idx.begin(), pool_idx.end());

    Dataset labeled, test;
    labeled.resolution = test.resolution = corpus.resolution;
    ImageSet pool;
    pool.resolution = corpus.resolution;
    std::vector<int> hidden;
    for (int i : labeled_idx) labeled.append(corpus.images[i], corpus.labels[i]);
    for (int i : test_idx) test.append(corpus.images[i], corpus.labels[i]);
    for (int i : pool_idx) {
        pool.append(corpus.images[i]);
        hidden.push_back(corpus.labels[i]);
    }
    return PoolState(std::move(labeled), std::move(pool), std::move(hidden), std::move(test));
}

}  // namespace alfs
