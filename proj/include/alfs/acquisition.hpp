#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alfs/network.hpp"
#include "alfs/splits.hpp"

namespace alfs {

// T stochastic forward passes over M pool items and K classes.
struct PredictiveSamples {
    int passes = 0;  // T
    int items = 0;   // M
    int classes = 0; // K
    std::vector<double> probs; // T*M*K, (t,m,k) row-major
    std::vector<std::uint64_t> pass_seeds;

    double at(int t, int m, int k) const {
        return probs[(static_cast<std::size_t>(t) * items + m) * classes + k];
    }
    // M*K per-item probabilities averaged over passes.
    std::vector<double> mean_probs() const;
};

enum class AcquisitionFunction { kVariationRatio, kMaxEntropy, kBald, kMeanStd, kRandom };

const char* acquisition_name(AcquisitionFunction f);
AcquisitionFunction acquisition_from_name(const std::string& name);

struct ScoreVector {
    std::vector<double> scores;
    AcquisitionFunction function;
};

// Runs T dropout passes over the pool; pass t uses dropout seed seed^t.
PredictiveSamples predictive_samples(const ModelParams& params, const ImageSet& pool, int passes,
                                     std::uint64_t seed);

// score = 1 - max_k p[m,k]; range [0, 1-1/K].
ScoreVector variation_ratio(const std::vector<double>& mean_probs, int items, int classes);
// score = -sum_k p log p, natural log, 0 log 0 := 0; range [0, ln K].
ScoreVector max_entropy(const std::vector<double>& mean_probs, int items, int classes);
// Mutual information H[mean_t p_t] - mean_t H[p_t], clamped at 0.
ScoreVector bald(const PredictiveSamples& samples);
// Mean over classes of the population (divide-by-T) std over passes.
ScoreVector mean_std(const PredictiveSamples& samples);

// Indices of the B largest scores; ties favor the lower pool index; output
// ascending.
std::vector<int> select_batch(const ScoreVector& scores, int batch);

// B distinct indices drawn uniformly without replacement; output ascending.
std::vector<int> random_select(int pool_size, int batch, std::uint64_t seed);

}  // namespace alfs
