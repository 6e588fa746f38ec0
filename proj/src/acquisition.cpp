#include "alfs/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "alfs/rng.hpp"

namespace alfs {

namespace {

double entropy_nats(const double* p, int k) {
    double h = 0.0;
    for (int i = 0; i < k; ++i)
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h < 0.0 ? 0.0 : h;
}

void check_dims(const std::vector<double>& probs, int items, int classes, const char* who) {
    if (items < 0 || classes < 1 ||
        probs.size() != static_cast<std::size_t>(items) * static_cast<std::size_t>(classes)) {
        std::ostringstream err;
        err << who << ": probability buffer of " << probs.size() << " values does not match "
            << items << "x" << classes;
        throw std::invalid_argument(err.str());
    }
}

}  // namespace

std::vector<double> PredictiveSamples::mean_probs() const {
    std::vector<double> mean(static_cast<std::size_t>(items) * classes, 0.0);
    for (int t = 0; t < passes; ++t) {
        const double* src = probs.data() + static_cast<std::size_t>(t) * items * classes;
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += src[i];
    }
    for (auto& v : mean) v /= passes;
    return mean;
}

const char* acquisition_name(AcquisitionFunction f) {
    switch (f) {
        case AcquisitionFunction::kVariationRatio: return "variation_ratio";
        case AcquisitionFunction::kMaxEntropy: return "max_entropy";
        case AcquisitionFunction::kBald: return "bald";
        case AcquisitionFunction::kMeanStd: return "mean_std";
        case AcquisitionFunction::kRandom: return "random";
    }
    return "?";
}

AcquisitionFunction acquisition_from_name(const std::string& name) {
    if (name == "variation_ratio") return AcquisitionFunction::kVariationRatio;
    if (name == "max_entropy") return AcquisitionFunction::kMaxEntropy;
    if (name == "bald") return AcquisitionFunction::kBald;
    if (name == "mean_std") return AcquisitionFunction::kMeanStd;
    if (name == "random") return AcquisitionFunction::kRandom;
    throw std::invalid_argument("unknown acquisition function '" + name +
                                "' (expected variation_ratio, max_entropy, bald, mean_std or random)");
}

PredictiveSamples predictive_samples(const ModelParams& params, const ImageSet& pool, int passes,
                                     std::uint64_t seed) {
    if (pool.count == 0) throw std::invalid_argument("predictive_samples: empty pool");
    if (passes < 1) throw std::invalid_argument("predictive_samples: need at least one pass");
    if (pool.resolution != params.arch.resolution || pool.channels != params.arch.channels) {
        std::ostringstream err;
        err << "pool shape mismatch: model expects " << params.arch.channels << "x"
            << params.arch.resolution << "x" << params.arch.resolution << ", pool provides "
            << pool.channels << "x" << pool.resolution << "x" << pool.resolution;
        throw std::invalid_argument(err.str());
    }
    PredictiveSamples s;
    s.passes = passes;
    s.items = pool.count;
    s.classes = params.arch.class_count;
    s.probs.resize(static_cast<std::size_t>(passes) * pool.count * s.classes);
    s.pass_seeds.resize(passes);
    for (int t = 0; t < passes; ++t) {
        const std::uint64_t pass_seed = seed ^ static_cast<std::uint64_t>(t);
        s.pass_seeds[t] = pass_seed;
        const ProbMatrix p =
            forward(params, pool.images.data(), pool.count, ForwardMode::with_dropout(pass_seed));
        std::copy(p.v.begin(), p.v.end(),
                  s.probs.begin() + static_cast<std::size_t>(t) * pool.count * s.classes);
    }
    return s;
}

ScoreVector variation_ratio(const std::vector<double>& mean_probs, int items, int classes) {
    check_dims(mean_probs, items, classes, "variation_ratio");
    ScoreVector out;
    out.function = AcquisitionFunction::kVariationRatio;
    out.scores.resize(items);
    for (int m = 0; m < items; ++m) {
        const double* row = mean_probs.data() + static_cast<std::size_t>(m) * classes;
        double mx = row[0];
        for (int k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
        out.scores[m] = std::max(0.0, 1.0 - mx);
    }
    return out;
}

ScoreVector max_entropy(const std::vector<double>& mean_probs, int items, int classes) {
    check_dims(mean_probs, items, classes, "max_entropy");
    ScoreVector out;
    out.function = AcquisitionFunction::kMaxEntropy;
    out.scores.resize(items);
    for (int m = 0; m < items; ++m)
        out.scores[m] = entropy_nats(mean_probs.data() + static_cast<std::size_t>(m) * classes, classes);
    return out;
}

ScoreVector bald(const PredictiveSamples& samples) {
    const int T = samples.passes, M = samples.items, K = samples.classes;
    ScoreVector out;
    out.function = AcquisitionFunction::kBald;
    out.scores.resize(M);
    std::vector<double> mean(K);
    for (int m = 0; m < M; ++m) {
        std::fill(mean.begin(), mean.end(), 0.0);
        double mean_entropy = 0.0;
        for (int t = 0; t < T; ++t) {
            const double* row = samples.probs.data() + (static_cast<std::size_t>(t) * M + m) * K;
            for (int k = 0; k < K; ++k) mean[k] += row[k];
            mean_entropy += entropy_nats(row, K);
        }
        for (auto& v : mean) v /= T;
        mean_entropy /= T;
        const double mi = entropy_nats(mean.data(), K) - mean_entropy;
        out.scores[m] = mi > 0.0 ? mi : 0.0;
    }
    return out;
}

ScoreVector mean_std(const PredictiveSamples& samples) {
    const int T = samples.passes, M = samples.items, K = samples.classes;
    ScoreVector out;
    out.function = AcquisitionFunction::kMeanStd;
    out.scores.resize(M);
    for (int m = 0; m < M; ++m) {
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
            double sum = 0.0, sq = 0.0;
            for (int t = 0; t < T; ++t) {
                const double v = samples.at(t, m, k);
                sum += v;
                sq += v * v;
            }
            const double mean = sum / T;
            const double var = std::max(0.0, sq / T - mean * mean);
            acc += std::sqrt(var);
        }
        out.scores[m] = acc / K;
    }
    return out;
}

std::vector<int> select_batch(const ScoreVector& scores, int batch) {
    const int m = static_cast<int>(scores.scores.size());
    if (batch < 0 || batch > m) {
        std::ostringstream err;
        err << "select_batch: batch size " << batch << " exceeds pool of " << m << " scores";
        throw std::invalid_argument(err.str());
    }
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (scores.scores[a] != scores.scores[b]) return scores.scores[a] > scores.scores[b];
        return a < b;
    });
    std::vector<int> out(idx.begin(), idx.begin() + batch);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> random_select(int pool_size, int batch, std::uint64_t seed) {
    if (batch < 0 || batch > pool_size) {
        std::ostringstream err;
        err << "random_select: batch size " << batch << " exceeds pool of " << pool_size;
        throw std::invalid_argument(err.str());
    }
    Rng rng(mix_seed(seed, 0x72616e64)); // "rand"
    auto picks = sample_without_replacement(static_cast<std::size_t>(pool_size),
                                            static_cast<std::size_t>(batch), rng);
    std::vector<int> out(picks.begin(), picks.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace alfs
