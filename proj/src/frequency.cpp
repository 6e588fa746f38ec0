#include "alfs/frequency.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "alfs/rng.hpp"

namespace alfs {

FrequencyTable FrequencyTable::from_weights(const Alphabet& alphabet,
                                            const std::vector<double>& weights) {
    if (alphabet.size() != weights.size())
        throw std::invalid_argument("frequency table: weight count does not match alphabet size");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            std::ostringstream err;
            err << "frequency table: weight for letter '" << alphabet[i] << "' must be finite and >= 0";
            throw std::invalid_argument(err.str());
        }
        sum += weights[i];
    }
    if (!(sum > 0.0)) throw std::invalid_argument("frequency table: weights sum to zero");
    FrequencyTable t;
    t.alphabet = alphabet;
    t.probs.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) t.probs[i] = weights[i] / sum;
    t.validate();
    return t;
}

double FrequencyTable::prob_of(char letter) const {
    const auto pos = std::find(alphabet.begin(), alphabet.end(), letter);
    if (pos == alphabet.end()) {
        std::ostringstream err;
        err << "frequency table has no entry for letter '" << letter << "'";
        throw std::invalid_argument(err.str());
    }
    return probs[static_cast<std::size_t>(pos - alphabet.begin())];
}

void FrequencyTable::validate() const {
    if (alphabet.size() != probs.size())
        throw std::invalid_argument("frequency table: probability count does not match alphabet");
    double sum = 0.0;
    for (double p : probs) sum += p;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("frequency table: probabilities do not sum to 1");
}

FrequencyTable load_frequency_table(const std::string& path, const Alphabet& alphabet) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open frequency table " + path);
    std::vector<double> weights(alphabet.size(), -1.0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
        if (start >= line.size()) continue;
        const auto comma = line.find(',', start);
        if (comma == std::string::npos || comma != start + 1) {
            std::ostringstream err;
            err << path << ":" << line_no << ": expected 'LETTER,weight'";
            throw std::runtime_error(err.str());
        }
        const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(line[start])));
        double w = 0.0;
        try {
            w = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            std::ostringstream err;
            err << path << ":" << line_no << ": non-numeric weight '" << line.substr(comma + 1) << "'";
            throw std::runtime_error(err.str());
        }
        if (letter == 'J' || letter == 'Z') continue; // tables may carry full A-Z rows
        const auto pos = std::find(alphabet.begin(), alphabet.end(), letter);
        if (pos == alphabet.end()) {
            std::ostringstream err;
            err << path << ":" << line_no << ": letter '" << letter << "' not in corpus alphabet";
            throw std::runtime_error(err.str());
        }
        weights[static_cast<std::size_t>(pos - alphabet.begin())] = w;
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) {
            std::ostringstream err;
            err << path << ": missing entry for letter '" << alphabet[i] << "'";
            throw std::runtime_error(err.str());
        }
    }
    return FrequencyTable::from_weights(alphabet, weights);
}

std::vector<int> apportion_counts(const FrequencyTable& table, int target) {
    table.validate();
    if (target < 0) throw std::invalid_argument("apportionment target must be >= 0");
    const std::size_t n = table.probs.size();
    std::vector<int> counts(n, 0);
    std::vector<double> frac(n, 0.0);
    long assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double quota = table.probs[i] * target;
        // Snap near-integer quotas so float noise cannot flip a floor.
        const double rounded = std::round(quota);
        if (std::abs(quota - rounded) < 1e-9) quota = rounded;
        counts[i] = static_cast<int>(std::floor(quota));
        frac[i] = quota - counts[i];
        assigned += counts[i];
    }
    long leftover = target - assigned;
    // Hand out the remainder by descending fractional part, alphabetical on ties.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return table.alphabet[a] < table.alphabet[b];
    });
    for (std::size_t i = 0; i < order.size() && leftover > 0; ++i, --leftover) ++counts[order[i]];
    return counts;
}

Corpus resample_to_letter_frequency(const Corpus& corpus, const FrequencyTable& table,
                                    int target_size, std::uint64_t seed) {
    corpus.validate();
    if (table.alphabet != corpus.alphabet)
        throw std::invalid_argument("frequency table alphabet does not match corpus alphabet");
    if (target_size < 1) throw std::invalid_argument("resample target size must be >= 1");

    const std::vector<int> want = apportion_counts(table, target_size);
    const std::vector<int> have = corpus.class_histogram();
    for (int c = 0; c < corpus.class_count(); ++c) {
        if (table.probs[c] > 0.0 && have[c] == 0) {
            std::ostringstream err;
            err << "letter '" << corpus.alphabet[c] << "' has positive target probability but no "
                << "items in the corpus";
            throw std::invalid_argument(err.str());
        }
    }

    std::vector<std::vector<int>> by_class(corpus.class_count());
    for (int i = 0; i < corpus.size(); ++i) by_class[corpus.labels[i]].push_back(i);

    Corpus out;
    out.name = corpus.name;
    out.resolution = corpus.resolution;
    out.alphabet = corpus.alphabet;
    out.images.reserve(target_size);
    out.labels.reserve(target_size);
    Rng rng(mix_seed(seed, 0x72736d70)); // "rsmp"
    for (int c = 0; c < corpus.class_count(); ++c) {
        const int wanted = want[c];
        if (wanted == 0) continue;
        const auto& pool = by_class[c];
        if (wanted <= static_cast<int>(pool.size())) {
            const auto picks = sample_without_replacement(pool.size(), wanted, rng);
            for (std::size_t p : picks) {
                out.images.push_back(corpus.images[pool[p]]);
                out.labels.push_back(c);
            }
        } else {
            for (int i = 0; i < wanted; ++i) {
                const std::size_t p = static_cast<std::size_t>(rng.below(pool.size()));
                out.images.push_back(corpus.images[pool[p]]);
                out.labels.push_back(c);
            }
        }
    }
    return out;
}

}  // namespace alfs
