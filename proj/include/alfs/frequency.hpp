#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alfs/corpus.hpp"

namespace alfs {

// Target letter distribution aligned to a corpus alphabet; probabilities sum
// to 1 (construction normalizes raw weights).
struct FrequencyTable {
    Alphabet alphabet;
    std::vector<double> probs;

    static FrequencyTable from_weights(const Alphabet& alphabet, const std::vector<double>& weights);
    double prob_of(char letter) const;
    void validate() const;
};

// File format: one `LETTER,weight` line per letter, '#' comments, UTF-8.
// Weights need not be normalized. Letters must cover `alphabet` exactly
// (extra J/Z lines are permitted and dropped).
FrequencyTable load_frequency_table(const std::string& path, const Alphabet& alphabet);

// Largest-remainder apportionment of `target` items over the table, ties on
// the fractional part broken alphabetically. Sums to `target` exactly.
std::vector<int> apportion_counts(const FrequencyTable& table, int target);

// Resamples the corpus so its class histogram equals apportion_counts(table,
// target_size) exactly. Classes draw without replacement when they have
// enough items, with replacement otherwise. Output is ordered by class (in
// alphabet order) and deterministic in the seed.
Corpus resample_to_letter_frequency(const Corpus& corpus, const FrequencyTable& table,
                                    int target_size, std::uint64_t seed);

}  // namespace alfs
