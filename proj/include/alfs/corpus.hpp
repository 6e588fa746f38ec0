#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alfs/network.hpp"

namespace alfs {

// Ordered class alphabet as single letters, e.g. "ABCDEFGHIKLMNOPQRSTUVWXY".
using Alphabet = std::vector<char>;

Alphabet alphabet_from_string(const std::string& letters);
std::string alphabet_to_string(const Alphabet& a);

// The 26 latin letters; ingestion drops J and Z from whatever it is given.
Alphabet full_latin_alphabet();

// Labeled grayscale image collection, standardized to one square resolution.
// Labels index into `alphabet`, which never contains J or Z.
struct Corpus {
    std::string name = "custom"; // ASL | CSL | GSL | ISL | custom
    int resolution = 0;
    Alphabet alphabet;
    std::vector<std::vector<double>> images; // each resolution^2, intensities in [0,1]
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    int class_count() const { return static_cast<int>(alphabet.size()); }

    // Throws std::invalid_argument when any invariant is broken.
    void validate() const;

    Dataset as_dataset() const;
    // Per-class item counts.
    std::vector<int> class_histogram() const;
};

// Cluster-structured synthetic corpus: each class is a smooth prototype image
// plus per-class noise; classes come in confusable pairs so that uncertainty
// has something to find. Deterministic in the spec.
struct SyntheticSpec {
    int class_count = 24;
    int per_class = 100;
    int resolution = 28;
    double noise = 0.18;       // base pixel noise level
    double pair_delta = 0.25;  // bump amplitude separating the two classes of a pair
    std::uint64_t seed = 7;

    bool operator==(const SyntheticSpec&) const = default;
};

Corpus make_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace alfs
