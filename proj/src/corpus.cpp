#include "alfs/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "alfs/rng.hpp"

namespace alfs {

Alphabet alphabet_from_string(const std::string& letters) {
    Alphabet a;
    a.reserve(letters.size());
    for (char c : letters) {
        if (c == ' ' || c == ',') continue;
        a.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return a;
}

std::string alphabet_to_string(const Alphabet& a) { return std::string(a.begin(), a.end()); }

Alphabet full_latin_alphabet() { return alphabet_from_string("ABCDEFGHIJKLMNOPQRSTUVWXYZ"); }

void Corpus::validate() const {
    if (resolution < 1) throw std::invalid_argument("corpus resolution must be >= 1");
    std::set<char> seen;
    for (char c : alphabet) {
        if (c == 'J' || c == 'Z')
            throw std::invalid_argument("corpus alphabet must not contain 'J' or 'Z'");
        if (!seen.insert(c).second) {
            std::ostringstream err;
            err << "corpus alphabet contains duplicate letter '" << c << "'";
            throw std::invalid_argument(err.str());
        }
    }
    if (images.size() != labels.size())
        throw std::invalid_argument("corpus image/label count mismatch");
    const std::size_t expected = static_cast<std::size_t>(resolution) * resolution;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].size() != expected) {
            std::ostringstream err;
            err << "corpus item " << i << " has " << images[i].size() << " pixels, expected "
                << resolution << "x" << resolution;
            throw std::invalid_argument(err.str());
        }
        if (labels[i] < 0 || labels[i] >= class_count()) {
            std::ostringstream err;
            err << "corpus item " << i << " label " << labels[i] << " outside [0, " << class_count()
                << ")";
            throw std::invalid_argument(err.str());
        }
    }
}

Dataset Corpus::as_dataset() const {
    Dataset d;
    d.resolution = resolution;
    d.channels = 1;
    d.images.reserve(images.size() * static_cast<std::size_t>(resolution) * resolution);
    for (const auto& img : images) d.images.insert(d.images.end(), img.begin(), img.end());
    d.labels = labels;
    return d;
}

std::vector<int> Corpus::class_histogram() const {
    std::vector<int> h(class_count(), 0);
    for (int l : labels) ++h[l];
    return h;
}

namespace {

double normal(Rng& rng) {
    // Box-Muller; always consumes two draws.
    const double u1 = std::max(rng.uniform(), 1e-12);
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// 3x3 box blur with clamped borders.
std::vector<double> blur(const std::vector<double>& in, int res) {
    std::vector<double> out(in.size());
    for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
            double s = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = std::clamp(y + dy, 0, res - 1);
                    const int xx = std::clamp(x + dx, 0, res - 1);
                    s += in[yy * res + xx];
                }
            }
            out[y * res + x] = s / 9.0;
        }
    }
    return out;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
    if (spec.class_count < 2 || spec.class_count > 24)
        throw std::invalid_argument("synthetic corpus supports 2..24 classes");
    if (spec.per_class < 1) throw std::invalid_argument("synthetic per_class must be >= 1");
    if (spec.resolution < 4) throw std::invalid_argument("synthetic resolution must be >= 4");

    const int res = spec.resolution;
    const int npx = res * res;
    Rng rng(mix_seed(spec.seed, 0x73796e74)); // "synt"

    // Pair structure: classes 2p and 2p+1 share a base field and differ by a
    // localized bump whose amplitude varies per pair.
    const int pairs = (spec.class_count + 1) / 2;
    std::vector<std::vector<double>> prototypes(spec.class_count);
    std::vector<double> class_noise(spec.class_count);
    for (int p = 0; p < pairs; ++p) {
        std::vector<double> base(npx);
        for (auto& v : base) v = rng.uniform();
        base = blur(blur(blur(base, res), res), res);
        double lo = base[0], hi = base[0];
        for (double v : base) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
        for (auto& v : base) v = 0.15 + 0.7 * (v - lo) / span;

        const double delta = spec.pair_delta * rng.uniform(0.5, 1.5);
        const int cy = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(res - 4)));
        const int cx = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(res - 4)));
        const double radius = res / 5.0;
        std::vector<double> bumped = base;
        for (int y = 0; y < res; ++y) {
            for (int x = 0; x < res; ++x) {
                const double d2 = (y - cy) * double(y - cy) + (x - cx) * double(x - cx);
                bumped[y * res + x] += delta * std::exp(-d2 / (2.0 * radius * radius));
            }
        }
        const double w1 = rng.uniform(0.7, 1.4);
        const double w2 = rng.uniform(0.7, 1.4);
        const int c1 = 2 * p, c2 = 2 * p + 1;
        prototypes[c1] = base;
        class_noise[c1] = spec.noise * w1;
        if (c2 < spec.class_count) {
            prototypes[c2] = bumped;
            class_noise[c2] = spec.noise * w2;
        }
    }

    Corpus corpus;
    corpus.name = "synthetic";
    corpus.resolution = res;
    const Alphabet letters24 = alphabet_from_string("ABCDEFGHIKLMNOPQRSTUVWXY");
    corpus.alphabet = Alphabet(letters24.begin(), letters24.begin() + spec.class_count);
    corpus.images.reserve(static_cast<std::size_t>(spec.class_count) * spec.per_class);
    corpus.labels.reserve(corpus.images.capacity());

    for (int c = 0; c < spec.class_count; ++c) {
        for (int i = 0; i < spec.per_class; ++i) {
            const int dy = static_cast<int>(rng.below(3)) - 1;
            const int dx = static_cast<int>(rng.below(3)) - 1;
            const double shift = rng.uniform(-0.08, 0.08);
            std::vector<double> img(npx);
            for (int y = 0; y < res; ++y) {
                for (int x = 0; x < res; ++x) {
                    const int sy = std::clamp(y + dy, 0, res - 1);
                    const int sx = std::clamp(x + dx, 0, res - 1);
                    double v = prototypes[c][sy * res + sx] + shift + class_noise[c] * normal(rng);
                    img[y * res + x] = std::clamp(v, 0.0, 1.0);
                }
            }
            corpus.images.push_back(std::move(img));
            corpus.labels.push_back(c);
        }
    }
    corpus.validate();
    return corpus;
}

}  // namespace alfs
