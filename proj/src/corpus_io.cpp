#include "alfs/corpus_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace alfs {

namespace {

struct ReducedEncoding {
    Alphabet reduced;            // encoding minus J/Z, order preserved
    std::vector<int> remap;      // encoding index -> reduced index, -1 for J/Z
};

ReducedEncoding reduce_encoding(const Alphabet& encoding) {
    ReducedEncoding r;
    r.remap.assign(encoding.size(), -1);
    for (std::size_t i = 0; i < encoding.size(); ++i) {
        if (encoding[i] == 'J' || encoding[i] == 'Z') continue;
        r.remap[i] = static_cast<int>(r.reduced.size());
        r.reduced.push_back(encoding[i]);
    }
    return r;
}

bool is_perfect_square(std::size_t n, int& side) {
    for (side = 1; static_cast<std::size_t>(side) * side < n; ++side) {}
    return static_cast<std::size_t>(side) * side == n;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line, const std::string& what) {
    std::ostringstream err;
    err << path << ":" << line << ": " << what;
    throw std::runtime_error(err.str());
}

GrayImage decode_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("cannot decode PNG " + path + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr))
        throw std::runtime_error("cannot decode PNG " + path + ": " + image.message);
    GrayImage g;
    g.height = static_cast<int>(image.height);
    g.width = static_cast<int>(image.width);
    g.px.resize(static_cast<std::size_t>(g.height) * g.width);
    for (std::size_t i = 0; i < g.px.size(); ++i) {
        const double r = buffer[3 * i] / 255.0;
        const double gg = buffer[3 * i + 1] / 255.0;
        const double b = buffer[3 * i + 2] / 255.0;
        g.px[i] = luminance(r, gg, b);
    }
    return g;
}

int pgm_next_int(std::istream& is, const std::string& path) {
    // Skips whitespace and '#' comment lines.
    for (;;) {
        const int c = is.peek();
        if (c == EOF) throw std::runtime_error("truncated PGM header in " + path);
        if (std::isspace(c)) {
            is.get();
        } else if (c == '#') {
            std::string comment;
            std::getline(is, comment);
        } else {
            break;
        }
    }
    int v = 0;
    if (!(is >> v)) throw std::runtime_error("malformed PGM header in " + path);
    return v;
}

GrayImage decode_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open image " + path);
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    if (m0 != 'P' || (m1 != '2' && m1 != '5'))
        throw std::runtime_error("not a P2/P5 PGM file: " + path);
    const bool binary = m1 == '5';
    const int width = pgm_next_int(is, path);
    const int height = pgm_next_int(is, path);
    const int maxval = pgm_next_int(is, path);
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
        throw std::runtime_error("bad PGM dimensions in " + path);
    GrayImage g;
    g.width = width;
    g.height = height;
    g.px.resize(static_cast<std::size_t>(width) * height);
    if (binary) {
        is.get(); // single whitespace after maxval
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(g.px.size() * bytes);
        is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!is) throw std::runtime_error("truncated PGM pixel data in " + path);
        for (std::size_t i = 0; i < g.px.size(); ++i) {
            const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
            g.px[i] = static_cast<double>(v) / maxval;
        }
    } else {
        for (auto& p : g.px) {
            const int v = pgm_next_int(is, path);
            p = static_cast<double>(v) / maxval;
        }
    }
    return g;
}

}  // namespace

GrayImage decode_image_file(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open image " + path);
    unsigned char sig[8] = {0};
    probe.read(reinterpret_cast<char*>(sig), 8);
    probe.close();
    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (std::memcmp(sig, png_sig, 8) == 0) return decode_png(path);
    if (sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) return decode_pgm(path);
    throw std::runtime_error("unsupported image format (need PNG or PGM): " + path);
}

Corpus load_csv_corpus(const std::string& path, const Alphabet& encoding) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open corpus CSV " + path);
    const ReducedEncoding enc = reduce_encoding(encoding);

    Corpus corpus;
    corpus.alphabet = enc.reduced;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) throw std::runtime_error("empty corpus CSV " + path);
    ++line_no; // header

    std::size_t pixel_count = 0;
    std::vector<double> values;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        values.clear();
        const char* p = line.data();
        const char* end = p + line.size();
        bool first = true;
        long label = -1;
        while (p <= end) {
            const char* field_end = p;
            while (field_end < end && *field_end != ',') ++field_end;
            if (first) {
                auto [ptr, ec] = std::from_chars(p, field_end, label);
                if (ec != std::errc() || ptr != field_end)
                    csv_error(path, line_no, "non-numeric label field '" + std::string(p, field_end) + "'");
                first = false;
            } else {
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(p, field_end, v);
                if (ec != std::errc() || ptr != field_end)
                    csv_error(path, line_no, "non-numeric pixel field '" + std::string(p, field_end) + "'");
                values.push_back(v);
            }
            if (field_end == end) break;
            p = field_end + 1;
        }
        if (pixel_count == 0) {
            int side = 0;
            if (!is_perfect_square(values.size(), side)) {
                std::ostringstream what;
                what << values.size() << " pixel columns is not a perfect square";
                csv_error(path, line_no, what.str());
            }
            pixel_count = values.size();
            corpus.resolution = side;
        } else if (values.size() != pixel_count) {
            std::ostringstream what;
            what << "ragged row: " << values.size() << " pixel columns, expected " << pixel_count;
            csv_error(path, line_no, what.str());
        }
        if (label < 0 || label >= static_cast<long>(encoding.size())) {
            std::ostringstream what;
            what << "label " << label << " outside alphabet of " << encoding.size() << " letters";
            csv_error(path, line_no, what.str());
        }
        const int mapped = enc.remap[static_cast<std::size_t>(label)];
        if (mapped < 0) continue; // J/Z removal
        for (auto& v : values) {
            if (v < 0.0 || v > 255.0) {
                std::ostringstream what;
                what << "pixel value " << v << " outside [0,255]";
                csv_error(path, line_no, what.str());
            }
            v /= 255.0;
        }
        corpus.images.push_back(values);
        corpus.labels.push_back(mapped);
    }
    if (corpus.images.empty()) throw std::runtime_error("corpus CSV has no data rows: " + path);
    corpus.validate();
    return corpus;
}

Corpus load_image_dir(const std::string& path, int resolution, const Alphabet& encoding,
                      bool strict) {
    if (resolution < 1) throw std::invalid_argument("load_image_dir: resolution must be >= 1");
    if (!fs::is_directory(path)) throw std::runtime_error("not a directory: " + path);
    const ReducedEncoding enc = reduce_encoding(encoding);

    // letter -> sorted file list
    std::map<char, std::vector<std::string>> files_by_letter;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        char letter = 0;
        if (name.size() == 1)
            letter = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        const bool known = letter != 0 &&
                           std::find(encoding.begin(), encoding.end(), letter) != encoding.end();
        if (!known) {
            if (strict)
                throw std::runtime_error("unknown letter subdirectory '" + name + "' in " + path);
            std::cerr << "warning: skipping unknown letter subdirectory '" << name << "'\n";
            continue;
        }
        if (letter == 'J' || letter == 'Z') continue; // removed from every corpus
        auto& list = files_by_letter[letter];
        for (const auto& f : fs::directory_iterator(entry.path())) {
            if (!f.is_regular_file()) continue;
            std::string ext = f.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (ext == ".png" || ext == ".pgm") list.push_back(f.path().string());
        }
        std::sort(list.begin(), list.end());
    }
    if (files_by_letter.empty())
        throw std::runtime_error("no usable letter subdirectories in " + path);

    Corpus corpus;
    corpus.resolution = resolution;
    corpus.alphabet = enc.reduced;
    for (const auto& [letter, files] : files_by_letter) {
        const auto pos = std::find(enc.reduced.begin(), enc.reduced.end(), letter);
        const int label = static_cast<int>(pos - enc.reduced.begin());
        for (const auto& file : files) {
            GrayImage img;
            try {
                img = decode_image_file(file);
            } catch (const std::exception& e) {
                if (strict) throw;
                std::cerr << "warning: skipping undecodable image: " << e.what() << "\n";
                continue;
            }
            GrayImage scaled = area_resize(img, resolution, resolution);
            corpus.images.push_back(std::move(scaled.px));
            corpus.labels.push_back(label);
        }
    }
    if (corpus.images.empty()) throw std::runtime_error("no decodable images under " + path);
    corpus.validate();
    return corpus;
}

}  // namespace alfs
