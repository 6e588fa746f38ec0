#include "alfs/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "alfs/rng.hpp"
#include "alfs/version.hpp"

namespace alfs {

namespace {

constexpr std::uint64_t kHeadInitTag = 0x68656164; // "head"

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw CorruptWeightFile("weight file truncated while reading u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw CorruptWeightFile("weight file truncated while reading f64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

void write_arch(std::ostream& os, const ArchSpec& a) {
    write_u32(os, static_cast<std::uint32_t>(a.resolution));
    write_u32(os, static_cast<std::uint32_t>(a.channels));
    write_u32(os, static_cast<std::uint32_t>(a.class_count));
    write_u32(os, static_cast<std::uint32_t>(a.conv_blocks.size()));
    for (const auto& b : a.conv_blocks) {
        write_u32(os, static_cast<std::uint32_t>(b.filters));
        write_u32(os, static_cast<std::uint32_t>(b.kernel));
        write_f64(os, b.dropout);
    }
    write_u32(os, static_cast<std::uint32_t>(a.fc_layers.size()));
    for (const auto& f : a.fc_layers) {
        write_u32(os, static_cast<std::uint32_t>(f.width));
        write_f64(os, f.dropout);
    }
}

ArchSpec read_arch(std::istream& is) {
    ArchSpec a;
    a.resolution = static_cast<int>(read_u32(is));
    a.channels = static_cast<int>(read_u32(is));
    a.class_count = static_cast<int>(read_u32(is));
    a.conv_blocks.clear();
    const std::uint32_t nconv = read_u32(is);
    if (nconv > 64) throw CorruptWeightFile("implausible conv block count in weight file");
    for (std::uint32_t i = 0; i < nconv; ++i) {
        ConvBlockSpec b;
        b.filters = static_cast<int>(read_u32(is));
        b.kernel = static_cast<int>(read_u32(is));
        b.dropout = read_f64(is);
        a.conv_blocks.push_back(b);
    }
    a.fc_layers.clear();
    const std::uint32_t nfc = read_u32(is);
    if (nfc > 64) throw CorruptWeightFile("implausible fc layer count in weight file");
    for (std::uint32_t i = 0; i < nfc; ++i) {
        FcLayerSpec f;
        f.width = static_cast<int>(read_u32(is));
        f.dropout = read_f64(is);
        a.fc_layers.push_back(f);
    }
    return a;
}

void draw_layer(std::vector<double>& w, std::vector<double>& b, const LayerShape& shape, Rng& rng) {
    w.resize(shape.weight_count);
    b.assign(shape.bias_count, 0.0);
    const double bound = std::sqrt(6.0 / static_cast<double>(shape.fan_in));
    for (auto& x : w) x = rng.uniform(-bound, bound);
}

}  // namespace

std::vector<LayerShape> layer_shapes(const ArchSpec& arch) {
    std::vector<LayerShape> shapes;
    int in_ch = arch.channels;
    for (const auto& b : arch.conv_blocks) {
        const std::size_t k2 = static_cast<std::size_t>(b.kernel) * b.kernel;
        const int fan_in = in_ch * b.kernel * b.kernel;
        shapes.push_back({static_cast<std::size_t>(b.filters) * in_ch * k2,
                          static_cast<std::size_t>(b.filters), fan_in});
        in_ch = b.filters;
    }
    int in_features = arch.flat_features();
    for (const auto& f : arch.fc_layers) {
        shapes.push_back({static_cast<std::size_t>(f.width) * in_features,
                          static_cast<std::size_t>(f.width), in_features});
        in_features = f.width;
    }
    shapes.push_back({static_cast<std::size_t>(arch.class_count) * in_features,
                      static_cast<std::size_t>(arch.class_count), in_features});
    return shapes;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

ModelParams init_model(const ArchSpec& arch, std::uint64_t seed) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    p.init_seed = seed;
    const auto shapes = layer_shapes(arch);
    p.weights.resize(shapes.size());
    p.biases.resize(shapes.size());
    Rng rng(mix_seed(seed, 0x696e6974)); // "init"
    for (std::size_t i = 0; i < shapes.size(); ++i)
        draw_layer(p.weights[i], p.biases[i], shapes[i], rng);
    return p;
}

ModelParams reinit_head(const ModelParams& params, std::uint64_t seed) {
    ModelParams out = params;
    const auto shapes = layer_shapes(params.arch);
    Rng rng(mix_seed(seed, kHeadInitTag));
    draw_layer(out.weights.back(), out.biases.back(), shapes.back(), rng);
    return out;
}

void save_params(const ModelParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open weight file for writing: " + path);
    os.write(kWeightMagic, 4);
    write_u32(os, kWeightFormatVersion);
    write_arch(os, params.arch);
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        for (double v : params.weights[i]) write_f64(os, v);
        for (double v : params.biases[i]) write_f64(os, v);
    }
    if (!os) throw std::runtime_error("write failed for weight file: " + path);
}

ModelParams load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open weight file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kWeightMagic, 4) != 0)
        throw CorruptWeightFile("bad magic bytes in " + path + " (not an ALFW weight file)");
    const std::uint32_t version = read_u32(is);
    if (version != kWeightFormatVersion) {
        std::ostringstream err;
        err << "weight file " << path << " has format version " << version << ", expected "
            << kWeightFormatVersion;
        throw WeightVersionMismatch(err.str());
    }
    ModelParams p;
    p.arch = read_arch(is);
    try {
        p.arch.validate();
    } catch (const std::invalid_argument& e) {
        throw CorruptWeightFile(std::string("weight file carries an invalid arch: ") + e.what());
    }
    const auto shapes = layer_shapes(p.arch);
    p.weights.resize(shapes.size());
    p.biases.resize(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        p.weights[i].resize(shapes[i].weight_count);
        for (auto& v : p.weights[i]) v = read_f64(is);
        p.biases[i].resize(shapes[i].bias_count);
        for (auto& v : p.biases[i]) v = read_f64(is);
    }
    is.peek();
    if (!is.eof()) throw CorruptWeightFile("trailing bytes after weight arrays in " + path);
    return p;
}

ModelParams load_params(const std::string& path, const ArchSpec& expected) {
    ModelParams p = load_params(path);
    if (!(p.arch == expected)) {
        throw ArchMismatch("weight file arch [" + p.arch.describe() + "] does not match expected arch [" +
                           expected.describe() + "]");
    }
    return p;
}

}  // namespace alfs
