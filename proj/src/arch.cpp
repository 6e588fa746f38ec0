#include "alfs/arch.hpp"

#include <sstream>
#include <stdexcept>

namespace alfs {

void ArchSpec::validate() const {
    std::ostringstream err;
    if (resolution < 1) {
        err << "input resolution must be >= 1, got " << resolution;
        throw std::invalid_argument(err.str());
    }
    if (channels < 1) {
        err << "input channels must be >= 1, got " << channels;
        throw std::invalid_argument(err.str());
    }
    if (class_count < 2) {
        err << "class count must be >= 2, got " << class_count;
        throw std::invalid_argument(err.str());
    }
    int side = resolution;
    for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
        const ConvBlockSpec& b = conv_blocks[i];
        if (b.filters < 1) {
            err << "conv block " << i << ": filter count must be >= 1, got " << b.filters;
            throw std::invalid_argument(err.str());
        }
        if (b.kernel < 1 || b.kernel % 2 == 0) {
            err << "conv block " << i << ": kernel size must be odd and >= 1, got " << b.kernel;
            throw std::invalid_argument(err.str());
        }
        if (b.kernel > 2 * side - 1) {
            err << "conv block " << i << ": kernel " << b.kernel << " exceeds usable extent of a "
                << side << "x" << side << " map";
            throw std::invalid_argument(err.str());
        }
        if (!(b.dropout >= 0.0 && b.dropout < 1.0)) {
            err << "conv block " << i << ": dropout rate must be in [0,1), got " << b.dropout;
            throw std::invalid_argument(err.str());
        }
        side /= 2;
        if (side < 1) {
            err << "conv block " << i << ": 2x2 pooling collapses the map below 1x1 "
                << "(input resolution " << resolution << ", blocks " << conv_blocks.size() << ")";
            throw std::invalid_argument(err.str());
        }
    }
    for (std::size_t i = 0; i < fc_layers.size(); ++i) {
        const FcLayerSpec& f = fc_layers[i];
        if (f.width < 1) {
            err << "fc layer " << i << ": width must be >= 1, got " << f.width;
            throw std::invalid_argument(err.str());
        }
        if (!(f.dropout >= 0.0 && f.dropout < 1.0)) {
            err << "fc layer " << i << ": dropout rate must be in [0,1), got " << f.dropout;
            throw std::invalid_argument(err.str());
        }
    }
}

int ArchSpec::side_after(int blocks) const {
    int side = resolution;
    for (int i = 0; i < blocks; ++i) side /= 2;
    return side;
}

int ArchSpec::flat_features() const {
    const int n = static_cast<int>(conv_blocks.size());
    const int side = side_after(n);
    const int ch = n == 0 ? channels : conv_blocks.back().filters;
    return ch * side * side;
}

std::string ArchSpec::describe() const {
    std::ostringstream os;
    os << channels << "x" << resolution << "x" << resolution;
    for (const auto& b : conv_blocks)
        os << " -> conv" << b.kernel << "x" << b.kernel << "(" << b.filters << ")@" << b.dropout;
    for (const auto& f : fc_layers) os << " -> fc(" << f.width << ")@" << f.dropout;
    os << " -> head(" << class_count << ")";
    return os.str();
}

}  // namespace alfs
