#pragma once

#include <string>

#include "alfs/corpus.hpp"
#include "alfs/image.hpp"

namespace alfs {

// CSV layout: header row, then `label,pixel1..pixelN` rows with N a perfect
// square and pixel values in [0,255]. The label value indexes `encoding`
// (typically the full A-Z list); rows encoding J or Z are dropped and the
// resulting corpus uses the J/Z-free remainder of `encoding`.
Corpus load_csv_corpus(const std::string& path, const Alphabet& encoding);

// Directory layout: <root>/<LETTER>/<file>.png|.pgm. Letters are matched
// against `encoding` (J/Z entries are recognized but dropped). Unknown
// subdirectories and undecodable images fail in strict mode, otherwise they
// are skipped with a warning on stderr. Items are ordered by (letter, file
// name) regardless of directory enumeration order.
Corpus load_image_dir(const std::string& path, int resolution, const Alphabet& encoding,
                      bool strict);

// PNG (via libpng, any color type, luminance-converted) or PGM (P2/P5).
GrayImage decode_image_file(const std::string& path);

}  // namespace alfs
