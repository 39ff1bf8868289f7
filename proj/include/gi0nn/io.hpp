#pragma once

#include <filesystem>

#include "gi0nn/gi0.hpp"
#include "gi0nn/types.hpp"

namespace gi0nn {

// Sample set text format: optional `# alpha=<a> gamma=<g> L=<l>` header,
// one positive decimal per line.
void write_sample_file(const SampleSet& sample, const std::filesystem::path& path);
SampleSet read_sample_file(const std::filesystem::path& path);

// GIRF raster: ASCII line `GIRF 1 <width> <height>`, then width*height
// little-endian float32, row-major.
void write_girf(const Raster& raster, const std::filesystem::path& path);
Raster read_girf(const std::filesystem::path& path);

// PGM (P2/P5, 8- or 16-bit) import; integer grey levels cast to double.
Raster read_pgm(const std::filesystem::path& path);

// Grayscale preview of a roughness map, clipped to [-15, -1.5],
// written as binary PPM.
void write_ppm_preview(const RoughnessMap& map, const std::filesystem::path& path);

// Raster loader dispatching on extension (.girf, .pgm).
Raster read_raster_auto(const std::filesystem::path& path);

// Mosaic layout as flat key = value text with repeated `region` keys.
MosaicSpec read_mosaic_spec(const std::filesystem::path& path);

}  // namespace gi0nn
