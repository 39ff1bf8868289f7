#include "gi0nn/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gi0nn/errors.hpp"

namespace gi0nn {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

void put_le_float(std::ofstream& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  out.write(reinterpret_cast<const char*>(&bits), 4);
}

float get_le_float(std::istream& in) {
  std::uint32_t bits;
  in.read(reinterpret_cast<char*>(&bits), 4);
  if (!in) throw FormatError("GIRF: truncated pixel data");
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

void write_sample_file(const SampleSet& sample, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  if (sample.truth) {
    out << "# alpha=" << format_double(sample.truth->alpha)
        << " gamma=" << format_double(sample.truth->gamma)
        << " L=" << sample.truth->looks << '\n';
  }
  for (Index i = 0; i < sample.values.size(); ++i) {
    out << format_double(sample.values[i]) << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

SampleSet read_sample_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  SampleSet sample;
  std::vector<double> values;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text[0] == '#') {
      Gi0Params truth;
      if (std::sscanf(text.c_str(), "# alpha=%lf gamma=%lf L=%d", &truth.alpha,
                      &truth.gamma, &truth.looks) == 3) {
        sample.truth = truth;
      }
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v) || v <= 0.0) {
      throw FormatError("sample file line " + std::to_string(line_number) +
                        ": expected a positive number, got '" + text + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw FormatError("sample file " + path.string() + " is empty");
  sample.values = Eigen::Map<const Array>(values.data(), static_cast<Index>(values.size()));
  return sample;
}

void write_girf(const Raster& raster, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "GIRF 1 " << raster.cols() << ' ' << raster.rows() << '\n';
  for (Index r = 0; r < raster.rows(); ++r) {
    for (Index c = 0; c < raster.cols(); ++c) {
      put_le_float(out, static_cast<float>(raster(r, c)));
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

Raster read_girf(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string header;
  if (!std::getline(in, header)) throw FormatError("GIRF: missing header");
  std::istringstream hs(header);
  std::string magic;
  int version = -1;
  Index width = 0, height = 0;
  hs >> magic >> version >> width >> height;
  if (magic != "GIRF") throw FormatError("GIRF: bad magic in " + path.string());
  if (version != 1) throw FormatError("GIRF: unsupported version");
  if (width < 1 || height < 1) throw FormatError("GIRF: bad dimensions");
  Raster raster(height, width);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      raster(r, c) = static_cast<double>(get_le_float(in));
    }
  }
  char extra;
  if (in.read(&extra, 1)) throw FormatError("GIRF: trailing bytes");
  return raster;
}

namespace {

// Next PGM token, skipping whitespace and # comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      while (in.get(c) && c != '\n') {
      }
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(c);
  }
  if (token.empty()) throw FormatError("PGM: unexpected end of header");
  return token;
}

}  // namespace

Raster read_pgm(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  const std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5") {
    throw FormatError("PGM: unsupported magic '" + magic + "'");
  }
  const Index width = std::stoll(pgm_token(in));
  const Index height = std::stoll(pgm_token(in));
  const long maxval = std::stol(pgm_token(in));
  if (width < 1 || height < 1) throw FormatError("PGM: bad dimensions");
  if (maxval < 1 || maxval > 65535) throw FormatError("PGM: bad maxval");
  Raster raster(height, width);
  if (magic == "P2") {
    for (Index r = 0; r < height; ++r) {
      for (Index c = 0; c < width; ++c) {
        long v = 0;
        if (!(in >> v)) throw FormatError("PGM: truncated pixel data");
        raster(r, c) = static_cast<double>(v);
      }
    }
  } else {
    // One whitespace byte separates maxval from binary data; pgm_token
    // already consumed it.
    const int bytes = maxval > 255 ? 2 : 1;
    for (Index r = 0; r < height; ++r) {
      for (Index c = 0; c < width; ++c) {
        unsigned char raw[2] = {0, 0};
        in.read(reinterpret_cast<char*>(raw), bytes);
        if (!in) throw FormatError("PGM: truncated pixel data");
        const long v = bytes == 2 ? (static_cast<long>(raw[0]) << 8) | raw[1] : raw[0];
        raster(r, c) = static_cast<double>(v);
      }
    }
  }
  return raster;
}

void write_ppm_preview(const RoughnessMap& map, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "P6\n" << map.cols() << ' ' << map.rows() << "\n255\n";
  for (Index r = 0; r < map.rows(); ++r) {
    for (Index c = 0; c < map.cols(); ++c) {
      const double clipped = std::clamp(map(r, c), kAlphaMin, kAlphaMax);
      const double t = (clipped - kAlphaMin) / (kAlphaMax - kAlphaMin);
      const unsigned char grey = static_cast<unsigned char>(std::lround(t * 255.0));
      const unsigned char rgb[3] = {grey, grey, grey};
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

Raster read_raster_auto(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return read_pgm(path);
  return read_girf(path);
}

MosaicSpec read_mosaic_spec(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  MosaicSpec spec;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw FormatError("mosaic spec line " + std::to_string(line_number) +
                        ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    try {
      if (key == "width") {
        spec.width = std::stoll(value);
      } else if (key == "height") {
        spec.height = std::stoll(value);
      } else if (key == "looks") {
        spec.looks = std::stoi(value);
      } else if (key == "region") {
        MosaicRegion region;
        std::istringstream rs(value);
        if (!(rs >> region.x >> region.y >> region.width >> region.height >>
              region.alpha)) {
          throw FormatError("mosaic spec line " + std::to_string(line_number) +
                            ": region needs 'x y w h alpha'");
        }
        spec.regions.push_back(region);
      } else {
        throw FormatError("mosaic spec line " + std::to_string(line_number) +
                          ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw FormatError("mosaic spec line " + std::to_string(line_number) +
                        ": malformed value '" + value + "'");
    } catch (const std::out_of_range&) {
      throw FormatError("mosaic spec line " + std::to_string(line_number) +
                        ": value out of range");
    }
  }
  validate_mosaic_spec(spec);
  return spec;
}

}  // namespace gi0nn
