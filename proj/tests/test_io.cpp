#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gi0nn/errors.hpp"
#include "gi0nn/io.hpp"

using namespace gi0nn;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "gi0nn_io";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sample files round-trip with truth header") {
  const auto path = temp_dir() / "sample.txt";
  SampleSet sample;
  sample.values = Array(4);
  sample.values << 0.25, 1.0, 3.5, 1e-7;
  sample.truth = Gi0Params{-7.0, 6.0, 3};
  write_sample_file(sample, path);

  const SampleSet loaded = read_sample_file(path);
  REQUIRE(loaded.truth.has_value());
  CHECK(loaded.truth->alpha == -7.0);
  CHECK(loaded.truth->gamma == 6.0);
  CHECK(loaded.truth->looks == 3);
  REQUIRE(loaded.values.size() == 4);
  CHECK((loaded.values == sample.values).all());

  const auto path2 = temp_dir() / "sample2.txt";
  write_sample_file(loaded, path2);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("sample files without header load with no truth") {
  const auto path = temp_dir() / "plain.txt";
  std::ofstream(path) << "1.5\n2.5\n\n0.5\n";
  const SampleSet loaded = read_sample_file(path);
  CHECK(!loaded.truth.has_value());
  CHECK(loaded.values.size() == 3);
}

TEST_CASE("sample file errors") {
  const auto bad = temp_dir() / "bad.txt";
  std::ofstream(bad) << "1.5\n-2.0\n";
  CHECK_THROWS_AS(read_sample_file(bad), FormatError);
  std::ofstream(bad) << "";
  CHECK_THROWS_AS(read_sample_file(bad), FormatError);
  std::ofstream(bad) << "abc\n";
  CHECK_THROWS_AS(read_sample_file(bad), FormatError);
  CHECK_THROWS_AS(read_sample_file(temp_dir() / "missing.txt"), FormatError);
}

TEST_CASE("girf rasters round-trip exactly") {
  const auto path = temp_dir() / "raster.girf";
  Raster raster(2, 3);
  raster << 0.5f, 1.25f, 3.0f, 0.125f, 7.5f, 2.0f;
  write_girf(raster, path);
  const Raster loaded = read_girf(path);
  REQUIRE(loaded.rows() == 2);
  REQUIRE(loaded.cols() == 3);
  CHECK((loaded == raster).all());

  const auto path2 = temp_dir() / "raster2.girf";
  write_girf(loaded, path2);
  CHECK(slurp(path) == slurp(path2));

  const std::string bytes = slurp(path);
  CHECK(bytes.rfind("GIRF 1 3 2\n", 0) == 0);
  CHECK(bytes.size() == std::string("GIRF 1 3 2\n").size() + 6 * 4);
}

TEST_CASE("girf errors") {
  const auto path = temp_dir() / "broken.girf";
  std::ofstream(path, std::ios::binary) << "NOPE 1 2 2\n";
  CHECK_THROWS_AS(read_girf(path), FormatError);
  std::ofstream(path, std::ios::binary) << "GIRF 2 2 2\n";
  CHECK_THROWS_AS(read_girf(path), FormatError);
  std::ofstream(path, std::ios::binary) << "GIRF 1 2 2\nxx";
  CHECK_THROWS_AS(read_girf(path), FormatError);
  Raster raster = Raster::Constant(1, 1, 1.0);
  write_girf(raster, path);
  std::ofstream(path, std::ios::binary | std::ios::app) << "y";
  CHECK_THROWS_AS(read_girf(path), FormatError);
}

TEST_CASE("pgm import handles ascii and binary variants") {
  const auto dir = temp_dir();
  const auto p2 = dir / "a.pgm";
  std::ofstream(p2) << "P2\n# comment\n3 2\n255\n0 10 20\n30 40 255\n";
  const Raster a = read_pgm(p2);
  REQUIRE(a.rows() == 2);
  REQUIRE(a.cols() == 3);
  CHECK(a(0, 0) == 0.0);
  CHECK(a(1, 2) == 255.0);

  const auto p5 = dir / "b.pgm";
  {
    std::ofstream out(p5, std::ios::binary);
    out << "P5\n2 2\n255\n";
    const unsigned char px[4] = {1, 2, 3, 250};
    out.write(reinterpret_cast<const char*>(px), 4);
  }
  const Raster b = read_pgm(p5);
  CHECK(b(0, 0) == 1.0);
  CHECK(b(1, 1) == 250.0);

  const auto p5w = dir / "c.pgm";
  {
    std::ofstream out(p5w, std::ios::binary);
    out << "P5\n2 1\n65535\n";
    const unsigned char px[4] = {0x01, 0x00, 0xFF, 0xFF};  // big-endian 16-bit
    out.write(reinterpret_cast<const char*>(px), 4);
  }
  const Raster c = read_pgm(p5w);
  CHECK(c(0, 0) == 256.0);
  CHECK(c(0, 1) == 65535.0);

  const auto bad = dir / "bad.pgm";
  std::ofstream(bad) << "P7\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
  std::ofstream(bad) << "P2\n2 2\n255\n1 2 3\n";
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
}

TEST_CASE("ppm preview clips to the roughness band") {
  const auto path = temp_dir() / "preview.ppm";
  RoughnessMap map(1, 3);
  map << -20.0, -8.25, 3.0;  // below band, mid band, above band
  write_ppm_preview(map, path);
  const std::string bytes = slurp(path);
  const std::string header = "P6\n3 1\n255\n";
  REQUIRE(bytes.size() == header.size() + 9);
  CHECK(bytes.rfind(header, 0) == 0);
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
  CHECK(px[0] == 0);    // clipped low
  CHECK(px[8] == 255);  // clipped high
  CHECK(px[3] == 128);  // -8.25 sits at the midpoint, 127.5 rounds up
}

TEST_CASE("raster auto-detection dispatches on extension") {
  const auto dir = temp_dir();
  Raster raster = Raster::Constant(2, 2, 4.0);
  write_girf(raster, dir / "r.girf");
  CHECK((read_raster_auto(dir / "r.girf") == 4.0).all());
  std::ofstream(dir / "r.pgm") << "P2\n1 1\n255\n9\n";
  CHECK(read_raster_auto(dir / "r.pgm")(0, 0) == 9.0);
}

TEST_CASE("mosaic specs parse and validate") {
  const auto path = temp_dir() / "mosaic.cfg";
  std::ofstream(path) << "# two vertical halves\n"
                         "width = 8\n"
                         "height = 4\n"
                         "looks = 1\n"
                         "region = 0 0 4 4 -1.5\n"
                         "region = 4 0 4 4 -15\n";
  const MosaicSpec spec = read_mosaic_spec(path);
  CHECK(spec.width == 8);
  CHECK(spec.height == 4);
  REQUIRE(spec.regions.size() == 2);
  CHECK(spec.regions[1].alpha == -15.0);

  std::ofstream(path) << "width = 4\nheight = 4\nwat = 9\nregion = 0 0 4 4 -3\n";
  CHECK_THROWS_AS(read_mosaic_spec(path), FormatError);
  std::ofstream(path) << "width = 4\nheight = 4\nregion = 0 0 4 -3\n";
  CHECK_THROWS_AS(read_mosaic_spec(path), FormatError);
  std::ofstream(path) << "width = 4\nheight = 4\nregion = 0 0 2 4 -3\n";
  CHECK_THROWS_AS(read_mosaic_spec(path), std::invalid_argument);
}
