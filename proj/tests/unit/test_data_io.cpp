#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "stcl/checkpoint.hpp"
#include "stcl/corpus.hpp"
#include "stcl/csv.hpp"
#include "stcl/error.hpp"
#include "stcl/image_io.hpp"

using namespace stcl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("stcl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Bitwise CRC-32 (reflected, polynomial 0xEDB88320).
std::uint32_t crc32_bitwise(const unsigned char* data, std::size_t n) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) {
    c ^= data[i];
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return c ^ 0xFFFFFFFFu;
}

void reseal(std::vector<unsigned char>& bytes) {
  const auto crc = crc32_bitwise(bytes.data(), bytes.size() - 4);
  for (int k = 0; k < 4; ++k) bytes[bytes.size() - 4 + k] = static_cast<unsigned char>(crc >> (8 * k));
}

CheckpointFault fault_of(const std::vector<unsigned char>& bytes) {
  try {
    parse_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.fault();
  }
  FAIL("checkpoint was accepted");
  return CheckpointFault::malformed;
}

ModelConfig tiny_model(std::uint64_t seed = 1) {
  ModelConfig c;
  c.image_height = 12;
  c.image_width = 12;
  c.hidden_channels = 3;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("synthetic corpus splits and families") {
  auto c = synth_corpus(200, 32, 32, 0);
  CHECK(c.size() == 200);
  CHECK(c.split.train.size() == 140);
  CHECK(c.split.val.size() == 30);
  CHECK(c.split.test.size() == 30);
  std::set<std::size_t> all;
  for (auto* part : {&c.split.train, &c.split.val, &c.split.test}) all.insert(part->begin(), part->end());
  CHECK(all.size() == 200);

  std::size_t counts[3] = {};
  double var_min_texture = 1e9, var_max_solid = 0;
  for (const auto& s : c.samples) {
    counts[static_cast<int>(s.family)]++;
    REQUIRE(s.pixels.size() == 3 * 32 * 32);
    for (float v : s.pixels) REQUIRE((v >= 0.0f && v <= 1.0f));
    const double var = pixel_variance(s.pixels);
    if (s.family == ImageFamily::texture) var_min_texture = std::min(var_min_texture, var);
    if (s.family == ImageFamily::solid) var_max_solid = std::max(var_max_solid, var);
  }
  CHECK(counts[0] == 100);
  CHECK(counts[1] == 50);
  CHECK(counts[2] == 50);
  CHECK(var_min_texture > var_max_solid);
}

TEST_CASE("corpus generation is seeded") {
  auto a = synth_corpus(40, 16, 16, 3), b = synth_corpus(40, 16, 16, 3), c = synth_corpus(40, 16, 16, 4);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.split.train == b.split.train);
  CHECK(a.fingerprint() != c.fingerprint());
  CHECK(assign_splits(200, 9).val == assign_splits(200, 9).val);
  CHECK_THROWS_AS(synth_corpus(9, 16, 16, 0), ValidationError);
}

TEST_CASE("payloads are seeded fair coins") {
  auto p = gen_payload(11, 1, 320, 320);
  REQUIRE(p.bits.size() >= 100000);
  double ones = 0;
  for (float b : p.bits) ones += b;
  const double mean = ones / static_cast<double>(p.bits.size());
  CHECK(mean >= 0.495);
  CHECK(mean <= 0.505);
  CHECK(gen_payload(11, 1, 320, 320).bits == p.bits);

  auto q = gen_payload(12, 3, 32, 32), r = gen_payload(13, 3, 32, 32);
  const double n = static_cast<double>(q.bits.size());
  double hamming = 0;
  for (std::size_t i = 0; i < q.bits.size(); ++i) hamming += q.bits[i] != r.bits[i];
  CHECK(std::abs(hamming - 0.5 * n) <= 3 * std::sqrt(0.25 * n));
}

TEST_CASE("image files: a white PNG loads as ones, PPM round-trips") {
  auto dir = scratch_dir("images");
  RgbImage white{4, 5, std::vector<float>(3 * 4 * 5, 1.0f)};
  write_png(dir / "white.png", white);
  auto back = read_image(dir / "white.png");
  CHECK(back.height == 4);
  CHECK(back.width == 5);
  for (float v : back.pixels) REQUIRE(v == 1.0f);

  RgbImage ramp{3, 3, {}};
  for (int i = 0; i < 27; ++i) ramp.pixels.push_back(static_cast<float>(i * 9) / 255.0f);
  write_ppm(dir / "ramp.ppm", ramp);
  auto r = read_image(dir / "ramp.ppm");
  for (std::size_t i = 0; i < r.pixels.size(); ++i) CHECK(r.pixels[i] == doctest::Approx(ramp.pixels[i]));

  std::ofstream(dir / "broken.png") << "not an image";
  try {
    read_image(dir / "broken.png");
    FAIL("no error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("broken.png") != std::string::npos);
  }
}

TEST_CASE("directory corpora resize and split deterministically") {
  auto dir = scratch_dir("corpus");
  for (int i = 0; i < 12; ++i) {
    RgbImage img{20, 24, std::vector<float>(3 * 20 * 24, static_cast<float>(i) / 11.0f)};
    write_png(dir / ("img" + std::to_string(100 + i) + ".png"), img);
  }
  auto a = load_corpus(dir, 16, 16, 5), b = load_corpus(dir, 16, 16, 5);
  CHECK(a.size() == 12);
  CHECK(a.height == 16);
  CHECK(a.samples[0].pixels.size() == 3 * 16 * 16);
  CHECK(a.split.train == b.split.train);
  CHECK(a.samples[11].pixels[0] == doctest::Approx(1.0f));
  CHECK_THROWS_AS(load_corpus(scratch_dir("empty"), 16, 16, 0), DataError);
  CHECK_THROWS_AS(load_corpus(dir / "missing", 16, 16, 0), DataError);
}

TEST_CASE("bilinear resize keeps constants and averages halves") {
  RgbImage img{2, 2, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}};
  auto up = resize_bilinear(img, 4, 4);
  CHECK(up.pixels[0] == doctest::Approx(0.0));
  CHECK(up.pixels[1] == doctest::Approx(0.25));
  CHECK(up.pixels[2] == doctest::Approx(0.75));
  auto down = resize_bilinear(up, 1, 1);
  CHECK(down.pixels[0] == doctest::Approx(0.5));
}

TEST_CASE("model checkpoints round-trip byte for byte") {
  auto dir = scratch_dir("ckpt");
  Model m(tiny_model());
  save_checkpoint(dir / "a.stcl", model_checkpoint(m));
  auto loaded = model_from(load_checkpoint(dir / "a.stcl"));
  save_checkpoint(dir / "b.stcl", model_checkpoint(loaded));
  CHECK(slurp(dir / "a.stcl") == slurp(dir / "b.stcl"));
  CHECK(loaded.config() == m.config());
  const auto pa = m.parameters(), pb = loaded.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pa[i].numel(); ++j) REQUIRE(pa[i].data()[j] == pb[i].data()[j]);
}

TEST_CASE("corrupted checkpoints are rejected with distinct faults") {
  auto bytes = serialize_checkpoint(model_checkpoint(Model(tiny_model())));
  CHECK(bytes[bytes.size() - 4] == static_cast<unsigned char>(crc32_bitwise(bytes.data(), bytes.size() - 4)));

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(fault_of(magic) == CheckpointFault::bad_magic);

  auto version = bytes;
  version[4] = 2;
  reseal(version);
  CHECK(fault_of(version) == CheckpointFault::unsupported_version);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(fault_of(flipped) == CheckpointFault::checksum_mismatch);

  for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{8}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
    CHECK(fault_of(cut) == CheckpointFault::checksum_mismatch);
  }

  auto trailing = bytes;
  trailing.insert(trailing.end() - 4, 0x00);
  reseal(trailing);
  CHECK(fault_of(trailing) == CheckpointFault::malformed);
}

TEST_CASE("a checkpoint for one architecture is refused by another") {
  auto ckpt = model_checkpoint(Model(tiny_model()));
  auto other = tiny_model();
  other.hidden_channels = 4;
  Model m(other);
  try {
    restore_model(m, ckpt);
    FAIL("no error");
  } catch (const CheckpointError& e) {
    CHECK(e.fault() == CheckpointFault::config_mismatch);
  }
  Model same(tiny_model(99));
  restore_model(same, ckpt);
  CHECK(same.parameters()[0].data()[0] == Model(tiny_model()).parameters()[0].data()[0]);
}

TEST_CASE("missing checkpoint files are data errors naming the path") {
  try {
    load_checkpoint("/nonexistent/x.stcl");
    FAIL("no error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/x.stcl") != std::string::npos);
  }
}

TEST_CASE("fixed-point formatting") {
  CHECK(fixed(-0.0000001, 6) == "0.000000");
  CHECK(fixed(1.5, 2) == "1.50");
  CHECK(round_trip(0.1234567891, 8) == 0.12345679);
}

TEST_CASE("logs round-trip through CSV") {
  auto dir = scratch_dir("csv");
  TrainingLog log;
  for (std::size_t e = 1; e <= 4; ++e)
    log.push_back(as_logged({e, 1, 1.0 / static_cast<double>(e), 0.9 / static_cast<double>(e), 0.5, 0.6, 20.0 + static_cast<double>(e), 0.1, 0.75}));
  write_csv(dir / "log.csv", log_table(log));
  auto table = read_csv(dir / "log.csv");
  CHECK(table.header.front() == "epoch");
  auto back = parse_log(table);
  REQUIRE(back.size() == 4);
  CHECK(back[2].val_loss == log[2].val_loss);
  CHECK(to_csv_string(log_table(back)) == to_csv_string(log_table(log)));
  try {
    table.column_index("nope");
    FAIL("no error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("val_loss") != std::string::npos);
  }
}
