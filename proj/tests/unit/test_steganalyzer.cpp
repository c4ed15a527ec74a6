#include <numeric>

#include "doctest.h"
#include "stcl/corpus.hpp"
#include "stcl/error.hpp"
#include "stcl/random.hpp"
#include "stcl/steganalyzer.hpp"

using namespace stcl;

namespace {

constexpr std::size_t kSide = 16;

struct Sets {
  std::vector<std::vector<float>> covers, stegos;
};

// Additive uniform noise of amplitude 0.3: trivially separable by a
// high-pass front end.
Sets noisy_pairs(std::size_t n, std::uint64_t seed) {
  auto corpus = synth_corpus(n, kSide, kSide, seed);
  Sets s;
  Rng rng(derive_seed(seed, {77}));
  for (const auto& rec : corpus.samples) {
    s.covers.push_back(rec.pixels);
    auto st = rec.pixels;
    for (auto& v : st) v = static_cast<float>(std::clamp(v + rng.uniform(-0.3, 0.3), 0.0, 1.0));
    s.stegos.push_back(std::move(st));
  }
  return s;
}

DetectorConfig quick_config() {
  DetectorConfig c;
  c.epochs = 12;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("KV kernel is a zero-sum high-pass filter") {
  CHECK(std::accumulate(kKvKernel.begin(), kKvKernel.end(), 0.0) == 0.0);
  CHECK(kKvKernel[12] * kKvScale == doctest::Approx(-1.0));
}

TEST_CASE("a constant image has a zero residual") {
  auto img = Tensor::full({2, 3, 9, 11}, 0.37f);
  auto r = residual_frontend(img);
  CHECK(r.shape() == Shape{2, 1, 9, 11});
  for (float v : r.data()) CHECK(std::abs(v) < 1e-6f);
}

TEST_CASE("the residual changes where pixels change") {
  auto a = Tensor::full({1, 3, 12, 12}, 0.5f);
  auto b = a.detach();
  for (std::size_t c = 0; c < 3; ++c) b.data()[c * 144 + 6 * 12 + 6] = 0.9f;
  auto ra = residual_frontend(a), rb = residual_frontend(b);
  CHECK(rb.data()[6 * 12 + 6] != ra.data()[6 * 12 + 6]);
  CHECK(rb.data()[0] == ra.data()[0]);
}

TEST_CASE("the residual is translation-equivariant away from the border") {
  Rng rng(4);
  auto a = Tensor::zeros({1, 3, 16, 16});
  for (auto& v : a.data()) v = static_cast<float>(rng.uniform());
  auto b = Tensor::zeros({1, 3, 16, 16});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 1; x < 16; ++x) b.data()[(c * 16 + y) * 16 + x] = a.data()[(c * 16 + y) * 16 + x - 1];
  auto ra = residual_frontend(a), rb = residual_frontend(b);
  for (std::size_t y = 3; y < 13; ++y)
    for (std::size_t x = 4; x < 13; ++x) CHECK(rb.data()[y * 16 + x] == doctest::Approx(ra.data()[y * 16 + x - 1]));
}

TEST_CASE("detector separates trivially distinguishable pairs") {
  auto s = noisy_pairs(120, 1);
  auto trained = train_detector(s.covers, s.stegos, kSide, kSide, quick_config());
  CHECK(trained.holdout_size > 0);
  CHECK(trained.holdout_accuracy > 0.95);

  auto fresh = noisy_pairs(40, 2);
  auto covers = score_corpus(trained.detector, fresh.covers, kSide, kSide);
  auto stegos = score_corpus(trained.detector, fresh.stegos, kSide, kSide);
  CHECK(covers.mean < 0.5);
  CHECK(stegos.mean > covers.mean);
  for (double v : covers.scores) CHECK((v >= 0.0 && v <= 1.0));

  std::vector<std::vector<float>> images = fresh.covers;
  images.insert(images.end(), fresh.stegos.begin(), fresh.stegos.end());
  std::vector<int> labels(images.size(), 0), swapped(images.size(), 1);
  std::fill(labels.begin() + 40, labels.end(), 1);
  std::fill(swapped.begin() + 40, swapped.end(), 0);
  const double acc = detection_accuracy(trained.detector, images, labels, kSide, kSide);
  CHECK(acc > 0.9);
  CHECK(detection_accuracy(trained.detector, images, swapped, kSide, kSide) == doctest::Approx(1.0 - acc));

  auto doubled = fresh.covers;
  doubled.insert(doubled.end(), fresh.covers.begin(), fresh.covers.end());
  CHECK(score_corpus(trained.detector, doubled, kSide, kSide).mean == doctest::Approx(covers.mean).epsilon(1e-12));
}

TEST_CASE("detector training is deterministic and checkpoints round-trip") {
  auto s = noisy_pairs(24, 5);
  auto cfg = quick_config();
  cfg.epochs = 2;
  auto a = train_detector(s.covers, s.stegos, kSide, kSide, cfg);
  auto b = train_detector(s.covers, s.stegos, kSide, kSide, cfg);
  CHECK(serialize_checkpoint(a.detector.checkpoint()) == serialize_checkpoint(b.detector.checkpoint()));
  auto c = Detector::from(parse_checkpoint(serialize_checkpoint(a.detector.checkpoint())));
  CHECK(serialize_checkpoint(c.checkpoint()) == serialize_checkpoint(a.detector.checkpoint()));
  CHECK(score_corpus(c, s.covers, kSide, kSide).scores == score_corpus(a.detector, s.covers, kSide, kSide).scores);
}

TEST_CASE("detector input checks") {
  auto s = noisy_pairs(24, 6);
  std::vector<std::vector<float>> few(s.stegos.begin(), s.stegos.begin() + 2);
  CHECK_THROWS_AS(train_detector(s.covers, few, kSide, kSide, quick_config()), ValidationError);
  Detector d(quick_config());
  CHECK_THROWS_AS(score_corpus(d, std::vector<std::vector<float>>{}, kSide, kSide), ValidationError);
  DetectorConfig bad;
  bad.conv_blocks = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
