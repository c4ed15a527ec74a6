#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "stcl/difficulty.hpp"
#include "stcl/error.hpp"
#include "stcl/random.hpp"

using namespace stcl;
namespace fs = std::filesystem;

namespace {

SampleScores uniform_scores(double s, double p, std::size_t teachers = 3) {
  return {std::vector<double>(teachers, s), std::vector<double>(teachers, p)};
}

// Stego = cover plus noise whose amplitude grows with the cover's first
// pixel, so bright covers come out "hard".
class NoisyTeacher : public StegoEncoder {
 public:
  NoisyTeacher(double amplitude, std::uint64_t id) : amplitude_(amplitude), id_(id) {
    config_.image_height = config_.image_width = 16;
  }
  Tensor embed(const Tensor& covers, const Tensor&) override {
    auto out = covers.detach();
    const std::size_t per = out.numel() / out.dim(0);
    for (std::size_t n = 0; n < out.dim(0); ++n) {
      Rng rng(derive_seed(id_, {n}));
      const double amp = amplitude_ * covers.data()[n * per];
      for (std::size_t k = 0; k < per; ++k) {
        auto& v = out.data()[n * per + k];
        v = static_cast<float>(std::clamp(v + amp * rng.uniform(-1.0, 1.0), 0.0, 1.0));
      }
    }
    return out;
  }
  const ModelConfig& config() const override { return config_; }
  std::uint64_t fingerprint() const override { return id_; }

 private:
  double amplitude_;
  std::uint64_t id_;
  ModelConfig config_;
};

class IdentityTeacher : public NoisyTeacher {
 public:
  IdentityTeacher() : NoisyTeacher(0.0, 0) {}
};

struct Ladder {
  NoisyTeacher a{0.3, 1}, b{0.2, 2}, c{0.1, 3};
  std::vector<StegoEncoder*> ptrs{&a, &b, &c};
};

const Thresholds kLoose{0.6, 0.3, 18.0, 10.0};

}  // namespace

TEST_CASE("classification examples") {
  const Thresholds t;
  CHECK(t.alpha1 == 0.9);
  CHECK(t.alpha2 == 0.8);
  CHECK(t.mu1 == 20.0);
  CHECK(t.mu2 == 12.0);
  CHECK(classify(uniform_scores(0.95, 25), t) == Difficulty::easy);
  CHECK(classify(uniform_scores(0.9, 20), t) == Difficulty::easy);
  CHECK(classify({{0.95, 0.85, 0.95}, {25, 25, 25}}, t) == Difficulty::medium);
  CHECK(classify({{0.95, 0.95, 0.95}, {25, 19, 25}}, t) == Difficulty::medium);
  CHECK(classify({{0.95, 0.8, 0.95}, {25, 25, 25}}, t) == Difficulty::hard);
  CHECK(classify({{0.95, 0.95, 0.95}, {25, 25, 12}}, t) == Difficulty::hard);
  CHECK(classify({{0.5, 0.95, 0.95}, {25, 25, 25}}, t) == Difficulty::hard);
}

TEST_CASE("threshold ordering is enforced") {
  CHECK_THROWS_AS((Thresholds{0.8, 0.8, 20, 12}.validate()), ValidationError);
  CHECK_THROWS_AS((Thresholds{0.9, 0.8, 12, 20}.validate()), ValidationError);
  CHECK_THROWS_AS(classify(uniform_scores(0.9, 20), Thresholds{0.7, 0.8, 20, 12}), ValidationError);
}

TEST_CASE("labels move monotonically with the thresholds") {
  auto rank = [](Difficulty d) { return static_cast<int>(d); };
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      const auto s = uniform_scores(0.7 + 0.015 * i, 10 + j * 0.75);
      const auto base = classify(s, Thresholds{});
      CHECK(rank(classify(s, Thresholds{0.95, 0.8, 20, 12})) >= rank(base));
      CHECK(rank(classify(s, Thresholds{0.9, 0.7, 20, 12})) <= rank(base));
      CHECK(rank(classify(s, Thresholds{0.9, 0.8, 25, 12})) >= rank(base));
    }
}

TEST_CASE("teacher budgets") {
  TeacherBudgets b;
  CHECK(b.epochs == std::vector<std::size_t>{5, 15, 30});
  CHECK(b.convergence == 60);
  CHECK_NOTHROW(b.validate());
  CHECK_THROWS_AS((TeacherBudgets{{5, 5, 30}, 60}.validate()), ValidationError);
  CHECK_THROWS_AS((TeacherBudgets{{5, 15, 60}, 60}.validate()), ValidationError);
  CHECK_THROWS_AS((TeacherBudgets{{0, 15, 30}, 60}.validate()), ValidationError);
  CHECK_THROWS_AS((TeacherBudgets{{}, 60}.validate()), ValidationError);
}

TEST_CASE("an identity teacher scores perfect similarity") {
  auto corpus = synth_corpus(12, 16, 16, 0);
  IdentityTeacher t;
  std::vector<StegoEncoder*> ptrs{&t, &t, &t};
  auto s = score_sample(corpus, 3, ptrs, 0);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(s.ssim[j] == doctest::Approx(1.0));
    CHECK(s.psnr[j] == 100.0);
  }
  CHECK(classify(s, Thresholds{}) == Difficulty::easy);
}

TEST_CASE("a teacher built for another image size is refused") {
  auto corpus = synth_corpus(12, 20, 20, 0);
  IdentityTeacher t;
  std::vector<StegoEncoder*> ptrs{&t};
  CHECK_THROWS_AS(score_sample(corpus, 0, ptrs, 0), CheckpointError);
}

TEST_CASE("partition is deterministic and round-trips through the manifest") {
  auto corpus = synth_corpus(40, 16, 16, 1);
  Ladder l;
  auto m1 = partition(corpus, l.ptrs, kLoose, 7);
  auto m2 = partition(corpus, l.ptrs, kLoose, 7);
  CHECK(to_csv_string(manifest_table(m1)) == to_csv_string(manifest_table(m2)));
  CHECK(m1.fingerprint() == m2.fingerprint());
  CHECK(m1.count(Difficulty::easy) + m1.count(Difficulty::medium) + m1.count(Difficulty::hard) == 40);
  CHECK(m1.count(Difficulty::easy) > 0);
  CHECK(m1.count(Difficulty::hard) > 0);

  auto dir = fs::temp_directory_path() / "stcl_test_manifest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_manifest(dir / "m.csv", m1);
  CHECK(fs::exists(dir / "m.csv.meta.json"));
  auto back = read_manifest(dir / "m.csv");
  CHECK(back.fingerprint() == m1.fingerprint());
  CHECK(back.labels_for(corpus) == m1.labels_for(corpus));
  for (const auto& e : back.entries) CHECK(classify(e.scores, back.thresholds) == e.label);
  write_manifest(dir / "again.csv", back);
  std::ifstream a(dir / "m.csv"), b(dir / "again.csv");
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST_CASE("manifest fingerprint tracks every input") {
  auto corpus = synth_corpus(40, 16, 16, 1);
  Ladder l;
  const auto base = partition(corpus, l.ptrs, kLoose, 7).fingerprint();
  CHECK(partition(corpus, l.ptrs, kLoose, 8).fingerprint() != base);
  CHECK(partition(corpus, l.ptrs, Thresholds{0.61, 0.3, 18, 10}, 7).fingerprint() != base);
  NoisyTeacher other(0.1, 33);
  std::vector<StegoEncoder*> swapped{&l.a, &l.b, &other};
  CHECK(partition(corpus, swapped, kLoose, 7).fingerprint() != base);
  CHECK(partition(synth_corpus(40, 16, 16, 2), l.ptrs, kLoose, 7).fingerprint() != base);
}

TEST_CASE("an empty Easy subset is an error with guidance") {
  auto corpus = synth_corpus(20, 16, 16, 1);
  Ladder l;
  try {
    partition(corpus, l.ptrs, Thresholds{0.999, 0.3, 60, 10}, 7);
    FAIL("no error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("alpha1") != std::string::npos);
  }
}

TEST_CASE("labels_for needs every corpus sample") {
  auto corpus = synth_corpus(40, 16, 16, 1);
  Ladder l;
  auto m = partition(corpus, l.ptrs, kLoose, 7);
  m.entries.pop_back();
  CHECK_THROWS_AS(m.labels_for(corpus), DataError);
  CHECK(parse_difficulty("Hard") == Difficulty::hard);
  CHECK_THROWS_AS(parse_difficulty("trivial"), ValidationError);
}
