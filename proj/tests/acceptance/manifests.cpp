#include <filesystem>
#include <fstream>

#include "acceptance.hpp"
#include "stcl/difficulty.hpp"
#include "stcl/error.hpp"

namespace acceptance {

namespace fs = std::filesystem;
using namespace stcl;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Written {
  std::string csv, meta;
  std::uint64_t fingerprint = 0;
  std::size_t easy = 0, medium = 0, hard = 0;
};

// Whole pipeline from scratch: corpus, teacher ladder, partition, files.
Written build(const fs::path& dir, std::uint64_t payload_seed) {
  auto corpus = synth_corpus(48, 16, 16, 5);
  ModelConfig mc;
  mc.image_height = mc.image_width = 16;
  mc.hidden_channels = 6;
  mc.encoder_layers = 3;
  mc.decoder_layers = 2;
  mc.seed = 8;
  TrainConfig tc;
  tc.seed = 8;
  auto ladder = train_teachers(corpus, mc, tc, TeacherBudgets{{1, 2, 3}, 4});
  std::vector<std::unique_ptr<ModelEncoder>> encoders;
  std::vector<StegoEncoder*> ptrs;
  for (auto& t : ladder.teachers) {
    encoders.push_back(std::make_unique<ModelEncoder>(t));
    ptrs.push_back(encoders.back().get());
  }
  auto m = partition(corpus, ptrs, Thresholds{0.05, 0.0, 10, 8}, payload_seed);
  fs::create_directories(dir);
  write_manifest(dir / "manifest.csv", m);
  return {slurp(dir / "manifest.csv"), slurp(dir / "manifest.csv.meta.json"), m.fingerprint(),
          m.count(Difficulty::easy), m.count(Difficulty::medium), m.count(Difficulty::hard)};
}

int rank(Difficulty d) { return static_cast<int>(d); }

// Reference rule written out independently of the library.
Difficulty reference(const SampleScores& s, const Thresholds& t) {
  bool low = false, high = true;
  for (std::size_t j = 0; j < s.ssim.size(); ++j) {
    low = low || s.ssim[j] <= t.alpha2 || s.psnr[j] <= t.mu2;
    high = high && s.ssim[j] >= t.alpha1 && s.psnr[j] >= t.mu1;
  }
  return low ? Difficulty::hard : high ? Difficulty::easy : Difficulty::medium;
}

struct GridResult {
  std::size_t cases = 0, violations = 0;
  std::string first;
};

GridResult grid_properties() {
  // Ten levels per axis, including the default thresholds exactly.
  const std::array<double, 10> ssim_levels{0.7, 0.75, 0.8, 0.82, 0.85, 0.88, 0.9, 0.92, 0.95, 1.0};
  const std::array<double, 10> psnr_levels{8, 10, 12, 14, 16, 18, 20, 22, 25, 30};
  const Thresholds base;
  const Thresholds stricter_easy{0.94, base.alpha2, base.mu1 + 2, base.mu2};
  const Thresholds stricter_hard{base.alpha1, 0.86, base.mu1, base.mu2 + 2};
  GridResult r;
  auto fail = [&](const std::string& what) {
    if (r.violations++ == 0) r.first = what;
  };
  // 10^3 SSIM triples crossed with 10 PSNR patterns that rotate per teacher.
  for (std::size_t code = 0; code < 10000; ++code) {
    std::array<std::size_t, 3> si{code % 10, (code / 10) % 10, (code / 100) % 10}, pi{};
    SampleScores s;
    for (std::size_t j = 0; j < 3; ++j) {
      pi[j] = (code / 1000 + 4 * j) % 10;
      s.ssim.push_back(ssim_levels[si[j]]);
      s.psnr.push_back(psnr_levels[pi[j]]);
    }
    ++r.cases;
    const auto label = classify(s, base);
    if (label != reference(s, base)) fail("label disagrees with the reference rule");
    if (rank(classify(s, stricter_easy)) < rank(label)) fail("raising alpha1/mu1 made a label easier");
    if (rank(classify(s, stricter_hard)) < rank(label)) fail("raising alpha2/mu2 made a label easier");
    for (std::size_t j = 0; j < 3; ++j) {
      if (si[j] + 1 < ssim_levels.size()) {
        auto up = s;
        up.ssim[j] = ssim_levels[si[j] + 1];
        if (rank(classify(up, base)) > rank(label)) fail("a higher SSIM made a label harder");
      }
      if (pi[j] + 1 < psnr_levels.size()) {
        auto up = s;
        up.psnr[j] = psnr_levels[pi[j] + 1];
        if (rank(classify(up, base)) > rank(label)) fail("a higher PSNR made a label harder");
      }
    }
  }
  return r;
}

bool guards_hold() {
  const SampleScores s{{0.95, 0.95, 0.95}, {25, 25, 25}};
  for (const Thresholds& bad : {Thresholds{0.8, 0.8, 20, 12}, Thresholds{0.7, 0.8, 20, 12},
                                Thresholds{0.9, 0.8, 12, 12}, Thresholds{0.9, 0.8, 10, 12},
                                Thresholds{NAN, 0.8, 20, 12}}) {
    try {
      classify(s, bad);
      return false;
    } catch (const ValidationError&) {
    }
  }
  return true;
}

}  // namespace

Verdict manifests() {
  const auto start = std::chrono::steady_clock::now();
  const auto root = fs::temp_directory_path() / "stcl_acceptance_manifest";
  fs::remove_all(root);
  std::string problems;
  const auto a = build(root / "a", 7), b = build(root / "b", 7), c = build(root / "c", 8);
  if (a.csv != b.csv) problems += " manifest CSV differs between runs;";
  if (a.meta != b.meta) problems += " manifest metadata differs between runs;";
  if (a.fingerprint != b.fingerprint) problems += " fingerprint differs between runs;";
  if (c.fingerprint == a.fingerprint) problems += " payload seed does not reach the fingerprint;";

  const auto back = read_manifest(root / "a" / "manifest.csv");
  write_manifest(root / "again.csv", back);
  if (slurp(root / "again.csv") != a.csv) problems += " manifest does not rewrite byte-identically;";

  const auto grid = grid_properties();
  if (grid.violations) problems += format(" %zu grid violations (%s);", grid.violations, grid.first.c_str());
  if (!guards_hold()) problems += " invalid thresholds were accepted;";
  fs::remove_all(root);

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (seconds >= 10.0) problems += format(" took %.1fs;", seconds);
  auto detail = format("byte-identical manifests (%zu/%zu/%zu), %zu grid triples, guards enforced, %.1fs", a.easy,
                       a.medium, a.hard, grid.cases, seconds);
  if (!problems.empty()) detail += ";" + problems;
  return {problems.empty(), detail};
}

}  // namespace acceptance
