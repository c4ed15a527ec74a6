#include <optional>

#include "acceptance.hpp"
#include "stcl/steganalyzer.hpp"

namespace acceptance {

using namespace stcl;

namespace {

struct Tally {
  std::vector<bool> votes;
  bool settled_by_first = false;  // criterion 4 only needs more seeds after a failure

  std::size_t passes() const { return static_cast<std::size_t>(std::count(votes.begin(), votes.end(), true)); }
  std::size_t fails() const { return votes.size() - passes(); }
  bool settled() const {
    if (settled_by_first && !votes.empty() && votes.front()) return true;
    return passes() >= 2 || fails() >= 2;
  }
  bool pass() const { return settled_by_first && votes.size() == 1 ? votes.front() : passes() >= 2; }
  std::string summary() const {
    std::string s;
    for (bool v : votes) s += v ? 'P' : 'F';
    return s;
  }
};

double last_val_ssim(const TrainingLog& log, std::size_t stage) {
  double v = NAN;
  for (const auto& r : log)
    if (r.stage == stage) v = r.ssim;
  return v;
}

StageHooks epoch_printer(const char* run, std::uint64_t seed) {
  StageHooks h;
  h.on_epoch = [run, seed](const LogRow& r) {
    progress("seed %llu %-8s stage %zu epoch %3zu val_loss %.4f ssim %.4f psnr %.2f acc %.4f",
             static_cast<unsigned long long>(seed), run, r.stage, r.epoch, r.val_loss, r.ssim, r.psnr, r.accuracy);
  };
  return h;
}

}  // namespace

EndToEnd end_to_end(const RunConfig& cfg, std::size_t max_seeds) {
  const auto corpus = open_corpus(cfg.corpus, cfg.corpus_size, cfg.model.image_height, cfg.model.image_width,
                                  cfg.corpus_seed);
  progress("corpus: %zu images %zux%zu, split %zu/%zu/%zu", corpus.size(), corpus.height, corpus.width,
           corpus.split.train.size(), corpus.split.val.size(), corpus.split.test.size());

  auto ladder = train_teachers(corpus, cfg.model, cfg.train, cfg.teachers, [](const LogRow& r) {
    progress("teacher epoch %3zu val_loss %.4f ssim %.4f psnr %.2f", r.epoch, r.val_loss, r.ssim, r.psnr);
  });
  std::vector<std::unique_ptr<ModelEncoder>> encoders;
  std::vector<StegoEncoder*> ptrs;
  for (auto& t : ladder.teachers) {
    encoders.push_back(std::make_unique<ModelEncoder>(t));
    ptrs.push_back(encoders.back().get());
  }
  const auto manifest = partition(corpus, ptrs, cfg.thresholds, cfg.payload_seed);
  const auto labels = manifest.labels_for(corpus);
  progress("partition: easy %zu medium %zu hard %zu", manifest.count(Difficulty::easy),
           manifest.count(Difficulty::medium), manifest.count(Difficulty::hard));

  Tally c4{{}, true}, c6, c7;
  std::vector<std::string> d4, d6, d7;
  const auto& test = corpus.split.test;
  for (std::uint64_t seed = 1; seed <= max_seeds && !(c4.settled() && c6.settled() && c7.settled()); ++seed) {
    ModelConfig mc = cfg.model;
    mc.seed = seed;
    TrainConfig tc = cfg.train;
    tc.seed = seed;

    auto stcl_run = run_curriculum(corpus, labels, cfg.plan(), mc, tc, epoch_printer("stcl", seed));
    const auto stcl_eval = evaluate(stcl_run.model, corpus, test, tc.weights, cfg.payload_seed);
    std::optional<CurriculumResult> base_run;
    auto baseline = [&]() -> CurriculumResult& {
      if (!base_run) base_run = run_baseline(corpus, mc, tc, stcl_run.epochs(), epoch_printer("baseline", seed));
      return *base_run;
    };

    if (!c4.settled()) {
      auto& base = baseline();
      const auto base_eval = evaluate(base.model, corpus, test, tc.weights, cfg.payload_seed);
      const auto& s1 = stcl_run.reports.front();
      const double ssim1 = last_val_ssim(stcl_run.log, 1), ssim3 = last_val_ssim(stcl_run.log, 3);
      const bool a = stcl_eval.report.psnr >= base_eval.report.psnr;
      const bool b = ssim3 >= ssim1;
      const bool c = stcl_eval.report.accuracy >= 0.95;
      const bool d = s1.triggered_by == StopTrigger::knee && s1.epochs < cfg.plan().stages.front().epoch_cap;
      c4.votes.push_back(a && b && c && d);
      d4.push_back(format("seed %llu: psnr %.3f vs %.3f%s, stage ssim %.4f->%.4f%s, acc %.4f%s, stage-1 stop %zu/%zu%s",
                          static_cast<unsigned long long>(seed), stcl_eval.report.psnr, base_eval.report.psnr,
                          a ? "" : "(a!)", ssim1, ssim3, b ? "" : "(b!)", stcl_eval.report.accuracy,
                          c ? "" : "(c!)", s1.epochs, cfg.plan().stages.front().epoch_cap, d ? "" : "(d!)"));
      progress("criterion 4 %s", d4.back().c_str());
    }

    if (!c6.settled()) {
      auto conv = run_curriculum(corpus, labels,
                                 CurriculumPlan::convergence_only(cfg.stage_cap, cfg.patience, cfg.min_delta), mc, tc,
                                 epoch_printer("converge", seed));
      const auto conv_eval = evaluate(conv.model, corpus, test, tc.weights, cfg.payload_seed);
      const bool more = conv.epochs() > stcl_run.epochs();
      const bool not_better = conv_eval.report.psnr <= stcl_eval.report.psnr;
      c6.votes.push_back(more && not_better);
      d6.push_back(format("seed %llu: epochs %zu vs knee %zu, psnr %.3f vs %.3f",
                          static_cast<unsigned long long>(seed), conv.epochs(), stcl_run.epochs(),
                          conv_eval.report.psnr, stcl_eval.report.psnr));
      progress("criterion 6 %s", d6.back().c_str());
    }

    if (!c7.settled()) {
      auto& base = baseline();
      const auto& train = corpus.split.train;
      std::vector<std::size_t> half[2];
      for (std::size_t k = 0; k < train.size(); ++k) half[k % 2].push_back(train[k]);
      auto stegos = embed_images(stcl_run.model, corpus, half[0], cfg.payload_seed);
      auto more = embed_images(base.model, corpus, half[1], cfg.payload_seed);
      stegos.insert(stegos.end(), more.begin(), more.end());
      std::vector<std::vector<float>> covers;
      for (auto i : train) covers.push_back(corpus.samples[i].pixels);
      DetectorConfig dc = cfg.detector;
      dc.seed = seed;
      auto det = train_detector(covers, stegos, corpus.height, corpus.width, dc);
      const auto stcl_scores =
          score_corpus(det.detector, embed_images(stcl_run.model, corpus, test, cfg.payload_seed), corpus.height,
                       corpus.width);
      const auto base_scores = score_corpus(det.detector, embed_images(base.model, corpus, test, cfg.payload_seed),
                                            corpus.height, corpus.width);
      c7.votes.push_back(stcl_scores.mean <= base_scores.mean);
      d7.push_back(format("seed %llu: detector holdout acc %.3f, mean score stcl %.4f vs baseline %.4f",
                          static_cast<unsigned long long>(seed), det.holdout_accuracy, stcl_scores.mean,
                          base_scores.mean));
      progress("criterion 7 %s", d7.back().c_str());
    }
  }

  auto join = [](const std::vector<std::string>& parts) {
    std::string s;
    for (const auto& p : parts) s += (s.empty() ? "" : "; ") + p;
    return s;
  };
  auto verdict = [&](const Tally& t, const std::vector<std::string>& details) {
    const bool ok = t.settled() && t.pass();
    return Verdict{ok, "seeds " + t.summary() + (t.settled() ? "" : " (unsettled)") + " | " + join(details)};
  };
  return {verdict(c4, d4), verdict(c6, d6), verdict(c7, d7)};
}

}  // namespace acceptance
