// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nptot/baselines.hpp"
#include "nptot/errors.hpp"
#include "nptot/snapshot.hpp"

using namespace nptot;

namespace {

Corpus make_corpus(const std::vector<std::vector<int>>& words, const std::vector<double>& times,
                   int vocab) {
  Corpus corpus;
  for (int v = 0; v < vocab; ++v) corpus.vocab.push_back("w" + std::to_string(v));
  for (std::size_t j = 0; j < words.size(); ++j) {
    corpus.documents.push_back(Document{words[j], times[j], "d" + std::to_string(j)});
  }
  corpus.time_range = {0.0, 1.0};
  return corpus;
}

Corpus random_corpus(int docs, int len, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> words;
  std::vector<double> times;
  for (int j = 0; j < docs; ++j) {
    std::vector<int> doc(len);
    for (int& w : doc) w = static_cast<int>(rng.below(vocab));
    words.push_back(doc);
    times.push_back(0.05 + 0.9 * rng.uniform());
  }
  return make_corpus(words, times, vocab);
}

}  // namespace

TEST_CASE("lda with a single topic never changes anything") {
  Corpus corpus = random_corpus(4, 10, 5, 3);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::lda;
  cfg.k = 1;
  cfg.seed = 1;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  for (int s = 0; s < 5; ++s) CHECK(sampler.sweep() == 0.0);
  sampler.audit();
}

TEST_CASE("huge alpha reduces the topic weights to the word predictives") {
  Corpus corpus = make_corpus({{0, 1, 2, 0, 1}, {2, 2, 1, 0, 0}}, {0.4, 0.6}, 3);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::lda;
  cfg.k = 2;
  cfg.alpha = 1e12;
  cfg.seed = 5;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  sampler.remove_token(0, 2);
  auto logw = sampler.token_log_weights(0, 2);
  const double ratio = logw[0] - logw[1];
  const double pred_ratio = sampler.topic_words()[0].log_predictive(2) -
                            sampler.topic_words()[1].log_predictive(2);
  CHECK(ratio == doctest::Approx(pred_ratio).epsilon(1e-6));
  sampler.add_token(0, 2, 0);
}

TEST_CASE("count audit passes after lda sweeps") {
  Corpus corpus = random_corpus(6, 25, 8, 11);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::lda;
  cfg.k = 3;
  cfg.seed = 2;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  for (int s = 0; s < 10; ++s) sampler.sweep();
  sampler.audit();
}

TEST_CASE("tot with flat psi replays lda token for token") {
  Corpus corpus = random_corpus(8, 30, 10, 21);
  const int docs = 8, len = 30;
  FiniteConfig lda_cfg;
  lda_cfg.kind = FiniteKind::lda;
  lda_cfg.k = 4;
  lda_cfg.seed = 77;
  FiniteSampler lda(corpus, lda_cfg);
  lda.init_random();

  FiniteConfig tot_cfg = lda_cfg;
  tot_cfg.kind = FiniteKind::tot;
  tot_cfg.refit_psi = false;  // hold psi at (1,1)
  FiniteSampler tot(corpus, tot_cfg);
  tot.init_random();

  for (int s = 0; s < 5; ++s) {
    const double lc = lda.sweep();
    const double tc = tot.sweep();
    CHECK(lc == tc);
    for (int j = 0; j < docs; ++j) {
      for (int i = 0; i < len; ++i) {
        REQUIRE(lda.z(j, i) == tot.z(j, i));
      }
    }
  }

  // with the refit enabled the first sweep is still identical, because the
  // refit lands at the sweep's end
  FiniteConfig tot2_cfg = lda_cfg;
  tot2_cfg.kind = FiniteKind::tot;
  FiniteSampler tot2(corpus, tot2_cfg);
  FiniteSampler lda2(corpus, lda_cfg);
  tot2.init_random();
  lda2.init_random();
  lda2.sweep();
  tot2.sweep();
  for (int j = 0; j < docs; ++j) {
    for (int i = 0; i < len; ++i) {
      REQUIRE(lda2.z(j, i) == tot2.z(j, i));
    }
  }
}

TEST_CASE("tot weights carry the beta density factor") {
  Corpus corpus = make_corpus({{0, 1, 0, 1, 2}}, {0.9}, 3);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::tot;
  cfg.k = 2;
  cfg.alpha = 1.0;
  cfg.seed = 9;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  sampler.set_psi(0, BetaParams{9.0, 1.0});  // mean 0.9
  sampler.set_psi(1, BetaParams{1.0, 9.0});  // mean 0.1
  sampler.remove_token(0, 4);

  auto logw = sampler.token_log_weights(0, 4);
  const double count_term = std::log(sampler.doc_topic_count(0, 0) + 1.0) -
                            std::log(sampler.doc_topic_count(0, 1) + 1.0);
  const double word_term = sampler.topic_words()[0].log_predictive(2) -
                           sampler.topic_words()[1].log_predictive(2);
  const double beta_term =
      beta_log_pdf(0.9, BetaParams{9.0, 1.0}) - beta_log_pdf(0.9, BetaParams{1.0, 9.0});
  CHECK(logw[0] - logw[1] == doctest::Approx(count_term + word_term + beta_term).epsilon(1e-10));
  CHECK(beta_term > 0.0);
  sampler.add_token(0, 4, 0);
}

TEST_CASE("moment refit recovers the beta mean of a unimodal topic") {
  Rng rng(31);
  std::vector<std::vector<int>> words;
  std::vector<double> times;
  for (int j = 0; j < 300; ++j) {
    std::vector<int> doc(5);
    for (int& w : doc) w = static_cast<int>(rng.below(4));
    words.push_back(doc);
    const double g1 = rng.gamma(5.0), g2 = rng.gamma(2.0);
    times.push_back(g1 / (g1 + g2));  // Beta(5,2), mean 5/7
  }
  Corpus corpus = make_corpus(words, times, 4);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::tot;
  cfg.k = 1;
  cfg.seed = 13;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  for (int s = 0; s < 3; ++s) sampler.sweep();
  const BetaParams psi = sampler.psi()[0];
  CHECK(std::abs(psi.psi1 / (psi.psi1 + psi.psi2) - 5.0 / 7.0) < 0.02);
}

TEST_CASE("psi refit is idempotent on a fixed assignment") {
  Corpus corpus = random_corpus(10, 8, 5, 41);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::tot;
  cfg.k = 3;
  cfg.seed = 15;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  sampler.refit_psi();
  std::vector<BetaParams> first = sampler.psi();
  sampler.refit_psi();
  for (int k = 0; k < 3; ++k) {
    CHECK(sampler.psi()[k].psi1 == first[k].psi1);
    CHECK(sampler.psi()[k].psi2 == first[k].psi2);
  }
}

TEST_CASE("tot-multimodal with one topic still fits a bimodal time profile") {
  Rng rng(51);
  std::vector<std::vector<int>> words;
  std::vector<double> times;
  for (int j = 0; j < 40; ++j) {
    std::vector<int> doc(10);
    for (int& w : doc) w = static_cast<int>(rng.below(3));
    words.push_back(doc);
    times.push_back((j % 2 == 0 ? 0.2 : 0.8) + 0.01 * rng.normal());
  }
  Corpus corpus = make_corpus(words, times, 3);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::tot_multimodal;
  cfg.k = 1;
  cfg.seed = 8;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  for (int s = 0; s < 30; ++s) sampler.sweep();
  sampler.audit();
  CHECK(sampler.active_topics() == 1);
  CHECK(sampler.time_hdp().component_count() >= 2);
}

TEST_CASE("vanishing alpha on a single document collapses to one topic") {
  std::vector<std::vector<int>> words{std::vector<int>(30, 1)};
  Corpus corpus = make_corpus(words, {0.5}, 3);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::tot_multimodal;
  cfg.k = 5;
  cfg.alpha = 1e-12;
  cfg.seed = 4;
  FiniteSampler sampler(corpus, cfg);
  sampler.init_random();
  for (int s = 0; s < 500 && sampler.active_topics() > 1; ++s) sampler.sweep();
  CHECK(sampler.active_topics() == 1);
  sampler.audit();
}

TEST_CASE("posthoc fits: degenerate times, c_max=1 equivalence, bimodal gain") {
  // all timestamps equal: unimodal fit hits the variance floor
  std::vector<std::vector<int>> z{{0, 0}, {0, 0}};
  std::vector<double> flat_times{0.4, 0.4};
  Rng rng(61);
  PosthocTimeFit uni = posthoc_time_fit(z, flat_times, 1, PosthocMode::unimodal, 10, rng);
  REQUIRE(uni.topics[0].fitted);
  CHECK(uni.topics[0].var == 1e-6);
  CHECK(uni.topics[0].mean == doctest::Approx(0.4));

  // c_max 1 multimodal equals the unimodal moments
  std::vector<double> spread{0.2, 0.5, 0.8};
  std::vector<std::vector<int>> z3{{0}, {0}, {0}};
  PosthocTimeFit u = posthoc_time_fit(z3, spread, 1, PosthocMode::unimodal, 1, rng);
  PosthocTimeFit m = posthoc_time_fit(z3, spread, 1, PosthocMode::multimodal, 1, rng);
  REQUIRE(m.topics[0].gmm.components() == 1);
  CHECK(m.topics[0].gmm.means[0] == doctest::Approx(u.topics[0].mean).epsilon(1e-9));
  CHECK(m.topics[0].gmm.vars[0] == doctest::Approx(u.topics[0].var).epsilon(1e-9));

  // bimodal times: the mixture log likelihood beats the single Gaussian
  std::vector<double> bimodal;
  std::vector<std::vector<int>> zb;
  Rng gen(71);
  for (int i = 0; i < 200; ++i) {
    bimodal.push_back((i % 2 == 0 ? 0.2 : 0.8) + 0.01 * gen.normal());
    zb.push_back({0});
  }
  PosthocTimeFit ub = posthoc_time_fit(zb, bimodal, 1, PosthocMode::unimodal, 10, rng);
  PosthocTimeFit mb = posthoc_time_fit(zb, bimodal, 1, PosthocMode::multimodal, 10, rng);
  double uni_ll = 0.0, multi_ll = 0.0;
  for (double t : bimodal) {
    uni_ll += gauss_log_pdf(t, ub.topics[0].mean, ub.topics[0].var);
    multi_ll += mb.topics[0].gmm.log_pdf(t);
  }
  CHECK(multi_ll > uni_ll);
  CHECK(mb.topics[0].gmm.components() >= 2);

  // a topic with no tokens is skipped and flagged
  PosthocTimeFit skip = posthoc_time_fit(z3, spread, 2, PosthocMode::unimodal, 10, rng);
  CHECK(skip.skipped == 1);
  CHECK_FALSE(skip.topics[1].fitted);
}

TEST_CASE("finite training snapshots are deterministic and self-describing") {
  Corpus corpus = random_corpus(6, 12, 6, 81);
  FiniteConfig cfg;
  cfg.kind = FiniteKind::tot;
  cfg.k = 3;
  cfg.seed = 10;
  cfg.max_sweeps = 5;
  ModelSnapshot a = train_finite(corpus, cfg);
  ModelSnapshot b = train_finite(corpus, cfg);
  CHECK(snapshot_bytes(a) == snapshot_bytes(b));
  CHECK(a.kind == "tot");
  FiniteView view = rebuild_finite_view(a);
  CHECK(view.k == 3);
  CHECK(view.psi.size() == 3);
  long long total = 0;
  for (const auto& stats : view.topic_words) total += stats.total();
  CHECK(total == 72);
}
