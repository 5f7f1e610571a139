// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nptot/synthetic.hpp"

using namespace nptot;

namespace {

std::vector<std::pair<int, std::vector<double>>> uniform_rows(std::size_t width, int n) {
  std::vector<std::pair<int, std::vector<double>>> out;
  for (int i = 0; i < n; ++i) {
    out.emplace_back(i, std::vector<double>(width, 1.0 / static_cast<double>(width)));
  }
  return out;
}

}  // namespace

TEST_CASE("component variance follows 3*C*sqrt(var) = 1") {
  SyntheticConfig cfg;
  cfg.d = 5;
  cfg.k = 3;
  cfg.v = 20;
  cfg.c = 10;
  cfg.tokens_per_doc = 4;
  auto [corpus, truth] = generate_synthetic(cfg);
  for (const auto& topic : truth.topic_time) {
    REQUIRE(topic.size() == 10);
    for (const auto& comp : topic) {
      CHECK(comp[1] == doctest::Approx(1.0 / 900.0).epsilon(1e-12));
      CHECK(comp[2] == doctest::Approx(0.1).epsilon(1e-12));
      CHECK(comp[0] > 0.0);
      CHECK(comp[0] < 1.0);
    }
  }
}

TEST_CASE("simplex rows are normalized") {
  SyntheticConfig cfg;
  cfg.d = 20;
  cfg.k = 6;
  cfg.v = 50;
  cfg.c = 4;
  cfg.tokens_per_doc = 10;
  cfg.seed = 5;
  auto [corpus, truth] = generate_synthetic(cfg);
  for (const auto& row : truth.topic_word) {
    double s = 0.0;
    for (double p : row) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (const auto& row : truth.doc_topic) {
    double s = 0.0;
    for (double p : row) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("generation is deterministic per seed with exact token counts") {
  SyntheticConfig cfg;
  cfg.seed = 11;
  auto [c1, t1] = generate_synthetic(cfg);
  auto [c2, t2] = generate_synthetic(cfg);
  CHECK(c1.total_tokens() == static_cast<std::size_t>(cfg.d) * cfg.tokens_per_doc);
  REQUIRE(c1.documents.size() == c2.documents.size());
  for (std::size_t j = 0; j < c1.documents.size(); ++j) {
    CHECK(c1.documents[j].tokens == c2.documents[j].tokens);
    CHECK(c1.documents[j].timestamp == c2.documents[j].timestamp);
  }
  cfg.seed = 12;
  auto [c3, t3] = generate_synthetic(cfg);
  bool any_diff = false;
  for (std::size_t j = 0; j < c1.documents.size() && !any_diff; ++j) {
    any_diff = c1.documents[j].tokens != c3.documents[j].tokens;
  }
  CHECK(any_diff);
  // timestamps strictly inside (0,1), one document per timestamp
  for (const auto& d : c1.documents) {
    CHECK(d.timestamp > 0.0);
    CHECK(d.timestamp < 1.0);
  }
}

TEST_CASE("per-topic time structure exposes the planted modes") {
  SyntheticConfig cfg;
  cfg.d = 2000;
  cfg.k = 30;
  cfg.v = 40;
  cfg.c = 3;
  cfg.tokens_per_doc = 10;
  cfg.seed = 21;
  auto [corpus, truth] = generate_synthetic(cfg);

  // every planted time density has exactly C well-separated modes
  for (int k = 0; k < cfg.k; ++k) {
    std::vector<double> density(200);
    for (int i = 0; i < 200; ++i) density[i] = truth.time_density(k, (i + 0.5) / 200.0);
    CHECK(count_modes(density, 0.2) == cfg.c);
  }

  // the expected token histogram is the topic's share of the pooled density,
  // so it recovers those modes for the large majority of topics
  const int bins = 60;
  int exact = 0;
  for (int k = 0; k < cfg.k; ++k) {
    std::vector<double> hist(bins, 0.0);
    for (int j = 0; j < cfg.d; ++j) {
      const int b = std::min(bins - 1, static_cast<int>(truth.timestamps[j] * bins));
      hist[b] += truth.doc_topic[j][k] * cfg.tokens_per_doc;
    }
    if (count_modes(hist, 0.2) == cfg.c) ++exact;
  }
  CHECK(exact >= 24);  // 25/30 at this seed
}

TEST_CASE("truth files round-trip") {
  SyntheticConfig cfg;
  cfg.d = 10;
  cfg.k = 2;
  cfg.v = 10;
  cfg.c = 2;
  cfg.tokens_per_doc = 5;
  auto [corpus, truth] = generate_synthetic(cfg);
  const std::string path = "/tmp/nptot_truth_test.json";
  save_truth(truth, path);
  SyntheticTruth loaded = load_truth(path);
  CHECK(loaded.topic_word == truth.topic_word);
  CHECK(loaded.doc_topic == truth.doc_topic);
  CHECK(loaded.timestamps == truth.timestamps);
  REQUIRE(loaded.topic_time.size() == truth.topic_time.size());
  std::remove(path.c_str());
}

TEST_CASE("topic matching: identity, permutation invariance, and mismatch") {
  SyntheticConfig cfg;
  cfg.d = 10;
  cfg.k = 4;
  cfg.v = 30;
  cfg.c = 2;
  cfg.tokens_per_doc = 5;
  cfg.seed = 3;
  auto [corpus, truth] = generate_synthetic(cfg);

  // identity
  std::vector<std::pair<int, std::vector<double>>> inferred;
  for (int k = 0; k < cfg.k; ++k) inferred.emplace_back(100 + k, truth.topic_word[k]);
  TopicMatch identity = match_topics(truth.topic_word, inferred);
  for (double tv : identity.tv) CHECK(tv == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(identity.unmatched_true == 0);
  CHECK(identity.unmatched_inferred == 0);

  // permuted truth still matches perfectly
  std::vector<std::pair<int, std::vector<double>>> permuted;
  for (int k = cfg.k - 1; k >= 0; --k) permuted.emplace_back(k, truth.topic_word[k]);
  TopicMatch perm = match_topics(truth.topic_word, permuted);
  for (double tv : perm.tv) CHECK(tv == doctest::Approx(0.0).epsilon(1e-12));

  // a uniform inferred topic against a peaked truth is far away
  std::vector<std::vector<double>> peaked{std::vector<double>(100, 0.0)};
  peaked[0][3] = 0.9;
  peaked[0][4] = 0.1;
  std::vector<std::pair<int, std::vector<double>>> uniform{
      {0, std::vector<double>(100, 0.01)}};
  TopicMatch far = match_topics(peaked, uniform);
  REQUIRE(far.tv.size() == 1);
  CHECK(far.tv[0] > 0.8);

  // unmatched counts
  TopicMatch extra = match_topics(truth.topic_word, uniform_rows(truth.topic_word[0].size(), 6));
  CHECK(extra.unmatched_inferred == 2);
}

TEST_CASE("mode counting respects prominence") {
  // one clean bump
  std::vector<double> single(100);
  for (int i = 0; i < 100; ++i) {
    const double t = (i + 0.5) / 100.0;
    single[i] = std::exp(-(t - 0.5) * (t - 0.5) / 0.005);
  }
  CHECK(count_modes(single, 0.2) == 1);

  // two bumps separated by a deep valley
  std::vector<double> twin(100);
  for (int i = 0; i < 100; ++i) {
    const double t = (i + 0.5) / 100.0;
    twin[i] = std::exp(-(t - 0.25) * (t - 0.25) / 0.002) +
              0.8 * std::exp(-(t - 0.75) * (t - 0.75) / 0.002);
  }
  CHECK(count_modes(twin, 0.2) == 2);

  // a shallow ripple on a shoulder does not count
  std::vector<double> ripple = single;
  ripple[70] += 0.02;
  CHECK(count_modes(ripple, 0.2) == 1);
}
