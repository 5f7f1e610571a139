// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nptot/errors.hpp"

namespace nptot {

using nlohmann::json;

namespace {

json top_words_json(const DirMultStats& stats, const std::vector<std::string>& vocab,
                    int top_words) {
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(stats.vocab_size());
  for (int v = 0; v < stats.vocab_size(); ++v) ranked.emplace_back(-stats.predictive(v), v);
  std::sort(ranked.begin(), ranked.end());
  json arr = json::array();
  for (int i = 0; i < top_words && i < static_cast<int>(ranked.size()); ++i) {
    const int v = ranked[i].second;
    arr.push_back({{"word", vocab.at(v)}, {"p", -ranked[i].first}});
  }
  return arr;
}

std::vector<double> grid_points(int n) {
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = (i + 0.5) / static_cast<double>(n);
  return grid;
}

}  // namespace

json topic_report(const ModelSnapshot& snap, const std::vector<std::string>& vocab, int top_words,
                  int grid_points_n, const PosthocTimeFit* fit) {
  json report;
  report["model"] = snap.kind;
  const std::vector<double> grid = grid_points(grid_points_n);
  report["grid"] = grid;
  json topics = json::array();

  if (snap.kind == "nptot") {
    NptotView view = rebuild_nptot_view(snap);
    if (static_cast<int>(vocab.size()) != view.vocab_size) {
      throw DataError("topic_report: vocabulary size does not match snapshot");
    }
    for (int k : view.topic_ids) {
      const DirMultStats& stats = view.topic_words.at(k);
      json t;
      t["topic"] = k;
      t["tokens"] = stats.total();
      t["top_words"] = top_words_json(stats, vocab, top_words);
      std::vector<double> density(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        density[i] = std::exp(view.time.log_marginal(k, grid[i]));
      }
      t["time_density"] = density;
      topics.push_back(std::move(t));
    }
  } else {
    FiniteView view = rebuild_finite_view(snap);
    if (static_cast<int>(vocab.size()) != view.vocab_size) {
      throw DataError("topic_report: vocabulary size does not match snapshot");
    }
    if (fit) report["model"] = fit->mode == PosthocMode::multimodal ? "lda_multimodal" : "lda_unimodal";
    for (int k = 0; k < view.k; ++k) {
      const DirMultStats& stats = view.topic_words[k];
      json t;
      t["topic"] = k;
      t["tokens"] = stats.total();
      t["top_words"] = top_words_json(stats, vocab, top_words);
      std::vector<double> density;
      if (view.kind == FiniteKind::tot) {
        density.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
          density[i] = std::exp(beta_log_pdf(grid[i], view.psi[k]));
        }
      } else if (view.kind == FiniteKind::tot_multimodal) {
        density.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
          density[i] = std::exp(view.time->log_marginal(k, grid[i]));
        }
      } else if (fit && fit->topics[k].fitted) {
        density.resize(grid.size());
        const PosthocTopicFit& tf = fit->topics[k];
        for (std::size_t i = 0; i < grid.size(); ++i) {
          density[i] = fit->mode == PosthocMode::multimodal
                           ? std::exp(tf.gmm.log_pdf(grid[i]))
                           : std::exp(gauss_log_pdf(grid[i], tf.mean, tf.var));
        }
      }
      if (!density.empty()) t["time_density"] = density;
      topics.push_back(std::move(t));
    }
  }
  report["topics"] = std::move(topics);
  return report;
}

std::string density_csv(const json& report) {
  std::string csv = "model,topic,t,density\n";
  const std::string model = report.at("model").get<std::string>();
  const auto grid = report.at("grid").get<std::vector<double>>();
  char buf[128];
  for (const auto& topic : report.at("topics")) {
    if (!topic.contains("time_density")) continue;
    const auto density = topic.at("time_density").get<std::vector<double>>();
    const int id = topic.at("topic").get<int>();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g\n", model.c_str(), id, grid[i],
                    density[i]);
      csv += buf;
    }
  }
  return csv;
}

}  // namespace nptot
