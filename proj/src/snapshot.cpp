// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/snapshot.hpp"

#include <fstream>

#include "nptot/errors.hpp"

namespace nptot {

using nlohmann::json;

nlohmann::json franchise_to_json(const Franchise::State& s) {
  json tables = json::array();
  for (const auto& t : s.tables) {
    tables.push_back({{"id", t.id}, {"restaurant", t.restaurant}, {"dish", t.dish},
                      {"members", t.members}});
  }
  return json{{"alpha", s.alpha},
              {"top", s.top},
              {"next_table", s.next_table},
              {"next_dish", s.next_dish},
              {"tables", std::move(tables)}};
}

Franchise::State franchise_from_json(const json& j) {
  Franchise::State s;
  s.alpha = j.at("alpha").get<double>();
  s.top = j.at("top").get<double>();
  s.next_table = j.at("next_table").get<int>();
  s.next_dish = j.at("next_dish").get<int>();
  for (const auto& tj : j.at("tables")) {
    Franchise::TableState t;
    t.id = tj.at("id").get<int>();
    t.restaurant = tj.at("restaurant").get<int>();
    t.dish = tj.at("dish").get<int>();
    t.members = tj.at("members").get<std::vector<std::int64_t>>();
    s.tables.push_back(std::move(t));
  }
  return s;
}

namespace {

json nig_prior_to_json(const NigPrior& p) {
  return json{{"m0", p.m0}, {"kappa0", p.kappa0}, {"a0", p.a0}, {"b0", p.b0}};
}

NigPrior nig_prior_from_json(const json& j) {
  return NigPrior{j.at("m0").get<double>(), j.at("kappa0").get<double>(),
                  j.at("a0").get<double>(), j.at("b0").get<double>()};
}

json time_hdp_to_json(const TimeHdp::State& s) {
  return json{{"alpha1", s.alpha1},
              {"lambda", s.lambda},
              {"nig", nig_prior_to_json(s.prior)},
              {"franchise", franchise_to_json(s.franchise)}};
}

TimeHdp::State time_hdp_from_json(const json& j) {
  TimeHdp::State s;
  s.alpha1 = j.at("alpha1").get<double>();
  s.lambda = j.at("lambda").get<double>();
  s.prior = nig_prior_from_json(j.at("nig"));
  s.franchise = franchise_from_json(j.at("franchise"));
  return s;
}

json sparse_counts(const DirMultStats& stats) {
  json arr = json::array();
  for (int v = 0; v < stats.vocab_size(); ++v) {
    if (stats.count(v) > 0) arr.push_back({v, stats.count(v)});
  }
  return arr;
}

DirMultStats counts_from_sparse(const json& arr, int vocab_size, double beta) {
  DirMultStats stats(vocab_size, beta);
  for (const auto& pair : arr) {
    const int v = pair[0].get<int>();
    const int c = pair[1].get<int>();
    for (int i = 0; i < c; ++i) stats.add(v);
  }
  return stats;
}

std::map<std::int64_t, double> token_time_map(const std::vector<double>& doc_times,
                                              const std::vector<std::int64_t>& doc_sizes) {
  std::map<std::int64_t, double> out;
  std::int64_t next = 0;
  for (std::size_t j = 0; j < doc_sizes.size(); ++j) {
    for (std::int64_t i = 0; i < doc_sizes[j]; ++i) out[next++] = doc_times[j];
  }
  return out;
}

}  // namespace

void save_snapshot(const ModelSnapshot& snap, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << snapshot_bytes(snap);
}

std::string snapshot_bytes(const ModelSnapshot& snap) {
  json j{{"format", "nptot-snapshot"},
         {"version", snap.version},
         {"kind", snap.kind},
         {"vocab_hash", snap.vocab_hash},
         {"seed", snap.seed},
         {"config", snap.config},
         {"sweep_changed", snap.sweep_changed},
         {"converged", snap.converged},
         {"state", snap.state}};
  return j.dump(0) + "\n";
}

ModelSnapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "nptot-snapshot") {
    throw DataError(path + ": not a snapshot file");
  }
  if (j.value("version", 0) != 1) throw DataError(path + ": unsupported snapshot version");
  ModelSnapshot snap;
  snap.version = j.at("version").get<int>();
  snap.kind = j.at("kind").get<std::string>();
  snap.vocab_hash = j.at("vocab_hash").get<std::string>();
  snap.seed = j.at("seed").get<std::uint64_t>();
  snap.config = j.at("config");
  snap.sweep_changed = j.at("sweep_changed").get<std::vector<double>>();
  snap.converged = j.at("converged").get<bool>();
  snap.state = j.at("state");
  return snap;
}

ModelSnapshot train_nptot(const Corpus& corpus, const NptotConfig& config) {
  NptotSampler sampler(corpus, config);
  sampler.init_from_prior();
  TrainDiagnostics diag = sampler.run(config.max_sweeps, config.converge);

  ModelSnapshot snap;
  snap.kind = "nptot";
  snap.vocab_hash = corpus.vocab_hash();
  snap.seed = config.seed;
  snap.config = json{{"gamma", config.gamma},
                     {"alpha0", config.alpha0},
                     {"alpha1", config.alpha1},
                     {"lambda", config.lambda},
                     {"beta", config.beta},
                     {"nig", nig_prior_to_json(config.nig)},
                     {"s_passes", config.s_passes},
                     {"converge", config.converge},
                     {"max_sweeps", config.max_sweeps},
                     {"sequential_scan", config.sequential_scan}};
  snap.sweep_changed = diag.changed_fraction;
  snap.converged = diag.converged;

  NptotSampler::State st = sampler.state();
  json doc_times = json::array(), doc_sizes = json::array();
  for (int j = 0; j < sampler.doc_count(); ++j) {
    doc_times.push_back(corpus.documents[j].timestamp);
    doc_sizes.push_back(sampler.doc_size(j));
  }
  json topic_words = json::object();
  for (int k : sampler.topic_ids()) {
    topic_words[std::to_string(k)] = sparse_counts(sampler.topic_word_stats(k));
  }
  snap.state = json{{"vocab_size", corpus.vocab_size()},
                    {"word_franchise", franchise_to_json(st.word_franchise)},
                    {"time", time_hdp_to_json(st.time)},
                    {"word_table", st.word_table},
                    {"time_table", st.time_table},
                    {"doc_times", std::move(doc_times)},
                    {"doc_sizes", std::move(doc_sizes)},
                    {"topic_words", std::move(topic_words)}};
  return snap;
}

ModelSnapshot train_finite(const Corpus& corpus, const FiniteConfig& config) {
  FiniteSampler sampler(corpus, config);
  sampler.init_random();
  FiniteSampler::Diagnostics diag = sampler.run(config.max_sweeps, config.converge);

  ModelSnapshot snap;
  snap.kind = finite_kind_name(config.kind);
  snap.vocab_hash = corpus.vocab_hash();
  snap.seed = config.seed;
  snap.config = json{{"k", config.k},
                     {"alpha", config.effective_alpha()},
                     {"beta", config.beta},
                     {"max_sweeps", config.max_sweeps},
                     {"converge", config.converge}};
  if (config.kind == FiniteKind::tot_multimodal) {
    snap.config["alpha1"] = config.alpha1;
    snap.config["lambda"] = config.lambda;
    snap.config["nig"] = nig_prior_to_json(config.nig);
  }
  snap.sweep_changed = diag.changed_fraction;
  snap.converged = diag.converged;

  json z = json::array(), doc_times = json::array(), doc_sizes = json::array();
  for (int j = 0; j < sampler.doc_count(); ++j) {
    json zj = json::array();
    for (int i = 0; i < sampler.doc_size(j); ++i) zj.push_back(sampler.z(j, i));
    z.push_back(std::move(zj));
    doc_times.push_back(corpus.documents[j].timestamp);
    doc_sizes.push_back(sampler.doc_size(j));
  }
  json topic_words = json::array();
  for (int k = 0; k < config.k; ++k) topic_words.push_back(sparse_counts(sampler.topic_words()[k]));
  snap.state = json{{"vocab_size", corpus.vocab_size()},
                    {"z", std::move(z)},
                    {"doc_times", std::move(doc_times)},
                    {"doc_sizes", std::move(doc_sizes)},
                    {"topic_words", std::move(topic_words)}};
  if (config.kind == FiniteKind::tot) {
    json psi = json::array();
    for (const auto& p : sampler.psi()) psi.push_back({p.psi1, p.psi2});
    snap.state["psi"] = std::move(psi);
  }
  if (config.kind == FiniteKind::tot_multimodal) {
    snap.state["time"] = time_hdp_to_json(sampler.time_hdp().state());
    json tt = json::array();
    for (int j = 0; j < sampler.doc_count(); ++j) {
      json tj = json::array();
      for (int i = 0; i < sampler.doc_size(j); ++i) tj.push_back(sampler.time_table_of(j, i));
      tt.push_back(std::move(tj));
    }
    snap.state["time_table"] = std::move(tt);
  }
  return snap;
}

NptotView rebuild_nptot_view(const ModelSnapshot& snap) {
  if (snap.kind != "nptot") throw DataError("rebuild_nptot_view: wrong snapshot kind");
  NptotView view;
  const json& st = snap.state;
  view.vocab_size = st.at("vocab_size").get<int>();
  view.beta = snap.config.at("beta").get<double>();
  view.gamma = snap.config.at("gamma").get<double>();
  view.alpha0 = snap.config.at("alpha0").get<double>();
  view.doc_times = st.at("doc_times").get<std::vector<double>>();

  Franchise word_fr = Franchise::from_state(franchise_from_json(st.at("word_franchise")));
  view.dish_tables = word_fr.dish_table_counts();
  view.total_tables = word_fr.total_tables();
  view.topic_ids = word_fr.dish_ids();

  for (const auto& [key, counts] : st.at("topic_words").items()) {
    view.topic_words.emplace(std::stoi(key),
                             counts_from_sparse(counts, view.vocab_size, view.beta));
  }
  const auto doc_sizes = st.at("doc_sizes").get<std::vector<std::int64_t>>();
  view.time = TimeHdp::from_state(time_hdp_from_json(st.at("time")),
                                  token_time_map(view.doc_times, doc_sizes));
  return view;
}

FiniteView rebuild_finite_view(const ModelSnapshot& snap) {
  FiniteView view;
  view.kind = finite_kind_from_name(snap.kind);
  const json& st = snap.state;
  view.k = snap.config.at("k").get<int>();
  view.vocab_size = st.at("vocab_size").get<int>();
  view.alpha = snap.config.at("alpha").get<double>();
  view.beta = snap.config.at("beta").get<double>();
  view.z = st.at("z").get<std::vector<std::vector<int>>>();
  view.doc_times = st.at("doc_times").get<std::vector<double>>();
  for (const auto& counts : st.at("topic_words")) {
    view.topic_words.push_back(counts_from_sparse(counts, view.vocab_size, view.beta));
  }
  if (view.kind == FiniteKind::tot) {
    for (const auto& p : st.at("psi")) {
      view.psi.push_back(BetaParams{p[0].get<double>(), p[1].get<double>()});
    }
  }
  if (view.kind == FiniteKind::tot_multimodal) {
    const auto doc_sizes = st.at("doc_sizes").get<std::vector<std::int64_t>>();
    view.time = TimeHdp::from_state(time_hdp_from_json(st.at("time")),
                                    token_time_map(view.doc_times, doc_sizes));
  }
  return view;
}

}  // namespace nptot
