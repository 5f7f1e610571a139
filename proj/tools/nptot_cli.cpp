// Apache License, Version 2.0, refer to LICENSE.txt

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nptot/corpus.hpp"
#include "nptot/errors.hpp"
#include "nptot/eval.hpp"
#include "nptot/report.hpp"
#include "nptot/snapshot.hpp"
#include "nptot/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Outputs are staged and only kept on success, so failures leave nothing
// half-written behind.
class OutputStage {
 public:
  ~OutputStage() {
    for (const auto& path : staged_) {
      std::error_code ec;
      fs::remove(tmp_name(path), ec);
      if (!committed_) fs::remove(path, ec);
    }
  }
  void write(const std::string& path, const std::string& bytes) {
    std::ofstream out(tmp_name(path), std::ios::binary);
    if (!out) throw nptot::DataError("cannot write " + path);
    out << bytes;
    out.close();
    if (!out) throw nptot::DataError("write failed: " + path);
    staged_.push_back(path);
  }
  void commit() {
    for (const auto& path : staged_) fs::rename(tmp_name(path), path);
    committed_ = true;
  }

 private:
  static std::string tmp_name(const std::string& path) { return path + ".tmp"; }
  std::vector<std::string> staged_;
  bool committed_ = false;
};

std::string slurp_corpus(const nptot::Corpus& corpus) {
  json j;
  j["format"] = "nptot-corpus";
  j["version"] = 1;
  j["vocab"] = corpus.vocab;
  j["time_range"] = {corpus.time_range.first, corpus.time_range.second};
  json docs = json::array();
  for (const auto& d : corpus.documents) {
    docs.push_back({{"source_id", d.source_id}, {"timestamp", d.timestamp}, {"token_ids", d.tokens}});
  }
  j["documents"] = std::move(docs);
  return j.dump(0) + "\n";
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw nptot::DataError("cannot open config " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw nptot::DataError(path + ": not a JSON object");
  return j;
}

// Config file fills in anything the command line left at its default.
template <typename T>
void apply_config(const json& cfg, CLI::App* sub, const std::string& flag, const std::string& key,
                  T& value) {
  if (cfg.contains(key) && sub->count(flag) == 0) value = cfg.at(key).get<T>();
}

struct TruthJson {
  static std::string bytes(const nptot::SyntheticTruth& truth) {
    json j{{"format", "nptot-truth"},
           {"version", 1},
           {"topic_word", truth.topic_word},
           {"doc_topic", truth.doc_topic},
           {"timestamps", truth.timestamps}};
    json tt = json::array();
    for (const auto& topic : truth.topic_time) {
      json row = json::array();
      for (const auto& comp : topic) row.push_back({comp[0], comp[1], comp[2]});
      tt.push_back(std::move(row));
    }
    j["topic_time"] = std::move(tt);
    return j.dump(0) + "\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonparametric topics-over-time toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with flat keys (flags override)");

  // ---------------------------------------------------------------- ingest
  auto* ingest = app.add_subcommand("ingest", "preprocess raw JSONL into a corpus file");
  std::string ingest_input, ingest_output, stopwords_path;
  nptot::PreprocessConfig pre;
  int split_paragraphs = 0;
  ingest->add_option("--input", ingest_input, "raw JSONL: {id, timestamp, text} per line")
      ->required();
  ingest->add_option("--output", ingest_output, "processed corpus file")->required();
  ingest->add_option("--min-word-len", pre.min_word_len, "drop words shorter than this")
      ->capture_default_str();
  ingest->add_option("--drop-top-k", pre.drop_top_k, "drop the k most frequent words")
      ->capture_default_str();
  ingest->add_option("--min-count", pre.min_count, "drop words rarer than this")
      ->capture_default_str();
  ingest->add_option("--min-doc-len", pre.min_doc_len, "drop documents shorter than this")
      ->capture_default_str();
  ingest->add_option("--stopwords", stopwords_path, "stopword list, one word per line");
  ingest->add_option("--split-paragraphs", split_paragraphs,
                     "split each document into chunks of this many paragraphs");

  // ----------------------------------------------------------------- synth
  auto* synth = app.add_subcommand("synth", "generate a ground-truth synthetic corpus");
  nptot::SyntheticConfig syn;
  std::string synth_output, synth_truth;
  synth->add_option("--output", synth_output, "corpus file")->required();
  synth->add_option("--truth", synth_truth, "truth file (topic-word rows, time mixtures)");
  synth->add_option("--docs", syn.d, "documents")->capture_default_str();
  synth->add_option("--topics", syn.k, "topics")->capture_default_str();
  synth->add_option("--vocab", syn.v, "vocabulary size")->capture_default_str();
  synth->add_option("--components", syn.c, "time components per topic")->capture_default_str();
  synth->add_option("--tokens-per-doc", syn.tokens_per_doc, "tokens per document")
      ->capture_default_str();
  synth->add_option("--seed", syn.seed, "generator seed")->capture_default_str();

  // ----------------------------------------------------------------- train
  auto* train = app.add_subcommand("train", "train a model and write a snapshot");
  std::string train_corpus, train_output, train_model = "nptot";
  nptot::NptotConfig ncfg;
  nptot::FiniteConfig fcfg;
  int train_k = 10;
  int chains = 1;
  double converge = -1.0;
  int max_sweeps = -1;
  std::uint64_t train_seed = 0;
  train->add_option("--corpus", train_corpus, "processed corpus file")->required();
  train->add_option("--output", train_output, "snapshot file")->required();
  train->add_option("--model", train_model, "nptot | tot | tot-multimodal | lda")
      ->capture_default_str();
  train->add_option("--k", train_k, "topic count for the parametric models")
      ->capture_default_str();
  train->add_option("--seed", train_seed, "sampler seed")->capture_default_str();
  train->add_option("--chains", chains, "independent seeded chains run concurrently")
      ->capture_default_str();
  train->add_option("--converge", converge, "stop when changed-token fraction falls below this");
  train->add_option("--max-sweeps", max_sweeps, "sweep budget");
  train->add_option("--gamma", ncfg.gamma, "top-level word DP concentration")
      ->capture_default_str();
  train->add_option("--alpha0", ncfg.alpha0, "document-level word DP concentration")
      ->capture_default_str();
  train->add_option("--alpha1", ncfg.alpha1, "topic-level time DP concentration")
      ->capture_default_str();
  train->add_option("--lambda", ncfg.lambda, "top-level time DP concentration")
      ->capture_default_str();
  train->add_option("--beta", ncfg.beta, "word Dirichlet concentration")->capture_default_str();
  train->add_option("--alpha", fcfg.alpha, "document Dirichlet concentration (0 = 50/K)")
      ->capture_default_str();
  train->add_option("--s-passes", ncfg.s_passes, "imputation passes for table dish moves")
      ->capture_default_str();
  train->add_option("--nig-m0", ncfg.nig.m0, "time prior location")->capture_default_str();
  train->add_option("--nig-kappa0", ncfg.nig.kappa0, "time prior pseudo-count")
      ->capture_default_str();
  train->add_option("--nig-a0", ncfg.nig.a0, "time prior shape")->capture_default_str();
  train->add_option("--nig-b0", ncfg.nig.b0, "time prior rate")->capture_default_str();
  bool sequential_scan = false;
  bool audit_sweeps = false;
  train->add_flag("--sequential-scan", sequential_scan,
                  "visit tokens document by document instead of one global shuffle");
  train->add_flag("--audit", audit_sweeps, "run the full state audit after every sweep");

  // ------------------------------------------------------------------ eval
  auto* eval = app.add_subcommand("eval", "split, train the requested models, report metrics");
  std::string eval_corpus, eval_csv, eval_topics;
  std::vector<std::string> eval_models;
  double split_ratio = 0.7;
  std::uint64_t eval_seed = 0;
  int eval_k = 0;
  int burn_in = 50, samples = 200;
  bool timings = false;
  eval->add_option("--corpus", eval_corpus, "processed corpus file")->required();
  eval->add_option("--models", eval_models,
                   "nptot | tot | tot-multimodal | lda-unimodal | lda-multimodal")
      ->required()
      ->delimiter(',');
  eval->add_option("--output", eval_csv, "results CSV")->required();
  eval->add_option("--topics-json", eval_topics, "per-model topic report JSON");
  eval->add_option("--split-ratio", split_ratio, "train fraction")->capture_default_str();
  eval->add_option("--seed", eval_seed, "split/train/eval seed")->capture_default_str();
  eval->add_option("--k", eval_k, "topic count for parametric models (0 = nptot's)")
      ->capture_default_str();
  eval->add_option("--burn-in", burn_in, "per-document burn-in sweeps")->capture_default_str();
  eval->add_option("--samples", samples, "per-document samples")->capture_default_str();
  eval->add_flag("--timings", timings, "include wall-clock runtimes in the CSV");
  eval->add_option("--max-sweeps", max_sweeps, "sweep budget");
  eval->add_option("--converge", converge, "stop when changed-token fraction falls below this");

  // ---------------------------------------------------------------- report
  auto* report = app.add_subcommand("report", "top words and time-density curves");
  std::string report_snapshot, report_corpus, report_json, report_csv, time_fit = "none";
  int top_words = 10, grid = 200;
  report->add_option("--snapshot", report_snapshot, "trained snapshot")->required();
  report->add_option("--corpus", report_corpus, "corpus file (for the vocabulary)")->required();
  report->add_option("--topics-json", report_json, "topic report JSON")->required();
  report->add_option("--density-csv", report_csv, "long-format density CSV");
  report->add_option("--top-words", top_words, "words per topic")->capture_default_str();
  report->add_option("--grid", grid, "time grid points")->capture_default_str();
  report->add_option("--time-fit", time_fit,
                     "post-hoc fit for plain LDA snapshots: none | unimodal | multimodal")
      ->capture_default_str();
  std::uint64_t report_seed = 0;
  report->add_option("--seed", report_seed, "seed for the post-hoc mixture fit")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the usage diagnostic
    return rc == 0 ? 0 : 1;
  }

  try {
    const json cfg = load_config_file(config_path);

    if (*ingest) {
      apply_config(cfg, ingest, "--min-word-len", "min_word_len", pre.min_word_len);
      apply_config(cfg, ingest, "--drop-top-k", "drop_top_k", pre.drop_top_k);
      apply_config(cfg, ingest, "--min-count", "min_count", pre.min_count);
      apply_config(cfg, ingest, "--min-doc-len", "min_doc_len", pre.min_doc_len);
      apply_config(cfg, ingest, "--stopwords", "stopwords", stopwords_path);
      apply_config(cfg, ingest, "--split-paragraphs", "split_paragraphs", split_paragraphs);
      if (!stopwords_path.empty()) pre.stopwords = nptot::load_stopwords(stopwords_path);
      if (split_paragraphs > 0) pre.split_paragraphs = split_paragraphs;
      auto raw = nptot::load_raw_jsonl(ingest_input);
      nptot::Corpus corpus = nptot::preprocess(raw, pre);
      OutputStage stage;
      stage.write(ingest_output, slurp_corpus(corpus));
      stage.commit();
      std::fprintf(stderr, "ingest: %zu documents, V=%d, %zu tokens\n",
                   corpus.documents.size(), corpus.vocab_size(), corpus.total_tokens());
      return 0;
    }

    if (*synth) {
      auto [corpus, truth] = nptot::generate_synthetic(syn);
      OutputStage stage;
      stage.write(synth_output, slurp_corpus(corpus));
      if (!synth_truth.empty()) stage.write(synth_truth, TruthJson::bytes(truth));
      stage.commit();
      std::fprintf(stderr, "synth: D=%d K=%d V=%d C=%d seed=%llu\n", syn.d, syn.k, syn.v, syn.c,
                   static_cast<unsigned long long>(syn.seed));
      return 0;
    }

    if (*synth) {
      apply_config(cfg, synth, "--docs", "docs", syn.d);
      apply_config(cfg, synth, "--topics", "topics", syn.k);
      apply_config(cfg, synth, "--vocab", "vocab", syn.v);
      apply_config(cfg, synth, "--components", "components", syn.c);
      apply_config(cfg, synth, "--tokens-per-doc", "tokens_per_doc", syn.tokens_per_doc);
      apply_config(cfg, synth, "--seed", "seed", syn.seed);
    }

    if (*train || *eval) {
      CLI::App* sub = *train ? train : eval;
      apply_config(cfg, sub, "--gamma", "gamma", ncfg.gamma);
      apply_config(cfg, sub, "--alpha0", "alpha0", ncfg.alpha0);
      apply_config(cfg, sub, "--alpha1", "alpha1", ncfg.alpha1);
      apply_config(cfg, sub, "--lambda", "lambda", ncfg.lambda);
      apply_config(cfg, sub, "--beta", "beta", ncfg.beta);
      apply_config(cfg, sub, "--s-passes", "s_passes", ncfg.s_passes);
      apply_config(cfg, sub, "--nig-m0", "nig_m0", ncfg.nig.m0);
      apply_config(cfg, sub, "--nig-kappa0", "nig_kappa0", ncfg.nig.kappa0);
      apply_config(cfg, sub, "--nig-a0", "nig_a0", ncfg.nig.a0);
      apply_config(cfg, sub, "--nig-b0", "nig_b0", ncfg.nig.b0);
      apply_config(cfg, sub, "--converge", "converge", converge);
      apply_config(cfg, sub, "--max-sweeps", "max_sweeps", max_sweeps);
    }

    if (*train) {
      apply_config(cfg, train, "--model", "model", train_model);
      apply_config(cfg, train, "--k", "k", train_k);
      apply_config(cfg, train, "--seed", "seed", train_seed);
      apply_config(cfg, train, "--alpha", "alpha", fcfg.alpha);
      apply_config(cfg, train, "--chains", "chains", chains);
      nptot::Corpus corpus = nptot::load_corpus(train_corpus);
      auto train_one = [&](std::uint64_t seed, const std::string& path) {
        nptot::ModelSnapshot snap;
        if (train_model == "nptot") {
          nptot::NptotConfig c = ncfg;
          c.seed = seed;
          c.sequential_scan = sequential_scan;
          c.audit_every_sweep = audit_sweeps;
          if (converge >= 0.0) c.converge = converge;
          if (max_sweeps > 0) c.max_sweeps = max_sweeps;
          snap = nptot::train_nptot(corpus, c);
        } else {
          nptot::FiniteConfig c = fcfg;
          c.kind = nptot::finite_kind_from_name(
              train_model == "tot-multimodal" ? "tot_multimodal" : train_model);
          c.k = train_k;
          c.seed = seed;
          c.beta = ncfg.beta;
          c.alpha1 = ncfg.alpha1;
          c.lambda = ncfg.lambda;
          c.nig = ncfg.nig;
          if (c.kind != nptot::FiniteKind::lda) c.converge = converge >= 0.0 ? converge : 0.05;
          else if (converge >= 0.0) c.converge = converge;
          if (max_sweeps > 0) c.max_sweeps = max_sweeps;
          snap = nptot::train_finite(corpus, c);
        }
        OutputStage stage;
        stage.write(path, nptot::snapshot_bytes(snap));
        stage.commit();
        std::fprintf(stderr, "train: %s -> %s (%zu sweeps%s)\n", train_model.c_str(),
                     path.c_str(), snap.sweep_changed.size(),
                     snap.converged ? ", converged" : "");
      };
      if (chains <= 1) {
        train_one(train_seed, train_output);
      } else {
        std::vector<std::thread> workers;
        std::vector<std::string> errors(chains);
        for (int c = 0; c < chains; ++c) {
          workers.emplace_back([&, c]() {
            try {
              train_one(train_seed + static_cast<std::uint64_t>(c),
                        train_output + ".chain" + std::to_string(c));
            } catch (const std::exception& e) {
              errors[c] = e.what();
            }
          });
        }
        for (auto& w : workers) w.join();
        for (const auto& e : errors) {
          if (!e.empty()) throw nptot::NumericError("chain failed: " + e);
        }
      }
      return 0;
    }

    if (*eval) {
      apply_config(cfg, eval, "--split-ratio", "split_ratio", split_ratio);
      apply_config(cfg, eval, "--seed", "seed", eval_seed);
      apply_config(cfg, eval, "--k", "k", eval_k);
      apply_config(cfg, eval, "--burn-in", "burn_in", burn_in);
      apply_config(cfg, eval, "--samples", "samples", samples);
      nptot::Corpus corpus = nptot::load_corpus(eval_corpus);
      nptot::ExperimentConfig ecfg;
      ecfg.split_ratio = split_ratio;
      ecfg.seed = eval_seed;
      ecfg.protocol.burn_in = burn_in;
      ecfg.protocol.samples = samples;
      ecfg.nptot = ncfg;
      ecfg.finite.alpha = fcfg.alpha;
      ecfg.finite.beta = ncfg.beta;
      ecfg.finite.alpha1 = ncfg.alpha1;
      ecfg.finite.lambda = ncfg.lambda;
      ecfg.finite.nig = ncfg.nig;
      if (converge >= 0.0) ecfg.nptot.converge = converge;
      if (max_sweeps > 0) {
        ecfg.nptot.max_sweeps = max_sweeps;
        ecfg.finite.max_sweeps = max_sweeps;
      }
      ecfg.timings = timings;
      std::vector<nptot::ExperimentModel> specs;
      for (const auto& name : eval_models) specs.push_back({name, eval_k});
      nptot::ExperimentResult result = nptot::run_experiment(corpus, specs, ecfg);
      OutputStage stage;
      stage.write(eval_csv, result.csv);
      if (!eval_topics.empty()) stage.write(eval_topics, result.topics.dump(0) + "\n");
      stage.commit();
      for (const auto& r : result.reports) {
        if (r.error.empty()) {
          std::fprintf(stderr, "eval: %s k=%d nll=%.4f ppl=%.2f\n", r.model.c_str(), r.k,
                       r.nll_per_token, r.perplexity);
        } else {
          std::fprintf(stderr, "eval: %s FAILED: %s\n", r.model.c_str(), r.error.c_str());
        }
      }
      for (const auto& r : result.reports) {
        if (!r.error.empty()) return 3;
      }
      return 0;
    }

    if (*report) {
      nptot::ModelSnapshot snap = nptot::load_snapshot(report_snapshot);
      nptot::Corpus corpus = nptot::load_corpus(report_corpus);
      if (corpus.vocab_hash() != snap.vocab_hash) {
        throw nptot::DataError("report: corpus vocabulary does not match the snapshot");
      }
      std::optional<nptot::PosthocTimeFit> fit;
      if (snap.kind == "lda" && time_fit != "none") {
        nptot::FiniteView view = nptot::rebuild_finite_view(snap);
        nptot::Rng rng(report_seed);
        fit = nptot::posthoc_time_fit(
            view.z, view.doc_times, view.k,
            time_fit == "multimodal" ? nptot::PosthocMode::multimodal
                                     : nptot::PosthocMode::unimodal,
            10, rng);
      }
      json rep = nptot::topic_report(snap, corpus.vocab, top_words, grid,
                                     fit ? &*fit : nullptr);
      OutputStage stage;
      stage.write(report_json, rep.dump(0) + "\n");
      if (!report_csv.empty()) stage.write(report_csv, nptot::density_csv(rep));
      stage.commit();
      return 0;
    }
  } catch (const nptot::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nptot::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
