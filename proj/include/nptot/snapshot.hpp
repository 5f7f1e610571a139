// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nptot/baselines.hpp"
#include "nptot/corpus.hpp"
#include "nptot/nptot.hpp"

namespace nptot {

// Trained-model container shared by every model kind. The state payload is
// kind-specific and self-sufficient for evaluation and reporting.
struct ModelSnapshot {
  int version = 1;
  std::string kind;  // "nptot" | "tot" | "tot_multimodal" | "lda"
  std::string vocab_hash;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<double> sweep_changed;
  bool converged = false;
  nlohmann::json state;
};

void save_snapshot(const ModelSnapshot& snap, const std::string& path);
ModelSnapshot load_snapshot(const std::string& path);
std::string snapshot_bytes(const ModelSnapshot& snap);

ModelSnapshot train_nptot(const Corpus& corpus, const NptotConfig& config);
ModelSnapshot train_finite(const Corpus& corpus, const FiniteConfig& config);

// Rebuilt model content for evaluation and reporting.
struct NptotView {
  int vocab_size = 0;
  double beta = 0.1, gamma = 1.0, alpha0 = 1.0;
  std::vector<int> topic_ids;
  std::map<int, DirMultStats> topic_words;
  std::map<int, int> dish_tables;  // m_.k
  int total_tables = 0;            // m_..
  TimeHdp time;
  std::vector<double> doc_times;

  NptotView() : time(1.0, 1.0, NigPrior{}) {}
};
NptotView rebuild_nptot_view(const ModelSnapshot& snap);

struct FiniteView {
  FiniteKind kind = FiniteKind::lda;
  int k = 0;
  int vocab_size = 0;
  double alpha = 1.0, beta = 0.1;
  std::vector<DirMultStats> topic_words;
  std::vector<BetaParams> psi;        // tot only
  std::optional<TimeHdp> time;        // tot_multimodal only
  std::vector<std::vector<int>> z;
  std::vector<double> doc_times;
};
FiniteView rebuild_finite_view(const ModelSnapshot& snap);

// Serialization helpers shared with tests.
nlohmann::json franchise_to_json(const Franchise::State& s);
Franchise::State franchise_from_json(const nlohmann::json& j);

}  // namespace nptot
