// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nptot/baselines.hpp"
#include "nptot/snapshot.hpp"

namespace nptot {

// Plot data for the trained model: per topic, the most probable words and
// its time density sampled on a uniform grid over (0,1). LDA snapshots take
// an optional post-hoc time fit for the density curves.
nlohmann::json topic_report(const ModelSnapshot& snap, const std::vector<std::string>& vocab,
                            int top_words, int grid_points, const PosthocTimeFit* fit);

// Long-format rows: model,topic,t,density.
std::string density_csv(const nlohmann::json& report);

}  // namespace nptot
