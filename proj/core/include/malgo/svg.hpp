#pragma once

#include <string>

namespace malgo {

// Static SVG renderers, pure functions of the input CSV.
// kinds: "etatraj" (training-log eta trajectories), "benchmark"
// (per-run scatter with log-scale mean and std), "ablation"
// (test loss versus adaptation fraction).
void render_plot(const std::string& kind, const std::string& csv_path,
                 const std::string& svg_path);

}  // namespace malgo
