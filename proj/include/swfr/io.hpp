#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "swfr/flow.hpp"
#include "swfr/loss.hpp"
#include "swfr/optim.hpp"
#include "swfr/potential.hpp"

namespace swfr {

struct Checkpoint {
  PotentialParams params;
  AdamState adam;
  long iteration = 0;
  std::string rng_state;
  nlohmann::json config_echo;  // the run config, stored verbatim
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// One NDJSON record per iteration: {iter, J_KL, J_SWFR, J_R, total, wall_ms, n_eff}
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(long iter, const LossTerms& lt, double wall_ms, double n_eff);

 private:
  std::ofstream out_;
};

// Long format: step,t,particle_id,z0..z{d-1},w,l (l column only when present)
void save_trajectory_csv(const std::string& path, const TrajectoryBatch& tb);

nlohmann::json load_json(const std::string& path);
// Strict-config helper: rejects keys outside the allowed set.
void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                const std::string& context);

// Minimal self-contained SVG plot surface: fixed pixel canvas, data-space
// viewport, deterministic number formatting.
class SvgFigure {
 public:
  SvgFigure(int width, int height, double x0, double x1, double y0, double y1);

  void polyline(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& color, double stroke_width = 1.5);
  void vbar(double x_center, double width, double height, const std::string& color);
  void circle(double x, double y, double radius_px, const std::string& color);
  void text(double x, double y, const std::string& s);
  void axes(const std::string& xlabel, const std::string& ylabel);
  void save(const std::string& path) const;

 private:
  double px(double x) const;
  double py(double y) const;
  int w_, h_;
  double x0_, x1_, y0_, y1_;
  std::string body_;
};

}  // namespace swfr
