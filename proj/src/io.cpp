#include "swfr/io.hpp"

#include <cstdio>
#include <set>

namespace swfr {

using nlohmann::json;

namespace {

json mat_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix mat_from_json(const json& j) {
  require(j.is_array() && !j.empty(), ErrorCode::config, "checkpoint: bad matrix");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    require(static_cast<Eigen::Index>(j[i].size()) == m.cols(), ErrorCode::config,
            "checkpoint: ragged matrix");
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json vec_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vec_from_json(const json& j) {
  require(j.is_array(), ErrorCode::config, "checkpoint: bad vector");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json j;
  j["iteration"] = ck.iteration;
  j["params"] = {{"omega", vec_to_json(ck.params.omega)}, {"K0", mat_to_json(ck.params.K0)},
                 {"b0", vec_to_json(ck.params.b0)},       {"K1", mat_to_json(ck.params.K1)},
                 {"b1", vec_to_json(ck.params.b1)},       {"A", mat_to_json(ck.params.A)},
                 {"b", vec_to_json(ck.params.b)},         {"c", ck.params.c}};
  j["adam"] = {{"m", vec_to_json(ck.adam.m)},
               {"v", vec_to_json(ck.adam.v)},
               {"step", ck.adam.step}};
  j["rng_state"] = ck.rng_state;
  j["config"] = ck.config_echo;
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "save_checkpoint: cannot open " + path);
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  json j = load_json(path);
  check_keys(j, {"iteration", "params", "adam", "rng_state", "config"}, "checkpoint");
  Checkpoint ck;
  try {
    ck.iteration = j.at("iteration").get<long>();
    const json& p = j.at("params");
    check_keys(p, {"omega", "K0", "b0", "K1", "b1", "A", "b", "c"}, "checkpoint.params");
    ck.params.omega = vec_from_json(p.at("omega"));
    ck.params.K0 = mat_from_json(p.at("K0"));
    ck.params.b0 = vec_from_json(p.at("b0"));
    ck.params.K1 = mat_from_json(p.at("K1"));
    ck.params.b1 = vec_from_json(p.at("b1"));
    ck.params.A = mat_from_json(p.at("A"));
    ck.params.b = vec_from_json(p.at("b"));
    ck.params.c = p.at("c").get<double>();
    const json& a = j.at("adam");
    ck.adam.m = vec_from_json(a.at("m"));
    ck.adam.v = vec_from_json(a.at("v"));
    ck.adam.step = a.at("step").get<long>();
    ck.rng_state = j.at("rng_state").get<std::string>();
    ck.config_echo = j.at("config");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("load_checkpoint: ") + e.what());
  }
  return ck;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path) {
  require(out_.good(), ErrorCode::io, "MetricsWriter: cannot open " + path);
}

void MetricsWriter::append(long iter, const LossTerms& lt, double wall_ms, double n_eff) {
  json j;
  j["iter"] = iter;
  j["J_KL"] = lt.j_kl;
  j["J_SWFR"] = lt.j_swfr;
  j["J_R"] = lt.j_r;
  j["total"] = lt.total;
  j["wall_ms"] = wall_ms;
  j["n_eff"] = n_eff;
  out_ << j.dump() << "\n";
  out_.flush();
}

void save_trajectory_csv(const std::string& path, const TrajectoryBatch& tb) {
  require(!tb.z.empty(), ErrorCode::invalid_argument, "save_trajectory_csv: empty batch");
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "save_trajectory_csv: cannot open " + path);
  const int d = static_cast<int>(tb.z.front().cols());
  const bool has_l = tb.l.size() == tb.z.size();
  out << "step,t,particle_id";
  for (int j = 0; j < d; ++j) out << ",z" << j;
  out << ",w";
  if (has_l) out << ",l";
  out << "\n";
  out.precision(17);
  for (std::size_t k = 0; k < tb.z.size(); ++k) {
    for (int i = 0; i < tb.n(); ++i) {
      out << k << "," << tb.tgrid[k] << "," << i;
      for (int j = 0; j < d; ++j) out << "," << tb.z[k](i, j);
      out << "," << tb.w[k](i);
      if (has_l) out << "," << tb.l[k](i);
      out << "\n";
    }
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "load_json: cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, "load_json: " + path + ": " + e.what());
  }
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  require(j.is_object(), ErrorCode::config, context + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : j.items())
    require(ok.count(kv.key()) > 0, ErrorCode::config,
            context + ": unknown key \"" + kv.key() + "\"");
}

// ---- SVG ---------------------------------------------------------------

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}
}  // namespace

SvgFigure::SvgFigure(int width, int height, double x0, double x1, double y0, double y1)
    : w_(width), h_(height), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
  require(x1 > x0 && y1 > y0, ErrorCode::invalid_argument, "SvgFigure: empty viewport");
}

double SvgFigure::px(double x) const { return 50.0 + (x - x0_) / (x1_ - x0_) * (w_ - 70.0); }
double SvgFigure::py(double y) const {
  return (h_ - 40.0) - (y - y0_) / (y1_ - y0_) * (h_ - 60.0);
}

void SvgFigure::polyline(const std::vector<double>& x, const std::vector<double>& y,
                         const std::string& color, double stroke_width) {
  require(x.size() == y.size() && !x.empty(), ErrorCode::invalid_argument,
          "SvgFigure::polyline: bad series");
  body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           fmt(stroke_width) + "\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i)
    body_ += fmt(px(x[i])) + "," + fmt(py(y[i])) + " ";
  body_ += "\"/>\n";
}

void SvgFigure::vbar(double x_center, double width, double height, const std::string& color) {
  double xl = px(x_center - 0.5 * width);
  double xr = px(x_center + 0.5 * width);
  double yt = py(height);
  double yb = py(0.0);
  body_ += "<rect x=\"" + fmt(xl) + "\" y=\"" + fmt(yt) + "\" width=\"" + fmt(xr - xl) +
           "\" height=\"" + fmt(yb - yt) + "\" fill=\"" + color + "\" fill-opacity=\"0.7\"/>\n";
}

void SvgFigure::circle(double x, double y, double radius_px, const std::string& color) {
  body_ += "<circle cx=\"" + fmt(px(x)) + "\" cy=\"" + fmt(py(y)) + "\" r=\"" + fmt(radius_px) +
           "\" fill=\"" + color + "\" fill-opacity=\"0.6\"/>\n";
}

void SvgFigure::text(double x, double y, const std::string& s) {
  body_ += "<text x=\"" + fmt(px(x)) + "\" y=\"" + fmt(py(y)) +
           "\" font-size=\"12\" font-family=\"sans-serif\">" + s + "</text>\n";
}

void SvgFigure::axes(const std::string& xlabel, const std::string& ylabel) {
  std::string ax;
  ax += "<line x1=\"" + fmt(px(x0_)) + "\" y1=\"" + fmt(py(y0_)) + "\" x2=\"" + fmt(px(x1_)) +
        "\" y2=\"" + fmt(py(y0_)) + "\" stroke=\"black\"/>\n";
  ax += "<line x1=\"" + fmt(px(x0_)) + "\" y1=\"" + fmt(py(y0_)) + "\" x2=\"" + fmt(px(x0_)) +
        "\" y2=\"" + fmt(py(y1_)) + "\" stroke=\"black\"/>\n";
  ax += "<text x=\"" + fmt(0.5 * (px(x0_) + px(x1_))) + "\" y=\"" + fmt(h_ - 8.0) +
        "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">" + xlabel +
        "</text>\n";
  ax += "<text x=\"14\" y=\"" + fmt(0.5 * (py(y0_) + py(y1_))) +
        "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
        fmt(0.5 * (py(y0_) + py(y1_))) + ")\">" + ylabel + "</text>\n";
  // tick labels at the corners
  ax += "<text x=\"" + fmt(px(x0_)) + "\" y=\"" + fmt(py(y0_) + 14.0) +
        "\" font-size=\"10\" font-family=\"sans-serif\">" + fmt(x0_) + "</text>\n";
  ax += "<text x=\"" + fmt(px(x1_)) + "\" y=\"" + fmt(py(y0_) + 14.0) +
        "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\">" + fmt(x1_) +
        "</text>\n";
  ax += "<text x=\"" + fmt(px(x0_) - 4.0) + "\" y=\"" + fmt(py(y1_)) +
        "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\">" + fmt(y1_) +
        "</text>\n";
  body_ = ax + body_;
}

void SvgFigure::save(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "SvgFigure::save: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
      << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_ << "</svg>\n";
}

}  // namespace swfr
