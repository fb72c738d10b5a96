#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bgnflow/bgn_solver.hpp"
#include "bgnflow/curve_mesh.hpp"
#include "bgnflow/diagnostics.hpp"
#include "bgnflow/errors.hpp"
#include "bgnflow/exact_flow.hpp"
#include "bgnflow/velocity_fields.hpp"

namespace bgnflow {

enum class StepperKind { bgn, lagrangian };

inline const char* stepper_name(StepperKind s) {
  return s == StepperKind::bgn ? "bgn" : "lagrangian";
}

inline StepperKind parse_stepper(const std::string& name) {
  if (name == "bgn") return StepperKind::bgn;
  if (name == "lagrangian") return StepperKind::lagrangian;
  throw InvalidArgumentError("unknown stepper '" + name +
                             "' (expected bgn | lagrangian)");
}

struct FlowConfig {
  int degree = 1;
  int elements = 16;  // J
  int steps = 16;     // Nt
  double t_max = 1.0;
  std::string field = "ellipse-radial";
  StepperKind stepper = StepperKind::bgn;
  int snapshot_stride = 1;
  std::string out_dir;  // consumed by the command-line driver
};

// A time loop failed mid-run; carries the most recent usable mesh so the
// caller can write a post-mortem snapshot.
class FlowAborted : public Error {
 public:
  FlowAborted(const std::string& what, CurveMesh last_mesh, int failed_step,
              double time)
      : Error(what),
        mesh_(std::make_shared<const CurveMesh>(std::move(last_mesh))),
        failed_step_(failed_step),
        time_(time) {}

  const CurveMesh& last_mesh() const { return *mesh_; }
  int failed_step() const { return failed_step_; }
  double time() const { return time_; }

 private:
  std::shared_ptr<const CurveMesh> mesh_;
  int failed_step_;
  double time_;
};

struct FlowResult {
  CurveMesh final_mesh;
  std::vector<ErrorReport> reports;  // one per recorded snapshot, t=0 first
  // Maxima over all recorded post-step snapshots; NaN when the field has
  // no exact solution to measure against.
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_h1 = std::numeric_limits<double>::quiet_NaN();
  double err_max = std::numeric_limits<double>::quiet_NaN();
  double ratio_initial = 1.0;
  double ratio_final = 1.0;
  double wall_ms = 0.0;
};

using SnapshotObserver =
    std::function<void(int step, double time, const CurveMesh&)>;

// Steps the configured scheme from the reference ellipse. Projection
// errors are recorded at every snapshot when the field is the one with a
// closed-form flow; the reported errors are maxima over the time levels.
inline FlowResult run_flow(const FlowConfig& cfg,
                           const SnapshotObserver& observer = {}) {
  if (cfg.degree < 1) throw InvalidArgumentError("run_flow: degree must be >= 1");
  if (cfg.elements < 3) {
    throw InvalidArgumentError("run_flow: need at least 3 elements");
  }
  if (cfg.steps < 1) throw InvalidArgumentError("run_flow: steps must be >= 1");
  if (!(cfg.t_max > 0.0)) {
    throw InvalidArgumentError("run_flow: final time must be > 0");
  }
  if (cfg.snapshot_stride < 1) {
    throw InvalidArgumentError("run_flow: snapshot stride must be >= 1");
  }
  const VelocityField field = parse_field_token(cfg.field);
  const bool measure = cfg.field == "ellipse-radial";
  const ExactFlow flow;
  const double tau = cfg.t_max / cfg.steps;

  CurveMesh mesh = build_initial_mesh(initial_ellipse, cfg.elements, cfg.degree);

  FlowResult result{mesh, {}};
  const auto clock_start = std::chrono::steady_clock::now();

  ErrorReport initial;
  if (measure) {
    initial = projection_error(mesh, flow, 0.0);
  } else {
    initial.mesh_ratio = mesh_ratio(mesh);
  }
  initial.t = 0.0;
  result.reports.push_back(initial);
  result.ratio_initial = initial.mesh_ratio;
  if (observer) observer(0, 0.0, mesh);

  for (int m = 0; m < cfg.steps; ++m) {
    const double t_m = m * tau;
    const double t_next = (m + 1) * tau;
    const bool record = ((m + 1) % cfg.snapshot_stride == 0) || m + 1 == cfg.steps;
    try {
      if (cfg.stepper == StepperKind::bgn) {
        mesh = bgn_step(mesh, field, t_m, tau).mesh;
      } else {
        mesh = lagrangian_step(mesh, field, t_m, tau);
      }
      if (record) {
        ErrorReport rep;
        if (measure) {
          rep = projection_error(mesh, flow, t_next);
        } else {
          rep.mesh_ratio = mesh_ratio(mesh);
        }
        rep.t = t_next;
        result.reports.push_back(rep);
        if (measure) {
          if (!(rep.err_l2 <= result.err_l2)) result.err_l2 = rep.err_l2;
          if (!(rep.err_h1 <= result.err_h1)) result.err_h1 = rep.err_h1;
          if (!(rep.err_max <= result.err_max)) result.err_max = rep.err_max;
        }
        if (observer) observer(m + 1, t_next, mesh);
      }
    } catch (const Error& e) {
      throw FlowAborted("flow aborted at step " + std::to_string(m + 1) +
                            " of " + std::to_string(cfg.steps) +
                            " (t = " + std::to_string(t_next) +
                            "): " + e.what(),
                        mesh, m + 1, t_m);
    }
  }
  result.final_mesh = mesh;
  result.ratio_final = mesh_ratio(mesh);
  result.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - clock_start)
                       .count();
  return result;
}

struct ExperimentRecord {
  std::string experiment;
  int k = 0;
  int elements = 0;  // J
  double h = 0.0;    // 1/J
  int steps = 0;     // Nt
  double tau = 0.0;
  double t_final = 0.0;
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_h1 = std::numeric_limits<double>::quiet_NaN();
  double err_max = std::numeric_limits<double>::quiet_NaN();
  double order_l2 = std::numeric_limits<double>::quiet_NaN();  // vs previous row
  double mesh_ratio_initial = 0.0;
  double mesh_ratio_final = 0.0;
  double wall_ms = 0.0;
};

using RecordObserver = std::function<void(const ExperimentRecord&)>;

namespace detail {

inline ExperimentRecord record_from_flow(const std::string& experiment,
                                         const FlowConfig& cfg,
                                         const FlowResult& result) {
  ExperimentRecord rec;
  rec.experiment = experiment;
  rec.k = cfg.degree;
  rec.elements = cfg.elements;
  rec.h = 1.0 / cfg.elements;
  rec.steps = cfg.steps;
  rec.tau = cfg.t_max / cfg.steps;
  rec.t_final = cfg.t_max;
  rec.err_l2 = result.err_l2;
  rec.err_h1 = result.err_h1;
  rec.err_max = result.err_max;
  rec.mesh_ratio_initial = result.ratio_initial;
  rec.mesh_ratio_final = result.ratio_final;
  rec.wall_ms = result.wall_ms;
  return rec;
}

inline double pair_order(double err_prev, double err_cur, double h_prev,
                         double h_cur) {
  if (!(err_prev > 0.0) || !(err_cur > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::log(err_prev / err_cur) / std::log(h_prev / h_cur);
}

}  // namespace detail

// Step counts paired with J = 16, 32, 64, 128 so the time step shrinks
// like the k-th power of the mesh size.
inline std::vector<int> spatial_step_schedule(int degree) {
  switch (degree) {
    case 1:
      return {16, 32, 64, 128};
    case 2:
      return {16, 64, 256, 1024};
    case 3:
      return {8, 64, 512, 4096};
    default:
      throw InvalidArgumentError(
          "spatial convergence is defined for degrees 1, 2, 3");
  }
}

inline std::vector<ExperimentRecord> run_spatial_convergence(
    int degree, const RecordObserver& on_record = {}) {
  const std::vector<int> step_schedule = spatial_step_schedule(degree);
  const std::vector<int> element_schedule = {16, 32, 64, 128};
  std::vector<ExperimentRecord> records;
  for (std::size_t i = 0; i < element_schedule.size(); ++i) {
    FlowConfig cfg;
    cfg.degree = degree;
    cfg.elements = element_schedule[i];
    cfg.steps = step_schedule[i];
    cfg.t_max = 1.0;
    cfg.field = "ellipse-radial";
    cfg.stepper = StepperKind::bgn;
    const FlowResult result = run_flow(cfg);
    ExperimentRecord rec = detail::record_from_flow("spatial", cfg, result);
    if (!records.empty()) {
      rec.order_l2 = detail::pair_order(records.back().err_l2, rec.err_l2,
                                        records.back().h, rec.h);
    }
    records.push_back(rec);
    if (on_record) on_record(records.back());
  }
  return records;
}

inline std::vector<ExperimentRecord> run_temporal_convergence(
    int degree, int elements_fixed, const RecordObserver& on_record = {}) {
  if (elements_fixed < 3) {
    throw InvalidArgumentError("run_temporal_convergence: need >= 3 elements");
  }
  std::vector<ExperimentRecord> records;
  for (int steps : {2, 4, 8, 16, 32, 64}) {
    FlowConfig cfg;
    cfg.degree = degree;
    cfg.elements = elements_fixed;
    cfg.steps = steps;
    cfg.t_max = 1.0;
    cfg.field = "ellipse-radial";
    cfg.stepper = StepperKind::bgn;
    const FlowResult result = run_flow(cfg);
    ExperimentRecord rec = detail::record_from_flow("temporal", cfg, result);
    if (!records.empty()) {
      rec.order_l2 = detail::pair_order(records.back().err_l2, rec.err_l2,
                                        records.back().tau, rec.tau);
    }
    records.push_back(rec);
    if (on_record) on_record(records.back());
  }
  return records;
}

// Temporal order after removing the spatial saturation floor: subtracts
// the finest-step error from the coarser ones and fits the slope over the
// three steps preceding the finest.
inline double temporal_fitted_order(const std::vector<ExperimentRecord>& records) {
  if (records.size() < 4) {
    throw InvalidArgumentError("temporal_fitted_order: need >= 4 rows");
  }
  const double floor = records.back().err_l2;
  std::vector<double> taus, deltas;
  for (std::size_t i = records.size() - 4; i + 1 < records.size(); ++i) {
    taus.push_back(records[i].tau);
    deltas.push_back(records[i].err_l2 - floor);
  }
  return fitted_order(taus, deltas);
}

struct MeshRatioStudy {
  std::vector<ExperimentRecord> records;  // one row per stepper
  std::vector<std::pair<double, double>> bgn_series;
  std::vector<std::pair<double, double>> lagrangian_series;
};

inline MeshRatioStudy run_mesh_ratio_study(const RecordObserver& on_record = {}) {
  MeshRatioStudy study;
  for (StepperKind stepper : {StepperKind::bgn, StepperKind::lagrangian}) {
    FlowConfig cfg;
    cfg.degree = 1;
    cfg.elements = 64;
    cfg.steps = 64;
    cfg.t_max = 1.0;
    cfg.field = "ellipse-radial";
    cfg.stepper = stepper;
    auto& series = stepper == StepperKind::bgn ? study.bgn_series
                                               : study.lagrangian_series;
    const FlowResult result = run_flow(
        cfg, [&series](int /*step*/, double time, const CurveMesh& mesh) {
          series.emplace_back(time, mesh_ratio(mesh));
        });
    ExperimentRecord rec = detail::record_from_flow(
        std::string("meshratio-") + stepper_name(stepper), cfg, result);
    study.records.push_back(rec);
    if (on_record) on_record(study.records.back());
  }
  return study;
}

// ---------------------------------------------------------------------------
// Output emission: CSV rows and a log-log SVG chart.

inline const char* kRecordCsvHeader =
    "experiment,k,J,h,Nt,tau,t_final,err_l2,err_h1,err_max,order_l2,"
    "mesh_ratio_initial,mesh_ratio_final,wall_ms";

namespace detail {

inline std::string format_g10(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void require_stream(const std::ostream& out, const std::string& path) {
  if (!out.good()) {
    throw IoError("cannot write output file '" + path + "'");
  }
}

inline std::ofstream open_output(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open output file '" + path + "'");
  }
  return out;
}

}  // namespace detail

inline void write_records_csv(std::ostream& out,
                              const std::vector<ExperimentRecord>& records) {
  out << kRecordCsvHeader << "\n";
  for (const ExperimentRecord& r : records) {
    out << r.experiment << ',' << r.k << ',' << r.elements << ','
        << detail::format_g10(r.h) << ',' << r.steps << ','
        << detail::format_g10(r.tau) << ',' << detail::format_g10(r.t_final)
        << ',' << detail::format_g10(r.err_l2) << ','
        << detail::format_g10(r.err_h1) << ',' << detail::format_g10(r.err_max)
        << ',' << detail::format_g10(r.order_l2) << ','
        << detail::format_g10(r.mesh_ratio_initial) << ','
        << detail::format_g10(r.mesh_ratio_final) << ','
        << detail::format_g10(r.wall_ms) << "\n";
  }
}

inline void write_records_csv(const std::string& path,
                              const std::vector<ExperimentRecord>& records) {
  std::ofstream out = detail::open_output(path);
  write_records_csv(out, records);
  detail::require_stream(out, path);
}

inline void write_mesh_ratio_series_csv(std::ostream& out,
                                        const MeshRatioStudy& study) {
  out << "experiment,step,t,mesh_ratio\n";
  const auto emit = [&out](const char* name,
                           const std::vector<std::pair<double, double>>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << "meshratio-" << name << ',' << i << ','
          << detail::format_g10(s[i].first) << ','
          << detail::format_g10(s[i].second) << "\n";
    }
  };
  emit("bgn", study.bgn_series);
  emit("lagrangian", study.lagrangian_series);
}

inline void write_mesh_ratio_series_csv(const std::string& path,
                                        const MeshRatioStudy& study) {
  std::ofstream out = detail::open_output(path);
  write_mesh_ratio_series_csv(out, study);
  detail::require_stream(out, path);
}

namespace detail {

inline std::string format_svg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

// Log-log chart of err_l2 against the mesh size (or the time step) with a
// dashed reference line of the given slope. 800x600 standalone SVG.
inline void write_convergence_svg(std::ostream& out,
                                  const std::vector<ExperimentRecord>& records,
                                  bool x_is_tau, double guide_slope) {
  const double width = 800.0, height = 600.0;
  const double ml = 80.0, mr = 40.0, mt = 50.0, mb = 70.0;

  std::vector<std::pair<double, double>> pts;  // (x, err_l2), both positive
  for (const ExperimentRecord& r : records) {
    const double x = x_is_tau ? r.tau : r.h;
    if (x > 0.0 && r.err_l2 > 0.0 && std::isfinite(r.err_l2)) {
      pts.emplace_back(x, r.err_l2);
    }
  }

  double lx0 = -1.0, lx1 = 0.0, ly0 = -1.0, ly1 = 0.0;
  if (!pts.empty()) {
    lx0 = lx1 = std::log10(pts[0].first);
    ly0 = ly1 = std::log10(pts[0].second);
    for (const auto& [x, y] : pts) {
      lx0 = std::min(lx0, std::log10(x));
      lx1 = std::max(lx1, std::log10(x));
      ly0 = std::min(ly0, std::log10(y));
      ly1 = std::max(ly1, std::log10(y));
    }
    // Leave headroom for the guide line above the data.
    ly1 += 0.35;
    ly0 -= 0.15;
    lx0 -= 0.15;
    lx1 += 0.15;
    if (lx1 - lx0 < 1e-9) {
      lx0 -= 0.5;
      lx1 += 0.5;
    }
    if (ly1 - ly0 < 1e-9) {
      ly0 -= 0.5;
      ly1 += 0.5;
    }
  }
  const auto px = [&](double x) {
    return ml + (std::log10(x) - lx0) / (lx1 - lx0) * (width - ml - mr);
  };
  const auto py = [&](double y) {
    return height - mb -
           (std::log10(y) - ly0) / (ly1 - ly0) * (height - mt - mb);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"600\" viewBox=\"0 0 800 600\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
  const std::string x_label = x_is_tau ? "time step" : "mesh size";
  out << "<text x=\"400\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" "
         "text-anchor=\"middle\">error vs "
      << x_label << " (log-log)</text>\n";
  // Axes.
  out << "<line x1=\"" << detail::format_svg(ml) << "\" y1=\""
      << detail::format_svg(height - mb) << "\" x2=\""
      << detail::format_svg(width - mr) << "\" y2=\""
      << detail::format_svg(height - mb) << "\" stroke=\"#000000\"/>\n";
  out << "<line x1=\"" << detail::format_svg(ml) << "\" y1=\""
      << detail::format_svg(mt) << "\" x2=\"" << detail::format_svg(ml)
      << "\" y2=\"" << detail::format_svg(height - mb)
      << "\" stroke=\"#000000\"/>\n";
  out << "<text x=\"" << detail::format_svg((ml + width - mr) / 2.0)
      << "\" y=\"" << detail::format_svg(height - 20.0)
      << "\" font-family=\"sans-serif\" font-size=\"14\" "
         "text-anchor=\"middle\">"
      << x_label << "</text>\n";
  out << "<text x=\"24\" y=\"" << detail::format_svg((mt + height - mb) / 2.0)
      << "\" font-family=\"sans-serif\" font-size=\"14\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 24 "
      << detail::format_svg((mt + height - mb) / 2.0) << ")\">L2 error"
      << "</text>\n";

  if (!pts.empty()) {
    // Decade tick marks.
    char label[32];
    for (int e = static_cast<int>(std::ceil(lx0));
         e <= static_cast<int>(std::floor(lx1)); ++e) {
      const double x = px(std::pow(10.0, e));
      out << "<line x1=\"" << detail::format_svg(x) << "\" y1=\""
          << detail::format_svg(height - mb) << "\" x2=\""
          << detail::format_svg(x) << "\" y2=\""
          << detail::format_svg(height - mb + 6.0)
          << "\" stroke=\"#000000\"/>\n";
      std::snprintf(label, sizeof label, "1e%d", e);
      out << "<text x=\"" << detail::format_svg(x) << "\" y=\""
          << detail::format_svg(height - mb + 22.0)
          << "\" font-family=\"sans-serif\" font-size=\"12\" "
             "text-anchor=\"middle\">"
          << label << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(ly0));
         e <= static_cast<int>(std::floor(ly1)); ++e) {
      const double y = py(std::pow(10.0, e));
      out << "<line x1=\"" << detail::format_svg(ml - 6.0) << "\" y1=\""
          << detail::format_svg(y) << "\" x2=\"" << detail::format_svg(ml)
          << "\" y2=\"" << detail::format_svg(y)
          << "\" stroke=\"#000000\"/>\n";
      std::snprintf(label, sizeof label, "1e%d", e);
      out << "<text x=\"" << detail::format_svg(ml - 10.0) << "\" y=\""
          << detail::format_svg(y + 4.0)
          << "\" font-family=\"sans-serif\" font-size=\"12\" "
             "text-anchor=\"end\">"
          << label << "</text>\n";
    }

    // Dashed slope guide anchored above the finest data point.
    const auto& [xa, ya_raw] = pts.back();
    const double ya = ya_raw * 1.8;
    const double xb = pts.front().first;
    const double yb = ya * std::pow(xb / xa, guide_slope);
    out << "<line x1=\"" << detail::format_svg(px(xa)) << "\" y1=\""
        << detail::format_svg(py(ya)) << "\" x2=\""
        << detail::format_svg(px(xb)) << "\" y2=\""
        << detail::format_svg(py(yb))
        << "\" stroke=\"#888888\" stroke-width=\"1.5\" "
           "stroke-dasharray=\"6 4\"/>\n";
    char slope_label[48];
    std::snprintf(slope_label, sizeof slope_label, "slope %g", guide_slope);
    out << "<text x=\"" << detail::format_svg(px(xb) + 8.0) << "\" y=\""
        << detail::format_svg(py(yb) - 8.0)
        << "\" font-family=\"sans-serif\" font-size=\"13\" "
           "fill=\"#555555\">"
        << slope_label << "</text>\n";

    // Data polyline and per-point markers.
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
           "points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out << ' ';
      out << detail::format_svg(px(pts[i].first)) << ','
          << detail::format_svg(py(pts[i].second));
    }
    out << "\"/>\n";
    for (const auto& [x, y] : pts) {
      out << "<circle cx=\"" << detail::format_svg(px(x)) << "\" cy=\""
          << detail::format_svg(py(y))
          << "\" r=\"4\" fill=\"#1f77b4\"/>\n";
    }
  }
  out << "</svg>\n";
}

inline void write_convergence_svg(const std::string& path,
                                  const std::vector<ExperimentRecord>& records,
                                  bool x_is_tau, double guide_slope) {
  std::ofstream out = detail::open_output(path);
  write_convergence_svg(out, records, x_is_tau, guide_slope);
  detail::require_stream(out, path);
}

}  // namespace bgnflow
