// Command-line driver: single flows, convergence studies, the mesh-ratio
// comparison, and a quick self-test of the library invariants.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bgnflow/bgnflow.hpp"

namespace {

using namespace bgnflow;

std::string snapshot_path(const std::string& dir, int step) {
  char name[48];
  std::snprintf(name, sizeof name, "mesh_%06d.txt", step);
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec && !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir + "'");
  }
}

std::string brief(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_run(const FlowConfig& cfg) {
  ensure_dir(cfg.out_dir);
  const SnapshotObserver observer = [&cfg](int step, double time,
                                           const CurveMesh& mesh) {
    write_mesh_snapshot(snapshot_path(cfg.out_dir, step), mesh, time);
  };
  FlowResult result = [&] {
    try {
      return run_flow(cfg, observer);
    } catch (const FlowAborted& a) {
      const std::string path =
          (std::filesystem::path(cfg.out_dir) / "abort_mesh.txt").string();
      write_mesh_snapshot(path, a.last_mesh(), a.time());
      std::cerr << "error: " << a.what() << "\n"
                << "last usable mesh written to " << path << "\n";
      std::exit(1);
    }
  }();

  ExperimentRecord rec;
  rec.experiment = std::string("run-") + stepper_name(cfg.stepper);
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
  write_records_csv(
      (std::filesystem::path(cfg.out_dir) / "run.csv").string(), {rec});

  std::cout << "run: stepper=" << stepper_name(cfg.stepper)
            << " field=" << cfg.field << " k=" << cfg.degree
            << " J=" << cfg.elements << " Nt=" << cfg.steps
            << " tmax=" << brief(cfg.t_max) << "\n";
  std::cout << "errors (max over time levels): l2=" << brief(result.err_l2)
            << " h1=" << brief(result.err_h1)
            << " nodal=" << brief(result.err_max) << "\n";
  std::cout << "mesh ratio: " << brief(result.ratio_initial) << " -> "
            << brief(result.ratio_final) << "   wall "
            << brief(result.wall_ms) << " ms\n";
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

void print_record(const ExperimentRecord& rec) {
  std::cout << rec.experiment << ": J=" << rec.elements
            << " Nt=" << rec.steps << " err_l2=" << brief(rec.err_l2)
            << " err_max=" << brief(rec.err_max)
            << " order=" << brief(rec.order_l2)
            << " ratio=" << brief(rec.mesh_ratio_initial) << "->"
            << brief(rec.mesh_ratio_final) << "\n";
}

int cmd_convergence(const std::string& mode, int degree, int elements_fixed,
                    const std::string& out_dir) {
  ensure_dir(out_dir);
  char stem[64];
  if (mode == "spatial") {
    std::snprintf(stem, sizeof stem, "spatial_k%d", degree);
  } else {
    std::snprintf(stem, sizeof stem, "temporal_k%d_J%d", degree,
                  elements_fixed);
  }
  const std::string csv_path =
      (std::filesystem::path(out_dir) / (std::string(stem) + ".csv")).string();
  const std::string svg_path =
      (std::filesystem::path(out_dir) / (std::string(stem) + ".svg")).string();

  std::vector<ExperimentRecord> sofar;
  const RecordObserver on_record = [&](const ExperimentRecord& rec) {
    sofar.push_back(rec);
    write_records_csv(csv_path, sofar);  // partial file stays parsable
    print_record(rec);
  };

  try {
    if (mode == "spatial") {
      const auto records = run_spatial_convergence(degree, on_record);
      write_records_csv(csv_path, records);
      write_convergence_svg(svg_path, records, /*x_is_tau=*/false,
                            static_cast<double>(degree));
      std::vector<double> errs, hs;
      for (const auto& r : records) {
        errs.push_back(r.err_l2);
        hs.push_back(r.h);
      }
      const auto orders = convergence_order(errs, hs);
      std::cout << "order over finest pair: " << brief(orders.back()) << "\n";
    } else {
      const auto records =
          run_temporal_convergence(degree, elements_fixed, on_record);
      write_records_csv(csv_path, records);
      write_convergence_svg(svg_path, records, /*x_is_tau=*/true, 1.0);
      std::cout << "fitted temporal order (floor-subtracted, last three "
                   "points before the finest): "
                << brief(temporal_fitted_order(records)) << "\n";
    }
  } catch (const FlowAborted& a) {
    const std::string path =
        (std::filesystem::path(out_dir) / "abort_mesh.txt").string();
    write_mesh_snapshot(path, a.last_mesh(), a.time());
    std::cerr << "error: " << a.what() << "\n"
              << "partial results in " << csv_path
              << ", last usable mesh in " << path << "\n";
    return 1;
  }
  std::cout << "outputs: " << csv_path << ", " << svg_path << "\n";
  return 0;
}

int cmd_meshratio(const std::string& out_dir) {
  ensure_dir(out_dir);
  const std::string csv_path =
      (std::filesystem::path(out_dir) / "meshratio.csv").string();
  const std::string series_path =
      (std::filesystem::path(out_dir) / "meshratio_series.csv").string();
  std::vector<ExperimentRecord> sofar;
  const RecordObserver on_record = [&](const ExperimentRecord& rec) {
    sofar.push_back(rec);
    write_records_csv(csv_path, sofar);
    print_record(rec);
  };
  try {
    const MeshRatioStudy study = run_mesh_ratio_study(on_record);
    write_records_csv(csv_path, study.records);
    write_mesh_ratio_series_csv(series_path, study);
  } catch (const FlowAborted& a) {
    const std::string path =
        (std::filesystem::path(out_dir) / "abort_mesh.txt").string();
    write_mesh_snapshot(path, a.last_mesh(), a.time());
    std::cerr << "error: " << a.what() << "\n";
    return 1;
  }
  std::cout << "outputs: " << csv_path << ", " << series_path << "\n";
  return 0;
}

int selftest_check(const char* name, bool ok) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
  return ok ? 0 : 1;
}

int cmd_selftest() {
  int failures = 0;
  // Quadrature rules self-validate their moments on construction.
  failures += selftest_check("quadrature moment identities", [] {
    try {
      for (int k = 1; k <= 4; ++k) ReferenceElement ref(k);
      for (int n = 2; n <= 10; ++n) gauss_legendre_rule(n);
      return true;
    } catch (const Error&) {
      return false;
    }
  }());

  auto mesh2 = build_initial_mesh(initial_ellipse, 32, 2);
  failures += selftest_check("stiffness symmetry and zero row sums", [&] {
    const auto stiff = stiffness_matrix(mesh2);
    const int n = mesh2.node_count();
    for (int i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (int o = -2; o <= 2; ++o) {
        row_sum += stiff.at(i, o);
        const int j = stiff.column(i, o);
        double mirror = 0.0;
        for (int o2 = -2; o2 <= 2; ++o2) {
          if (stiff.column(j, o2) == i) mirror += stiff.at(j, o2);
        }
        double fwd = 0.0;
        for (int o2 = -2; o2 <= 2; ++o2) {
          if (stiff.column(i, o2) == j) fwd += stiff.at(i, o2);
        }
        if (std::abs(fwd - mirror) > 1e-12) return false;
      }
      if (std::abs(row_sum) > 1e-11) return false;
    }
    return true;
  }());

  failures += selftest_check("stationary under zero velocity", [&] {
    for (int k : {1, 2}) {
      auto mesh = build_initial_mesh(initial_ellipse, 24, k);
      const VectorField zero(mesh.node_count(), Vec2{0.0, 0.0});
      const auto next = bgn_step(mesh, zero, 0.05).mesh;
      for (int j = 0; j < mesh.node_count(); ++j) {
        if (norm(next.position(j) - mesh.position(j)) > 1e-10) return false;
      }
    }
    return true;
  }());

  failures += selftest_check("uniform translation reproduced exactly", [&] {
    auto mesh = build_initial_mesh(initial_ellipse, 20, 2);
    const Vec2 c{0.3, -0.1};
    const VectorField vel(mesh.node_count(), c);
    const auto next = bgn_step(mesh, vel, 0.125).mesh;
    for (int j = 0; j < mesh.node_count(); ++j) {
      const Vec2 expect = mesh.position(j) + c * 0.125;
      if (norm(next.position(j) - expect) > 1e-10) return false;
    }
    return true;
  }());

  failures += selftest_check("banded solve matches dense solve", [] {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const int n = 60, hb = 5;
    CyclicBandedMatrix a(n, hb);
    std::vector<double> b(n);
    for (int i = 0; i < n; ++i) {
      for (int o = -hb; o <= hb; ++o) a.at(i, o) = uni(rng);
      a.at(i, 0) += 2.0 * hb;  // diagonally dominant, well conditioned
      b[i] = uni(rng);
    }
    const auto zd = solve_cyclic_banded(a, b, SolveMethod::dense);
    const auto zb = solve_cyclic_banded(a, b, SolveMethod::banded_woodbury);
    for (int i = 0; i < n; ++i) {
      if (std::abs(zd[i] - zb[i]) > 1e-10) return false;
    }
    return true;
  }());

  failures += selftest_check("closest point recovers on-curve points", [] {
    const ExactFlow flow;
    for (double t : {0.0, 0.37, 1.0}) {
      for (int i = 0; i < 40; ++i) {
        const double theta = 2.0 * M_PI * i / 40.0 + 0.03;
        const auto cp = flow.closest_point(exact_position(t, theta), t);
        if (cp.distance > 1e-12) return false;
      }
    }
    return true;
  }());

  failures += selftest_check("projection error vanishes on the initial mesh", [] {
    const ExactFlow flow;
    const auto mesh = build_initial_mesh(initial_ellipse, 24, 3);
    const auto rep = projection_error(mesh, flow, 0.0);
    return rep.err_l2 <= 1e-12 && rep.err_h1 <= 1e-12 && rep.err_max <= 1e-12;
  }());

  std::cout << (failures == 0 ? "selftest OK" : "selftest FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bgnflow: curvature-aware parametric finite elements for closed "
      "planar curves moving under a prescribed velocity field"};
  app.require_subcommand(1);

  FlowConfig cfg;
  std::string stepper = "bgn";
  CLI::App* run = app.add_subcommand("run", "advance one flow and write snapshots");
  run->add_option("--degree", cfg.degree, "polynomial degree k >= 1")
      ->capture_default_str();
  run->add_option("--elements", cfg.elements, "number of elements J >= 3")
      ->capture_default_str();
  run->add_option("--steps", cfg.steps, "number of time steps")
      ->capture_default_str();
  run->add_option("--tmax", cfg.t_max, "final time T")->capture_default_str();
  run->add_option("--field", cfg.field,
                  "velocity field token: zero | constant:<cx>,<cy> | "
                  "rotation:<omega> | ellipse-radial")
      ->capture_default_str();
  run->add_option("--stepper", stepper, "bgn | lagrangian")
      ->check(CLI::IsMember({"bgn", "lagrangian"}))
      ->capture_default_str();
  run->add_option("--out", cfg.out_dir, "output directory")->required();
  run->add_option("--snapshot-stride", cfg.snapshot_stride,
                  "write every s-th snapshot")
      ->capture_default_str();
  run->set_config("--config", "", "key = value file; flags override it");

  std::string mode = "spatial";
  int conv_degree = 1;
  int elements_fixed = 256;
  std::string conv_out;
  CLI::App* conv =
      app.add_subcommand("convergence", "refinement study with CSV/SVG output");
  conv->add_option("--mode", mode, "spatial | temporal")
      ->check(CLI::IsMember({"spatial", "temporal"}))
      ->capture_default_str();
  conv->add_option("--degree", conv_degree, "polynomial degree")
      ->capture_default_str();
  conv->add_option("--elements-fixed", elements_fixed,
                   "fixed element count for the temporal mode")
      ->capture_default_str();
  conv->add_option("--out", conv_out, "output directory")->required();
  conv->set_config("--config", "", "key = value file; flags override it");

  std::string ratio_out;
  CLI::App* ratio = app.add_subcommand(
      "meshratio", "mesh-quality comparison of the two steppers");
  ratio->add_option("--out", ratio_out, "output directory")->required();
  ratio->set_config("--config", "", "key = value file; flags override it");

  CLI::App* selftest =
      app.add_subcommand("selftest", "run the built-in invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) {
      cfg.stepper = parse_stepper(stepper);
      return cmd_run(cfg);
    }
    if (app.got_subcommand(conv)) {
      return cmd_convergence(mode, conv_degree, elements_fixed, conv_out);
    }
    if (app.got_subcommand(ratio)) {
      return cmd_meshratio(ratio_out);
    }
    if (app.got_subcommand(selftest)) {
      return cmd_selftest();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
