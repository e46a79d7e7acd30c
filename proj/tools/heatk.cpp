// heatk: heat kernel computations and estimate checks on weighted graphs.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "heatk/heatk.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<double> times;
  std::vector<std::string> centers;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--time", c.times, "time override (repeatable)")->check(CLI::PositiveNumber);
  cmd->add_option("--center", c.centers, "center vertex index or label (repeatable)");
  cmd->add_option("--out-dir", c.out_dir, "output directory");
}

heatk::ScenarioConfig load(const Common& c) {
  auto cfg = heatk::load_scenario(c.config);
  if (!c.times.empty()) cfg.times = c.times;
  if (!c.centers.empty()) {
    cfg.centers.clear();
    for (const auto& s : c.centers) cfg.centers.push_back({std::nullopt, s});
  }
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  return cfg;
}

int cmd_generate(const Common& c) {
  auto cfg = load(c);
  const auto fam = heatk::generate_family(cfg.family);
  const auto& g = fam.graph;
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = (std::filesystem::path(cfg.output_dir) / "graph.json").string();
  heatk::save_graph(g, path);
  std::cout << fam.name << ": " << g.size() << " vertices, " << g.edge_count() << " edges, D_mu="
            << heatk::format_double(g.d_mu()) << ", mu0=" << heatk::format_double(g.mu0()) << ", center=" << g.label(fam.center)
            << "\nwrote " << path << '\n';
  return 0;
}

int cmd_kernel(const Common& c) {
  const auto ps = heatk::prepare_scenario([&] {
    auto cfg = load(c);
    cfg.checks.clear();
    return cfg;
  }());
  const auto& g = ps.graph();
  std::vector<heatk::KernelRow> rows;
  const auto dom = heatk::DirichletDomain::whole(g);
  for (const double t : ps.cfg.times) {
    for (const heatk::VertexId x : ps.centers) {
      auto f = ps.family.truncated ? [&] {
        auto s = ps.schedule();
        s.series_eps = ps.cfg.tolerances.series_eps;
        return heatk::heat_kernel(g, s, t, x);
      }()
                                   : heatk::dirichlet_heat_kernel(dom, t, x, ps.cfg.tolerances.series_eps);
      auto r = heatk::kernel_rows(f);
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  std::filesystem::create_directories(ps.cfg.output_dir);
  const auto path = (std::filesystem::path(ps.cfg.output_dir) / "kernel.csv").string();
  auto os = heatk::open_output(path);
  heatk::write_kernel_csv(os, std::move(rows));
  std::cout << "wrote " << path << '\n';
  return 0;
}

int cmd_lambda(const Common& c) {
  auto cfg = load(c);
  cfg.checks.clear();
  const auto ps = heatk::prepare_scenario(cfg);
  const auto& g = ps.graph();
  std::vector<heatk::SpectralBottom> rows;
  if (ps.family.truncated) {
    for (const auto r : ps.schedule().radii) {
      rows.push_back(heatk::lambda_bottom(heatk::DirichletDomain::ball(g, ps.family.center, r), ps.cfg.tolerances.spectral));
    }
  } else {
    rows.push_back(heatk::lambda_bottom(heatk::DirichletDomain::whole(g), ps.cfg.tolerances.spectral));
  }
  std::filesystem::create_directories(ps.cfg.output_dir);
  const auto path = (std::filesystem::path(ps.cfg.output_dir) / "spectral.csv").string();
  auto os = heatk::open_output(path);
  heatk::write_spectral_csv(os, rows);
  for (const auto& r : rows) std::cout << r.domain_tag << ": Lambda=" << heatk::format_double(r.lambda) << '\n';
  std::cout << "wrote " << path << '\n';
  return 0;
}

int cmd_run(const Common& c, bool bounds_only) {
  auto cfg = load(c);
  if (bounds_only) {
    std::vector<heatk::Check> kept;
    for (auto k : cfg.checks) {
      if (k == heatk::Check::scalars || k == heatk::Check::davies || k == heatk::Check::thm31 || k == heatk::Check::thm32) {
        kept.push_back(k);
      }
    }
    cfg.checks = kept;
  }
  const auto ps = heatk::prepare_scenario(cfg);
  const auto res = heatk::run_checks(ps);
  heatk::write_scenario_reports(ps, res, ps.cfg.output_dir);
  for (const auto& [name, s] : heatk::summarize(res.reports)) {
    std::cout << (s.failed ? "FAIL " : "PASS ") << name << ": " << s.passed << " passed, " << s.failed
              << " failed, worst slack " << heatk::format_double(s.worst_slack) << '\n';
  }
  std::cout << "reports in " << ps.cfg.output_dir << '\n';
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heat kernel bounds on weighted graphs"};
  app.require_subcommand(1);
  Common gen, ker, lam, bnd, ver;
  add_common(app.add_subcommand("generate", "build the family graph and write graph.json"), gen);
  add_common(app.add_subcommand("kernel", "write heat kernel rows to kernel.csv"), ker);
  add_common(app.add_subcommand("lambda", "bottom of the spectrum, written to spectral.csv"), lam);
  add_common(app.add_subcommand("bounds", "run the estimate checks of the scenario"), bnd);
  add_common(app.add_subcommand("verify", "run every check of the scenario"), ver);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (app.got_subcommand("generate")) return cmd_generate(gen);
    if (app.got_subcommand("kernel")) return cmd_kernel(ker);
    if (app.got_subcommand("lambda")) return cmd_lambda(lam);
    if (app.got_subcommand("bounds")) return cmd_run(bnd, true);
    return cmd_run(ver, false);
  } catch (const heatk::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 2;
}
