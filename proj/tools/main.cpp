// linimp command line: tableau, lift, integrate, grid and bench subcommands.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "linimp/bench.hpp"
#include "linimp/collocation.hpp"
#include "linimp/errors.hpp"
#include "linimp/integrator.hpp"
#include "linimp/lift.hpp"
#include "linimp/method_spec.hpp"
#include "linimp/problems.hpp"
#include "linimp/rational.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_matrix(std::ostream& os, const std::vector<std::vector<std::string>>& cells) {
  std::size_t width = 0;
  for (const auto& row : cells) {
    for (const auto& c : row) width = std::max(width, c.size());
  }
  for (const auto& row : cells) {
    for (const auto& c : row) os << "  " << std::setw(static_cast<int>(width)) << c;
    os << '\n';
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string fmt(std::complex<double> z) {
  std::ostringstream s;
  s << std::setprecision(17) << z.real();
  if (z.imag() != 0.0) s << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return s.str();
}

int cmd_tableau(const std::string& nodes_text, bool exact, bool as_json) {
  const auto nodes = linimp::NodeSet::parse(split_list(nodes_text));
  const auto mode = exact ? linimp::TableauMode::exact_rational : linimp::TableauMode::floating;
  const auto tab = linimp::build_tableau(nodes, mode);
  const int s = tab.stages();
  const auto& ex = tab.exact;
  auto cell = [&](int i, int j) -> std::string {
    return ex ? linimp::to_string(ex->A[i][j]) : fmt(tab.A(i, j));
  };

  if (as_json) {
    json j;
    j["s"] = s;
    j["c"] = json::array();
    j["A"] = json::array();
    j["b"] = json::array();
    for (int i = 0; i < s; ++i) {
      j["c"].push_back(nodes.exact() ? json(linimp::to_string((*nodes.exact())[i])) : json(nodes[i]));
      json row = json::array();
      for (int k = 0; k < s; ++k) {
        row.push_back(ex ? json(linimp::to_string(ex->A[i][k])) : json(tab.A(i, k)));
      }
      j["A"].push_back(row);
      j["b"].push_back(ex ? json(linimp::to_string(ex->b[i])) : json(tab.b[i]));
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }

  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < s; ++i) {
    std::vector<std::string> row{nodes.exact() ? linimp::to_string((*nodes.exact())[i]) : fmt(nodes[i]), "|"};
    for (int k = 0; k < s; ++k) row.push_back(cell(i, k));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> last{"", "|"};
  for (int k = 0; k < s; ++k) last.push_back(ex ? linimp::to_string(ex->b[k]) : fmt(tab.b[k]));
  rows.push_back(std::move(last));
  print_matrix(std::cout, rows);
  return 0;
}

int cmd_lift(const std::string& nodes_text, const std::string& lambda_text, bool exact, bool as_json) {
  const auto nodes = linimp::NodeSet::parse(split_list(nodes_text));
  const auto spec = linimp::SpectrumSpec::parse(split_list(lambda_text));
  std::optional<linimp::ExactLift> ex;
  linimp::LiftOperator lift;
  if (exact) {
    if (spec.exact_charpoly.empty()) {
      throw linimp::ModeMismatch("exact lift needs a spectrum of rational literals");
    }
    if (spec.size() != nodes.size()) throw linimp::InvalidSpectrum("spectrum size does not match stage count");
    spec.validate();
    ex = linimp::solve_placement_charpoly(nodes, spec.exact_charpoly);
    lift = ex->to_float(spec);
  } else {
    lift = linimp::solve_placement(nodes, spec);
  }
  const int s = lift.stages();
  auto y = [&](int i) { return ex ? json(linimp::to_string(ex->y[i])) : json(lift.y[i]); };
  auto th = [&](int i) { return ex ? json(linimp::to_string(ex->theta[i])) : json(lift.theta[i]); };
  auto d = [&](int i, int k) { return ex ? json(linimp::to_string(ex->D[i][k])) : json(lift.D(i, k)); };

  if (as_json) {
    json j;
    j["c"] = json::array();
    j["lambda"] = json::array();
    j["y"] = json::array();
    j["theta"] = json::array();
    j["D"] = json::array();
    for (int i = 0; i < s; ++i) {
      j["c"].push_back(nodes.exact() ? json(linimp::to_string((*nodes.exact())[i])) : json(nodes[i]));
      const auto l = spec.lambda[static_cast<std::size_t>(i)];
      j["lambda"].push_back(json::array({l.real(), l.imag()}));
      j["y"].push_back(y(i));
      j["theta"].push_back(th(i));
      json row = json::array();
      for (int k = 0; k < s; ++k) row.push_back(d(i, k));
      j["D"].push_back(row);
    }
    j["rho"] = lift.spectral_radius;
    j["stability"] = linimp::to_string(lift.stability);
    std::cout << j.dump(2) << '\n';
    return 0;
  }

  auto str = [](const json& v) { return v.is_string() ? v.get<std::string>() : fmt(v.get<double>()); };
  std::cout << "lambda:";
  for (const auto& l : spec.lambda) std::cout << ' ' << fmt(l);
  std::cout << "\ny:";
  for (int i = 0; i < s; ++i) std::cout << ' ' << str(y(i));
  std::cout << "\ntheta:";
  for (int i = 0; i < s; ++i) std::cout << ' ' << str(th(i));
  std::cout << "\nD:\n";
  std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    for (int k = 0; k < s; ++k) rows[static_cast<std::size_t>(i)].push_back(str(d(i, k)));
  }
  print_matrix(std::cout, rows);
  std::cout << "rho(D): " << fmt(lift.spectral_radius) << "\nstability: " << linimp::to_string(lift.stability)
            << '\n';
  return 0;
}

struct IntegrateArgs {
  linimp::ProblemParams problem;
  std::string method;
  double h = 0.01;
  double T = 1.0;
  std::string gamma_init = "exact";
  std::string out;
  std::string manifest;
  std::int64_t rows = 1001;
};

template <class S>
int integrate_with(const linimp::EvolutionProblem<S>& problem, const IntegrateArgs& a) {
  const auto method = linimp::MethodSpec::parse(a.method);
  linimp::RunRequest req;
  req.options.T = a.T;
  req.options.h = a.h;
  req.options.max_snapshots = 2;
  req.gamma_init = linimp::parse_gamma_init(a.gamma_init);
  const auto plan = linimp::plan_steps(req.options);
  const std::int64_t stride = std::max<std::int64_t>(1, plan.steps / std::max<std::int64_t>(1, a.rows - 1));

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw linimp::InvalidArgument("cannot write " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << std::setprecision(17) << "step,t";
  if (problem.exact_solution) os << ",error_norm";
  for (const auto& e : problem.energies) os << ',' << e.name;
  os << '\n';

  double max_error = 0.0;
  const linimp::GammaMatrix<S> no_gamma;
  auto observer = [&](std::int64_t step, double t, const linimp::Vector<S>& u,
                      const linimp::GammaMatrix<S>* gamma) {
    double err = 0.0;
    if (problem.exact_solution) {
      err = problem.norm(u - problem.exact_solution(t));
      max_error = std::max(max_error, err);
    }
    if (step % stride != 0 && step < plan.steps) return;
    os << step << ',' << t;
    if (problem.exact_solution) os << ',' << err;
    for (const auto& e : problem.energies) os << ',' << e.eval(u, gamma ? *gamma : no_gamma);
    os << '\n';
  };
  const auto r = linimp::run_method(method, problem, problem.initial, req, linimp::StepObserver<S>(observer));

  if (!a.manifest.empty()) {
    json m;
    m["problem"] = {{"name", a.problem.name}, {"dim", problem.dim()}};
    if (a.problem.q) m["problem"]["q"] = *a.problem.q;
    if (a.problem.J) m["problem"]["J"] = *a.problem.J;
    if (a.problem.points) m["problem"]["points"] = *a.problem.points;
    if (a.problem.u0) m["problem"]["u0"] = *a.problem.u0;
    m["problem"]["soliton"] = a.problem.soliton == linimp::SolitonProfile::discrete ? "discrete" : "continuous";
    m["method"] = a.method;
    m["h"] = a.h;
    m["T"] = a.T;
    m["steps"] = r.steps;
    m["t_final"] = r.t_final;
    m["gamma_init"] = a.gamma_init;
    m["guard_violations"] = r.guard_violations;
    if (problem.exact_solution) m["max_error"] = max_error;
    m["csv"] = a.out;
    std::ofstream mf(a.manifest);
    mf << m.dump(2) << '\n';
  }
  return 0;
}

int cmd_integrate(const IntegrateArgs& a) {
  const auto problem = linimp::make_problem(a.problem);
  return std::visit([&](const auto& p) { return integrate_with(p, a); }, problem);
}

int cmd_grid(int J, const std::string& out) {
  const linimp::CompositeGrid2D grid(J);
  if (out.empty()) {
    std::cout << grid.to_json() << '\n';
  } else {
    std::ofstream(out) << grid.to_json() << '\n';
  }
  return 0;
}

int cmd_bench(const std::string& plan_file, const std::string& out, int parallel, bool include_expensive,
              const std::string& cache) {
  const auto plan = linimp::ExperimentPlan::load(plan_file);
  if (plan.expensive && !include_expensive) {
    std::cerr << plan.name << " is marked expensive; pass --include-expensive to run it\n";
    return 0;
  }
  linimp::BenchOptions opt;
  opt.parallel = parallel;
  opt.cache_dir = cache;
  const auto report = linimp::run_convergence(plan, opt);
  std::vector<linimp::TimingRow> timing;
  if (plan.timing) timing = linimp::run_timing(plan, opt);
  const fs::path dir = out.empty() ? fs::path("results") / plan.name : fs::path(out);
  linimp::write_reports(report, dir, timing);

  std::cout << plan.name << " (" << report.problem << ", " << report.metric << ", T=" << report.T << ")\n";
  for (const auto& m : report.methods) {
    std::cout << "  " << std::left << std::setw(20) << m.method << std::right;
    if (m.fit) {
      std::cout << " slope " << std::fixed << std::setprecision(3) << m.fit->slope << "  residual "
                << std::setprecision(3) << m.fit->residual << std::defaultfloat;
    } else {
      std::cout << " no fit: " << m.note;
    }
    std::cout << '\n';
  }
  for (const auto& c : report.cells) {
    if (!c.ok) std::cout << "  failed " << c.method << " h=" << c.h << ": " << c.failure << '\n';
  }
  std::cout << "results in " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearly implicit collocation methods: coefficients, runs and convergence studies"};
  app.require_subcommand(1);

  std::string nodes;
  std::string lambda;
  bool exact = false;
  bool as_json = false;

  auto* tab = app.add_subcommand("tableau", "Collocation Butcher tableau");
  tab->add_option("--nodes", nodes, "comma separated nodes, e.g. 0,1/3,2/3,1")->required();
  tab->add_flag("--exact", exact, "rational arithmetic (needs rational nodes)");
  tab->add_flag("--json", as_json, "print {s, c, A, b} as JSON");

  auto* lift = app.add_subcommand("lift", "Lift operator (D, theta) for prescribed eigenvalues");
  lift->add_option("--nodes", nodes, "comma separated nodes")->required();
  lift->add_option("--lambda", lambda, "comma separated eigenvalues, e.g. 1/2,-1/2 or 0.25+0.433i")->required();
  lift->add_flag("--exact", exact, "rational arithmetic (rational nodes and eigenvalues)");
  lift->add_flag("--json", as_json, "print {c, lambda, y, theta, D, rho, stability} as JSON");

  IntegrateArgs ia;
  std::string soliton = "continuous";
  auto* integ = app.add_subcommand("integrate", "Run one method on one problem");
  // --h is the time step, so help is --help only
  integ->set_help_flag("--help", "Print this help message and exit");
  integ->add_option("--problem", ia.problem.name, "ode-scalar, nls-1d, nls-2d or heat-1d")->required();
  integ->add_option("--method", ia.method, "e.g. linimp:2:gauss, crank-nicolson, strang")->required();
  auto number = [](double& dst) {
    return [&dst](const std::string& text) {
      if (!linimp::is_rational_literal(text)) throw CLI::ConversionError("not a number: " + text);
      dst = linimp::to_double(linimp::parse_rational(text));
    };
  };
  integ->add_option_function<std::string>("--h", number(ia.h), "time step, e.g. 0.01 or 1/64")->required();
  integ->add_option_function<std::string>("--T", number(ia.T), "final time")->required();
  integ->add_option("--gamma-init", ia.gamma_init, "exact, frozen, backward-reference or forward-bootstrap");
  integ->add_option("--out", ia.out, "CSV file (default stdout)");
  integ->add_option("--manifest", ia.manifest, "JSON run manifest");
  integ->add_option("--rows", ia.rows, "approximate number of CSV rows");
  integ->add_option("--q", ia.problem.q, "nonlinearity strength");
  integ->add_option("--J", ia.problem.J, "2D grid refinement");
  integ->add_option("--points", ia.problem.points, "1D interior points");
  integ->add_option("--u0", ia.problem.u0, "scalar ODE initial value");
  integ->add_option("--soliton", soliton, "continuous or discrete soliton profile (nls-1d)");

  int J = 10;
  std::string grid_out;
  auto* grid = app.add_subcommand("grid", "Dump the composite 2D grid and mask as JSON");
  grid->add_option("--J", J, "cells per unit length");
  grid->add_option("--out", grid_out, "output file (default stdout)");

  auto* bench = app.add_subcommand("bench", "Convergence and timing studies");
  bench->require_subcommand(1);
  std::string plan_file;
  std::string bench_out;
  std::string cache;
  int parallel = 1;
  bool include_expensive = false;
  auto* run = bench->add_subcommand("run", "Run a plan file");
  run->add_option("plan", plan_file, "YAML plan")->required()->check(CLI::ExistingFile);
  run->add_option("--out", bench_out, "output directory (default results/<plan>)");
  run->add_option("--parallel", parallel, "worker threads for the convergence cells")->check(CLI::PositiveNumber);
  run->add_flag("--include-expensive", include_expensive, "run plans marked expensive");
  run->add_option("--cache", cache, "directory for cached reference solutions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*tab) return cmd_tableau(nodes, exact, as_json);
    if (*lift) return cmd_lift(nodes, lambda, exact, as_json);
    if (*integ) {
      if (soliton == "discrete") {
        ia.problem.soliton = linimp::SolitonProfile::discrete;
      } else if (soliton != "continuous") {
        throw linimp::InvalidArgument("--soliton must be continuous or discrete");
      }
      return cmd_integrate(ia);
    }
    if (*grid) return cmd_grid(J, grid_out);
    if (*run) return cmd_bench(plan_file, bench_out, parallel, include_expensive, cache);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
