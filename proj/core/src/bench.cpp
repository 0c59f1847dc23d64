#include "linimp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "linimp/errors.hpp"
#include "linimp/method_spec.hpp"
#include "linimp/rational.hpp"
#include "linimp/reference.hpp"

namespace linimp {

namespace {

double parse_number(const YAML::Node& node, const std::string& what) {
  const auto text = node.as<std::string>();
  if (is_rational_literal(text)) return to_double(parse_rational(text));
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw InvalidArgument("plan field '" + what + "' is not a number: " + text);
  }
}

std::string metric_name(ErrorMetric m) {
  return m == ErrorMetric::max_over_steps ? "max-over-steps" : "final-time";
}

std::string soliton_name(SolitonProfile p) { return p == SolitonProfile::discrete ? "discrete" : "continuous"; }

std::string problem_key(const ProblemParams& p) {
  std::ostringstream k;
  k.precision(17);
  k << p.name << "|q=" << p.q.value_or(-1) << "|J=" << p.J.value_or(-1) << "|n=" << p.points.value_or(-1)
    << "|u0=" << p.u0.value_or(-1) << "|sol=" << soliton_name(p.soliton);
  return k.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Reference final states, shared between plans run in one process and
// optionally persisted as raw binary files.
class ReferenceCache {
 public:
  static ReferenceCache& instance() {
    static ReferenceCache cache;
    return cache;
  }

  template <class S>
  Vector<S> get(const std::string& key, const std::filesystem::path& dir, const std::function<Vector<S>()>& make) {
    std::shared_ptr<Entry> entry;
    {
      std::lock_guard lock(mutex_);
      auto& slot = entries_[key];
      if (!slot) slot = std::make_shared<Entry>();
      entry = slot;
    }
    std::call_once(entry->once, [&] {
      const auto file = dir.empty() ? std::filesystem::path() : dir / file_name(key);
      Vector<S> value;
      if (!file.empty() && load(file, value)) {
        entry->data = to_doubles(value);
        return;
      }
      value = make();
      entry->data = to_doubles(value);
      if (!file.empty()) {
        std::filesystem::create_directories(dir);
        std::ofstream out(file, std::ios::binary);
        const auto n = static_cast<std::int64_t>(value.size());
        out.write(reinterpret_cast<const char*>(&n), sizeof n);
        out.write(reinterpret_cast<const char*>(value.data()), static_cast<std::streamsize>(sizeof(S) * value.size()));
      }
    });
    Vector<S> out(static_cast<Eigen::Index>(entry->data.size() * sizeof(double) / sizeof(S)));
    std::memcpy(static_cast<void*>(out.data()), entry->data.data(), entry->data.size() * sizeof(double));
    return out;
  }

 private:
  struct Entry {
    std::once_flag once;
    std::vector<double> data;
  };

  static std::string file_name(const std::string& key) {
    return "reference_" + std::to_string(std::hash<std::string>{}(key)) + ".bin";
  }

  template <class S>
  static std::vector<double> to_doubles(const Vector<S>& v) {
    std::vector<double> d(v.size() * sizeof(S) / sizeof(double));
    std::memcpy(d.data(), v.data(), d.size() * sizeof(double));
    return d;
  }

  template <class S>
  static bool load(const std::filesystem::path& file, Vector<S>& value) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return false;
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || n <= 0) return false;
    value.resize(n);
    in.read(reinterpret_cast<char*>(value.data()), static_cast<std::streamsize>(sizeof(S) * n));
    return static_cast<bool>(in);
  }

  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

struct CellOutcome {
  double error = std::numeric_limits<double>::quiet_NaN();
  std::int64_t steps = 0;
  std::int64_t guard = 0;
  std::vector<EnergySample> trace;
};

template <class S>
class PlanRunner {
 public:
  PlanRunner(const ExperimentPlan& plan, const EvolutionProblem<S>& problem, const BenchOptions& options)
      : plan_(plan), problem_(problem), options_(options) {
    if (plan.metric == ErrorMetric::max_over_steps && !problem.exact_solution) {
      throw InvalidArgument("max-over-steps error needs a closed form solution");
    }
  }

  std::optional<double> reference_h() const {
    if (problem_.exact_solution) return std::nullopt;
    const double hmin = *std::min_element(plan_.h.begin(), plan_.h.end());
    const std::int64_t coarse = std::max<std::int64_t>(1, std::llround(plan_.T / hmin));
    const std::int64_t steps = plan_.h_reference ? std::llround(plan_.T / *plan_.h_reference) : 10 * coarse;
    return plan_.T / static_cast<double>(steps);
  }

  const Vector<S>& reference() {
    std::call_once(ref_once_, [&] {
      if (problem_.exact_solution) {
        ref_ = problem_.exact_solution(plan_.T);
        return;
      }
      const double h_ref = *reference_h();
      std::ostringstream key;
      key.precision(17);
      key << problem_key(plan_.problem) << "|T=" << plan_.T << "|href=" << h_ref << "|gauss5";
      ref_ = ReferenceCache::instance().get<S>(key.str(), options_.cache_dir, [&] {
        RunOptions opt;
        opt.T = plan_.T;
        opt.h = h_ref;
        opt.max_snapshots = 2;
        return gauss_reference(problem_, problem_.initial, opt).final_u;
      });
    });
    return ref_;
  }

  CellOutcome run(const MethodSpec& method, double h) {
    RunRequest req;
    req.options.T = plan_.T;
    req.options.h = h;
    req.options.max_snapshots = 2;
    req.gamma_init = plan_.gamma_init;

    CellOutcome out;
    double max_err = 0.0;
    const bool track_max = plan_.metric == ErrorMetric::max_over_steps;
    const StepPlan sp = plan_steps(req.options);
    const std::int64_t stride = std::max<std::int64_t>(1, sp.steps / 1000);
    StepObserver<S> observer;
    if (track_max || plan_.energy_trace) {
      observer = [&](std::int64_t step, double t, const Vector<S>& u, const GammaMatrix<S>* gamma) {
        if (track_max) max_err = std::max(max_err, problem_.norm(u - problem_.exact_solution(t)));
        if (plan_.energy_trace && (step % stride == 0 || step == sp.steps)) {
          EnergySample e;
          e.t = t;
          const GammaMatrix<S> none;
          for (const auto& en : problem_.energies) e.values[en.name] = en.eval(u, gamma ? *gamma : none);
          if constexpr (!is_complex_v<S>) e.min_u = u.minCoeff();
          out.trace.push_back(std::move(e));
        }
      };
    }
    const RunResult<S> r = run_method(method, problem_, problem_.initial, req, observer);
    out.steps = r.steps;
    out.guard = r.guard_violations;
    out.error = track_max ? max_err : problem_.norm(r.final_u - reference());
    return out;
  }

 private:
  const ExperimentPlan& plan_;
  const EvolutionProblem<S>& problem_;
  BenchOptions options_;
  std::once_flag ref_once_;
  Vector<S> ref_;
};

template <class S>
CellResult run_cell(PlanRunner<S>& runner, const MethodSpec& method, double h, int repetitions) {
  CellResult cell;
  cell.method = method.label;
  cell.h = h;
  try {
    for (int rep = 0; rep < std::max(1, repetitions); ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      CellOutcome o = runner.run(method, h);
      const auto t1 = std::chrono::steady_clock::now();
      cell.timings.push_back(std::chrono::duration<double>(t1 - t0).count());
      cell.error = o.error;
      cell.steps = o.steps;
      cell.guard_violations = o.guard;
      cell.energy_trace = std::move(o.trace);
    }
    cell.seconds = median(cell.timings);
    cell.ok = std::isfinite(cell.error);
    if (!cell.ok) cell.failure = "non-finite error";
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.failure = e.what();
    cell.error = std::numeric_limits<double>::quiet_NaN();
  }
  return cell;
}

template <class S>
ConvergenceReport converge(const ExperimentPlan& plan, const EvolutionProblem<S>& problem,
                           const BenchOptions& options) {
  ConvergenceReport report;
  report.plan = plan.name;
  report.problem = problem.name;
  report.metric = metric_name(plan.metric);
  report.T = plan.T;

  std::vector<MethodSpec> specs;
  for (const auto& m : plan.methods) specs.push_back(MethodSpec::parse(m));
  if (specs.empty()) return report;

  PlanRunner<S> runner(plan, problem, options);
  report.reference_h = runner.reference_h();
  runner.reference();

  const std::size_t n_cells = specs.size() * plan.h.size();
  report.cells.resize(n_cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n_cells; k = next++) {
      report.cells[k] = run_cell(runner, specs[k / plan.h.size()], plan.h[k % plan.h.size()], plan.repetitions);
    }
  };
  const int threads = std::max(1, std::min<int>(options.parallel, static_cast<int>(n_cells)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& spec : specs) {
    MethodSummary s;
    s.method = spec.label;
    std::vector<std::pair<double, double>> pts;
    for (const auto& c : report.cells) {
      if (c.method == spec.label && c.ok) pts.emplace_back(c.h, c.error);
    }
    try {
      s.fit = fit_slope(pts);
    } catch (const InsufficientData& e) {
      s.note = e.what();
    }
    report.methods.push_back(std::move(s));
  }
  return report;
}

template <class S>
std::vector<TimingRow> timing(const ExperimentPlan& plan, const EvolutionProblem<S>& problem,
                              const BenchOptions& options) {
  std::vector<TimingRow> rows;
  PlanRunner<S> runner(plan, problem, options);
  if (!plan.methods.empty()) runner.reference();
  for (const auto& name : plan.methods) {
    const MethodSpec spec = MethodSpec::parse(name);
    for (double h : plan.h) {
      const CellResult c = run_cell(runner, spec, h, std::max(3, plan.repetitions));
      if (c.ok) rows.push_back({c.method, c.h, c.error, c.seconds});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const TimingRow& a, const TimingRow& b) { return a.error < b.error; });
  return rows;
}

std::string file_safe(std::string s) {
  for (char& ch : s) {
    if (ch == ':' || ch == '/' || ch == ' ') ch = '_';
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentPlan::validate() const {
  if (!(T > 0.0)) throw InvalidArgument("plan final time must be positive");
  if (h.size() < 3) throw InvalidArgument("plan needs at least 3 step sizes");
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(h[k] > 0.0)) throw InvalidArgument("step sizes must be positive");
    if (k > 0 && !(h[k] < h[k - 1])) throw InvalidArgument("step sizes must be strictly decreasing");
  }
  if (repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
}

ExperimentPlan ExperimentPlan::from_yaml(const std::string& text) {
  ExperimentPlan plan;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InvalidArgument(std::string("cannot parse plan: ") + e.what());
  }
  if (!root["name"] || !root["problem"]) throw InvalidArgument("plan needs 'name' and 'problem'");
  plan.name = root["name"].as<std::string>();
  if (root["description"]) plan.description = root["description"].as<std::string>();

  const auto prob = root["problem"];
  plan.problem.name = prob["name"].as<std::string>();
  if (prob["q"]) plan.problem.q = parse_number(prob["q"], "q");
  if (prob["J"]) plan.problem.J = prob["J"].as<int>();
  if (prob["points"]) plan.problem.points = prob["points"].as<int>();
  if (prob["u0"]) plan.problem.u0 = parse_number(prob["u0"], "u0");
  if (prob["soliton"]) {
    const auto s = prob["soliton"].as<std::string>();
    if (s == "discrete") {
      plan.problem.soliton = SolitonProfile::discrete;
    } else if (s != "continuous") {
      throw InvalidArgument("soliton must be 'continuous' or 'discrete'");
    }
  }

  if (root["methods"]) {
    for (const auto& m : root["methods"]) plan.methods.push_back(m.as<std::string>());
  }
  const auto h = root["h"];
  if (!h) throw InvalidArgument("plan needs an 'h' schedule");
  if (h.IsSequence()) {
    for (const auto& v : h) plan.h.push_back(parse_number(v, "h"));
  } else {
    const double start = parse_number(h["start"], "h.start");
    const double ratio = h["ratio"] ? parse_number(h["ratio"], "h.ratio") : 0.5;
    const int levels = h["levels"].as<int>();
    for (int k = 0; k < levels; ++k) plan.h.push_back(start * std::pow(ratio, k));
  }
  plan.T = parse_number(root["T"], "T");
  if (root["gamma_init"]) plan.gamma_init = parse_gamma_init(root["gamma_init"].as<std::string>());
  if (root["metric"]) {
    const auto m = root["metric"].as<std::string>();
    if (m == "max-over-steps") {
      plan.metric = ErrorMetric::max_over_steps;
    } else if (m == "final-time") {
      plan.metric = ErrorMetric::final_time;
    } else {
      throw InvalidArgument("unknown error metric '" + m + "'");
    }
  }
  if (root["repetitions"]) plan.repetitions = root["repetitions"].as<int>();
  if (root["timing"]) plan.timing = root["timing"].as<bool>();
  if (root["expensive"]) plan.expensive = root["expensive"].as<bool>();
  if (root["h_reference"]) plan.h_reference = parse_number(root["h_reference"], "h_reference");
  if (root["energy_trace"]) plan.energy_trace = root["energy_trace"].as<bool>();
  plan.validate();
  return plan;
}

ExperimentPlan ExperimentPlan::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot open plan " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_yaml(buf.str());
}

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points, double floor) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [h, e] : points) {
    if (h > 0.0 && std::isfinite(h) && std::isfinite(e) && e > floor) logs.emplace_back(std::log10(h), std::log10(e));
  }
  if (logs.size() < 3) {
    throw InsufficientData("slope fit needs 3 usable points, got " + std::to_string(logs.size()));
  }
  const double n = static_cast<double>(logs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw InsufficientData("slope fit needs distinct step sizes");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : logs) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.points = static_cast<int>(logs.size());
  return fit;
}

std::vector<CellResult> ConvergenceReport::cells_of(const std::string& method) const {
  std::vector<CellResult> out;
  for (const auto& c : cells) {
    if (c.method == method) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const CellResult& a, const CellResult& b) { return a.h > b.h; });
  return out;
}

const MethodSummary* ConvergenceReport::summary_of(const std::string& method) const {
  for (const auto& m : methods) {
    if (m.method == method) return &m;
  }
  return nullptr;
}

ConvergenceReport run_convergence(const ExperimentPlan& plan, const BenchOptions& options) {
  plan.validate();
  const AnyProblem problem = make_problem(plan.problem);
  return std::visit([&](const auto& p) { return converge(plan, p, options); }, problem);
}

std::vector<TimingRow> run_timing(const ExperimentPlan& plan, const BenchOptions& options) {
  plan.validate();
  const AnyProblem problem = make_problem(plan.problem);
  return std::visit([&](const auto& p) { return timing(plan, p, options); }, problem);
}

void write_reports(const ConvergenceReport& report, const std::filesystem::path& dir,
                   const std::vector<TimingRow>& timing_rows) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "report.csv");
    csv.precision(17);
    csv << "method,h,steps,error,seconds,ok,guard_violations,failure\n";
    for (const auto& c : report.cells) {
      std::string failure = c.failure;
      std::replace(failure.begin(), failure.end(), ',', ';');
      csv << c.method << ',' << c.h << ',' << c.steps << ',' << c.error << ',' << c.seconds << ','
          << (c.ok ? 1 : 0) << ',' << c.guard_violations << ',' << failure << '\n';
    }
  }

  nlohmann::json j;
  j["plan"] = report.plan;
  j["problem"] = report.problem;
  j["metric"] = report.metric;
  j["T"] = report.T;
  j["reference_h"] = report.reference_h ? nlohmann::json(*report.reference_h) : nlohmann::json(nullptr);
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const auto& c : report.cells) {
    j["cells"].push_back({{"method", c.method},
                          {"h", c.h},
                          {"steps", c.steps},
                          {"error", num(c.error)},
                          {"seconds", c.seconds},
                          {"timings", c.timings},
                          {"ok", c.ok},
                          {"guard_violations", c.guard_violations},
                          {"failure", c.failure}});
  }
  for (const auto& m : report.methods) {
    nlohmann::json s{{"method", m.method}, {"note", m.note}};
    if (m.fit) {
      s["slope"] = m.fit->slope;
      s["intercept"] = m.fit->intercept;
      s["residual"] = m.fit->residual;
      s["points"] = m.fit->points;
    }
    j["methods"].push_back(std::move(s));
  }
  for (const auto& r : timing_rows) {
    j["timing"].push_back({{"method", r.method}, {"h", r.h}, {"error", r.error}, {"seconds", r.seconds}});
  }
  std::ofstream(dir / "report.json") << j.dump(2) << '\n';

  std::map<std::string, std::vector<const CellResult*>> by_method;
  for (const auto& c : report.cells) by_method[c.method].push_back(&c);
  for (const auto& [method, cells] : by_method) {
    std::ofstream dat(dir / (file_safe(method) + ".dat"));
    dat.precision(17);
    dat << "# " << method << "\n# log10(h) log10(error) seconds\n";
    for (const auto* c : cells) {
      if (c->ok && c->error > 0.0) dat << std::log10(c->h) << ' ' << std::log10(c->error) << ' ' << c->seconds << '\n';
    }
    for (const auto* c : cells) {
      if (c->energy_trace.empty()) continue;
      std::ofstream e(dir / (file_safe(method) + "_h" + std::to_string(c->steps) + "_energy.dat"));
      e.precision(17);
      e << "# t";
      for (const auto& [name, v] : c->energy_trace.front().values) e << ' ' << name;
      e << " min_u\n";
      for (const auto& s : c->energy_trace) {
        e << s.t;
        for (const auto& [name, v] : s.values) e << ' ' << v;
        e << ' ' << s.min_u << '\n';
      }
    }
  }
}

}  // namespace linimp
