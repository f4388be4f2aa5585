#include "cli.hpp"

#include <openssl/evp.h>
#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spinsim/bounds.hpp"
#include "spinsim/coupling.hpp"
#include "spinsim/csv.hpp"
#include "spinsim/deterministic.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/fast_sum.hpp"
#include "spinsim/model_config.hpp"
#include "spinsim/models.hpp"
#include "spinsim/parallel.hpp"
#include "spinsim/rng.hpp"
#include "spinsim/simulators.hpp"
#include "spinsim/tree_sum.hpp"

#ifndef SPINSIM_GIT_DESCRIBE
#define SPINSIM_GIT_DESCRIBE "unknown"
#endif

namespace spinsim::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Flags {
  std::string model;
  std::string method;
  std::string methods;
  std::string init;
  std::string phi;
  double delta = 0.0;
  double t_end = 1.0;
  double sample_every = 0.0;
  double h = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::string snapshots = "none";
  std::string out = ".";
  std::string exponents = "5,6,7";
  std::size_t reps = 3;
  std::string sizes = "256,1024,4096";
};

/// Run parameters after merging the config file with command-line flags.
struct Settings {
  json model_spec;
  fs::path base_dir;
  std::string method;
  std::string methods;
  double delta = 0.0;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  double sample_every = 0.0;
  std::string init = "bernoulli:0.5";
  std::size_t replicates = 0;
  std::string snapshots = "none";
  double h = 0.0;
  std::string phi;

  json echo() const {
    return json{{"model", model_spec},         {"method", method},   {"methods", methods},
                {"delta", delta},              {"t_end", t_end},     {"seed", seed},
                {"sample_every", sample_every}, {"init", init},       {"replicates", replicates},
                {"snapshots", snapshots},      {"h", h},             {"phi", phi}};
  }
};

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  const fs::path& dir() const noexcept { return dir_; }
  fs::path path(const std::string& name) const { return dir_ / name; }
  void add(const std::string& name) { files_.push_back(name); }
  const std::vector<std::string>& files() const noexcept { return files_; }

  void csv(const std::string& name, const CsvTable& table) {
    write_csv(path(name), table);
    add(name);
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[digest[i] >> 4];
    s += hex[digest[i] & 15];
  }
  return s;
}

json host_info() {
  json h;
  char name[256] = {};
  if (gethostname(name, sizeof name - 1) == 0) h["hostname"] = name;
  utsname u{};
  if (uname(&u) == 0) {
    h["os"] = std::string(u.sysname) + " " + u.release;
    h["machine"] = u.machine;
  }
  h["hardware_threads"] = std::thread::hardware_concurrency();
  h["worker_threads"] = worker_count();
  return h;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(what + ": \"" + text + "\" is not a number");
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v < 1.0 || v != std::floor(v)) throw ConfigError(what + ": expected a positive integer");
  return static_cast<std::size_t>(v);
}

template <typename T>
void take(const json& spec, const char* key, T& target) {
  if (!spec.contains(key)) return;
  try {
    target = spec.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: field \"") + key + "\" has the wrong type");
  }
}

Settings resolve_settings(const Flags& f, const CLI::App& sub, bool needs_model) {
  Settings s;
  if (!f.model.empty()) {
    std::ifstream in(f.model);
    if (!in) throw ConfigError("cannot open model config: " + f.model);
    json spec;
    try {
      spec = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("model config " + f.model + " is not valid JSON: " + e.what());
    }
    if (!spec.is_object()) throw ConfigError("model config must be a JSON object");
    s.model_spec = spec;
    s.base_dir = fs::path(f.model).parent_path();
    take(spec, "method", s.method);
    if (spec.contains("methods") && spec.at("methods").is_array()) {
      std::string joined;
      for (const auto& m : spec.at("methods")) {
        if (!m.is_string()) throw ConfigError("config: field \"methods\" has the wrong type");
        joined += (joined.empty() ? "" : ",") + m.get<std::string>();
      }
      s.methods = joined;
    } else {
      take(spec, "methods", s.methods);
    }
    take(spec, "delta", s.delta);
    take(spec, "t_end", s.t_end);
    take(spec, "seed", s.seed);
    take(spec, "sample_every", s.sample_every);
    take(spec, "init", s.init);
    take(spec, "replicates", s.replicates);
    take(spec, "snapshots", s.snapshots);
    take(spec, "h", s.h);
  } else if (needs_model) {
    throw ConfigError("missing required flag --model");
  }
  auto given = [&sub](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--method")) s.method = f.method;
  if (given("--methods")) s.methods = f.methods;
  if (given("--delta")) s.delta = f.delta;
  if (given("--t-end")) s.t_end = f.t_end;
  if (given("--seed")) s.seed = f.seed;
  if (given("--sample-every")) s.sample_every = f.sample_every;
  if (given("--init")) s.init = f.init;
  if (given("--replicates")) s.replicates = f.replicates;
  if (given("--snapshots")) s.snapshots = f.snapshots;
  if (given("--h")) s.h = f.h;
  if (given("--phi")) s.phi = f.phi;
  if (s.snapshots != "none" && s.snapshots != "pbm") {
    throw ConfigError("snapshots must be \"none\" or \"pbm\"");
  }
  return s;
}

SimConfig make_sim_config(const Settings& s) {
  SimConfig cfg;
  cfg.t_end = s.t_end;
  cfg.delta = s.delta;
  cfg.seed = s.seed;
  cfg.sample_every = s.sample_every;
  cfg.init = InitSpec::parse(s.init);
  cfg.record_snapshots = s.snapshots == "pbm";
  return cfg;
}

std::vector<double> read_phi(const std::string& file, std::size_t n) {
  if (file.empty()) return {};
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open weight vector file: " + file);
  std::vector<double> phi;
  std::string token;
  while (in >> token) {
    for (const auto& item : split_list(token)) phi.push_back(parse_number(item, "phi"));
  }
  if (phi.size() != n) {
    throw ConfigError("weight vector has " + std::to_string(phi.size()) + " entries, model has " +
                      std::to_string(n));
  }
  return phi;
}

void require_delta(const Settings& s, const std::string& method) {
  if (!(s.delta > 0.0)) {
    throw ConfigError("missing required field \"delta\" (positive) for method " + method);
  }
}

// Lattice models get one PBM per sample time; other layouts one raster
// image whose rows are sample times.
void write_snapshots(Outputs& out, const std::string& label, const TrajectoryRecord& rec,
                     const RateModel& model) {
  if (rec.snapshots.empty()) return;
  const auto lattice = model.lattice();
  if (lattice && lattice->rows > 1) {
    fs::create_directories(out.path("snapshots"));
    for (std::size_t j = 0; j < rec.snapshots.size(); ++j) {
      char name[64];
      std::snprintf(name, sizeof name, "snapshots/%s_%05zu.pbm", label.c_str(), j);
      write_pbm(out.path(name), rec.snapshots[j].bits(), lattice->rows, lattice->cols);
      out.add(name);
    }
    return;
  }
  const std::size_t n = model.size();
  std::vector<std::uint8_t> raster;
  raster.reserve(rec.snapshots.size() * n);
  for (const auto& s : rec.snapshots) raster.insert(raster.end(), s.bits().begin(), s.bits().end());
  const std::string name = "raster_" + label + ".pbm";
  write_pbm(out.path(name), raster, rec.snapshots.size(), n);
  out.add(name);
}

CsvTable trajectory_table(const TrajectoryRecord& rec) {
  std::vector<double> events(rec.events_cum.begin(), rec.events_cum.end());
  return make_numeric_table({"t", "occupancy", "events_cum"}, {rec.times, rec.occupancy, events});
}

void cmd_simulate(const Settings& s, Outputs& out, json& summary) {
  const auto model = load_model(s.model_spec, s.base_dir);
  if (s.method.empty()) throw ConfigError("missing required field \"method\"");
  SimConfig cfg = make_sim_config(s);
  TrajectoryRecord rec;
  if (s.method == "tau-leap") {
    require_delta(s, s.method);
    TauLeapResult r = simulate_poisson_tau_leap(*model, cfg);
    summary["invalid_state_count"] = r.invalid_state_count;
    summary["invalid_step_count"] = r.invalid_step_count;
    summary["steps"] = r.steps;
    rec = std::move(r.record);
  } else {
    const Method m = parse_method(s.method);
    if (m != Method::exact) require_delta(s, s.method);
    switch (m) {
      case Method::exact: rec = simulate_exact(*model, cfg); break;
      case Method::euler: rec = simulate_euler(*model, cfg); break;
      case Method::midpoint: rec = simulate_midpoint(*model, cfg); break;
    }
  }
  out.csv("trajectory.csv", trajectory_table(rec));
  write_snapshots(out, s.method, rec, *model);
  summary["n"] = model->size();
  summary["event_count"] = rec.event_count;
  summary["samples"] = rec.times.size();
  summary["wall_ns"] = rec.wall_ns;
}

std::vector<MethodSpec> parse_method_list(const Settings& s) {
  const std::string text = s.methods.empty() ? (s.method.empty() ? "euler,midpoint" : s.method)
                                             : s.methods;
  std::vector<MethodSpec> specs;
  std::map<std::string, int> seen;
  for (const auto& item : split_list(text)) {
    const auto at = item.find('@');
    MethodSpec spec;
    spec.method = parse_method(item.substr(0, at));
    spec.delta = at == std::string::npos ? s.delta : parse_number(item.substr(at + 1), item);
    if (spec.method != Method::exact && !(spec.delta > 0.0)) {
      throw ConfigError("missing required field \"delta\" (positive) for method " + item);
    }
    ++seen[method_name(spec.method)];
    specs.push_back(spec);
  }
  if (specs.empty()) throw ConfigError("methods list is empty");
  for (auto& spec : specs) {
    spec.label = method_name(spec.method);
    if (seen[spec.label] > 1) {
      std::ostringstream os;
      os << spec.label << '@' << spec.delta;
      spec.label = os.str();
    }
  }
  return specs;
}

void cmd_couple(const Settings& s, Outputs& out, json& summary) {
  const auto model = load_model(s.model_spec, s.base_dir);
  const std::vector<MethodSpec> specs = parse_method_list(s);
  SimConfig cfg = make_sim_config(s);
  const std::vector<double> phi = read_phi(s.phi, model->size());
  const CoupledRun run = couple_run(*model, cfg, specs, phi);

  std::vector<std::string> header{"t"};
  std::vector<std::vector<double>> cols{run.errors.times};
  for (const auto& m : run.errors.methods) {
    header.push_back("frac_diff_" + m.spec.label);
    cols.push_back(m.frac_diff);
  }
  for (const auto& m : run.errors.methods) {
    header.push_back("cummax_" + m.spec.label);
    cols.push_back(m.cummax_frac_diff);
  }
  for (const auto& m : run.errors.methods) {
    header.push_back("normerr_" + m.spec.label);
    cols.push_back(m.normalized_error);
  }
  out.csv("errors.csv", make_numeric_table(header, cols));

  std::vector<std::string> occ_header{"t"};
  std::vector<std::vector<double>> occ_cols{run.errors.times};
  for (std::size_t p = 0; p < run.specs.size(); ++p) {
    occ_header.push_back("occupancy_" + run.specs[p].label);
    occ_cols.push_back(run.records[p].occupancy);
  }
  out.csv("occupancy.csv", make_numeric_table(occ_header, occ_cols));
  for (std::size_t p = 0; p < run.specs.size(); ++p) {
    write_snapshots(out, run.specs[p].label, run.records[p], *model);
  }

  json events = json::object();
  for (std::size_t p = 0; p < run.specs.size(); ++p) {
    events[run.specs[p].label] = run.records[p].event_count;
  }
  summary["n"] = model->size();
  summary["event_count"] = events;

  if (s.replicates > 0) {
    const auto grid = std::find_if(specs.begin(), specs.end(),
                                   [](const MethodSpec& m) { return m.method != Method::exact; });
    if (grid == specs.end()) throw ConfigError("normalized errors need a non-exact method");
    cfg.record_snapshots = false;
    const NormalizedErrorSeries ne =
        normalized_error_experiment(*model, cfg, *grid, s.replicates, phi);
    out.csv("normerr.csv",
            make_numeric_table({"t", "observed_mean", "observed_stderr", "predicted"},
                               {ne.times, ne.observed_mean, ne.observed_stderr, ne.predicted}));
    summary["normerr_method"] = grid->label;
    summary["replicates"] = ne.replicates;
  }
}

void cmd_ode(const Settings& s, Outputs& out, json& summary) {
  const auto model = load_model(s.model_spec, s.base_dir);
  const std::size_t n = model->size();
  const InitSpec init = InitSpec::parse(s.init);
  const RealState rho0 = initial_mean(init, n);
  const double h = s.h > 0.0 ? s.h : default_ode_step(s.t_end, s.delta);
  const auto steps = static_cast<std::size_t>(std::ceil(s.t_end / h - 1e-9));
  std::size_t stride = std::max<std::size_t>(1, (steps + 199) / 200);
  if (s.sample_every > 0.0) {
    stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s.sample_every / h)));
  }

  auto stats = [](const OdeSolution& sol, bool absolute) {
    std::vector<double> mean, lo, hi;
    for (const auto& st : sol.states) {
      double sum = 0.0, mn = INFINITY, mx = -INFINITY;
      for (double v : st) {
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, absolute ? std::abs(v) : v);
      }
      mean.push_back(sum / static_cast<double>(st.size()));
      lo.push_back(mn);
      hi.push_back(mx);
    }
    return std::array<std::vector<double>, 3>{mean, lo, hi};
  };

  const OdeSolution rho = solve_rho(*model, rho0, s.t_end, h, stride);
  const auto rs = stats(rho, false);
  out.csv("rho.csv", make_numeric_table({"t", "mean_rho", "min", "max"}, {rho.times, rs[0], rs[1], rs[2]}));

  const OdeSolution e = solve_error_field(*model, rho0, s.t_end, h, stride);
  const auto es = stats(e, true);
  out.csv("efield.csv", make_numeric_table({"t", "mean_E", "sup_abs_E"}, {e.times, es[0], es[2]}));

  if (s.delta > 0.0) {
    const auto dstride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(s.t_end / s.delta / 200.0 - 1e-9)));
    const OdeSolution rd = solve_rho_delta(*model, rho0, s.delta, s.t_end, dstride);
    const auto ds = stats(rd, false);
    out.csv("rho_delta.csv",
            make_numeric_table({"t", "mean_rho", "min", "max"}, {rd.times, ds[0], ds[1], ds[2]}));
  }
  summary["n"] = n;
  summary["solver_step"] = rho.solver_step;
  summary["max_excursion"] = std::max(rho.max_excursion, e.max_excursion);
  summary["sup_abs_E"] = *std::max_element(es[2].begin(), es[2].end());
  summary["e_growth_bound"] = e_growth_bound(model->norm_constants(), s.t_end);
}

json norms_json(const NormConstants& m) {
  return json{{"q_inf", m.q_inf},
              {"dstar_q_1", m.dstar_q_1},
              {"d_q_1", m.d_q_1},
              {"dstar_q_inf", m.dstar_q_inf},
              {"dstar_q_21", m.dstar_q_21},
              {"gamma_n", m.gamma_n},
              {"big_gamma_n", m.big_gamma_n},
              {"upper_bound", m.upper_bound}};
}

void cmd_bounds(const Settings& s, Outputs& out, json& summary) {
  const auto model = load_model(s.model_spec, s.base_dir);
  if (!(s.delta > 0.0)) throw ConfigError("missing required field \"delta\" (positive)");
  const BoundReport r = evaluate_bounds(model->norm_constants(), model->size(), s.delta, s.t_end);
  const json report{{"model", model->name()},
                    {"n", r.n},
                    {"delta", r.delta},
                    {"t_end", r.t_end},
                    {"norms", norms_json(r.norms)},
                    {"euler_bound", r.euler_bound},
                    {"midpoint_alpha", r.midpoint_alpha},
                    {"midpoint_bound", r.midpoint_bound},
                    {"e_growth_bound", r.e_growth_bound}};
  std::ofstream f(out.path("bounds.json"), std::ios::binary | std::ios::trunc);
  f << report.dump(2) << '\n';
  if (!f) throw std::runtime_error("cannot write bounds.json");
  f.close();
  out.add("bounds.json");
  summary = report;
}

void cmd_bench(const Flags& f, const Settings& s, Outputs& out, json& summary) {
  BenchOptions opt;
  opt.exponents.clear();
  for (const auto& e : split_list(f.exponents)) opt.exponents.push_back(parse_count(e, "exponents"));
  opt.reps = f.reps;
  opt.t_end = s.t_end;
  opt.seed = s.seed;
  const std::vector<BenchRow> rows = bench_speedup(opt);
  CsvTable t({"m", "n", "method", "delta", "mean_wall_ns", "speedup_vs_exact", "speedup_stderr",
              "reps"});
  for (const auto& r : rows) {
    t.add_row({std::to_string(r.m), std::to_string(r.n), r.method, format_double(r.delta),
               format_double(r.mean_wall_ns), format_double(r.speedup_vs_exact),
               format_double(r.speedup_stderr), std::to_string(r.reps)});
  }
  out.csv("bench.csv", t);
  summary["rows"] = rows.size();
}

template <typename F>
double mean_wall_ns(std::size_t reps, F&& body) {
  double total = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    total += static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count());
  }
  return total / static_cast<double>(reps);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void cmd_fastsum_bench(const Flags& f, const Settings& s, Outputs& out, json& summary) {
  const double sigma = 20.0;
  CsvTable t({"n", "mode", "method", "mean_wall_ns", "max_abs_diff"});
  for (const auto& item : split_list(f.sizes)) {
    const std::size_t n = parse_count(item, "sizes");
    const double nd = static_cast<double>(n);
    const double norm = 2.0 * sigma / (nd * std::sqrt(M_PI));
    const double precision = (sigma / nd) * (sigma / nd);
    std::vector<double> x(n);
    const CounterRng rng(s.seed);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(make_stream(StreamTag::test, 0), i) < 0.5 ? 1.0 : 0.0;
    }
    for (const bool periodic : {false, true}) {
      const std::string mode = periodic ? "periodic" : "zero-padded";
      const KernelSpec kernel = KernelSpec::gaussian({1, n}, periodic, norm, precision);
      std::vector<double> ref = convolve_direct(kernel, x, Exec::serial);
      auto row = [&](const std::string& method, double wall, const std::vector<double>& v) {
        t.add_row({std::to_string(n), mode, method, format_double(wall),
                   format_double(max_abs_diff(v, ref))});
      };
      std::vector<double> v;
      if (n <= 8192) {
        const DenseMatrix dense = DenseMatrix::from_kernel(kernel);
        const double w = mean_wall_ns(f.reps, [&] { v = sum_dense(dense, x); });
        row("dense", w, v);
      }
      double w = mean_wall_ns(f.reps, [&] { v = convolve_direct(kernel, x, Exec::serial); });
      row("direct-serial", w, v);
      w = mean_wall_ns(f.reps, [&] { v = convolve_direct(kernel, x, Exec::parallel); });
      row("direct-parallel", w, v);
      const FftConvolver conv(kernel);
      std::vector<double> fft_out(n);
      w = mean_wall_ns(f.reps, [&] { conv.apply(x, fft_out); });
      row("fft", w, fft_out);
      if (!periodic) {
        PointCloud pts;
        pts.dims = 1;
        for (std::size_t i = 0; i < n; ++i) pts.coords.push_back({static_cast<double>(i), 0.0, 0.0});
        const GaussianWeights gw{precision, norm};
        w = mean_wall_ns(f.reps, [&] { v = sum_tree(pts, gw, x, TreeConfig{}); });
        row("tree", w, v);
      }
    }
  }
  out.csv("fastsum.csv", t);
  summary["rows"] = t.rows();
}

void write_manifest(const Outputs& out, const std::string& subcommand,
                    const std::vector<std::string>& argv, const json& config,
                    const std::string& started, int exit_code, const std::string& error,
                    const json& summary) {
  json files = json::array();
  for (const auto& name : out.files()) {
    const fs::path p = out.path(name);
    files.push_back({{"file", name}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  json m{{"tool", "spinsim"},
         {"subcommand", subcommand},
         {"argv", argv},
         {"status", exit_code == 0 ? "ok" : "error"},
         {"exit_code", exit_code},
         {"git_describe", SPINSIM_GIT_DESCRIBE},
         {"host", host_info()},
         {"seed", config.contains("seed") ? config["seed"] : json()},
         {"started_at", started},
         {"finished_at", iso_now()},
         {"config", config},
         {"summary", summary},
         {"outputs", files}};
  if (!error.empty()) m["error"] = error;
  std::ofstream f(out.path("manifest.json"), std::ios::binary | std::ios::trunc);
  f << m.dump(2) << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_threads_from_env();
  CLI::App app{"spinsim: exact and site-decoupled simulation of long-range spin systems"};
  app.require_subcommand(1);
  Flags f;

  auto add_run_flags = [&f](CLI::App* sub) {
    sub->add_option("--model", f.model, "model/run config (JSON)");
    sub->add_option("--t-end", f.t_end, "time horizon");
    sub->add_option("--delta", f.delta, "grid step");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--sample-every", f.sample_every, "recording cadence");
    sub->add_option("--init", f.init, "bernoulli:<p> or fraction:<p>");
    sub->add_option("--out", f.out, "output directory");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "simulate one process");
  add_run_flags(simulate);
  simulate->add_option("--method", f.method, "exact, euler, midpoint or tau-leap");
  simulate->add_option("--snapshots", f.snapshots, "none or pbm");

  CLI::App* couple = app.add_subcommand("couple", "couple methods through shared Poisson streams");
  add_run_flags(couple);
  couple->add_option("--method", f.method, "single method to couple with exact");
  couple->add_option("--methods", f.methods, "comma list, entries name or name@delta");
  couple->add_option("--snapshots", f.snapshots, "none or pbm");
  couple->add_option("--replicates", f.replicates, "replicates for normerr.csv");
  couple->add_option("--phi", f.phi, "weight vector file for normalized errors");

  CLI::App* ode = app.add_subcommand("ode", "deterministic density and error field");
  ode->set_help_flag("--help", "Print this help message and exit");
  add_run_flags(ode);
  ode->add_option("--h", f.h, "RK4 step");

  CLI::App* bounds = app.add_subcommand("bounds", "evaluate the analytic error bounds");
  add_run_flags(bounds);

  CLI::App* bench = app.add_subcommand("bench", "wall-time speedup on Ising-Kac grids");
  bench->add_option("--exponents", f.exponents, "grid sides 2^m, comma list of m");
  bench->add_option("--reps", f.reps, "repetitions")->check(CLI::PositiveNumber);
  bench->add_option("--t-end", f.t_end, "time horizon");
  bench->add_option("--seed", f.seed, "master seed");
  bench->add_option("--out", f.out, "output directory");

  CLI::App* fastsum = app.add_subcommand("fastsum-bench", "compare potential summation methods");
  fastsum->add_option("--sizes", f.sizes, "comma list of lattice sizes");
  fastsum->add_option("--reps", f.reps, "repetitions")->check(CLI::PositiveNumber);
  fastsum->add_option("--seed", f.seed, "seed of the test configuration");
  fastsum->add_option("--out", f.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "spinsim: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  std::vector<std::string> args(argv, argv + argc);
  const std::string started = iso_now();

  Outputs outputs(f.out);
  try {
    fs::create_directories(outputs.dir());
  } catch (const std::exception& e) {
    err << "spinsim: cannot create output directory " << f.out << ": " << e.what() << '\n';
    return 1;
  }

  json config = json::object();
  json summary = json::object();
  int code = 0;
  std::string error;
  try {
    const bool needs_model = name != "bench" && name != "fastsum-bench";
    const Settings s = resolve_settings(f, *sub, needs_model);
    config = s.echo();
    if (name == "simulate") {
      cmd_simulate(s, outputs, summary);
    } else if (name == "couple") {
      cmd_couple(s, outputs, summary);
    } else if (name == "ode") {
      cmd_ode(s, outputs, summary);
    } else if (name == "bounds") {
      cmd_bounds(s, outputs, summary);
    } else if (name == "bench") {
      config = json{{"exponents", f.exponents}, {"reps", f.reps}, {"t_end", s.t_end}, {"seed", s.seed}};
      cmd_bench(f, s, outputs, summary);
    } else {
      config = json{{"sizes", f.sizes}, {"reps", f.reps}, {"seed", s.seed}};
      cmd_fastsum_bench(f, s, outputs, summary);
    }
  } catch (const ConfigError& e) {
    code = 2;
    error = e.what();
  } catch (const std::exception& e) {
    code = 1;
    error = e.what();
  }
  if (code != 0) err << "spinsim " << name << ": " << error << '\n';
  try {
    write_manifest(outputs, name, args, config, started, code, error, summary);
  } catch (const std::exception& e) {
    err << "spinsim: failed to write manifest: " << e.what() << '\n';
    if (code == 0) code = 1;
  }
  return code;
}

}  // namespace spinsim::cli
