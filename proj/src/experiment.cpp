#include "freqalloc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "freqalloc/dynamics.hpp"
#include "freqalloc/error.hpp"
#include "freqalloc/oracle_bounds.hpp"
#include "freqalloc/topology_io.hpp"

#ifndef FREQALLOC_VERSION
#define FREQALLOC_VERSION "unknown"
#endif

namespace freqalloc {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

std::string join(const std::string& base, const std::string& key) { return base + "/" + key; }

void check_keys(const Json& obj, const std::string& base, std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) fail(join(base, item.key()), "unknown field");
  }
}

const Json* find(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const Json& obj, const std::string& base, const char* key, double fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(join(base, key), "must be a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) fail(join(base, key), "must be finite");
  return x;
}

std::uint64_t unsigned_int(const Json& obj, const std::string& base, const char* key, std::uint64_t fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  // Built documents store small literals as signed integers.
  const bool ok = v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0);
  if (!ok) fail(join(base, key), "must be a non-negative integer");
  return v->get<std::uint64_t>();
}

std::string text(const Json& obj, const std::string& base, const char* key, const std::string& fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(join(base, key), "must be a string");
  return v->get<std::string>();
}

const Json& object(const Json& obj, const std::string& base, const char* key) {
  static const Json empty = Json::object();
  const Json* v = find(obj, key);
  if (!v) return empty;
  if (!v->is_object()) fail(join(base, key), "must be an object");
  return *v;
}

bool is_lattice(const std::string& kind) { return kind == "rectangular" || kind == "hexagonal"; }
bool is_linear(const std::string& kind) { return kind == "ula" || kind == "random_linear"; }

// size == 0 keeps the configured dimensions.
std::shared_ptr<const Topology> build_topology(const ExperimentConfig& cfg, std::size_t size = 0) {
  const TopologySpec& t = cfg.topology;
  const PathLoss loss{cfg.p0, cfg.eta};
  if (t.kind == "ula") return std::make_shared<const Topology>(make_uniform_linear_array(size ? size : t.n, t.spacing, loss));
  if (t.kind == "random_linear") {
    return std::make_shared<const Topology>(
        make_random_linear_array(size ? size : t.n, t.spacing, t.min_sep, t.seed, loss));
  }
  if (t.kind == "rectangular") {
    return std::make_shared<const Topology>(
        make_rectangular_lattice(size ? size : t.rows, size ? size : t.cols, t.spacing, loss));
  }
  if (t.kind == "hexagonal") {
    return std::make_shared<const Topology>(
        make_hexagonal_lattice(size ? size : t.rows, size ? size : t.cols, t.spacing, loss));
  }
  // file: coordinates from disk, path loss from the config.
  const Topology raw = load_topology(t.path);
  std::vector<Point> pts(raw.positions().begin(), raw.positions().end());
  return std::make_shared<const Topology>(Topology::from_positions(std::move(pts), raw.dimension(), loss));
}

std::string default_output(const std::string& name, const char* suffix) { return name + suffix; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out;
  out.exceptions(std::ios::failbit | std::ios::badbit);
  out.open(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
}

void append_trace(std::string& csv, std::size_t replica, const SimTrace& trace) {
  for (const auto& s : trace.samples) {
    csv += std::to_string(replica);
    csv += ',';
    csv += std::to_string(s.event);
    csv += ',';
    csv += format_double(s.time);
    csv += ',';
    if (s.cluster >= 0) {
      csv += std::to_string(s.cluster) + ',' + std::to_string(s.old_band) + ',' + std::to_string(s.new_band);
    } else {
      csv += ",,";
    }
    csv += ',';
    csv += format_double(s.aggregate);
    csv += ',';
    csv += std::to_string(s.active_count);
    csv += '\n';
  }
}

const char* kTraceHeader = "replica,event_index,time,cluster,old_band,new_band,aggregate_interference,active_count\n";

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string row;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) row += ',';
    row += c;
    first = false;
  }
  row += '\n';
  return row;
}

std::string fmt(double v) { return format_double(v); }

double tau_of(const ExperimentConfig& cfg, std::size_t n) { return static_cast<double>(n) * cfg.scheduler.delta_t; }

class Outputs {
 public:
  Outputs(const ExperimentConfig& cfg, std::filesystem::path dir) : cfg_(cfg), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& bytes) {
    if (name.empty()) return;
    const auto path = dir_ / name;
    write_file(path, bytes);
    files_.push_back(path);
  }

  bool trace_wanted(std::size_t replica) const {
    return !cfg_.outputs.trace_csv.empty() &&
           (!cfg_.outputs.trace_replicas || replica < *cfg_.outputs.trace_replicas);
  }

  std::vector<std::filesystem::path> files() const { return files_; }

 private:
  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
};

struct Outcome {
  std::string status = "ok";
  Json failure;
};

void record_failure(Outcome& out, const std::string& status, Json detail) {
  if (out.status != "ok") return;
  out.status = status;
  out.failure = std::move(detail);
}

Json bound_json(const BoundReport& rep) {
  return Json{{"i_a", rep.i_a},
              {"i_o", rep.i_o},
              {"i_w", rep.i_w},
              {"ratio_aw", rep.ratio_aw},
              {"ratio_ao", finite_or_null(rep.ratio_ao)},
              {"analytic_lower", rep.analytic_lower},
              {"analytic_ratio_cap", finite_or_null(rep.analytic_ratio_cap)},
              {"active", rep.active},
              {"reference", to_string(rep.reference)},
              {"reference_is_optimal", rep.reference_is_optimal},
              {"d_min", rep.d_min},
              {"d_max", rep.d_max},
              {"spacing_note", rep.spacing_note},
              {"upper_bound_holds", rep.upper_bound_holds},
              {"ordering_holds", rep.ordering_holds},
              {"ratio_cap_holds", rep.ratio_cap_holds}};
}

// Capacity reference: the reuse pattern where one is defined, otherwise the
// exhaustive optimum when the report computed it.
std::optional<Assignment> capacity_reference(const Topology& top, const ActivityState& act, int r,
                                             const BoundReport& rep) {
  try {
    return reuse_assignment(top, r);
  } catch (const ValidationError&) {
    if (rep.reference == ReferenceKind::Exhaustive) return brute_force_optimal(top, act, r).assignment;
    return std::nullopt;
  }
}

Json run_static(const ExperimentConfig& cfg, Outputs& out, Outcome& outcome) {
  const auto top = build_topology(cfg);
  const std::size_t n = top->size();
  const ActivityState act(n);
  const auto guard = default_update_guard(n, cfg.eta);

  std::string trace_csv = kTraceHeader;
  std::string series =
      "replica,event_index,time,normalized_interference,normalized_capacity,reference_capacity\n";
  Json replicas = Json::array();
  double worst_fraction = std::numeric_limits<double>::infinity();
  double worst_gap = -std::numeric_limits<double>::infinity();
  std::size_t max_updates = 0;

  for (std::size_t k = 0; k < cfg.replicas; ++k) {
    const std::uint64_t seed = cfg.base_seed + k;
    Rng init_rng = make_rng(seed, 2);
    SimState state(top, make_initial_assignment(n, cfg.r, cfg.initial, init_rng), act, seed);
    const double initial = state.aggregate();

    std::string rows;
    auto sample = [&](const SimState& s) {
      rows += std::to_string(k) + ',' + std::to_string(s.epoch()) + ',' + fmt(s.time()) + ',' +
              fmt(s.aggregate() / static_cast<double>(n)) + ',' + fmt(normalized_capacity(s.cache(), cfg.link));
    };
    std::vector<std::size_t> row_ends;
    sample(state);
    row_ends.push_back(rows.size());

    Json entry{{"replica", k}, {"seed", seed}};
    std::optional<ConvergenceResult> result;
    try {
      result = run_to_convergence(std::move(state), cfg.scheduler, guard,
                                  [&](const SimState& s, const UpdateRecord&) {
                                    sample(s);
                                    row_ends.push_back(rows.size());
                                  });
    } catch (const ConvergenceError& e) {
      entry["converged"] = false;
      entry["error"] = e.what();
      record_failure(outcome, "non_convergence", Json{{"replica", k}, {"seed", seed}, {"message", e.what()}});
      replicas.push_back(entry);
      continue;
    }

    const auto& final_state = result->state;
    const BoundReport rep = bound_report(*top, act, final_state.assignment(), cfg.r, top->spacing());
    entry["converged"] = true;
    entry["updates"] = result->trace.size();
    entry["switches"] = result->switches;
    entry["converged_time"] = final_state.time();
    entry["bounds"] = bound_json(rep);
    entry["normalized_interference"] = rep.i_a / static_cast<double>(n);
    max_updates = std::max(max_updates, result->trace.size());
    if (rep.i_a > 0.0 && rep.i_o > 0.0) {
      const double gap = db_gap(rep.i_a, rep.i_o);
      entry["db_gap"] = gap;
      worst_gap = std::max(worst_gap, gap);
    }

    double ref_capacity = std::numeric_limits<double>::quiet_NaN();
    if (auto ref = capacity_reference(*top, act, cfg.r, rep)) {
      const CapacityReport cap = capacity_comparison(*top, act, final_state.assignment(), *ref, cfg.link);
      ref_capacity = cap.reference_normalized;
      entry["capacity"] = Json{{"normalized", cap.normalized_aggregate},
                               {"reference_normalized", cap.reference_normalized},
                               {"achieved_fraction", cap.achieved_fraction},
                               {"fraction_defined", cap.fraction_defined}};
      if (cap.fraction_defined) worst_fraction = std::min(worst_fraction, cap.achieved_fraction);
    }

    std::size_t begin = 0;
    for (std::size_t end : row_ends) {
      series.append(rows, begin, end - begin);
      series += ',' + (std::isnan(ref_capacity) ? std::string() : fmt(ref_capacity)) + '\n';
      begin = end;
    }
    if (out.trace_wanted(k)) {
      append_trace(trace_csv, k, trace_from_updates(n, initial, n, result->trace));
    }

    if (!rep.upper_bound_holds || !rep.ordering_holds) {
      record_failure(outcome, "bound_violation", Json{{"replica", k}, {"seed", seed}, {"bounds", bound_json(rep)}});
    }
    replicas.push_back(std::move(entry));
  }

  out.write(cfg.outputs.trace_csv, trace_csv);
  out.write(cfg.outputs.series_csv, series);
  return Json{{"clusters", n},
              {"update_guard", guard},
              {"max_updates", max_updates},
              {"min_capacity_fraction", finite_or_null(worst_fraction)},
              {"max_db_gap", finite_or_null(worst_gap)},
              {"replicas", std::move(replicas)}};
}

Json run_size_sweep(const ExperimentConfig& cfg, Outputs& out, Outcome& outcome) {
  std::string series = "n,algorithm,reference,upper_bound,worst_case,lower_bound,db_gap,reference_kind\n";
  Json points = Json::array();
  const bool linear = is_linear(cfg.topology.kind);

  for (std::size_t size : cfg.sizes) {
    const auto top = build_topology(cfg, size);
    const std::size_t n = top->size();
    const double nn = static_cast<double>(n);
    const ActivityState act(n);
    const auto guard = default_update_guard(n, cfg.eta);

    double algo = 0.0;
    BoundReport rep;
    bool ok = true;
    for (std::size_t k = 0; k < cfg.replicas; ++k) {
      const std::uint64_t seed = cfg.base_seed + k;
      Rng init_rng = make_rng(seed, 2);
      SimState state(top, make_initial_assignment(n, cfg.r, cfg.initial, init_rng), act, seed);
      try {
        const auto result = run_to_convergence(std::move(state), cfg.scheduler, guard);
        rep = bound_report(*top, act, result.state.assignment(), cfg.r, top->spacing());
      } catch (const ConvergenceError& e) {
        record_failure(outcome, "non_convergence",
                       Json{{"n", n}, {"replica", k}, {"seed", seed}, {"message", e.what()}});
        ok = false;
        break;
      }
      if (!rep.upper_bound_holds || !rep.ordering_holds) {
        record_failure(outcome, "bound_violation", Json{{"n", n}, {"replica", k}, {"bounds", bound_json(rep)}});
      }
      algo += rep.i_a;
    }
    if (!ok) continue;
    algo /= static_cast<double>(cfg.replicas) * nn;
    const double reference = rep.i_o / nn;
    const double worst = rep.i_w / nn;
    const double upper = worst / static_cast<double>(cfg.r);
    const bool has_lower = linear && cfg.eta > 1.0;
    const double lower = has_lower ? asymptotic_lower_bound(cfg.r, cfg.eta, cfg.p0, cfg.topology.spacing)
                                   : std::numeric_limits<double>::quiet_NaN();
    const bool has_gap = algo > 0.0 && reference > 0.0;
    const double gap = has_gap ? db_gap(algo, reference) : std::numeric_limits<double>::quiet_NaN();

    series += csv_row({std::to_string(n), fmt(algo), fmt(reference), fmt(upper), fmt(worst),
                       has_lower ? fmt(lower) : std::string(), has_gap ? fmt(gap) : std::string(),
                       to_string(rep.reference)});
    points.push_back(Json{{"n", n},
                          {"size", size},
                          {"algorithm", algo},
                          {"reference", reference},
                          {"reference_kind", to_string(rep.reference)},
                          {"upper_bound", upper},
                          {"worst_case", worst},
                          {"lower_bound", finite_or_null(lower)},
                          {"db_gap", finite_or_null(gap)}});
  }
  out.write(cfg.outputs.series_csv, series);
  return Json{{"points", std::move(points)}, {"note", "values are normalized by the cluster count"}};
}

DynamicsConfig dynamics_config(const ExperimentConfig& cfg, double alpha, double warmup) {
  DynamicsConfig dc;
  dc.delta_t = cfg.scheduler.delta_t;
  dc.alpha = alpha;
  dc.horizon = cfg.horizon;
  dc.replicas = cfg.replicas;
  dc.warmup = warmup;
  dc.initial = cfg.initial;
  return dc;
}

Json run_relaxation(const ExperimentConfig& cfg, Outputs& out, Outcome& outcome) {
  const auto top = build_topology(cfg);
  const std::size_t n = top->size();
  const double nn = static_cast<double>(n);
  const double tau = tau_of(cfg, n);
  const auto traces = simulate_ensemble(top, dynamics_config(cfg, cfg.alpha, 0.0), cfg.r, cfg.base_seed);
  const TimeSeries mean = ensemble_mean(traces, cfg.grid_step, cfg.horizon, nn);
  const double i_start = mean.value.front();
  const double i_end = mean.value.back();

  Json summary{{"clusters", n},
               {"tau", tau},
               {"alpha", cfg.alpha},
               {"rho_used", cfg.rho},
               {"initial_normalized", i_start},
               {"final_normalized", i_end},
               {"worst_case_normalized", worst_case_interference(*top, ActivityState(n)) / nn}};

  std::optional<DecayFit> fit;
  try {
    fit = fit_exponential_decay(mean, i_end, i_start, tau);
    summary["fit"] = Json{{"rho_hat", fit->rho}, {"slope", fit->slope}, {"intercept", fit->intercept},
                          {"points", fit->points}, {"floor", 0.05},
                          {"i_a", "ensemble mean at the horizon"}, {"i_w", "ensemble mean at t = 0"}};
  } catch (const FitError& e) {
    summary["fit"] = Json{{"error", e.what()}};
    record_failure(outcome, "fit_failure", Json{{"message", e.what()}});
  }

  std::string series = "time,empirical,theoretical,fitted\n";
  for (std::size_t g = 0; g < mean.time.size(); ++g) {
    const double t = mean.time[g];
    const double theory = i_end + (i_start - i_end) * std::exp(-cfg.rho * t / tau);
    const std::string fitted = fit ? fmt(i_end + (i_start - i_end) * std::exp(-fit->rho * t / tau)) : "";
    series += csv_row({fmt(t), fmt(mean.value[g]), fmt(theory), fitted});
  }
  out.write(cfg.outputs.series_csv, series);

  std::string trace_csv = kTraceHeader;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    if (out.trace_wanted(k)) append_trace(trace_csv, k, traces[k]);
  }
  out.write(cfg.outputs.trace_csv, trace_csv);
  return summary;
}

std::string indexed_name(const std::string& name, std::size_t index) {
  if (name.empty()) return name;
  const std::filesystem::path p(name);
  return (p.parent_path() / (p.stem().string() + "_rate" + std::to_string(index) + p.extension().string())).string();
}

Json run_variance(const ExperimentConfig& cfg, Outputs& out, Outcome& outcome) {
  const auto top = build_topology(cfg);
  const std::size_t n = top->size();
  const double nn = static_cast<double>(n);
  const double tau = tau_of(cfg, n);
  const double warmup = cfg.warmup.value_or(default_warmup(tau, cfg.rho));

  std::string series = "switching_rate,alpha,lambda,margin,predicted_variance,empirical_variance,ratio,divergent\n";
  Json points = Json::array();
  for (std::size_t p = 0; p < cfg.switching_rates.size(); ++p) {
    const double rate = cfg.switching_rates[p];
    const double alpha = 1.0 - rate;
    const auto traces = simulate_ensemble(top, dynamics_config(cfg, alpha, warmup), cfg.r, cfg.base_seed);
    Json point{{"switching_rate", rate}, {"alpha", alpha}};
    try {
      const VarianceEstimate est = empirical_steady_state_variance(traces, warmup, nn);
      const double lambda = lambda_from_alpha(alpha, n, tau);
      const DynamicsPrediction pred = predicted_variance(est.mean, lambda, tau, n, cfg.rho);
      const double ratio = pred.divergent || pred.sigma_ss_sq <= 0.0
                               ? std::numeric_limits<double>::quiet_NaN()
                               : est.variance / pred.sigma_ss_sq;
      point.update(Json{{"lambda", lambda},
                        {"margin", pred.margin},
                        {"divergent", pred.divergent},
                        {"predicted_variance", finite_or_null(pred.sigma_ss_sq)},
                        {"empirical_variance", est.variance},
                        {"within", est.within},
                        {"between", est.between},
                        {"mean_normalized", est.mean},
                        {"samples", est.samples},
                        {"ratio", finite_or_null(ratio)}});
      if (auto warn = near_equilibrium_warning(alpha, n)) point["warning"] = *warn;
      series += csv_row({fmt(rate), fmt(alpha), fmt(lambda), fmt(pred.margin),
                         pred.divergent ? std::string("inf") : fmt(pred.sigma_ss_sq), fmt(est.variance),
                         std::isnan(ratio) ? std::string() : fmt(ratio), pred.divergent ? "1" : "0"});
    } catch (const StatisticsError& e) {
      point["error"] = e.what();
      record_failure(outcome, "statistics_failure", Json{{"switching_rate", rate}, {"message", e.what()}});
    }
    points.push_back(std::move(point));

    std::string trace_csv = kTraceHeader;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      if (out.trace_wanted(k)) append_trace(trace_csv, k, traces[k]);
    }
    out.write(indexed_name(cfg.outputs.trace_csv, p), trace_csv);
  }
  out.write(cfg.outputs.series_csv, series);
  return Json{{"clusters", n},
              {"tau", tau},
              {"warmup", warmup},
              {"rho_used", cfg.rho},
              {"estimator", variance_estimator_description()},
              {"prediction_i_a", "post-warmup ensemble mean of the normalized aggregate"},
              {"points", std::move(points)}};
}

void dump(const Json& v, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& item : v.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(item.key()).dump() + ": ";
        dump(item.value(), depth + 1, out);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump(item, depth + 1, out);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Static:
      return "static";
    case ExperimentKind::SizeSweep:
      return "size_sweep";
    case ExperimentKind::Relaxation:
      return "relaxation";
    case ExperimentKind::Variance:
      return "variance";
  }
  return "unknown";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump_json(const Json& doc) {
  std::string out;
  dump(doc, 0, out);
  out += '\n';
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) fail("", "config must be a JSON object");
  check_keys(doc, "",
             {"name", "experiment", "topology", "sizes", "r", "eta", "p0", "initial_assignment", "scheduler",
              "alpha", "switching_rates", "horizon", "warmup", "replicas", "base_seed", "grid_step", "link",
              "rho", "outputs"});
  ExperimentConfig cfg;

  cfg.name = text(doc, "", "name", cfg.name);
  if (cfg.name.empty() || !std::all_of(cfg.name.begin(), cfg.name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
      })) {
    fail("/name", "must be non-empty and use only letters, digits, '_' or '-'");
  }

  const std::string kind = text(doc, "", "experiment", "static");
  if (kind == "static") cfg.kind = ExperimentKind::Static;
  else if (kind == "size_sweep") cfg.kind = ExperimentKind::SizeSweep;
  else if (kind == "relaxation") cfg.kind = ExperimentKind::Relaxation;
  else if (kind == "variance") cfg.kind = ExperimentKind::Variance;
  else fail("/experiment", "expected static, size_sweep, relaxation or variance");
  const bool dynamic = cfg.kind == ExperimentKind::Relaxation || cfg.kind == ExperimentKind::Variance;

  if (!find(doc, "base_seed")) fail("/base_seed", "required field is missing");
  cfg.base_seed = unsigned_int(doc, "", "base_seed", 0);

  if (!find(doc, "topology")) fail("/topology", "required field is missing");
  const Json& t = object(doc, "", "topology");
  check_keys(t, "/topology", {"kind", "n", "spacing", "min_sep", "rows", "cols", "path", "seed"});
  auto& ts = cfg.topology;
  if (!find(t, "kind")) fail("/topology/kind", "required field is missing");
  ts.kind = text(t, "/topology", "kind", "");
  if (!is_linear(ts.kind) && !is_lattice(ts.kind) && ts.kind != "file") {
    fail("/topology/kind", "expected ula, random_linear, rectangular, hexagonal or file");
  }
  ts.n = unsigned_int(t, "/topology", "n", ts.n);
  ts.spacing = number(t, "/topology", "spacing", ts.spacing);
  ts.min_sep = number(t, "/topology", "min_sep", ts.min_sep);
  ts.rows = unsigned_int(t, "/topology", "rows", ts.rows);
  ts.cols = unsigned_int(t, "/topology", "cols", ts.cols);
  ts.path = text(t, "/topology", "path", "");
  ts.seed = unsigned_int(t, "/topology", "seed", cfg.base_seed);
  if (ts.kind == "file" && ts.path.empty()) fail("/topology/path", "required for file topologies");

  cfg.r = static_cast<int>(unsigned_int(doc, "", "r", 2));
  if (cfg.r < 1) fail("/r", "must be >= 1");
  cfg.eta = number(doc, "", "eta", cfg.eta);
  cfg.p0 = number(doc, "", "p0", cfg.p0);

  const std::string init = text(doc, "", "initial_assignment", "all_first_band");
  if (init == "all_first_band") cfg.initial = InitialAssignment::AllFirstBand;
  else if (init == "uniform_random") cfg.initial = InitialAssignment::UniformRandom;
  else fail("/initial_assignment", "expected all_first_band or uniform_random");

  const Json& s = object(doc, "", "scheduler");
  check_keys(s, "/scheduler", {"kind", "delta_t"});
  const std::string sk = text(s, "/scheduler", "kind", dynamic ? "poisson" : "permutation");
  if (sk == "permutation") cfg.scheduler.kind = SchedulerKind::RandomPermutationRounds;
  else if (sk == "poisson") cfg.scheduler.kind = SchedulerKind::PoissonClock;
  else fail("/scheduler/kind", "expected permutation or poisson");
  cfg.scheduler.delta_t = number(s, "/scheduler", "delta_t", dynamic ? 0.01 : 1.0);
  if (!(cfg.scheduler.delta_t > 0.0)) fail("/scheduler/delta_t", "must be positive");
  if (dynamic && cfg.scheduler.kind != SchedulerKind::PoissonClock) {
    fail("/scheduler/kind", "time-varying experiments use the poisson clock");
  }

  cfg.alpha = number(doc, "", "alpha", 1.0);
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) fail("/alpha", "must lie in [0, 1]");
  if (!dynamic && cfg.alpha != 1.0) fail("/alpha", "static experiments keep every cluster active (alpha = 1)");

  if (const Json* rates = find(doc, "switching_rates")) {
    if (!rates->is_array()) fail("/switching_rates", "must be an array of numbers");
    for (std::size_t i = 0; i < rates->size(); ++i) {
      const std::string where = "/switching_rates/" + std::to_string(i);
      if (!(*rates)[i].is_number()) fail(where, "must be a number");
      const double v = (*rates)[i].get<double>();
      if (!(v >= 0.0 && v <= 1.0)) fail(where, "must lie in [0, 1]");
      cfg.switching_rates.push_back(v);
    }
  }
  if (cfg.kind == ExperimentKind::Variance && cfg.switching_rates.empty()) {
    fail("/switching_rates", "variance experiments need at least one switching rate");
  }

  if (const Json* sizes = find(doc, "sizes")) {
    if (!sizes->is_array()) fail("/sizes", "must be an array of positive integers");
    for (std::size_t i = 0; i < sizes->size(); ++i) {
      const auto& v = (*sizes)[i];
      if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
        fail("/sizes/" + std::to_string(i), "must be a positive integer");
      }
      cfg.sizes.push_back(v.get<std::size_t>());
    }
  }
  if (cfg.kind == ExperimentKind::SizeSweep) {
    if (cfg.sizes.empty()) fail("/sizes", "size_sweep experiments need at least one size");
    if (ts.kind == "file") fail("/topology/kind", "size_sweep needs a generated topology");
  }

  cfg.horizon = number(doc, "", "horizon", cfg.horizon);
  if (!(cfg.horizon > 0.0)) fail("/horizon", "must be positive");
  if (find(doc, "warmup")) {
    cfg.warmup = number(doc, "", "warmup", 0.0);
    if (*cfg.warmup < 0.0 || *cfg.warmup >= cfg.horizon) fail("/warmup", "must lie in [0, horizon)");
  }
  cfg.replicas = unsigned_int(doc, "", "replicas", 1);
  if (cfg.replicas < 1) fail("/replicas", "must be >= 1");
  if (cfg.kind == ExperimentKind::Variance && cfg.replicas < 2) fail("/replicas", "variance needs >= 2 replicas");
  cfg.grid_step = number(doc, "", "grid_step", cfg.grid_step);
  if (!(cfg.grid_step > 0.0)) fail("/grid_step", "must be positive");
  cfg.rho = number(doc, "", "rho", cfg.rho);
  if (!(cfg.rho > 0.0)) fail("/rho", "must be positive");

  const Json& l = object(doc, "", "link");
  check_keys(l, "/link", {"signal_power", "noise_power"});
  if (!(cfg.p0 > 0.0)) fail("/p0", "must be positive");
  cfg.link = LinkParams::defaults_for(cfg.p0);
  cfg.link.signal_power = number(l, "/link", "signal_power", cfg.link.signal_power);
  cfg.link.noise_power = number(l, "/link", "noise_power", cfg.link.noise_power);
  if (!(cfg.link.signal_power > 0.0)) fail("/link/signal_power", "must be positive");
  if (!(cfg.link.noise_power > 0.0)) fail("/link/noise_power", "must be positive");

  const Json& o = object(doc, "", "outputs");
  check_keys(o, "/outputs", {"trace_csv", "summary_json", "config_echo", "series_csv", "trace_replicas"});
  const bool traces = cfg.kind != ExperimentKind::SizeSweep;
  cfg.outputs.trace_csv = text(o, "/outputs", "trace_csv", traces ? default_output(cfg.name, "_trace.csv") : "");
  cfg.outputs.summary_json = text(o, "/outputs", "summary_json", default_output(cfg.name, "_summary.json"));
  cfg.outputs.config_echo = text(o, "/outputs", "config_echo", default_output(cfg.name, "_config.json"));
  cfg.outputs.series_csv = text(o, "/outputs", "series_csv", default_output(cfg.name, "_series.csv"));
  if (find(o, "trace_replicas")) cfg.outputs.trace_replicas = unsigned_int(o, "/outputs", "trace_replicas", 0);
  if (!traces && !cfg.outputs.trace_csv.empty()) {
    fail("/outputs/trace_csv", "size_sweep experiments do not produce an event trace");
  }
  for (const auto* name : {&cfg.outputs.trace_csv, &cfg.outputs.summary_json, &cfg.outputs.config_echo,
                           &cfg.outputs.series_csv}) {
    if (std::filesystem::path(*name).is_absolute()) fail("/outputs", "file names are relative to the output directory");
  }

  // Module preconditions, checked by building what the run will build.
  try {
    if (cfg.kind == ExperimentKind::SizeSweep) {
      for (std::size_t size : cfg.sizes) build_topology(cfg, size);
    } else {
      const auto top = build_topology(cfg);
      if (cfg.kind == ExperimentKind::Variance && top->size() < 1) fail("/topology", "no clusters");
    }
  } catch (const ValidationError& e) {
    fail("/topology", e.what());
  }
  if (is_lattice(ts.kind) && cfg.r != 4 &&
      (cfg.kind == ExperimentKind::Static || cfg.kind == ExperimentKind::SizeSweep)) {
    fail("/r", "the lattice reuse reference is defined for r = 4 only");
  }
  if (dynamic) {
    DynamicsConfig dc;
    dc.delta_t = cfg.scheduler.delta_t;
    dc.horizon = cfg.horizon;
    dc.replicas = cfg.replicas;
    try {
      validate(dc);
    } catch (const ValidationError& e) {
      fail("", e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

Json config_to_json(const ExperimentConfig& cfg) {
  const auto& t = cfg.topology;
  Json topo{{"kind", t.kind}, {"spacing", t.spacing}};
  if (is_linear(t.kind)) topo["n"] = t.n;
  if (t.kind == "random_linear") {
    topo["min_sep"] = t.min_sep;
    topo["seed"] = t.seed;
  }
  if (is_lattice(t.kind)) {
    topo["rows"] = t.rows;
    topo["cols"] = t.cols;
  }
  if (t.kind == "file") topo["path"] = t.path;

  Json outputs{{"trace_csv", cfg.outputs.trace_csv},
               {"summary_json", cfg.outputs.summary_json},
               {"config_echo", cfg.outputs.config_echo},
               {"series_csv", cfg.outputs.series_csv}};
  if (cfg.outputs.trace_replicas) outputs["trace_replicas"] = *cfg.outputs.trace_replicas;

  Json doc{{"name", cfg.name},
           {"experiment", to_string(cfg.kind)},
           {"topology", topo},
           {"r", cfg.r},
           {"eta", cfg.eta},
           {"p0", cfg.p0},
           {"initial_assignment", cfg.initial == InitialAssignment::AllFirstBand ? "all_first_band" : "uniform_random"},
           {"scheduler",
            {{"kind", cfg.scheduler.kind == SchedulerKind::PoissonClock ? "poisson" : "permutation"},
             {"delta_t", cfg.scheduler.delta_t}}},
           {"alpha", cfg.alpha},
           {"horizon", cfg.horizon},
           {"replicas", cfg.replicas},
           {"base_seed", cfg.base_seed},
           {"grid_step", cfg.grid_step},
           {"link", {{"signal_power", cfg.link.signal_power}, {"noise_power", cfg.link.noise_power}}},
           {"rho", cfg.rho},
           {"outputs", outputs}};
  if (!cfg.sizes.empty()) doc["sizes"] = cfg.sizes;
  if (!cfg.switching_rates.empty()) doc["switching_rates"] = cfg.switching_rates;
  if (cfg.warmup) doc["warmup"] = *cfg.warmup;
  return doc;
}

ValidationReport validate_config(const ExperimentConfig& cfg) {
  ValidationReport rep;
  auto& d = rep.derived;
  d["experiment"] = to_string(cfg.kind);
  d["rho"] = cfg.rho;

  auto margin_check = [&](double alpha, std::size_t n, Json& into) {
    const double tau = tau_of(cfg, n);
    const double lambda = lambda_from_alpha(alpha, n, tau);
    const double margin = stability_margin(alpha, cfg.rho);
    into["alpha"] = alpha;
    into["lambda"] = lambda;
    into["stability_margin"] = margin;
    if (margin >= 1.0) {
      rep.warnings.push_back("alpha = " + format_double(alpha) + ": stability margin " + format_double(margin) +
                             " >= 1, predicted variance diverges");
    }
    if (auto w = near_equilibrium_warning(alpha, n)) rep.warnings.push_back(*w);
  };

  if (cfg.kind == ExperimentKind::SizeSweep) {
    Json sizes = Json::array();
    for (std::size_t size : cfg.sizes) {
      const auto n = build_topology(cfg, size)->size();
      sizes.push_back(Json{{"n", n}, {"tau", tau_of(cfg, n)}});
    }
    d["sizes"] = std::move(sizes);
    return rep;
  }

  const std::size_t n = build_topology(cfg)->size();
  const double tau = tau_of(cfg, n);
  d["clusters"] = n;
  d["tau"] = tau;
  if (cfg.kind == ExperimentKind::Variance) {
    d["warmup"] = cfg.warmup.value_or(default_warmup(tau, cfg.rho));
    Json points = Json::array();
    for (double rate : cfg.switching_rates) {
      Json p{{"switching_rate", rate}};
      margin_check(1.0 - rate, n, p);
      points.push_back(std::move(p));
    }
    d["points"] = std::move(points);
  } else {
    margin_check(cfg.alpha, n, d);
  }
  return rep;
}

std::vector<std::string> preset_names() {
  return {"fig2a", "fig2b", "fig2c", "fig3", "fig4a", "fig4b", "fig5", "fig6"};
}

Json preset(const std::string& name) {
  const Json ula{{"kind", "ula"}, {"n", 100}, {"spacing", 1.0}};
  const Json rect{{"kind", "rectangular"}, {"rows", 10}, {"cols", 10}, {"spacing", 1.0}};
  const Json hex{{"kind", "hexagonal"}, {"rows", 10}, {"cols", 10}, {"spacing", 1.0}};
  Json base{{"name", name}, {"eta", 2.0}, {"p0", 1.0}, {"base_seed", 1}};

  auto capacity_run = [&](const Json& topo, int r) {
    base.update(Json{{"experiment", "static"},
                     {"topology", topo},
                     {"r", r},
                     {"initial_assignment", "uniform_random"},
                     {"scheduler", {{"kind", "poisson"}, {"delta_t", 0.01}}},
                     {"replicas", 5}});
    return base;
  };
  auto sweep = [&](Json topo, int r, Json sizes) {
    topo.erase("n");
    topo.erase("rows");
    topo.erase("cols");
    base.update(Json{{"experiment", "size_sweep"},
                     {"topology", topo},
                     {"r", r},
                     {"sizes", sizes},
                     {"initial_assignment", "all_first_band"},
                     {"scheduler", {{"kind", "permutation"}, {"delta_t", 1.0}}}});
    return base;
  };

  if (name == "fig2a") return capacity_run(ula, 2);
  if (name == "fig2b") return capacity_run(rect, 4);
  if (name == "fig2c") return capacity_run(hex, 4);
  if (name == "fig3") return sweep(ula, 2, Json::array({10, 20, 50, 100, 150, 200, 300, 400}));
  if (name == "fig4a") return sweep(rect, 4, Json::array({2, 4, 6, 8, 10, 12, 14, 16, 18, 20}));
  if (name == "fig4b") return sweep(hex, 4, Json::array({2, 4, 6, 8, 10, 12, 14, 16, 18, 20}));
  if (name == "fig5") {
    base.update(Json{{"experiment", "relaxation"},
                     {"topology", ula},
                     {"r", 2},
                     {"initial_assignment", "all_first_band"},
                     {"scheduler", {{"kind", "poisson"}, {"delta_t", 0.01}}},
                     {"alpha", 1.0},
                     {"horizon", 3.0},
                     {"grid_step", 0.01},
                     {"replicas", 500},
                     {"rho", 3.0},
                     {"outputs", {{"trace_replicas", 5}}}});
    return base;
  }
  if (name == "fig6") {
    base.update(Json{{"experiment", "variance"},
                     {"topology", ula},
                     {"r", 2},
                     {"initial_assignment", "all_first_band"},
                     {"scheduler", {{"kind", "poisson"}, {"delta_t", 0.01}}},
                     {"switching_rates", Json::array({0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.375})},
                     {"horizon", 10.0},
                     {"replicas", 500},
                     {"rho", 3.0},
                     {"outputs", {{"trace_replicas", 2}}}});
    return base;
  }
  throw ValidationError("unknown preset '" + name + "'");
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  Outputs out(cfg, out_dir);
  const Json echo = config_to_json(cfg);
  const std::string echo_text = dump_json(echo);
  const ValidationReport checks = validate_config(cfg);

  Outcome outcome;
  Json result;
  switch (cfg.kind) {
    case ExperimentKind::Static:
      result = run_static(cfg, out, outcome);
      break;
    case ExperimentKind::SizeSweep:
      result = run_size_sweep(cfg, out, outcome);
      break;
    case ExperimentKind::Relaxation:
      result = run_relaxation(cfg, out, outcome);
      break;
    case ExperimentKind::Variance:
      result = run_variance(cfg, out, outcome);
      break;
  }

  RunResult run;
  run.summary = Json{{"name", cfg.name},
                     {"experiment", to_string(cfg.kind)},
                     {"version", FREQALLOC_VERSION},
                     {"config_hash", hex64(fnv1a(echo_text))},
                     {"base_seed", cfg.base_seed},
                     {"link", {{"signal_power", cfg.link.signal_power}, {"noise_power", cfg.link.noise_power}}},
                     {"derived", checks.derived},
                     {"warnings", checks.warnings},
                     {"status", outcome.status},
                     {"result", std::move(result)}};
  if (outcome.status != "ok") {
    run.summary["failure"] = outcome.failure;
    run.exit_code = 2;
    run.message = outcome.status;
  }
  out.write(cfg.outputs.summary_json, dump_json(run.summary));
  out.write(cfg.outputs.config_echo, echo_text);
  run.files = out.files();
  return run;
}

}  // namespace freqalloc
