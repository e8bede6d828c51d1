#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmp/checkpoint.hpp"
#include "dmp/grad_check.hpp"
#include "dmp/model.hpp"
#include "dmp/svg.hpp"

namespace dmp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;
inline constexpr int kExitAcceptance = 3;

// Resolved run configuration: defaults, then config file, then flags, in
// increasing precedence. Serialized into every output artifact.
struct RunConfig {
  std::uint64_t seed = 7;
  int epochs = 500;
  int iterations = 400;  // single-scenario optimize budget
  int batch_size = 16;
  double dt = 0.1;
  int horizon = 30;
  ModelDims dims{};
  LossWeights weights{};
  double train_lr = 1e-5;
  double optimize_lr = kOptimizeLearningRate;
  int dataset_size = 256;
  int gradcheck_seeds = 20;
  std::string out_dir = "out";
  std::string scenario_path;
  std::string checkpoint_path;
  std::string fixtures_dir;
  bool optimize_mode = false;
  std::string preset;  // synth: "" or "red_light"
  int synth_count = 1;
  bool inject_gradient_fault = false;  // test hook for cmd_gradcheck
};

inline json run_config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["dims"] = dims_to_json(c.dims);
  j["weights"] = {{"alpha", c.weights.alpha}, {"beta", c.weights.beta},
                  {"gamma", c.weights.gamma}, {"mu", c.weights.mu},
                  {"rho", c.weights.rho},     {"collision_shift", c.weights.collision_shift},
                  {"boundary_shift", c.weights.boundary_shift},
                  {"cte_mode", c.weights.cte_mode == CteMode::kMidpoint ? "midpoint" : "exact"}};
  j["train_lr"] = c.train_lr;
  j["optimize_lr"] = c.optimize_lr;
  j["dataset_size"] = c.dataset_size;
  j["out_dir"] = c.out_dir;
  if (!c.scenario_path.empty()) j["scenario"] = c.scenario_path;
  if (!c.checkpoint_path.empty()) j["checkpoint"] = c.checkpoint_path;
  if (!c.fixtures_dir.empty()) j["fixtures"] = c.fixtures_dir;
  j["optimize_mode"] = c.optimize_mode;
  if (!c.preset.empty()) j["preset"] = c.preset;
  return j;
}

// ---- plain-text tables -------------------------------------------------

namespace table_detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace table_detail

inline std::string steps_table(const Scenario& sc, const PlanResult<double>& result,
                               const LossBreakdown<double>& loss, const json& config) {
  std::ostringstream os;
  os << "# diffplanner step table v1\n";
  os << "# config " << config.dump() << "\n";
  os << "# scenario " << sc.id << "\n";
  os << "# total_loss " << table_detail::num(loss.total) << "\n";
  os << "t x y v h accel heading_rate cte he ve collision boundary\n";
  for (std::size_t t = 0; t < result.trajectory.states.size(); ++t) {
    const auto& s = result.trajectory.states[t];
    const double a = t == 0 ? 0.0 : result.controls[t - 1].accel;
    const double hr = t == 0 ? 0.0 : result.controls[t - 1].heading_rate;
    os << t << " " << table_detail::num(s.x) << " " << table_detail::num(s.y) << " "
       << table_detail::num(s.v) << " " << table_detail::num(s.h) << " "
       << table_detail::num(a) << " " << table_detail::num(hr) << " "
       << table_detail::num(loss.cte[t]) << " " << table_detail::num(loss.he[t]) << " "
       << table_detail::num(loss.ve[t]) << " " << table_detail::num(loss.collision[t]) << " "
       << table_detail::num(loss.boundary[t]) << "\n";
  }
  return os.str();
}

inline std::string series_table(const std::string& title, const std::string& column,
                                const std::vector<double>& values, const json& config) {
  std::ostringstream os;
  os << "# diffplanner " << title << " v1\n";
  os << "# config " << config.dump() << "\n";
  os << column << " loss\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    os << (i + 1) << " " << table_detail::num(values[i]) << "\n";
  }
  return os.str();
}

// ---- trajectory predicates ---------------------------------------------

struct PredicateOutcome {
  bool pass = false;
  std::string detail;
};

namespace predicate_detail {

inline double param_or(const Predicate& p, const std::string& key, double fallback) {
  const auto it = p.params.find(key);
  return it == p.params.end() ? fallback : it->second;
}

inline double require_param(const Predicate& p, const std::string& key) {
  const auto it = p.params.find(key);
  if (it == p.params.end()) {
    throw std::runtime_error("predicate '" + p.name + "' missing parameter '" + key + "'");
  }
  return it->second;
}

inline double mean_cte_from(const LossBreakdown<double>& loss, int from_step) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t t = static_cast<std::size_t>(from_step); t < loss.cte.size(); ++t) {
    sum += loss.cte[t];
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

inline double mean_speed_error_last(const Trajectory<double>& traj, double v_d, int last_n) {
  const int total = static_cast<int>(traj.states.size());
  const int from = std::max(1, total - last_n);
  double sum = 0.0;
  int n = 0;
  for (int t = from; t < total; ++t) {
    sum += std::abs(traj.states[static_cast<std::size_t>(t)].v - v_d);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

inline double min_object_clearance(const Scenario& sc, const Trajectory<double>& traj) {
  double best = 1e300;
  for (int i = 0; i < sc.objects.real_count; ++i) {
    const auto& o = sc.objects.slots[static_cast<std::size_t>(i)];
    for (const auto& s : traj.states) {
      best = std::min(best, dist(Point2{s.x, s.y}, o));
    }
  }
  return best;
}

// Every trajectory point must sit on the same side of each boundary as the
// centerline does.
inline bool within_boundaries(const Scenario& sc, const Trajectory<double>& traj) {
  const Point2 ref = sc.centerline[sc.centerline.size() / 2];
  const double ref_left = side_of_polyline(sc.left_boundary, ref);
  const double ref_right = side_of_polyline(sc.right_boundary, ref);
  for (const auto& s : traj.states) {
    const Point2 p{s.x, s.y};
    if (side_of_polyline(sc.left_boundary, p) * ref_left <= 0.0) return false;
    if (side_of_polyline(sc.right_boundary, p) * ref_right <= 0.0) return false;
  }
  return true;
}

inline double final_heading_error(const Scenario& sc, const Trajectory<double>& traj) {
  const auto& last = traj.states.back();
  const auto cte = e_cte(last.x, last.y, sc.centerline);
  return e_he_at(last.h, sc.centerline, cte.segment);
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace predicate_detail

// Evaluates the named behavioral predicate on an executed plan.
inline PredicateOutcome evaluate_predicate(const Predicate& pred, const Scenario& sc,
                                           const PlanResult<double>& result,
                                           const LossBreakdown<double>& loss) {
  namespace pd = predicate_detail;
  const auto& traj = result.trajectory;
  std::ostringstream detail;

  if (pred.name == "follow_centerline") {
    const double cte_max = pd::param_or(pred, "cte_mean_max", 1.0);
    const int from = static_cast<int>(pd::param_or(pred, "cte_from_step", 5));
    const double ve_max = pd::param_or(pred, "ve_mean_max", 1.0);
    const int last_n = static_cast<int>(pd::param_or(pred, "ve_last_steps", 10));
    const double mean_cte = pd::mean_cte_from(loss, from);
    const double mean_ve = pd::mean_speed_error_last(traj, sc.v_d, last_n);
    detail << "mean_cte=" << pd::fmt2(mean_cte) << " (max " << cte_max << "), mean_ve="
           << pd::fmt2(mean_ve) << " (max " << ve_max << ")";
    return {mean_cte < cte_max && mean_ve < ve_max, detail.str()};
  }

  if (pred.name == "lane_change") {
    const double final_cte_max = pd::param_or(pred, "final_cte_max", 1.0);
    const double final_cte = loss.cte.back();
    const bool inside = pd::within_boundaries(sc, traj);
    detail << "final_cte=" << pd::fmt2(final_cte) << " (max " << final_cte_max
           << "), within_boundaries=" << (inside ? "yes" : "no");
    return {final_cte < final_cte_max && inside, detail.str()};
  }

  if (pred.name == "go_around") {
    const double clearance_min = pd::param_or(pred, "clearance_min", 2.0);
    const double ve_max = pd::param_or(pred, "ve_mean_max", 2.0);
    const int last_n = static_cast<int>(pd::param_or(pred, "ve_last_steps", 10));
    const double clearance = pd::min_object_clearance(sc, traj);
    const double mean_ve = pd::mean_speed_error_last(traj, sc.v_d, last_n);
    detail << "min_clearance=" << pd::fmt2(clearance) << " (min " << clearance_min
           << "), mean_ve=" << pd::fmt2(mean_ve) << " (max " << ve_max << ")";
    return {clearance > clearance_min && mean_ve < ve_max, detail.str()};
  }

  if (pred.name == "lane_change_avoid") {
    const double final_cte_max = pd::param_or(pred, "final_cte_max", 1.0);
    const double clearance_min = pd::param_or(pred, "clearance_min", 2.0);
    const double final_cte = loss.cte.back();
    const double clearance = pd::min_object_clearance(sc, traj);
    detail << "final_cte=" << pd::fmt2(final_cte) << " (max " << final_cte_max
           << "), min_clearance=" << pd::fmt2(clearance) << " (min " << clearance_min << ")";
    return {final_cte < final_cte_max && clearance > clearance_min, detail.str()};
  }

  if (pred.name == "reverse_then_forward") {
    const double reverse_v = pd::param_or(pred, "reverse_v_below", -0.1);
    const int within = static_cast<int>(pd::param_or(pred, "within_steps", 10));
    const double he_max = degrees_to_radians(pd::param_or(pred, "final_he_max_deg", 30.0));
    bool reversed = false;
    for (int t = 1; t <= within && t < static_cast<int>(traj.states.size()); ++t) {
      reversed |= traj.states[static_cast<std::size_t>(t)].v < reverse_v;
    }
    const double he = pd::final_heading_error(sc, traj);
    detail << "reversed_in_first_" << within << "=" << (reversed ? "yes" : "no")
           << ", final_he=" << pd::fmt2(radians_to_degrees(he)) << " deg (max "
           << pd::fmt2(radians_to_degrees(he_max)) << ")";
    return {reversed && he < he_max, detail.str()};
  }

  if (pred.name == "stop_before_row") {
    const double vmax = pd::param_or(pred, "vmax", 0.5);
    const double row_x = pd::require_param(pred, "row_x");
    const double final_v = std::abs(traj.states.back().v);
    double max_x = -1e300;
    for (const auto& s : traj.states) max_x = std::max(max_x, s.x);
    detail << "final_speed=" << pd::fmt2(final_v) << " (max " << vmax << "), max_x="
           << pd::fmt2(max_x) << " (row at " << row_x << ")";
    return {final_v < vmax && max_x < row_x, detail.str()};
  }

  throw std::runtime_error("unknown predicate '" + pred.name + "'");
}

// ---- commands ------------------------------------------------------------

namespace harness_detail {

inline void ensure_out_dir(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline GenConfig gen_config_from(const RunConfig& cfg) {
  GenConfig g;
  g.object_slots = cfg.dims.object_slots;
  g.dt = cfg.dt;
  g.horizon = cfg.horizon;
  if (cfg.preset == "red_light") g.red_light = true;
  else if (!cfg.preset.empty()) throw std::runtime_error("unknown preset '" + cfg.preset + "'");
  return g;
}

inline std::vector<Scenario> synthesize_dataset(const RunConfig& cfg) {
  const GenConfig g = gen_config_from(cfg);
  std::vector<Scenario> data;
  data.reserve(static_cast<std::size_t>(cfg.dataset_size));
  for (int i = 0; i < cfg.dataset_size; ++i) {
    data.push_back(synthesize(cfg.seed + static_cast<std::uint64_t>(i), g));
  }
  return data;
}

inline Scenario load_and_prepare(const std::string& path) {
  Scenario sc = recenter(load_scenario(path));
  validate_scenario(sc);
  return sc;
}

inline TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.seed = cfg.seed;
  tc.adam.lr = cfg.train_lr;
  tc.weights = cfg.weights;
  return tc;
}

inline OptimizeConfig optimize_config_from(const RunConfig& cfg) {
  OptimizeConfig oc;
  oc.iterations = cfg.iterations;
  oc.seed = cfg.seed;
  oc.adam.lr = cfg.optimize_lr;
  oc.weights = cfg.weights;
  return oc;
}

// Shared tail of plan/optimize/eval: compute the loss report and write the
// step table plus scene SVG for one executed scenario.
inline LossBreakdown<double> write_plan_artifacts(const RunConfig& cfg, const Scenario& sc,
                                                  const PlanResult<double>& result,
                                                  const std::string& stem) {
  const LossBreakdown<double> loss = planner_loss(result.trajectory, sc, cfg.weights);
  const json config = run_config_to_json(cfg);
  write_text_file(out_path(cfg, stem + "_steps.txt"), steps_table(sc, result, loss, config));
  write_text_file(out_path(cfg, stem + ".svg"),
                  render_scene_svg(sc, &result.trajectory, config.dump()));
  return loss;
}

}  // namespace harness_detail

inline int cmd_train(const RunConfig& cfg) {
  namespace hd = harness_detail;
  hd::ensure_out_dir(cfg);
  const std::vector<Scenario> dataset = hd::synthesize_dataset(cfg);
  const TrainResult result = train(dataset, cfg.dims, hd::train_config_from(cfg));
  const json config = run_config_to_json(cfg);
  save_checkpoint(hd::out_path(cfg, "checkpoint.json"), result.params, cfg.seed, config);
  write_text_file(hd::out_path(cfg, "train_loss.txt"),
                  series_table("training loss", "epoch", result.epoch_mean_loss, config));
  write_text_file(hd::out_path(cfg, "train_loss.svg"),
                  render_loss_curve_svg(result.epoch_mean_loss, config.dump()));
  if (!result.epoch_mean_loss.empty()) {
    std::cout << "trained " << cfg.epochs << " epochs over " << dataset.size()
              << " scenarios; epoch loss " << result.epoch_mean_loss.front() << " -> "
              << result.epoch_mean_loss.back() << "\n";
  }
  std::cout << "checkpoint: " << hd::out_path(cfg, "checkpoint.json") << "\n";
  return kExitOk;
}

inline int cmd_plan(const RunConfig& cfg) {
  namespace hd = harness_detail;
  hd::ensure_out_dir(cfg);
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path);
  const Scenario sc = hd::load_and_prepare(cfg.scenario_path);
  const PlanResult<double> result = plan(sc, ckpt.params);
  const auto loss = hd::write_plan_artifacts(cfg, sc, result, sc.id);
  std::cout << "planned '" << sc.id << "': total loss " << loss.total << "\n";
  std::cout << "artifacts: " << hd::out_path(cfg, sc.id + "_steps.txt") << ", "
            << hd::out_path(cfg, sc.id + ".svg") << "\n";
  return kExitOk;
}

inline int cmd_optimize(const RunConfig& cfg) {
  namespace hd = harness_detail;
  hd::ensure_out_dir(cfg);
  const Scenario sc = hd::load_and_prepare(cfg.scenario_path);
  const OptimizeResult opt = optimize_single(sc, cfg.dims, hd::optimize_config_from(cfg));
  const PlanResult<double> result = plan(sc, opt.params);
  const auto loss = hd::write_plan_artifacts(cfg, sc, result, sc.id);
  const json config = run_config_to_json(cfg);
  write_text_file(hd::out_path(cfg, sc.id + "_loss.txt"),
                  series_table("optimize loss", "iteration", opt.loss_history, config));
  write_text_file(hd::out_path(cfg, sc.id + "_loss.svg"),
                  render_loss_curve_svg(opt.loss_history, config.dump()));
  save_checkpoint(hd::out_path(cfg, sc.id + "_checkpoint.json"), opt.params, cfg.seed, config);
  std::cout << "optimized '" << sc.id << "' for " << cfg.iterations << " iterations; loss ";
  if (!opt.loss_history.empty()) {
    std::cout << opt.loss_history.front() << " -> " << opt.loss_history.back();
  } else {
    std::cout << loss.total << " (untrained)";
  }
  std::cout << "\n";
  if (sc.predicate) {
    const PredicateOutcome outcome = evaluate_predicate(*sc.predicate, sc, result, loss);
    std::cout << "predicate " << sc.predicate->name << ": "
              << (outcome.pass ? "PASS" : "FAIL") << " (" << outcome.detail << ")\n";
  }
  return kExitOk;
}

struct GradcheckReport {
  double max_terms = 0.0;     // each loss term in isolation
  double max_controls = 0.0;  // full rollout + loss w.r.t. the control sequence
  double max_params = 0.0;    // full pipeline w.r.t. model parameters, small dims
  double tolerance = 1e-4;

  bool pass() const {
    return max_terms < tolerance && max_controls < tolerance && max_params < tolerance;
  }
};

inline GradcheckReport run_gradcheck(const RunConfig& cfg) {
  double max_terms = 0.0, max_controls = 0.0, max_params = 0.0;

  for (int trial = 0; trial < cfg.gradcheck_seeds; ++trial) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(trial);
    Rng rng(seed * 977 + 13);
    GenConfig g;
    g.horizon = 10;
    const Scenario sc = synthesize(seed, g);

    // (a) each loss term in isolation, w.r.t. pose and speed.
    const auto term_checks = [&](const auto& f) {
      std::vector<double> x = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1.2, 1.2),
                               rng.uniform(-2, 9)};
      return grad_check(f, x);
    };
    const auto cte_f = [&](const auto& v) {
      return e_cte(v[0], v[1], sc.centerline).distance;
    };
    const auto he_f = [&](const auto& v) { return e_he(v[2], sc.centerline, v[0], v[1]); };
    const auto ve_f = [&](const auto& v) { return e_ve(v[3], sc.v_d); };
    const auto coll_f = [&](const auto& v) {
      return e_collision(v[0], v[1], sc.objects, 5.0) + v[3] * 0.0;
    };
    const auto bound_f = [&](const auto& v) {
      return e_boundary(v[0], v[1], sc.left_boundary, sc.right_boundary, 1.0);
    };
    max_terms = std::max({max_terms, term_checks(cte_f), term_checks(he_f), term_checks(ve_f),
                          term_checks(coll_f), term_checks(bound_f)});

    if (cfg.inject_gradient_fault) {
      // Test hook: record a wrong partial (value preserved) so the check
      // must report a failure.
      const auto fault_f = [](const auto& v) {
        using S = std::decay_t<decltype(v[0])>;
        if constexpr (std::is_same_v<S, Value>) {
          return v[0].tape->unary(v[0], v[0].val(), 1.02, "fault");
        } else {
          return v[0];
        }
      };
      std::vector<double> x = {1.0};
      max_terms = std::max(max_terms, grad_check(fault_f, x));
    }

    // (b) loss through the full rollout, w.r.t. the control sequence.
    const auto rollout_f = [&](const auto& v) {
      using S = std::decay_t<decltype(v[0])>;
      std::vector<Control<S>> controls;
      for (std::size_t t = 0; t + 1 < v.size(); t += 2) {
        controls.push_back(Control<S>{v[t], v[t + 1]});
      }
      const VehicleState<S> s0{v[0] * 0.0, v[0] * 0.0, v[0] * 0.0 + sc.v0, v[0] * 0.0 + sc.h0};
      return planner_loss(rollout(s0, controls, sc.dt), sc, LossWeights{}).total;
    };
    std::vector<double> controls(static_cast<std::size_t>(2 * sc.horizon));
    for (auto& c : controls) c = rng.uniform(-1.5, 1.5);
    max_controls = std::max(max_controls, grad_check(rollout_f, controls));

    // (c) loss through the whole model, w.r.t. every parameter (small dims).
    ModelDims tiny;
    tiny.polyline_points = 5;
    tiny.object_slots = 2;
    tiny.polyline_embed = 4;
    tiny.object_embed = 4;
    tiny.hidden = 6;
    tiny.mlp_hidden = 6;
    Scenario small = sc;
    small.horizon = 6;
    const auto model_f = [&](const auto& v) {
      using S = std::decay_t<decltype(v[0])>;
      auto lift = [&](double c) -> S {
        if constexpr (std::is_same_v<S, Value>) {
          return v[0].tape->lift(c);
        } else {
          return c;
        }
      };
      const auto r = detail::plan_impl<S>(std::span<const S>(v.data(), v.size()), small, tiny,
                                          lift);
      return planner_loss(r.trajectory, small, LossWeights{}).total;
    };
    const ModelParams tp = init_params(tiny, seed);
    max_params = std::max(max_params, grad_check(model_f, tp.flat));
  }
  return GradcheckReport{max_terms, max_controls, max_params};
}

inline int cmd_gradcheck(const RunConfig& cfg) {
  const GradcheckReport report = run_gradcheck(cfg);
  std::cout << "gradcheck over " << cfg.gradcheck_seeds << " seeds (tolerance "
            << report.tolerance << "):\n";
  std::cout << "  loss terms        max rel err " << report.max_terms << "\n";
  std::cout << "  rollout+loss      max rel err " << report.max_controls << "\n";
  std::cout << "  full model        max rel err " << report.max_params << "\n";
  std::cout << (report.pass() ? "gradcheck PASS" : "gradcheck FAIL") << "\n";
  return report.pass() ? kExitOk : kExitNumeric;
}

struct EvalRow {
  std::string fixture;
  std::string predicate;
  bool pass = false;
  bool optional = false;
  std::string detail;
};

inline int cmd_eval(const RunConfig& cfg) {
  namespace hd = harness_detail;
  hd::ensure_out_dir(cfg);

  std::vector<std::string> files;
  if (!std::filesystem::is_directory(cfg.fixtures_dir)) {
    throw std::runtime_error("fixture directory '" + cfg.fixtures_dir + "' does not exist");
  }
  for (const auto& entry : std::filesystem::directory_iterator(cfg.fixtures_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("fixture directory '" + cfg.fixtures_dir + "' has no .json files");
  }

  Checkpoint ckpt;
  if (!cfg.optimize_mode) {
    if (cfg.checkpoint_path.empty()) {
      throw std::runtime_error("eval needs --checkpoint or --optimize");
    }
    ckpt = load_checkpoint(cfg.checkpoint_path);
  }

  std::vector<EvalRow> rows;
  for (const auto& file : files) {
    const Scenario sc = hd::load_and_prepare(file);
    if (!sc.predicate) {
      throw std::runtime_error("fixture '" + file + "' carries no predicate");
    }
    PlanResult<double> result;
    if (cfg.optimize_mode) {
      const OptimizeResult opt = optimize_single(sc, cfg.dims, hd::optimize_config_from(cfg));
      result = plan(sc, opt.params);
    } else {
      result = plan(sc, ckpt.params);
    }
    const auto loss = hd::write_plan_artifacts(cfg, sc, result, sc.id);
    const PredicateOutcome outcome = evaluate_predicate(*sc.predicate, sc, result, loss);
    rows.push_back(
        {sc.id, sc.predicate->name, outcome.pass, sc.predicate->optional, outcome.detail});
  }

  int passed = 0;
  bool required_failed = false;
  std::ostringstream report;
  report << "# diffplanner eval report v1\n";
  report << "# config " << run_config_to_json(cfg).dump() << "\n";
  for (const auto& row : rows) {
    passed += row.pass ? 1 : 0;
    required_failed |= (!row.pass && !row.optional);
    report << (row.pass ? "PASS" : "FAIL") << " " << row.fixture << " [" << row.predicate
           << (row.optional ? ", optional" : "") << "] " << row.detail << "\n";
  }
  report << passed << " of " << rows.size() << " predicates passed\n";
  write_text_file(hd::out_path(cfg, "eval_report.txt"), report.str());
  std::cout << report.str();
  return required_failed ? kExitAcceptance : kExitOk;
}

inline int cmd_synth(const RunConfig& cfg) {
  namespace hd = harness_detail;
  hd::ensure_out_dir(cfg);
  const GenConfig g = hd::gen_config_from(cfg);
  for (int i = 0; i < cfg.synth_count; ++i) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
    const Scenario sc = synthesize(seed, g);
    const std::string path = hd::out_path(cfg, sc.id + ".json");
    save_scenario(sc, path);
    std::cout << "wrote " << path << "\n";
  }
  return kExitOk;
}

}  // namespace dmp
