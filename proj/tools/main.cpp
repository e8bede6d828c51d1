// Command-line front end: train, plan, optimize, gradcheck, eval, synth.
// Flags take precedence over --config file values, which take precedence
// over built-in defaults.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmp/harness.hpp"

namespace {

struct CliValues {
  std::uint64_t seed = 0;
  int epochs = 0;
  int iters = 0;
  int batch = 0;
  double dt = 0.0;
  int horizon = 0;
  std::string weights;
  std::string dims;
  std::string out_dir;
  std::string config_file;
  std::string scenario;
  std::string checkpoint;
  std::string fixtures;
  bool optimize_mode = false;
  std::string preset;
  int count = 0;
  double train_lr = 0.0;
  double optimize_lr = 0.0;
  int dataset_size = 0;
};

std::vector<double> parse_csv(const std::string& text, std::size_t expect,
                              const std::string& what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (values.size() != expect) {
    throw std::runtime_error(what + " expects " + std::to_string(expect) +
                             " comma-separated values, got " + std::to_string(values.size()));
  }
  return values;
}

void apply_config_file(dmp::RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file '" + path + "' not found");
  dmp::json j;
  try {
    in >> j;
  } catch (const dmp::json::parse_error& e) {
    throw std::runtime_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
  if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
  if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<int>();
  if (j.contains("dims")) cfg.dims = dmp::dims_from_json(j.at("dims"), "config dims");
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.contains("alpha")) cfg.weights.alpha = w.at("alpha").get<double>();
    if (w.contains("beta")) cfg.weights.beta = w.at("beta").get<double>();
    if (w.contains("gamma")) cfg.weights.gamma = w.at("gamma").get<double>();
    if (w.contains("mu")) cfg.weights.mu = w.at("mu").get<double>();
    if (w.contains("rho")) cfg.weights.rho = w.at("rho").get<double>();
    if (w.contains("collision_shift")) {
      cfg.weights.collision_shift = w.at("collision_shift").get<double>();
    }
    if (w.contains("boundary_shift")) {
      cfg.weights.boundary_shift = w.at("boundary_shift").get<double>();
    }
    if (w.contains("cte_mode")) {
      cfg.weights.cte_mode = w.at("cte_mode").get<std::string>() == "exact"
                                 ? dmp::CteMode::kExactSegment
                                 : dmp::CteMode::kMidpoint;
    }
  }
  if (j.contains("train_lr")) cfg.train_lr = j.at("train_lr").get<double>();
  if (j.contains("optimize_lr")) cfg.optimize_lr = j.at("optimize_lr").get<double>();
  if (j.contains("dataset_size")) cfg.dataset_size = j.at("dataset_size").get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffplanner: differentiable neural motion planner"};
  app.require_subcommand(1);

  CliValues v;

  const auto add_common = [&v](CLI::App* cmd) {
    cmd->add_option("--seed", v.seed, "deterministic seed");
    cmd->add_option("--dt", v.dt, "integration step, seconds");
    cmd->add_option("--horizon", v.horizon, "control horizon, steps");
    cmd->add_option("--weights", v.weights, "loss weights alpha,beta,gamma,mu,rho");
    cmd->add_option("--dims", v.dims, "model dims n,k,poly_embed,obj_embed,hidden,mlp_hidden");
    cmd->add_option("--out", v.out_dir, "output directory");
    cmd->add_option("--config", v.config_file, "JSON config file (flags take precedence)");
  };

  CLI::App* train = app.add_subcommand("train", "train on synthesized scenarios");
  add_common(train);
  train->add_option("--epochs", v.epochs, "training epochs");
  train->add_option("--batch", v.batch, "minibatch size");
  train->add_option("--lr", v.train_lr, "Adam learning rate");
  train->add_option("--dataset-size", v.dataset_size, "number of synthesized scenarios");

  CLI::App* plan_cmd = app.add_subcommand("plan", "plan one scenario with a checkpoint");
  add_common(plan_cmd);
  plan_cmd->add_option("scenario", v.scenario, "scenario file")->required();
  plan_cmd->add_option("--checkpoint", v.checkpoint, "checkpoint file")->required();

  CLI::App* optimize = app.add_subcommand("optimize", "optimize the planner on one scenario");
  add_common(optimize);
  optimize->add_option("scenario", v.scenario, "scenario file")->required();
  optimize->add_option("--iters", v.iters, "optimization iterations");
  optimize->add_option("--lr", v.optimize_lr, "Adam learning rate");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference check");
  add_common(gradcheck);
  gradcheck->add_option("--trials", v.count, "number of seeds to sweep");

  CLI::App* eval = app.add_subcommand("eval", "run the case-study fixtures");
  add_common(eval);
  eval->add_option("--fixtures", v.fixtures, "fixture directory")->required();
  eval->add_flag("--optimize", v.optimize_mode, "optimize per fixture instead of a checkpoint");
  eval->add_option("--checkpoint", v.checkpoint, "checkpoint file (without --optimize)");
  eval->add_option("--iters", v.iters, "optimization iterations per fixture");
  eval->add_option("--lr", v.optimize_lr, "Adam learning rate for --optimize");

  CLI::App* synth = app.add_subcommand("synth", "generate scenario files");
  add_common(synth);
  synth->add_option("--count", v.count, "number of scenarios");
  synth->add_option("--preset", v.preset, "generator preset: red_light");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? dmp::kExitOk : dmp::kExitUsage;
  }

  try {
    dmp::RunConfig cfg;
    if (!v.config_file.empty()) apply_config_file(cfg, v.config_file);

    CLI::App* active = app.get_subcommands().front();
    const auto given = [&active](const std::string& flag) {
      return active->count(flag) > 0;
    };
    if (given("--seed")) cfg.seed = v.seed;
    if (given("--dt")) cfg.dt = v.dt;
    if (given("--horizon")) cfg.horizon = v.horizon;
    if (given("--out")) cfg.out_dir = v.out_dir;
    if (given("--weights")) {
      const auto w = parse_csv(v.weights, 5, "--weights");
      cfg.weights.alpha = w[0];
      cfg.weights.beta = w[1];
      cfg.weights.gamma = w[2];
      cfg.weights.mu = w[3];
      cfg.weights.rho = w[4];
    }
    if (given("--dims")) {
      const auto d = parse_csv(v.dims, 6, "--dims");
      cfg.dims.polyline_points = static_cast<int>(d[0]);
      cfg.dims.object_slots = static_cast<int>(d[1]);
      cfg.dims.polyline_embed = static_cast<int>(d[2]);
      cfg.dims.object_embed = static_cast<int>(d[3]);
      cfg.dims.hidden = static_cast<int>(d[4]);
      cfg.dims.mlp_hidden = static_cast<int>(d[5]);
      dmp::validate_dims(cfg.dims);
    }
    cfg.scenario_path = v.scenario;
    cfg.checkpoint_path = v.checkpoint;
    cfg.fixtures_dir = v.fixtures;
    cfg.optimize_mode = v.optimize_mode;
    cfg.preset = v.preset;

    if (train->parsed()) {
      if (given("--epochs")) cfg.epochs = v.epochs;
      if (given("--batch")) cfg.batch_size = v.batch;
      if (given("--lr")) cfg.train_lr = v.train_lr;
      if (given("--dataset-size")) cfg.dataset_size = v.dataset_size;
      return dmp::cmd_train(cfg);
    }
    if (plan_cmd->parsed()) return dmp::cmd_plan(cfg);
    if (optimize->parsed()) {
      if (given("--iters")) cfg.iterations = v.iters;
      if (given("--lr")) cfg.optimize_lr = v.optimize_lr;
      return dmp::cmd_optimize(cfg);
    }
    if (gradcheck->parsed()) {
      if (given("--trials")) cfg.gradcheck_seeds = v.count;
      return dmp::cmd_gradcheck(cfg);
    }
    if (eval->parsed()) {
      if (given("--iters")) cfg.iterations = v.iters;
      if (given("--lr")) cfg.optimize_lr = v.optimize_lr;
      return dmp::cmd_eval(cfg);
    }
    if (synth->parsed()) {
      if (given("--count")) cfg.synth_count = v.count;
      return dmp::cmd_synth(cfg);
    }
    return dmp::kExitUsage;
  } catch (const dmp::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return dmp::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dmp::kExitUsage;
  }
}
