#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "dmp/model.hpp"
#include "dmp/scenarios.hpp"

namespace dmp {

// Checkpoint container: format/version header, dims, seed, the resolved run
// configuration, and the flat parameter vector. JSON with full double
// round-tripping; layout documented in the README.

inline json dims_to_json(const ModelDims& d) {
  return json{{"polyline_points", d.polyline_points}, {"object_slots", d.object_slots},
              {"polyline_embed", d.polyline_embed},   {"object_embed", d.object_embed},
              {"hidden", d.hidden},                   {"mlp_hidden", d.mlp_hidden}};
}

inline ModelDims dims_from_json(const json& j, const std::string& context) {
  ModelDims d;
  d.polyline_points = require_field(j, "polyline_points", context).get<int>();
  d.object_slots = require_field(j, "object_slots", context).get<int>();
  d.polyline_embed = require_field(j, "polyline_embed", context).get<int>();
  d.object_embed = require_field(j, "object_embed", context).get<int>();
  d.hidden = require_field(j, "hidden", context).get<int>();
  d.mlp_hidden = require_field(j, "mlp_hidden", context).get<int>();
  validate_dims(d);
  return d;
}

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  json config;  // resolved run configuration, for reproducibility
};

inline void save_checkpoint(const std::string& path, const ModelParams& params,
                            std::uint64_t seed, const json& config) {
  json j;
  j["format"] = "dmp-checkpoint";
  j["version"] = 1;
  j["dims"] = dims_to_json(params.dims);
  j["seed"] = seed;
  j["config"] = config;
  j["params"] = params.flat;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("save_checkpoint: write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_checkpoint: '" + path + "' is not valid JSON: " + e.what());
  }
  const std::string context = "checkpoint '" + path + "'";
  if (require_field(j, "format", context).get<std::string>() != "dmp-checkpoint") {
    throw std::runtime_error(context + ": not a dmp checkpoint");
  }
  if (require_field(j, "version", context).get<int>() != 1) {
    throw std::runtime_error(context + ": unsupported version");
  }
  Checkpoint c;
  c.params.dims = dims_from_json(require_field(j, "dims", context), context);
  c.seed = require_field(j, "seed", context).get<std::uint64_t>();
  c.config = j.value("config", json::object());
  c.params.flat = require_field(j, "params", context).get<std::vector<double>>();
  if (c.params.flat.size() != param_count(c.params.dims)) {
    throw std::runtime_error(context + ": parameter count " +
                             std::to_string(c.params.flat.size()) + " does not match dims (" +
                             std::to_string(param_count(c.params.dims)) + ")");
  }
  return c;
}

}  // namespace dmp
