#include "scpm/config.hpp"

#include <set>
#include <stdexcept>
#include <string>

#include "scpm/io.hpp"

namespace scpm {

using nlohmann::json;

void HarnessConfig::validate() const {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (top_n < 1) throw std::invalid_argument("top_n must be >= 1");
  if (lambda_s < 0.0) throw std::invalid_argument("lambda_s must be >= 0");
  if (!(focal.alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (focal.gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  if (!(focal.t > 0.0 && focal.t < 1.0)) throw std::invalid_argument("t must be in (0, 1)");
  if (!(focal.w > 0.0)) throw std::invalid_argument("w must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(nms.tau_siou >= 0.0 && nms.tau_siou <= 1.0)) {
    throw std::invalid_argument("tau_siou must be in [0, 1]");
  }
  if (!(nms.tau_dr > 0.0 && nms.tau_dr <= 1.0)) throw std::invalid_argument("tau_dr must be in (0, 1]");
  grid.validate();
}

json to_json(const HarnessConfig& c) {
  return json{{"K", c.K},
              {"n", c.n},
              {"lambda_s", c.lambda_s},
              {"top_n", c.top_n},
              {"t", c.focal.t},
              {"w", c.focal.w},
              {"beta", c.beta},
              {"alpha", c.focal.alpha},
              {"gamma", c.focal.gamma},
              {"nms", {{"tau_siou", c.nms.tau_siou}, {"tau_dr", c.nms.tau_dr}}},
              {"grid",
               {{"dims", {c.grid.dims.depth, c.grid.dims.height, c.grid.dims.width}},
                {"stride", c.grid.stride}}},
              {"seed", c.seed}};
}

HarnessConfig apply_json(HarnessConfig c, const json& j) {
  static const std::set<std::string> known{"K",    "n",     "lambda_s", "top_n", "t",   "w",
                                           "beta", "alpha", "gamma",    "nms",   "grid", "seed"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config field '" + key + "'");
  }
  try {
    if (j.contains("K")) c.K = j.at("K").get<int>();
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("lambda_s")) c.lambda_s = j.at("lambda_s").get<double>();
    if (j.contains("top_n")) c.top_n = j.at("top_n").get<std::size_t>();
    if (j.contains("t")) c.focal.t = j.at("t").get<double>();
    if (j.contains("w")) c.focal.w = j.at("w").get<double>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    if (j.contains("alpha")) c.focal.alpha = j.at("alpha").get<double>();
    if (j.contains("gamma")) c.focal.gamma = j.at("gamma").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("nms")) {
      const json& nms = j.at("nms");
      if (nms.contains("tau_siou")) c.nms.tau_siou = nms.at("tau_siou").get<double>();
      if (nms.contains("tau_dr")) c.nms.tau_dr = nms.at("tau_dr").get<double>();
    }
    if (j.contains("grid")) {
      const json& grid = j.at("grid");
      if (grid.contains("dims")) {
        const auto dims = grid.at("dims").get<std::vector<int>>();
        if (dims.size() != 3) throw std::invalid_argument("grid.dims must have three entries");
        c.grid.dims = {dims[0], dims[1], dims[2]};
      }
      if (grid.contains("stride")) c.grid.stride = grid.at("stride").get<int>();
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  return c;
}

HarnessConfig load_config(const std::filesystem::path& path, HarnessConfig base) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return apply_json(std::move(base), j);
}

}  // namespace scpm
