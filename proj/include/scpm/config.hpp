#ifndef SCPM_CONFIG_HPP
#define SCPM_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "scpm/decode_nms.hpp"
#include "scpm/grid.hpp"
#include "scpm/losses.hpp"

namespace scpm {

// Hyperparameters shared by the CLI commands.
struct HarnessConfig {
  int K = 7;
  int n = 100;
  double lambda_s = 2.0;
  std::size_t top_n = 100;
  FocalParams focal;  // alpha, gamma, t, w
  double beta = kDefaultSmoothL1Beta;
  NmsParams nms;
  GridSpec grid{{24, 24, 24}, 4};
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

// JSON field names: K, n, lambda_s, top_n, t, w, beta, alpha, gamma,
// nms {tau_siou, tau_dr}, grid {dims, stride}, seed.
nlohmann::json to_json(const HarnessConfig& config);

// Overlays the fields present in `j` on `base`. Unknown keys are rejected.
HarnessConfig apply_json(HarnessConfig base, const nlohmann::json& j);

HarnessConfig load_config(const std::filesystem::path& path, HarnessConfig base = {});

}  // namespace scpm

#endif  // SCPM_CONFIG_HPP
