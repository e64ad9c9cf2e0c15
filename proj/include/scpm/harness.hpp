#ifndef SCPM_HARNESS_HPP
#define SCPM_HARNESS_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scpm/config.hpp"
#include "scpm/decode_nms.hpp"
#include "scpm/froc.hpp"
#include "scpm/io.hpp"
#include "scpm/losses.hpp"

namespace scpm {

// ---------------------------------------------------------------- gradsim

struct GradSimOptions {
  std::vector<SphereLossKind> kinds{SphereLossKind::box_iou, SphereLossKind::siou,
                                    SphereLossKind::sdiou, SphereLossKind::siou_pp};
  Sphere start{{0.0, 0.0, -8.0}, 1.5};
  Sphere target{{0.0, 0.0, 0.0}, 1.5};
  char axis = 'z';  // gradient component reported along the path
  double path_step = 0.05;
  double rate = 0.5;
  int max_iters = 5000;
  // Descent stops once d_AB < tol; 0 runs all max_iters iterations.
  double tol = 0.01;
};

struct GradientSample {
  SphereLossKind kind;
  double d_ab;
  double loss;
  double gradient;
};

struct DescentStep {
  SphereLossKind kind;
  int iter;
  double d_ab;
  double radius;
  double loss;
};

struct DescentSummary {
  SphereLossKind kind;
  int iterations = 0;
  double final_d_ab = 0.0;
  double min_d_ab = 0.0;
  bool converged = false;
};

struct GradSimResult {
  std::vector<GradientSample> path;
  std::vector<DescentStep> trajectory;
  std::vector<DescentSummary> summary;
};

/// Moves the start sphere toward the target along the line joining their
/// centers (d from |start - target| down to 0) recording loss and gradient,
/// then runs plain gradient descent on the predicted center and radius.
/// Iteration 0 of the trajectory is the start sphere.
GradSimResult run_gradsim(const GradSimOptions& options);

std::string gradient_path_csv(const GradSimResult& result, char axis = 'z');
std::string trajectory_csv(const GradSimResult& result);

// ------------------------------------------------------------------ synth

struct SyntheticScanSpec {
  GridDims volume{96, 96, 96};  // world voxels, z/y/x
  int min_nodules = 1;
  int max_nodules = 3;
  double min_radius = 2.0;
  double max_radius = 8.0;
  double noise = 0.0;  // in [0, 1)
  int clutter = 0;     // spurious single-cell peaks per scan
  std::vector<int> strides{4};

  void validate() const;
};

struct SynthScan {
  std::string scan_id;
  std::vector<NoduleAnnotation> nodules;
  std::vector<Sphere> clutter;
  std::vector<PredictionGrid> grids;  // one per stride; level = position + 1
};

/// Plants non-overlapping nodules and builds oracle prediction grids.
///
/// Matched positive cells carry exact regression targets with probability
/// 1 - U(0, noise); every other cell has probability U(0, noise) and radius
/// 0, so it decodes to nothing. Clutter peaks are single cells on the first
/// level holding a sphere disjoint from every nodule and from each other.
/// Centers and radii are multiples of 1/256 voxel so they survive float32.
/// Throws std::runtime_error when a scan cannot be packed.
std::vector<SynthScan> synthesize(const SyntheticScanSpec& spec, int count,
                                  const HarnessConfig& config);

std::string grid_file_name(const SynthScan& scan, std::size_t level_index);

// annotations.csv, grids/<scan>_L<level>.grid and synth.json under `dir`.
void write_synthetic(const std::filesystem::path& dir, std::span<const SynthScan> scans,
                     const SyntheticScanSpec& spec, const HarnessConfig& config);

// ----------------------------------------------------------------- assign

struct AssignOptions {
  // Scans to report; empty means every scan in the table, or one unnamed
  // scan when the table is empty too.
  std::vector<std::string> scans;
  bool ohem = false;
  // Per-cell classification loss for OHEM; zeros (index order) when absent.
  std::optional<std::vector<double>> loss_map;
};

nlohmann::json assign_summary(const AnnotationTable& annotations, const HarnessConfig& config,
                              const AssignOptions& options);

// ----------------------------------------------------------------- detect

struct DetectionReport {
  CandidateTable candidates;
  std::size_t decoded = 0;  // candidates entering NMS
  std::size_t dropped_nonpositive_radius = 0;
};

// Top-n per grid, merged per scan across levels, then SIoU++ NMS.
DetectionReport detect(std::span<const GridFile> grids, const HarnessConfig& config);

// ------------------------------------------------------------------- froc

// Every scan named in either table (plus `extra_scans`) takes part.
std::vector<ScanResult> build_scan_results(const CandidateTable& candidates,
                                           const AnnotationTable& annotations,
                                           std::span<const std::string> extra_scans = {});

std::string froc_csv(const FrocCurve& curve);
nlohmann::json froc_json(const FrocCurve& curve);

}  // namespace scpm

#endif  // SCPM_HARNESS_HPP
