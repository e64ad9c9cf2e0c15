#include "scpm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "scpm/matching.hpp"

namespace scpm {

using nlohmann::json;

// ---------------------------------------------------------------- gradsim

namespace {

double axis_component(const SphereGradient& g, char axis) {
  switch (axis) {
    case 'x': return g.d_cx;
    case 'y': return g.d_cy;
    case 'z': return g.d_cz;
    default: throw std::invalid_argument(fmt::format("unknown axis '{}'", axis));
  }
}

}  // namespace

GradSimResult run_gradsim(const GradSimOptions& o) {
  if (!(o.path_step > 0.0)) throw std::invalid_argument("path step must be positive");
  if (o.max_iters < 0) throw std::invalid_argument("max iterations must be >= 0");
  if (!(o.start.radius > 0.0 && o.target.radius > 0.0)) {
    throw std::invalid_argument("sphere radii must be positive");
  }
  axis_component(SphereGradient{}, o.axis);

  GradSimResult out;
  const Point3 span = o.start.center - o.target.center;
  const double d0 = norm(span);
  const auto steps = static_cast<long>(std::ceil(d0 / o.path_step - 1e-9));

  for (SphereLossKind kind : o.kinds) {
    for (long k = 0; k <= steps; ++k) {
      const double frac = steps == 0 ? 0.0 : 1.0 - static_cast<double>(k) / steps;
      const Sphere pred{o.target.center + span * frac, o.start.radius};
      out.path.push_back({kind, d0 * frac, sphere_loss(kind, pred, o.target),
                          axis_component(sphere_loss_gradient(kind, pred, o.target), o.axis)});
    }
  }

  for (SphereLossKind kind : o.kinds) {
    Sphere pred = o.start;
    DescentSummary s{kind};
    s.min_d_ab = center_distance(pred, o.target);
    out.trajectory.push_back({kind, 0, s.min_d_ab, pred.radius, sphere_loss(kind, pred, o.target)});
    int iter = 0;
    double d = s.min_d_ab;
    while (iter < o.max_iters && !(o.tol > 0.0 && d < o.tol)) {
      const SphereGradient g = sphere_loss_gradient(kind, pred, o.target);
      pred.center.x -= o.rate * g.d_cx;
      pred.center.y -= o.rate * g.d_cy;
      pred.center.z -= o.rate * g.d_cz;
      // A radius step through zero leaves the smallest positive radius.
      pred.radius = std::max(pred.radius - o.rate * g.d_r, 1e-6);
      ++iter;
      d = center_distance(pred, o.target);
      s.min_d_ab = std::min(s.min_d_ab, d);
      out.trajectory.push_back({kind, iter, d, pred.radius, sphere_loss(kind, pred, o.target)});
    }
    s.iterations = iter;
    s.final_d_ab = d;
    s.converged = o.tol > 0.0 && d < o.tol;
    out.summary.push_back(s);
  }
  return out;
}

std::string gradient_path_csv(const GradSimResult& result, char axis) {
  std::string out = fmt::format("kind,d_ab,loss,dloss_d{}\n", axis);
  for (const GradientSample& s : result.path) {
    out += fmt::format("{},{},{},{}\n", to_string(s.kind), format_double(s.d_ab),
                       format_double(s.loss), format_double(s.gradient));
  }
  return out;
}

std::string trajectory_csv(const GradSimResult& result) {
  std::string out = "kind,iter,d_ab,radius,loss\n";
  for (const DescentStep& s : result.trajectory) {
    out += fmt::format("{},{},{},{},{}\n", to_string(s.kind), s.iter, format_double(s.d_ab),
                       format_double(s.radius), format_double(s.loss));
  }
  return out;
}

// ------------------------------------------------------------------ synth

namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  // [0, 1) with 53 random bits; identical on every standard library.
  double next() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double between(double lo, double hi) { return lo + (hi - lo) * next(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() * static_cast<double>(hi - lo + 1));
  }

 private:
  std::mt19937_64 rng_;
};

double quantize(double v) { return std::round(v * 256.0) / 256.0; }

}  // namespace

void SyntheticScanSpec::validate() const {
  if (volume.depth < 1 || volume.height < 1 || volume.width < 1) {
    throw std::invalid_argument("volume extents must be >= 1");
  }
  if (min_nodules < 0 || max_nodules < min_nodules) {
    throw std::invalid_argument("nodule count range must satisfy 0 <= min <= max");
  }
  if (!(min_radius > 0.0) || max_radius < min_radius) {
    throw std::invalid_argument("radius range must satisfy 0 < min <= max");
  }
  if (!(noise >= 0.0 && noise < 1.0)) throw std::invalid_argument("noise must be in [0, 1)");
  if (clutter < 0) throw std::invalid_argument("clutter count must be >= 0");
  if (strides.empty()) throw std::invalid_argument("at least one stride is required");
  for (int s : strides) {
    if (s < 1 || volume.depth % s || volume.height % s || volume.width % s) {
      throw std::invalid_argument(fmt::format("stride {} does not divide the volume", s));
    }
  }
}

std::vector<SynthScan> synthesize(const SyntheticScanSpec& spec, int count,
                                  const HarnessConfig& config) {
  spec.validate();
  config.validate();
  if (count < 0) throw std::invalid_argument("scan count must be >= 0");
  if (config.nms.tau_dr >= 1.0) {
    throw std::invalid_argument("tau_dr = 1 suppresses every pair; cannot plant separable nodules");
  }
  constexpr int kMaxAttempts = 10000;
  const int max_stride = *std::max_element(spec.strides.begin(), spec.strides.end());
  const double tau = config.nms.tau_dr;
  // Separation that keeps two planted spheres apart under NMS and keeps
  // their positive cells from colliding.
  auto min_separation = [&](double radius_sum) {
    return std::max(radius_sum + 2.0 * max_stride, tau * radius_sum / (1.0 - tau) + 1e-3);
  };

  Uniform rng(config.seed);
  std::vector<SynthScan> scans;
  for (int s = 0; s < count; ++s) {
    SynthScan scan;
    scan.scan_id = fmt::format("scan_{:04d}", s);

    const int nodules = rng.integer(spec.min_nodules, spec.max_nodules);
    for (int k = 0; k < nodules; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
        const double r = std::max(quantize(rng.between(spec.min_radius, spec.max_radius)), 1.0 / 256);
        auto coord = [&](int extent) { return quantize(rng.between(r, extent - r)); };
        const Point3 c{coord(spec.volume.width), coord(spec.volume.height), coord(spec.volume.depth)};
        if (2 * r > std::min({spec.volume.width, spec.volume.height, spec.volume.depth})) continue;
        placed = std::all_of(scan.nodules.begin(), scan.nodules.end(), [&](const auto& other) {
          return norm(c - other.center) >= min_separation(r + other.radius);
        });
        if (placed) {
          scan.nodules.push_back({fmt::format("{}#{}", scan.scan_id, k), c, r});
        }
      }
      if (!placed) {
        throw std::runtime_error(fmt::format(
            "{}: could not pack {} non-overlapping nodules after {} attempts", scan.scan_id,
            nodules, kMaxAttempts));
      }
    }

    for (std::size_t li = 0; li < spec.strides.size(); ++li) {
      const int stride = spec.strides[li];
      const GridSpec grid{{spec.volume.depth / stride, spec.volume.height / stride,
                           spec.volume.width / stride},
                          stride};
      LabelAssignment a = regression_targets(
          assign_labels(grid, scan.nodules, {.top_k = config.K}), scan.nodules);
      PredictionGrid pg = PredictionGrid::zeros(grid, static_cast<int>(li) + 1);
      for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        const double jitter = spec.noise > 0.0 ? rng.between(0.0, spec.noise) : 0.0;
        if (a.labels[i] == Label::positive) {
          pg.center_prob[i] = 1.0 - jitter;
          pg.radius[i] = a.radius_target[i];
          pg.offset[i] = a.offset_target[i];
        } else {
          pg.center_prob[i] = jitter;
        }
      }
      scan.grids.push_back(std::move(pg));
    }

    PredictionGrid& first = scan.grids.front();
    for (int k = 0; k < spec.clutter; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
        const auto cell = static_cast<std::size_t>(
            rng.next() * static_cast<double>(first.spec.cell_count()));
        const double r = std::max(quantize(rng.between(spec.min_radius, spec.max_radius)), 1.0 / 256);
        const Sphere sphere{first.spec.cell_center(cell), r};
        const bool clear_nodules =
            std::all_of(scan.nodules.begin(), scan.nodules.end(), [&](const auto& n) {
              return norm(sphere.center - n.center) >= min_separation(r + n.radius);
            });
        const bool clear_clutter =
            std::all_of(scan.clutter.begin(), scan.clutter.end(), [&](const Sphere& other) {
              return norm(sphere.center - other.center) >= min_separation(r + other.radius);
            });
        if (!clear_nodules || !clear_clutter) continue;
        const double score = quantize(rng.between(0.2, 0.95));
        first.center_prob[cell] = score;
        first.radius[cell] = r / first.spec.stride;
        first.offset[cell] = {};
        scan.clutter.push_back(sphere);
        placed = true;
      }
      if (!placed) {
        throw std::runtime_error(
            fmt::format("{}: no room for clutter peak {}", scan.scan_id, k + 1));
      }
    }
    scans.push_back(std::move(scan));
  }
  return scans;
}

std::string grid_file_name(const SynthScan& scan, std::size_t level_index) {
  return fmt::format("{}_L{}.grid", scan.scan_id, level_index + 1);
}

void write_synthetic(const std::filesystem::path& dir, std::span<const SynthScan> scans,
                     const SyntheticScanSpec& spec, const HarnessConfig& config) {
  AnnotationTable table;
  json manifest_scans = json::array();
  for (const SynthScan& scan : scans) {
    table[scan.scan_id] = scan.nodules;
    json files = json::array();
    for (std::size_t li = 0; li < scan.grids.size(); ++li) {
      const std::string name = grid_file_name(scan, li);
      write_grid_file(dir / "grids" / name, scan.grids[li], scan.scan_id);
      files.push_back("grids/" + name);
    }
    manifest_scans.push_back({{"scan_id", scan.scan_id},
                              {"nodules", scan.nodules.size()},
                              {"clutter", scan.clutter.size()},
                              {"grids", files}});
  }
  write_file_atomic(dir / "annotations.csv", annotations_csv(table));

  const json manifest{
      {"config", to_json(config)},
      {"spec",
       {{"volume", {spec.volume.depth, spec.volume.height, spec.volume.width}},
        {"nodules", {spec.min_nodules, spec.max_nodules}},
        {"radius", {spec.min_radius, spec.max_radius}},
        {"noise", spec.noise},
        {"clutter", spec.clutter},
        {"strides", spec.strides}}},
      {"scans", manifest_scans}};
  write_file_atomic(dir / "synth.json", manifest.dump(2) + "\n");
}

// ----------------------------------------------------------------- assign

json assign_summary(const AnnotationTable& annotations, const HarnessConfig& config,
                    const AssignOptions& options) {
  config.validate();
  const GridSpec& grid = config.grid;
  std::vector<std::string> scans = options.scans;
  if (scans.empty()) {
    for (const auto& [id, _] : annotations) scans.push_back(id);
    if (scans.empty()) scans.emplace_back();
  }
  if (options.loss_map && options.loss_map->size() != grid.cell_count()) {
    throw std::invalid_argument("loss map does not match the configured grid");
  }

  const double extent_x = static_cast<double>(grid.dims.width) * grid.stride;
  const double extent_y = static_cast<double>(grid.dims.height) * grid.stride;
  const double extent_z = static_cast<double>(grid.dims.depth) * grid.stride;

  json out_scans = json::array();
  for (const std::string& id : scans) {
    const auto it = annotations.find(id);
    const std::vector<NoduleAnnotation> nodules =
        it == annotations.end() ? std::vector<NoduleAnnotation>{} : it->second;
    for (const NoduleAnnotation& n : nodules) {
      const Point3& c = n.center;
      if (c.x < 0 || c.y < 0 || c.z < 0 || c.x > extent_x || c.y > extent_y || c.z > extent_z) {
        throw std::invalid_argument(n.id + ": centroid outside the grid extent");
      }
    }

    LabelAssignment a =
        regression_targets(assign_labels(grid, nodules, {.top_k = config.K}), nodules);
    json scan{{"seriesuid", id}, {"cells", grid.cell_count()}};
    if (options.ohem) {
      const std::vector<double> zeros(grid.cell_count(), 0.0);
      const std::vector<double>& loss = options.loss_map ? *options.loss_map : zeros;
      scan["ohem_quota"] = ohem_quota(a.positive_count(), config.n);
      a = ohem_refine(std::move(a), loss, config.n);
    }
    scan["positive"] = a.count(Label::positive);
    scan["negative"] = a.count(Label::negative);
    scan["ignored"] = a.count(Label::ignored);

    json per_nodule = json::array();
    for (std::size_t g = 0; g < nodules.size(); ++g) {
      json cells = json::array();
      for (std::size_t i : a.positives_of(static_cast<int>(g))) {
        const Cell c = grid.cell_at(i);
        cells.push_back({c.z, c.y, c.x});
      }
      per_nodule.push_back({{"id", nodules[g].id}, {"positive_cells", cells}});
    }
    scan["nodules"] = per_nodule;
    out_scans.push_back(scan);
  }
  return json{{"config", to_json(config)}, {"ohem", options.ohem}, {"scans", out_scans}};
}

// ----------------------------------------------------------------- detect

DetectionReport detect(std::span<const GridFile> grids, const HarnessConfig& config) {
  config.validate();
  std::map<std::string, std::vector<const GridFile*>> by_scan;
  for (const GridFile& g : grids) by_scan[g.scan_id].push_back(&g);

  DetectionReport report;
  for (const auto& [scan, files] : by_scan) {
    std::vector<Candidate> merged;
    for (const GridFile* f : files) {
      TopNResult top = top_n_candidates(f->grid, config.top_n);
      report.dropped_nonpositive_radius += top.dropped_nonpositive_radius;
      merged = merge_levels(std::move(merged), top.candidates);
    }
    report.decoded += merged.size();
    report.candidates[scan] = nms_siou(std::move(merged), config.nms);
  }
  return report;
}

// ------------------------------------------------------------------- froc

std::vector<ScanResult> build_scan_results(const CandidateTable& candidates,
                                           const AnnotationTable& annotations,
                                           std::span<const std::string> extra_scans) {
  std::set<std::string> ids(extra_scans.begin(), extra_scans.end());
  for (const auto& [id, _] : candidates) ids.insert(id);
  for (const auto& [id, _] : annotations) ids.insert(id);

  std::vector<ScanResult> out;
  for (const std::string& id : ids) {
    ScanResult r{id, {}, {}};
    if (auto it = candidates.find(id); it != candidates.end()) r.candidates = it->second;
    if (auto it = annotations.find(id); it != annotations.end()) r.annotations = it->second;
    sort_candidates(r.candidates);
    out.push_back(std::move(r));
  }
  return out;
}

std::string froc_csv(const FrocCurve& curve) {
  std::string out = "fps_per_scan,sensitivity\n";
  for (const FrocPoint& p : curve.points) {
    out += fmt::format("{},{}\n", format_double(p.fps_per_scan), format_double(p.sensitivity));
  }
  return out;
}

json froc_json(const FrocCurve& curve) {
  json points = json::array();
  for (const FrocPoint& p : curve.points) {
    points.push_back({{"fps_per_scan", p.fps_per_scan}, {"sensitivity", p.sensitivity}});
  }
  return json{{"points", points}, {"average", curve.average}};
}

}  // namespace scpm
