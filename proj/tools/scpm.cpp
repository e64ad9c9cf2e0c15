// scpm: command-line harness for sphere-based nodule detection tooling.
//
//   scpm gradsim   loss/gradient curves along a path and descent trajectories
//   scpm synth     synthetic scans: annotation CSV + oracle prediction grids
//   scpm assign    center-points label assignment summary
//   scpm detect    decode + merge + SIoU++ NMS into a candidate CSV
//   scpm froc      FROC curve from candidate and annotation CSVs

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "scpm/config.hpp"
#include "scpm/harness.hpp"
#include "scpm/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Config file values plus explicitly given override flags.
struct ConfigFlags {
  std::string config_path;
  std::optional<int> k, n;
  std::optional<double> lambda_s, t, w, beta, alpha, gamma, tau_siou, tau_dr;
  std::optional<std::size_t> top_n;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<int>> grid_dims;
  std::optional<int> stride;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--k", k, "positive cells per nodule (K)");
    app->add_option("--n", n, "OHEM negative:positive ratio");
    app->add_option("--lambda-s", lambda_s, "SIoU++ loss weight");
    app->add_option("--top-n", top_n, "candidates decoded per grid");
    app->add_option("--t", t, "re-focal probability threshold");
    app->add_option("--w", w, "re-focal hard-positive weight");
    app->add_option("--beta", beta, "smooth-L1 beta");
    app->add_option("--alpha", alpha, "focal alpha");
    app->add_option("--gamma", gamma, "focal gamma");
    app->add_option("--tau-siou", tau_siou, "NMS SIoU threshold");
    app->add_option("--tau-dr", tau_dr, "NMS distance-radius-ratio threshold");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--grid-dims", grid_dims, "grid extents D,H,W")->delimiter(',')->expected(3);
    app->add_option("--stride", stride, "grid stride R (world voxels per cell)");
  }

  scpm::HarnessConfig resolve() const {
    scpm::HarnessConfig c;
    if (!config_path.empty()) c = scpm::load_config(config_path, c);
    if (k) c.K = *k;
    if (n) c.n = *n;
    if (lambda_s) c.lambda_s = *lambda_s;
    if (top_n) c.top_n = *top_n;
    if (t) c.focal.t = *t;
    if (w) c.focal.w = *w;
    if (beta) c.beta = *beta;
    if (alpha) c.focal.alpha = *alpha;
    if (gamma) c.focal.gamma = *gamma;
    if (tau_siou) c.nms.tau_siou = *tau_siou;
    if (tau_dr) c.nms.tau_dr = *tau_dr;
    if (seed) c.seed = *seed;
    if (grid_dims) c.grid.dims = {(*grid_dims)[0], (*grid_dims)[1], (*grid_dims)[2]};
    if (stride) c.grid.stride = *stride;
    c.validate();
    return c;
  }
};

scpm::Sphere parse_sphere(const std::vector<double>& v) {
  return {{v[0], v[1], v[2]}, v[3]};
}

void write_json(const fs::path& path, const json& j) {
  scpm::write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<scpm::GridFile> load_grids(const std::vector<std::string>& files,
                                       const std::string& dir) {
  std::vector<fs::path> paths(files.begin(), files.end());
  if (!dir.empty()) {
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".grid") {
        found.push_back(entry.path());
      }
    }
    std::sort(found.begin(), found.end());
    paths.insert(paths.end(), found.begin(), found.end());
  }
  std::vector<scpm::GridFile> grids;
  for (const fs::path& p : paths) {
    scpm::GridFile g = scpm::read_grid_file(p);
    if (g.scan_id.empty()) g.scan_id = p.stem().string();
    grids.push_back(std::move(g));
  }
  return grids;
}

std::vector<std::string> read_scan_list(const std::string& path) {
  std::vector<std::string> ids;
  if (path.empty()) return ids;
  std::istringstream in(scpm::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sphere-representation nodule detection harness"};
  app.require_subcommand(1);

  // gradsim
  auto* gradsim = app.add_subcommand("gradsim", "loss/gradient curves and descent simulation");
  std::vector<std::string> kinds{"BoxIoU", "SIoU", "SDIoU", "SIoUpp"};
  std::vector<double> start{0, 0, -8, 1.5};
  std::vector<double> target{0, 0, 0, 1.5};
  scpm::GradSimOptions gs;
  std::string axis = "z";
  std::string gradsim_out;
  gradsim->add_option("--kinds", kinds, "loss kinds")->delimiter(',');
  gradsim->add_option("--start", start, "start sphere x,y,z,r")->delimiter(',')->expected(4);
  gradsim->add_option("--target", target, "target sphere x,y,z,r")->delimiter(',')->expected(4);
  gradsim->add_option("--axis", axis, "reported gradient axis")->check(CLI::IsMember({"x", "y", "z"}));
  gradsim->add_option("--step", gs.path_step, "path sampling step in d");
  gradsim->add_option("--rate", gs.rate, "descent learning rate");
  gradsim->add_option("--iters", gs.max_iters, "maximum descent iterations");
  gradsim->add_option("--tol", gs.tol, "stop once d_AB < tol (0 runs all iterations)");
  gradsim->add_option("--out", gradsim_out, "output directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic scans and oracle grids");
  ConfigFlags synth_cfg;
  synth_cfg.attach(synth);
  scpm::SyntheticScanSpec spec;
  int count = 20;
  std::vector<int> volume{96, 96, 96};
  std::vector<int> nodule_range{1, 3};
  std::vector<double> radius_range{2.0, 8.0};
  std::string synth_out;
  synth->add_option("--count", count, "number of scans");
  synth->add_option("--volume", volume, "volume extents D,H,W")->delimiter(',')->expected(3);
  synth->add_option("--nodules", nodule_range, "nodule count range min,max")->delimiter(',')->expected(2);
  synth->add_option("--radius", radius_range, "radius range min,max")->delimiter(',')->expected(2);
  synth->add_option("--noise", spec.noise, "probability noise amplitude in [0,1)");
  synth->add_option("--clutter", spec.clutter, "spurious peaks per scan");
  synth->add_option("--strides", spec.strides, "one grid level per stride")->delimiter(',');
  synth->add_option("--out", synth_out, "output directory")->required();

  // assign
  auto* assign = app.add_subcommand("assign", "center-points label assignment summary");
  ConfigFlags assign_cfg;
  assign_cfg.attach(assign);
  std::string assign_annotations;
  std::string loss_map_path;
  std::string assign_out;
  scpm::AssignOptions assign_opts;
  assign->add_option("--annotations", assign_annotations, "annotation CSV")
      ->required()->check(CLI::ExistingFile);
  assign->add_option("--scan", assign_opts.scans, "restrict to these seriesuids");
  assign->add_flag("--ohem", assign_opts.ohem, "run hard-negative mining");
  assign->add_option("--loss-map", loss_map_path, "per-cell loss JSON for OHEM (implies --ohem)")
      ->check(CLI::ExistingFile);
  assign->add_option("--out", assign_out, "summary JSON (stdout when omitted)");

  // detect
  auto* detect = app.add_subcommand("detect", "decode grids, merge levels, SIoU++ NMS");
  ConfigFlags detect_cfg;
  detect_cfg.attach(detect);
  std::vector<std::string> grid_files;
  std::string grid_dir;
  std::string detect_out;
  detect->add_option("--grids", grid_files, "prediction grid files")->check(CLI::ExistingFile);
  detect->add_option("--grid-dir", grid_dir, "directory of *.grid files")->check(CLI::ExistingDirectory);
  detect->add_option("--out", detect_out, "candidate CSV")->required();

  // froc
  auto* froc = app.add_subcommand("froc", "FROC curve from candidates and annotations");
  std::string froc_candidates;
  std::string froc_annotations;
  std::string scan_list;
  std::string froc_out;
  froc->add_option("--candidates", froc_candidates, "candidate CSV")->required()->check(CLI::ExistingFile);
  froc->add_option("--annotations", froc_annotations, "annotation CSV")->required()->check(CLI::ExistingFile);
  froc->add_option("--scan-list", scan_list, "file with every evaluated seriesuid, one per line")
      ->check(CLI::ExistingFile);
  froc->add_option("--out", froc_out, "output prefix (<prefix>.csv, <prefix>.json)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gradsim) {
      gs.kinds.clear();
      for (const std::string& k : kinds) {
        const auto kind = scpm::parse_loss_kind(k);
        if (!kind) throw std::invalid_argument("unknown loss kind '" + k + "'");
        gs.kinds.push_back(*kind);
      }
      gs.start = parse_sphere(start);
      gs.target = parse_sphere(target);
      gs.axis = axis[0];
      const scpm::GradSimResult r = scpm::run_gradsim(gs);
      const fs::path dir(gradsim_out);
      scpm::write_file_atomic(dir / "gradient_path.csv", scpm::gradient_path_csv(r, gs.axis));
      scpm::write_file_atomic(dir / "trajectory.csv", scpm::trajectory_csv(r));
      json summary = json::array();
      for (const scpm::DescentSummary& s : r.summary) {
        summary.push_back({{"kind", scpm::to_string(s.kind)},
                           {"iterations", s.iterations},
                           {"final_d_ab", s.final_d_ab},
                           {"min_d_ab", s.min_d_ab},
                           {"converged", s.converged}});
        std::cout << fmt::format("{:7s} iterations={} final_d_ab={} converged={}\n",
                                 scpm::to_string(s.kind), s.iterations,
                                 scpm::format_double(s.final_d_ab), s.converged);
      }
      write_json(dir / "gradsim.json",
                 {{"start", start}, {"target", target}, {"axis", axis}, {"step", gs.path_step},
                  {"rate", gs.rate}, {"max_iters", gs.max_iters}, {"tol", gs.tol},
                  {"descent", summary}});
    } else if (*synth) {
      const scpm::HarnessConfig config = synth_cfg.resolve();
      spec.volume = {volume[0], volume[1], volume[2]};
      spec.min_nodules = nodule_range[0];
      spec.max_nodules = nodule_range[1];
      spec.min_radius = radius_range[0];
      spec.max_radius = radius_range[1];
      const auto scans = scpm::synthesize(spec, count, config);
      scpm::write_synthetic(synth_out, scans, spec, config);
      std::cout << fmt::format("wrote {} scans to {}\n", scans.size(), synth_out);
    } else if (*assign) {
      const scpm::HarnessConfig config = assign_cfg.resolve();
      const scpm::AnnotationTable table = scpm::read_annotations_csv(assign_annotations);
      if (!loss_map_path.empty()) {
        assign_opts.ohem = true;
        assign_opts.loss_map = scpm::read_loss_map(loss_map_path, config.grid.dims);
      }
      const json summary = scpm::assign_summary(table, config, assign_opts);
      if (assign_out.empty()) {
        std::cout << summary.dump(2) << "\n";
      } else {
        write_json(assign_out, summary);
      }
    } else if (*detect) {
      const scpm::HarnessConfig config = detect_cfg.resolve();
      const auto grids = load_grids(grid_files, grid_dir);
      if (grids.empty()) throw std::invalid_argument("no grid files given");
      const scpm::DetectionReport report = scpm::detect(grids, config);
      scpm::write_file_atomic(detect_out, scpm::candidates_csv(report.candidates));
      std::size_t kept = 0;
      for (const auto& [_, c] : report.candidates) kept += c.size();
      write_json(detect_out + ".meta.json",
                 {{"config", scpm::to_json(config)},
                  {"grids", grids.size()},
                  {"decoded", report.decoded},
                  {"dropped_nonpositive_radius", report.dropped_nonpositive_radius},
                  {"kept", kept}});
      std::cout << fmt::format("{} candidates kept of {} decoded ({} dropped radius <= 0)\n",
                               kept, report.decoded, report.dropped_nonpositive_radius);
    } else if (*froc) {
      const auto candidates = scpm::read_candidates_csv(froc_candidates);
      const auto annotations = scpm::read_annotations_csv(froc_annotations);
      const auto extra = read_scan_list(scan_list);
      const auto results = scpm::build_scan_results(candidates, annotations, extra);
      const scpm::FrocCurve curve = scpm::froc(results);
      scpm::write_file_atomic(froc_out + ".csv", scpm::froc_csv(curve));
      json j = scpm::froc_json(curve);
      j["scans"] = results.size();
      write_json(froc_out + ".json", j);
      for (const scpm::FrocPoint& p : curve.points) {
        std::cout << fmt::format("{:>6} FPs/scan  sensitivity {:.4f}\n",
                                 scpm::format_double(p.fps_per_scan), p.sensitivity);
      }
      std::cout << fmt::format("average sensitivity {:.4f}\n", curve.average);
    }
  } catch (const std::exception& e) {
    std::cerr << "scpm: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
