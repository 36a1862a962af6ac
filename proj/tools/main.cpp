#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "handkit/alignment.hpp"
#include "handkit/camera.hpp"
#include "handkit/errors.hpp"
#include "handkit/experiment.hpp"
#include "handkit/grasp.hpp"
#include "handkit/hand_model.hpp"
#include "handkit/io.hpp"
#include "handkit/metrics.hpp"
#include "handkit/softras.hpp"
#include "handkit/svg.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace handkit;

// Output sink: writes files under one directory, hashes every payload, and
// emits the run manifest exactly once.
struct Emitter {
  std::string dir;
  experiment::Manifest manifest;

  void ensure_dir() const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      throw IoError("[cli] cannot create output directory '" + dir +
                    "': " + ec.message());
    }
  }

  void write(const std::string& name, const std::string& content) {
    ensure_dir();
    io::save_text(dir + "/" + name, content);
    manifest.record(name, content);
  }

  void write_json(const std::string& name, const json& j) {
    write(name, j.dump(2) + "\n");
  }

  void finish(std::uint64_t seed) {
    ensure_dir();
    manifest.write(dir + "/manifest.json", seed);
  }
};

struct Flags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string mode = "raw";
  bool check = false;
  int threads = 0;
  int population = 0;
  double near_bucket = 0.0;
  double far_bucket = 0.0;
  double gate = 0.0;
  double sigma = -1.0;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* population_opt = nullptr;
  CLI::Option* near_opt = nullptr;
  CLI::Option* far_opt = nullptr;
  CLI::Option* gate_opt = nullptr;
  CLI::Option* sigma_opt = nullptr;
};

void add_common_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config_path, "experiment config JSON");
  f.seed_opt = app.add_option("--seed", f.seed, "seed override");
  f.out_opt = app.add_option("--out", f.out_dir, "output directory override");
  app.add_option("--mode", f.mode, "scan mode: raw|pnp|pnp_shift")
      ->check(CLI::IsMember({"raw", "pnp", "pnp_shift"}));
  app.add_flag("--check", f.check, "assert the documented postcondition");
  f.threads_opt = app.add_option("--threads", f.threads, "worker threads");
  f.population_opt =
      app.add_option("--population", f.population, "population size");
  f.near_opt = app.add_option("--near-bucket-px", f.near_bucket,
                              "near crop bucket threshold (default 20)");
  f.far_opt = app.add_option("--far-bucket-px", f.far_bucket,
                             "far crop bucket threshold (default 100)");
  f.gate_opt = app.add_option("--gate-px", f.gate,
                              "centered 2D error gate (default 2)");
  f.sigma_opt = app.add_option("--sigma", f.sigma,
                               "softras sharpness, px^2 (0 = default)");
}

experiment::ExperimentConfig resolve_config(const Flags& f) {
  experiment::ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    cfg = experiment::ExperimentConfig::from_json(io::load_json(f.config_path));
  }
  if (f.seed_opt->count()) cfg.seed = f.seed;
  if (f.out_opt->count()) cfg.out_dir = f.out_dir;
  if (f.threads_opt->count()) cfg.threads = f.threads;
  if (f.population_opt->count()) cfg.population.size = f.population;
  if (f.near_opt->count()) cfg.near_bucket_px = f.near_bucket;
  if (f.far_opt->count()) cfg.far_bucket_px = f.far_bucket;
  if (f.gate_opt->count()) cfg.gate_px = f.gate;
  if (f.sigma_opt->count()) cfg.sigma = f.sigma;
  cfg.validate();
  return cfg;
}

camera::Intrinsics camera_from(const experiment::ExperimentConfig& cfg,
                               const std::string& camera_path) {
  if (!camera_path.empty()) {
    return io::intrinsics_from_json(io::load_json(camera_path));
  }
  return cfg.make_camera();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_ambiguity_scan(const Flags& f) {
  const auto cfg = resolve_config(f);
  const auto mode = alignment::scan_mode_from_string(f.mode);
  const auto model = hand::build_procedural();
  const auto reference = experiment::make_reference_params(model);
  const auto cam = cfg.make_camera();

  std::vector<hand::Params> population;
  population.push_back(reference);
  if (cfg.population.size > 1) {
    auto spec = cfg.population;
    spec.size = cfg.population.size - 1;
    auto rest = alignment::generate_population(model, reference, cam, spec,
                                               cfg.seed);
    population.insert(population.end(), rest.begin(), rest.end());
  }

  const auto scan =
      alignment::ambiguity_scan(model, reference, population, cam, mode,
                                cfg.seed, cfg.threads,
                                cfg.population.border_margin_px);

  Emitter out{cfg.out_dir, {}};
  out.manifest.record_input("mode", f.mode);
  out.manifest.record_input("config", cfg.to_json().dump());

  out.write("records_" + f.mode + ".csv",
            metrics::ambiguity_records_to_csv(scan.records));

  svg::ScatterSpec plot;
  plot.title = "pose difference vs 2D match (" + f.mode + ")";
  plot.x_label = "centered 2D keypoint error (px)";
  plot.y_label = "root-relative 3D error (mm)";
  plot.series = {
      {"crop dist < " + fmt17(cfg.near_bucket_px) + " px", "#1f77b4"},
      {"mid", "#9aa0a6"},
      {"crop dist > " + fmt17(cfg.far_bucket_px) + " px", "#d62728"}};
  std::vector<svg::ScatterPoint> pts;
  pts.reserve(scan.records.size());
  for (const auto& r : scan.records) {
    int series = 1;
    if (r.crop_px_dist < cfg.near_bucket_px) series = 0;
    if (r.crop_px_dist > cfg.far_bucket_px) series = 2;
    pts.push_back({r.centered_2d_err, r.rootrel_3d_err, series});
  }
  out.write("scatter_" + f.mode + ".svg", svg::scatter_svg(plot, pts));

  json failures = json::array();
  for (const auto& fail : scan.failures) {
    failures.push_back(json{{"pair_id", fail.pair_id}, {"message", fail.message}});
  }
  out.write_json("failures_" + f.mode + ".json", failures);

  double near_max = -1.0, far_max = -1.0;
  int gated = 0;
  for (const auto& r : scan.records) {
    if (r.centered_2d_err >= cfg.gate_px) continue;
    ++gated;
    if (r.crop_px_dist < cfg.near_bucket_px) {
      near_max = std::max(near_max, r.rootrel_3d_err);
    } else if (r.crop_px_dist > cfg.far_bucket_px) {
      far_max = std::max(far_max, r.rootrel_3d_err);
    }
  }

  json report{{"records", scan.records.size()},
              {"failures", scan.failures.size()},
              {"gated_pairs", gated},
              {"near_max_rootrel_mm", near_max},
              {"far_max_rootrel_mm", far_max}};
  if (near_max > 0.0 && far_max >= 0.0) {
    report["separation_factor"] = far_max / near_max;
  }
  out.finish(cfg.seed);
  std::cout << report.dump(2) << "\n";

  if (f.check) {
    if (near_max < 0.0 || far_max < 0.0) {
      throw ValidationError(
          "[cli] separation check failed: a crop bucket has no pairs under "
          "the centered 2D gate");
    }
    if (!(far_max >= 2.0 * near_max)) {
      throw ValidationError(
          "[cli] separation check failed: far bucket max " + fmt17(far_max) +
          " mm < 2x near bucket max " + fmt17(near_max) + " mm");
    }
  }
  return 0;
}

int cmd_kpe(const Flags& f, const std::string& camera_path,
            const std::vector<double>& box_vals, int grid) {
  const auto cfg = resolve_config(f);
  const auto cam = camera_from(cfg, camera_path);
  camera::CropBox box;
  box.x_min = box_vals[0];
  box.y_min = box_vals[1];
  box.x_max = box_vals[2];
  box.y_max = box_vals[3];

  json outj;
  std::string csv;
  if (grid <= 0) {
    const auto enc = camera::kpe_sparse(cam, box);
    json vals = json::array();
    for (int i = 0; i < enc.values.size(); ++i) vals.push_back(enc.values[i]);
    outj = json{{"kind", "sparse"}, {"values", vals}};
  } else {
    const auto dense = camera::kpe_dense(cam, box, grid);
    json rows = json::array();
    for (int r = 0; r < dense.values.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < dense.values.cols(); ++c) {
        row.push_back(dense.values(r, c));
      }
      rows.push_back(row);
    }
    outj = json{{"kind", "dense"}, {"grid", dense.grid}, {"values", rows}};
    csv = camera::dense_kpe_to_csv(dense);
  }
  std::cout << outj.dump(2) << "\n";

  if (f.out_opt->count() || !f.config_path.empty()) {
    Emitter out{cfg.out_dir, {}};
    out.write_json("kpe.json", outj);
    if (!csv.empty()) out.write("kpe_dense.csv", csv);
    out.finish(cfg.seed);
  }
  return 0;
}

int cmd_project(const Flags& f, const std::string& camera_path,
                const std::string& params_path) {
  const auto cfg = resolve_config(f);
  const auto cam = camera_from(cfg, camera_path);
  const auto model = hand::build_procedural();
  auto params = params_path.empty()
                    ? experiment::make_reference_params(model)
                    : io::params_from_json(io::load_json(params_path));
  params.validate(model.num_betas());
  const auto joints3d = hand::forward_kinematics_joints(model, params);
  const auto pts = camera::project(cam, joints3d);
  const json outj{{"points", io::to_json(pts)["points"]},
                  {"joints_mm", io::to_json(joints3d)["joints"]}};
  std::cout << outj.dump(2) << "\n";
  if (f.out_opt->count() || !f.config_path.empty()) {
    Emitter out{cfg.out_dir, {}};
    out.write_json("project.json", outj);
    out.finish(cfg.seed);
  }
  return 0;
}

struct HandPair {
  KeypointSet3D left;
  KeypointSet3D right;
  bool two_handed = false;
};

HandPair parse_hands(const json& j, const std::string& which) {
  HandPair h;
  if (j.contains("joints")) {
    h.left = io::keypoints3d_from_json(j);
  } else if (j.contains("left") && j.contains("right")) {
    h.left = io::keypoints3d_from_json(j.at("left"));
    h.right = io::keypoints3d_from_json(j.at("right"));
    h.two_handed = true;
  } else {
    throw ValidationError("[cli] " + which +
                          " file must contain 'joints' or 'left'+'right'");
  }
  return h;
}

int cmd_metrics(const Flags& f, const std::string& camera_path,
                const std::string& pred_path, const std::string& gt_path) {
  const auto cfg = resolve_config(f);
  const auto cam = camera_from(cfg, camera_path);
  const json pred_j = io::load_json(pred_path);
  const json gt_j = io::load_json(gt_path);
  const HandPair pred = parse_hands(pred_j, "pred");
  const HandPair gt = parse_hands(gt_j, "gt");
  if (pred.two_handed != gt.two_handed) {
    throw ValidationError("[cli] pred and gt must both be one- or two-handed");
  }

  // 2D reference for reprojection: explicit points when given, otherwise the
  // projected ground truth.
  auto gt2d_of = [&](const json& j, const KeypointSet3D& fallback) {
    if (j.contains("points")) return io::keypoints2d_from_json(j);
    return camera::project(cam, fallback);
  };

  json outj;
  if (!pred.two_handed) {
    outj["mpjpe_mm"] = metrics::mpjpe(pred.left, gt.left);
    outj["reprojection_error_2d_px"] = metrics::reprojection_error_2d(
        pred.left, cam, gt2d_of(gt_j, gt.left));
  } else {
    const double ml = metrics::mpjpe(pred.left, gt.left);
    const double mr = metrics::mpjpe(pred.right, gt.right);
    outj["mpjpe_left_mm"] = ml;
    outj["mpjpe_right_mm"] = mr;
    outj["mpjpe_mm"] = 0.5 * (ml + mr);
    outj["mrrpe_mm"] =
        metrics::mrrpe(pred.left, pred.right, gt.left, gt.right);
    outj["reprojection_error_2d_px"] =
        0.5 * (metrics::reprojection_error_2d(
                   pred.left, cam, gt2d_of(gt_j.at("left"), gt.left)) +
               metrics::reprojection_error_2d(
                   pred.right, cam, gt2d_of(gt_j.at("right"), gt.right)));
  }
  std::cout << outj.dump(2) << "\n";
  if (f.out_opt->count() || !f.config_path.empty()) {
    Emitter out{cfg.out_dir, {}};
    out.write_json("metrics.json", outj);
    out.finish(cfg.seed);
  }
  return 0;
}

int cmd_pnp(const Flags& f, const std::string& camera_path,
            const std::string& ref2d_path, const std::string& hand3d_path,
            const std::vector<double>& shift) {
  const auto cfg = resolve_config(f);
  const auto cam = camera_from(cfg, camera_path);
  const auto ref2d = io::keypoints2d_from_json(io::load_json(ref2d_path));
  const auto hand3d = io::keypoints3d_from_json(io::load_json(hand3d_path));

  json outj;
  if (shift.empty()) {
    const auto res = alignment::pnp_align(ref2d, hand3d, cam);
    outj = io::to_json(res.pose);
    outj["residual_px"] = res.residual_px;
    outj["iterations"] = res.iterations;
  } else {
    const auto res = alignment::pnp_align_with_shift(
        ref2d, hand3d, cam, Eigen::Vector2d(shift[0], shift[1]));
    outj = io::to_json(res.pose);
    outj["residual_px"] = res.residual_px;
    outj["shift_px"] = json::array({res.shift.x(), res.shift.y()});
  }
  std::cout << outj.dump(2) << "\n";
  if (f.out_opt->count() || !f.config_path.empty()) {
    Emitter out{cfg.out_dir, {}};
    out.write_json("pose.json", outj);
    out.finish(cfg.seed);
  }
  return 0;
}

int cmd_perspective_demo(const Flags& f, std::vector<double> offsets,
                         double depth) {
  const auto cfg = resolve_config(f);
  const auto cam = cfg.make_camera();
  const auto model = hand::build_procedural();
  auto params = experiment::make_reference_params(model);
  params.root_trans = Eigen::Vector3d(0.0, 0.0, depth);
  if (offsets.empty()) offsets = {-200.0, 0.0, 200.0};

  const auto views = camera::perspective_demo(cam, model, params, offsets);

  // The lateral move is a pure 3D translation; any change in the centered 2D
  // pattern is the perspective effect itself.
  double max_centered = 0.0;
  for (size_t a = 0; a < views.size(); ++a) {
    for (size_t b = a + 1; b < views.size(); ++b) {
      max_centered =
          std::max(max_centered, metrics::centered_2d_error(views[a], views[b]));
    }
  }

  json sets = json::array();
  for (const auto& v : views) sets.push_back(io::to_json(v)["points"]);
  const json outj{{"offsets_mm", offsets},
                  {"depth_mm", depth},
                  {"keypoints", sets},
                  {"max_centered_2d_diff_px", max_centered}};
  std::cout << outj.dump(2) << "\n";
  if (f.out_opt->count() || !f.config_path.empty()) {
    Emitter out{cfg.out_dir, {}};
    out.write_json("perspective_demo.json", outj);
    out.finish(cfg.seed);
  }
  if (f.check && !(max_centered > 1.0)) {
    throw ValidationError(
        "[cli] perspective check failed: centered patterns differ by only " +
        fmt17(max_centered) + " px");
  }
  return 0;
}

int cmd_render_silhouette(const Flags& f, const std::string& camera_path,
                          const std::string& params_path) {
  const auto cfg = resolve_config(f);
  const auto cam = camera_from(cfg, camera_path);
  const auto model = hand::build_procedural();
  auto params = params_path.empty()
                    ? experiment::make_reference_params(model)
                    : io::params_from_json(io::load_json(params_path));
  params.validate(model.num_betas());
  const double sigma = cfg.sigma > 0.0
                           ? cfg.sigma
                           : softras::default_sigma(cam.width, cam.height);

  const auto posed = hand::forward_kinematics(model, params);
  const auto sil =
      softras::render_soft_silhouette(posed.vertices, model.faces, cam, sigma);
  const auto mask = softras::mask_from_silhouette(sil);

  Emitter out{cfg.out_dir, {}};
  out.write("render.pgm", io::pgm_bytes(mask));
  out.write("render.pgm.json", json{{"amodal", mask.amodal}}.dump(2) + "\n");
  out.finish(cfg.seed);

  const json report{{"width", sil.width},
                    {"height", sil.height},
                    {"sigma_px2", sil.sigma},
                    {"occupancy_mean", sil.occupancy.mean()},
                    {"occupancy_max", sil.occupancy.maxCoeff()},
                    {"mask_pixels", mask.values.sum()}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_fit_silhouette(const Flags& f, const std::string& camera_path,
                       const std::string& target_path,
                       const std::string& init_path, int steps,
                       double step_size) {
  const auto cfg = resolve_config(f);
  const auto cam = camera_from(cfg, camera_path);
  const auto model = hand::build_procedural();
  const auto target = io::load_mask_pgm(target_path);
  auto init = init_path.empty()
                  ? experiment::make_reference_params(model)
                  : io::params_from_json(io::load_json(init_path));
  init.validate(model.num_betas());

  const auto fit = softras::fit_pose_to_mask(model, init, target, cam, steps,
                                             step_size, cfg.sigma);

  std::string loss_csv = "step,loss\n";
  for (size_t i = 0; i < fit.loss_trajectory.size(); ++i) {
    loss_csv += std::to_string(i) + "," + fmt17(fit.loss_trajectory[i]) + "\n";
  }

  Emitter out{cfg.out_dir, {}};
  out.manifest.record_input("target", target_path);
  out.write_json("fitted_params.json", io::to_json(fit.params));
  out.write("loss.csv", loss_csv);
  out.finish(cfg.seed);

  const double initial = fit.loss_trajectory.front();
  const double final_loss = fit.loss_trajectory.back();
  const json report{{"initial_loss", initial},
                    {"final_loss", final_loss},
                    {"accepted_steps", fit.accepted_steps},
                    {"improved", fit.accepted_steps > 0}};
  std::cout << report.dump(2) << "\n";
  if (f.check && !(final_loss <= initial)) {
    throw NumericalError("[cli] fit check failed: loss increased");
  }
  return 0;
}

int cmd_grasp_train(const Flags& f, int per_class, double noise, int epochs,
                    double lr) {
  const auto cfg = resolve_config(f);
  const auto dataset = grasp::make_toy_dataset(per_class, noise, cfg.seed);
  const auto result = grasp::train_grasp_toy(dataset, epochs, lr, cfg.seed + 1);

  std::string trace = "epoch,loss,accuracy\n";
  for (size_t i = 0; i < result.loss.size(); ++i) {
    trace += std::to_string(i) + "," + fmt17(result.loss[i]) + "," +
             fmt17(result.accuracy[i]) + "\n";
  }

  Emitter out{cfg.out_dir, {}};
  out.write_json("mlp.json", io::to_json(result.net));
  out.write_json("dataset.json", io::to_json(dataset));
  out.write("trace.csv", trace);
  out.finish(cfg.seed);

  const json report{{"samples", dataset.size()},
                    {"epochs", epochs},
                    {"final_loss", result.loss.back()},
                    {"final_accuracy", result.accuracy.back()},
                    {"single_class_warning", result.single_class_warning}};
  std::cout << report.dump(2) << "\n";
  if (f.check && !(result.accuracy.back() >= 0.95)) {
    throw NumericalError("[cli] training check failed: accuracy " +
                         fmt17(result.accuracy.back()) + " < 0.95");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic hand-pose experiment toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  add_common_flags(app, f);

  auto* scan = app.add_subcommand("ambiguity-scan",
                                  "crop-placement ambiguity analysis");

  std::string camera_path, params_path, pred_path, gt_path, ref2d_path,
      hand3d_path, target_path, init_path;
  std::vector<double> box_vals, shift_vals, offsets;
  int grid = 0;
  double demo_depth = 400.0;
  int fit_steps = 300;
  double fit_step_size = 1.0;
  int per_class = 25;
  double noise = 0.1;
  int epochs = 300;
  double lr = 0.2;

  auto* kpe = app.add_subcommand("kpe", "keypoint positional encoding");
  kpe->add_option("--camera", camera_path, "intrinsics JSON");
  kpe->add_option("--box", box_vals, "crop box: x_min y_min x_max y_max")
      ->expected(4)
      ->required();
  kpe->add_option("--grid", grid, "dense grid size (omit for sparse)");

  auto* project = app.add_subcommand("project", "project hand keypoints");
  project->add_option("--camera", camera_path, "intrinsics JSON");
  project->add_option("--params", params_path, "hand params JSON");

  auto* metrics_cmd = app.add_subcommand("metrics", "pose error metrics");
  metrics_cmd->add_option("--camera", camera_path, "intrinsics JSON");
  metrics_cmd->add_option("--pred", pred_path, "predicted keypoints JSON")
      ->required();
  metrics_cmd->add_option("--gt", gt_path, "ground truth keypoints JSON")
      ->required();

  auto* pnp = app.add_subcommand("pnp", "rigid 2D-3D alignment");
  pnp->add_option("--camera", camera_path, "intrinsics JSON");
  pnp->add_option("--ref2d", ref2d_path, "reference 2D keypoints JSON")
      ->required();
  pnp->add_option("--hand3d", hand3d_path, "3D keypoints JSON")->required();
  pnp->add_option("--shift", shift_vals, "pattern shift, px")->expected(2);

  auto* demo = app.add_subcommand("perspective-demo",
                                  "same hand across the field of view");
  demo->add_option("--offsets", offsets, "lateral x offsets, mm");
  demo->add_option("--depth", demo_depth, "working depth, mm");

  auto* render = app.add_subcommand("render-silhouette",
                                    "soft silhouette of the hand mesh");
  render->add_option("--camera", camera_path, "intrinsics JSON");
  render->add_option("--params", params_path, "hand params JSON");

  auto* fit = app.add_subcommand("fit-silhouette",
                                 "fit hand pose to a target mask");
  fit->add_option("--camera", camera_path, "intrinsics JSON");
  fit->add_option("--target", target_path, "target mask PGM")->required();
  fit->add_option("--init", init_path, "initial params JSON");
  fit->add_option("--steps", fit_steps, "descent step attempts");
  fit->add_option("--step-size", fit_step_size, "base step size");

  auto* train = app.add_subcommand("grasp-train",
                                   "train the grasp classification head");
  train->add_option("--per-class", per_class, "samples per grasp class");
  train->add_option("--noise", noise, "cluster noise");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--lr", lr, "learning rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  }

  try {
    if (scan->parsed()) return cmd_ambiguity_scan(f);
    if (kpe->parsed()) return cmd_kpe(f, camera_path, box_vals, grid);
    if (project->parsed()) return cmd_project(f, camera_path, params_path);
    if (metrics_cmd->parsed()) {
      return cmd_metrics(f, camera_path, pred_path, gt_path);
    }
    if (pnp->parsed()) {
      return cmd_pnp(f, camera_path, ref2d_path, hand3d_path, shift_vals);
    }
    if (demo->parsed()) return cmd_perspective_demo(f, offsets, demo_depth);
    if (render->parsed()) {
      return cmd_render_silhouette(f, camera_path, params_path);
    }
    if (fit->parsed()) {
      return cmd_fit_silhouette(f, camera_path, target_path, init_path,
                                fit_steps, fit_step_size);
    }
    if (train->parsed()) return cmd_grasp_train(f, per_class, noise, epochs, lr);
    std::cerr << json{{"error", "validation"},
                      {"message", "no subcommand given"}}
                     .dump()
              << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << json{{"error", "numerical"}, {"message", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << json{{"error", "io"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  }
}
