// Acceptance suite: one criterion per section, each printing a PASS/FAIL
// line. Run with a list of criterion numbers, or no arguments for all.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "dronecap/arena.hpp"
#include "dronecap/datastore.hpp"
#include "dronecap/flightctl.hpp"
#include "dronecap/oracle.hpp"
#include "dronecap/perception.hpp"
#include "dronecap/pipeline.hpp"
#include "dronecap/protocols.hpp"
#include "dronecap/rng.hpp"
#include "support/projection_oracle.hpp"

#ifndef DRONECAP_CLI_BIN
#define DRONECAP_CLI_BIN "./dronecap"
#endif

namespace fs = std::filesystem;
using namespace dronecap;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << what;
    }
  }
};

double wall_seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("dronecap_accept_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---- criterion 1: mission completeness -------------------------------------

bool criterion_mission_completeness() {
  Check c;
  double worst_wall = 0.0, worst_sim = 0.0;
  int completed = 0;
  for (int seed = 1; seed <= 100; ++seed) {
    const auto arena_cfg = arena::default_arena_config(
        arena::generate_layout(8, 1.5, derive_seed(seed, 0x6c61796f7574ULL)));
    const auto object = pipeline::make_object_spec(seed, pipeline::class_name_for(seed % 25),
                                                   seed % 25, seed % 20);
    const auto t0 = Clock::now();
    const auto log =
        flightctl::run_mission(arena_cfg, object, flightctl::MissionConfig{},
                               flightctl::ControllerGains{}, vehicle::ShakeModel{},
                               capture::DegradationParams{}, seed);
    const double wall = wall_seconds(t0, Clock::now());
    worst_wall = std::max(worst_wall, wall);
    worst_sim = std::max(worst_sim, log.duration);
    if (log.completed) ++completed;
    c.require(log.completed, "seed " + std::to_string(seed) + " aborted: " + log.abort_reason);
    c.require(log.captures.size() == 240,
              "seed " + std::to_string(seed) + " emitted " + std::to_string(log.captures.size()) +
                  " frames");
    c.require(log.duration <= 300.0, "seed " + std::to_string(seed) + " took " +
                                         std::to_string(log.duration) + " sim-s");
    c.require(wall <= 10.0,
              "seed " + std::to_string(seed) + " took " + std::to_string(wall) + " wall-s");
    if (!c.ok) break;
  }
  std::printf("%s  criterion 1: mission completeness (%d/100 complete, 240 frames each, "
              "max %.1f sim-s, max %.2f wall-s)%s%s\n",
              c.ok ? "PASS" : "FAIL", completed, worst_sim, worst_wall,
              c.ok ? "" : " -- ", c.detail.str().c_str());
  return c.ok;
}

// ---- criterion 2: corpus arithmetic -----------------------------------------

bool criterion_corpus_arithmetic() {
  Check c;
  const fs::path root = scratch_dir("corpus");
  pipeline::FlyOptions options;
  options.out_root = root;
  options.n_classes = 25;
  options.n_objects = 20;
  options.seed = 2024;
  options.degradation.sensor_noise_std = 0.0;  // keeps the 120k PNG tree compact
  const auto result = pipeline::run_fly(options);
  c.require(result.ok(), std::to_string(result.failures.size()) + " missions failed" +
                             (result.failures.empty() ? "" : ": " + result.failures.front()));
  c.require(result.manifest.total_images == 120000,
            "manifest reports " + std::to_string(result.manifest.total_images));
  c.require(result.files_written == 120000 + 25 * 20,
            "files written: " + std::to_string(result.files_written));
  const auto report = datastore::validate(root);
  c.require(report.ok(), std::to_string(report.violations.size()) + " validation violations" +
                             (report.ok() ? "" : "; first: " + report.violations.front().file +
                                                     " " + report.violations.front().message));
  c.require(report.images_seen == 120000,
            "validator saw " + std::to_string(report.images_seen) + " images");
  fs::remove_all(root);
  std::printf("%s  criterion 2: corpus arithmetic (25x20 -> 120,000 images, zero violations)%s%s\n",
              c.ok ? "PASS" : "FAIL", c.ok ? "" : " -- ", c.detail.str().c_str());
  return c.ok;
}

// ---- criterion 3: perception accuracy ----------------------------------------

bool criterion_perception() {
  Check c;
  const auto layout = arena::generate_layout(8, 1.5, 7);
  const arena::CameraModel cam;
  const auto ranges = arena::default_color_ranges();
  const double deg2 = 2.0 * kPi / 180.0;

  struct Pose {
    vehicle::DronePose pose;
    int stop = -1;   // -1 marks a chord pose
    int chord = -1;
  };
  std::vector<Pose> poses;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> off(-0.05, 0.05);
  std::uniform_real_distribution<double> yaw_u(0.0, kTwoPi);
  for (int k = 0; k < 8; ++k) {
    for (int i = 0; i < 9; ++i) {
      const auto& s = layout.stops[k];
      poses.push_back(
          {{s.center.x + off(rng), s.center.y + off(rng), 1.0 + off(rng), yaw_u(rng)}, k, -1});
    }
  }
  for (int k = 0; k < 7; ++k) {
    const auto& seg = *layout.stops[k].outgoing_segment;
    for (int i = 0; i < 5; ++i) {
      // Near mid-chord and low enough that the footprint holds exactly one
      // blue line; neighboring markers would bias the principal axis.
      const double t = 0.45 + 0.025 * i;
      const Vec2 p = seg.a + (seg.b - seg.a) * t;
      poses.push_back(
          {{p.x + off(rng) * 0.5, p.y + off(rng) * 0.5, 0.6 + off(rng) * 0.4, yaw_u(rng)}, -1, k});
    }
  }
  c.require(poses.size() >= 100, "only " + std::to_string(poses.size()) + " poses");

  const auto evaluate = [&](const Frame& img, const Pose& p) -> bool {
    const auto obs = perception::detect_markers(img, ranges);
    if (p.stop >= 0) {
      const auto& s = layout.stops[p.stop];
      const auto uv = oracle_support::project_ground(p.pose, cam.focal_px(), s.center);
      if (!uv || !obs.circle_centroid || !obs.pink_direction) return false;
      if (std::abs(obs.circle_centroid->x - uv->u) > 2.0 ||
          std::abs(obs.circle_centroid->y - uv->v) > 2.0)
        return false;
      const auto want = oracle_support::ground_line_direction(
          p.pose, cam.focal_px(), s.center, unit_from_angle(s.heading_direction));
      const double err = std::abs(wrap_signed(2.0 * (*obs.pink_direction - *want))) / 2.0;
      return err <= deg2;
    }
    const auto& seg = *layout.stops[p.chord].outgoing_segment;
    const Vec2 d = seg.b - seg.a;
    const auto want = oracle_support::ground_line_direction(p.pose, cam.focal_px(), seg.a,
                                                            {d.x / d.norm(), d.y / d.norm()});
    if (!obs.blue_direction || !want) return false;
    const double err = std::abs(wrap_signed(2.0 * (*obs.blue_direction - *want))) / 2.0;
    return err <= deg2;
  };

  int clean_ok = 0;
  for (const Pose& p : poses) {
    const Frame img = arena::render_ground_view(layout, p.pose, cam);
    if (evaluate(img, p)) ++clean_ok;
  }
  c.require(clean_ok == static_cast<int>(poses.size()),
            "clean detection failed on " + std::to_string(poses.size() - clean_ok) + " poses");

  std::normal_distribution<double> noise(0.0, 5.0);
  std::mt19937_64 noise_rng(77);
  int noisy_ok = 0;
  for (const Pose& p : poses) {
    Frame img = arena::render_ground_view(layout, p.pose, cam);
    for (auto& v : img.data)
      v = static_cast<std::uint8_t>(std::clamp(v + noise(noise_rng), 0.0, 255.0));
    if (evaluate(img, p)) ++noisy_ok;
  }
  const double noisy_rate = static_cast<double>(noisy_ok) / poses.size();
  c.require(noisy_rate >= 0.95, "noisy success rate " + std::to_string(noisy_rate));

  std::printf("%s  criterion 3: perception accuracy (%zu poses, clean %d/%zu, noisy %.1f%%)%s%s\n",
              c.ok ? "PASS" : "FAIL", poses.size(), clean_ok, poses.size(), 100.0 * noisy_rate,
              c.ok ? "" : " -- ", c.detail.str().c_str());
  return c.ok;
}

// ---- criterion 4: control quality ----------------------------------------------

bool criterion_control() {
  Check c;
  // Closed perceptual loop from a 0.5 m centering offset.
  const auto cfg = arena::default_arena_config(arena::generate_layout(8, 1.5, 7));
  const auto& stop = cfg.layout.stops[0];
  flightctl::MissionConfig mc;
  mc.ground_focal_px = cfg.ground_camera.focal_px();
  mc.n_stops = 8;
  const flightctl::ControllerGains gains;
  const vehicle::ShakeModel no_shake{0.0, 0.0, 0.4, 0};
  vehicle::DroneState drone = vehicle::initial_state(
      {stop.center.x, stop.center.y + 0.5, mc.target_altitude, 0.0}, no_shake);
  flightctl::FlightState state;
  state.phase = flightctl::Phase::ApproachStop;

  const double tol_m = mc.centering_tolerance_px * mc.target_altitude / mc.ground_focal_px;
  double settle = -1.0, max_err = 0.0;
  for (int tick = 0; tick <= 200; ++tick) {
    const double clock = tick * mc.dt;
    const Frame img = arena::render_ground_view(cfg.layout, drone.pose, cfg.ground_camera);
    const auto obs = perception::detect_markers(img, cfg.color_ranges);
    const auto r = flightctl::fsm_step(state, obs, drone, mc, gains, clock);
    const double err = (Vec2{drone.pose.x, drone.pose.y} - stop.center).norm();
    max_err = std::max(max_err, err);
    if (settle < 0.0 && err <= tol_m) settle = clock;
    if (settle >= 0.0 && err > tol_m) settle = -1.0;
    drone = vehicle::step_dynamics(drone, r.command, mc.dt, vehicle::VehicleParams{}, no_shake);
    state = r.state;
  }
  c.require(settle >= 0.0 && settle <= 5.0,
            "settled at " + std::to_string(settle) + " s (tolerance " + std::to_string(tol_m) +
                " m)");
  c.require(max_err <= 1.0, "overshoot to " + std::to_string(max_err) + " m");

  // Anti-windup under adversarial error traces.
  const flightctl::PidGains g{0.8, 3.0, 0.2, 0.35, 4.0};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  bool windup_ok = true;
  for (int trial = 0; trial < 100 && windup_ok; ++trial) {
    flightctl::PidState s;
    for (int i = 0; i < 400; ++i) {
      double e;
      switch (trial % 5) {
        case 0: e = u(rng); break;
        case 1: e = 20.0; break;
        case 2: e = -20.0; break;
        case 3: e = (i % 2) ? 20.0 : -20.0; break;
        default: e = (i < 200) ? 15.0 : -15.0; break;
      }
      const auto r = flightctl::pid_step(s, g, e, 0.05);
      s = r.state;
      if (std::abs(s.integral) > g.integral_limit + 1e-12) windup_ok = false;
    }
  }
  c.require(windup_ok, "integral exceeded its limit");

  std::printf("%s  criterion 4: control quality (settle %.2f s, peak error %.2f m, anti-windup "
              "holds)%s%s\n",
              c.ok ? "PASS" : "FAIL", settle, max_err, c.ok ? "" : " -- ", c.detail.str().c_str());
  return c.ok;
}

// ---- criterion 5: split arithmetic -----------------------------------------------

protocols::DatasetIndex synthetic_index(int n_classes, int n_objects, int frames) {
  protocols::DatasetIndex index;
  for (int c = 0; c < n_classes; ++c) {
    protocols::IndexClass cls;
    cls.name = pipeline::class_name_for(c);
    for (int o = 0; o < n_objects; ++o) {
      protocols::IndexObject obj;
      obj.instance_id = cls.name + "_" + std::to_string(o);
      obj.symmetry_degrees = 360;
      for (int v = 0; v < 360; v += 45)
        for (int f = 0; f < frames; ++f)
          obj.views[v].push_back({cls.name + "/" + obj.instance_id + "/view" + std::to_string(v) +
                                      "_frame" + std::to_string(f) + ".png",
                                  f});
      cls.objects.push_back(std::move(obj));
    }
    index.classes.push_back(std::move(cls));
  }
  return index;
}

bool criterion_splits() {
  Check c;
  const auto index = synthetic_index(25, 20, 30);

  const auto object_of = [](const std::string& p) { return p.substr(0, p.rfind('/')); };
  const auto leak_free = [&](const protocols::SplitManifest& m) {
    std::set<std::string> train, test;
    for (const auto& p : m.train) train.insert(object_of(p));
    for (const auto& p : m.test) test.insert(object_of(p));
    for (const auto& o : train)
      if (test.count(o)) return false;
    return true;
  };

  const struct {
    protocols::SplitConfig cfg;
    protocols::SplitStrategy strategy;
    long want;
  } reference_cases[] = {
      {{23, 16, 1, 30}, protocols::SplitStrategy::MaxObjectDiversity, 11040},
      {{23, 2, 8, 30}, protocols::SplitStrategy::MaxPoseDiversity, 11040},
      {{23, 16, 8, 3}, protocols::SplitStrategy::MaxPoseDiversity, 8832},
  };
  for (const auto& pc : reference_cases) {
    const auto m = protocols::make_split(index, pc.cfg, pc.strategy, 11);
    c.require(static_cast<long>(m.train.size()) == pc.want,
              "expected " + std::to_string(pc.want) + ", got " + std::to_string(m.train.size()));
    c.require(leak_free(m), "object leakage in a reference configuration");
  }

  std::mt19937_64 rng(555);
  int tested = 0;
  for (int trial = 0; trial < 200; ++trial) {
    protocols::SplitConfig cfg;
    cfg.classes = 1 + static_cast<int>(rng() % 25);
    cfg.objects_per_class = 1 + static_cast<int>(rng() % 19);
    cfg.poses_per_object = 1 + static_cast<int>(rng() % 8);
    cfg.examples_per_pose = 1 + static_cast<int>(rng() % 30);
    const auto strategy = static_cast<protocols::SplitStrategy>(trial % 3);
    const auto m = protocols::make_split(index, cfg, strategy, rng());
    c.require(static_cast<long>(m.train.size()) == cfg.train_size(), "cardinality mismatch");
    c.require(leak_free(m), "object leakage");
    ++tested;
    if (!c.ok) break;
  }
  std::printf("%s  criterion 5: split arithmetic (11040/11040/8832 exact, %d random configs "
              "clean)%s%s\n",
              c.ok ? "PASS" : "FAIL", tested, c.ok ? "" : " -- ", c.detail.str().c_str());
  return c.ok;
}

// ---- criterion 6: attack harness fidelity --------------------------------------------

bool criterion_attack() {
  Check c;
  const auto index = synthetic_index(23, 6, 30);
  std::map<std::string, oracle::ImageTruth> truth;
  std::vector<std::string> class_names;
  std::map<std::string, int> frontal;
  for (std::size_t ci = 0; ci < index.classes.size(); ++ci) {
    const auto& cls = index.classes[ci];
    class_names.push_back(cls.name);
    frontal[cls.name] = 45 * static_cast<int>(ci % 8);
    for (const auto& obj : cls.objects)
      for (const auto& [view, frames] : obj.views)
        for (const auto& rec : frames) truth[rec.image_file] = {cls.name, view};
  }

  protocols::AttackSpec spec;
  spec.pairs_per_class = 40;
  spec.seed = 2;
  const auto plan = protocols::sample_attack_pairs(index, frontal, spec);
  c.require(plan.pairs.size() == 40u * 23u * 5u, "pair count " + std::to_string(plan.pairs.size()));

  oracle::StubOracle biased({oracle::StubMode::PoseBiased, 0.9, 0.15, 12}, truth, frontal,
                            class_names);
  const auto curve = protocols::run_attack(plan, biased);
  c.require(!curve.aborted, "attack aborted: " + curve.error);
  c.require(curve.buckets.size() == 5, "bucket count " + std::to_string(curve.buckets.size()));
  double prev = 2.0;
  std::ostringstream curve_str;
  for (const auto& b : curve.buckets) {
    const double p = biased.correct_probability(b.delta_theta);
    const double phat = b.accuracy();
    const double ci = 1.96 * std::sqrt(p * (1.0 - p) / b.pairs);
    curve_str << " d" << b.delta_theta << "=" << phat;
    c.require(b.pairs > 100, "thin bucket at delta " + std::to_string(b.delta_theta));
    c.require(std::abs(phat - p) <= ci,
              "delta " + std::to_string(b.delta_theta) + ": measured " + std::to_string(phat) +
                  " vs analytic " + std::to_string(p) + " (ci " + std::to_string(ci) + ")");
    c.require(phat <= prev + 1e-12, "curve not monotone at delta " + std::to_string(b.delta_theta));
    prev = phat;
  }

  oracle::StubOracle shaky({oracle::StubMode::ShakeSensitive, 0.9, 0.0, 13}, truth, frontal,
                           class_names);
  const auto shake_curve = protocols::run_attack(plan, shaky);
  c.require(!shake_curve.aborted, "shake attack aborted");
  double zero_acc = 1.0;
  for (const auto& b : shake_curve.buckets)
    if (b.delta_theta == 0) zero_acc = b.accuracy();
  c.require(zero_acc < 1.0, "delta-0 accuracy is exactly 1.0 under a shake-sensitive oracle");
  c.require(zero_acc > 0.7, "delta-0 accuracy implausibly low: " + std::to_string(zero_acc));

  std::printf("%s  criterion 6: attack harness fidelity (%s; shake-only delta-0 %.3f)%s%s\n",
              c.ok ? "PASS" : "FAIL", curve_str.str().c_str(), zero_acc, c.ok ? "" : " -- ",
              c.detail.str().c_str());
  return c.ok;
}

// ---- criterion 7: determinism -----------------------------------------------------------

bool criterion_determinism() {
  Check c;
  const fs::path work = scratch_dir("determinism");
  const std::string cli = DRONECAP_CLI_BIN;
  const auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };

  const std::string fly_args = "--classes 2 --objects 2 --seed 909 --frames-per-stop 6";
  c.require(run("fly --out " + (work / "ds_a").string() + " " + fly_args), "fly run A failed");
  c.require(run("fly --out " + (work / "ds_b").string() + " " + fly_args), "fly run B failed");
  const auto hash_a = pipeline::hash_tree(work / "ds_a");
  const auto hash_b = pipeline::hash_tree(work / "ds_b");
  c.require(hash_a == hash_b, "fly trees differ for the same seed");
  c.require(run("fly --out " + (work / "ds_c").string() + " --classes 2 --objects 2 --seed 910 "
                "--frames-per-stop 6"),
            "fly run C failed");
  c.require(pipeline::hash_tree(work / "ds_c") != hash_a, "different seeds hashed equal");

  const auto file_equal = [&](const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return !sa.empty() && sa == sb;
  };

  c.require(run("layout --stops 8 --radius 1.5 --seed 3 --out " + (work / "l_a.json").string()),
            "layout A failed");
  c.require(run("layout --stops 8 --radius 1.5 --seed 3 --out " + (work / "l_b.json").string()),
            "layout B failed");
  c.require(file_equal(work / "l_a.json", work / "l_b.json"), "layout files differ");

  const std::string ds = (work / "ds_a").string();
  const std::string split_args = " --root " + ds +
                                 " --classes 2 --objects-per-class 1 --poses-per-object 4 "
                                 "--examples-per-pose 3 --strategy max-pose-diversity --seed 5";
  c.require(run("split" + split_args + " --out " + (work / "s_a.json").string()), "split A failed");
  c.require(run("split" + split_args + " --out " + (work / "s_b.json").string()), "split B failed");
  c.require(file_equal(work / "s_a.json", work / "s_b.json"), "split manifests differ");

  const std::string attack_args =
      " --root " + ds + " --oracle stub:pose-biased:0.9:0.15 --pairs-per-class 8 --seed 6";
  c.require(run("attack" + attack_args + " --out " + (work / "c_a.csv").string()),
            "attack A failed");
  c.require(run("attack" + attack_args + " --out " + (work / "c_b.csv").string()),
            "attack B failed");
  c.require(file_equal(work / "c_a.csv", work / "c_b.csv"), "attack curves differ");

  fs::remove_all(work);
  std::printf("%s  criterion 7: determinism (fly/layout/split/attack byte-identical per seed)%s%s\n",
              c.ok ? "PASS" : "FAIL", c.ok ? "" : " -- ", c.detail.str().c_str());
  return c.ok;
}

// ---- criterion 8: degradation physics -----------------------------------------------------

bool criterion_degradation() {
  Check c;
  const auto arena_cfg = arena::default_arena_config(arena::generate_layout(8, 1.5, 7));
  const auto object = pipeline::make_object_spec(8, "mug", 0, 0);
  const auto log =
      flightctl::run_mission(arena_cfg, object, flightctl::MissionConfig{},
                             flightctl::ControllerGains{}, vehicle::ShakeModel{},
                             capture::DegradationParams{}, 321);
  c.require(log.completed, "mission aborted: " + log.abort_reason);
  c.require(log.captures.size() == 240, "captures: " + std::to_string(log.captures.size()));

  double sum_s = 0.0, sum_l = 0.0;
  const auto n = static_cast<double>(log.captures.size());
  for (const auto& cap : log.captures) {
    sum_s += cap.projected_speed;
    sum_l += cap.blur_length;
  }
  const double mean_s = sum_s / n, mean_l = sum_l / n;
  double cov = 0.0, var_s = 0.0, var_l = 0.0;
  for (const auto& cap : log.captures) {
    const double ds = cap.projected_speed - mean_s;
    const double dl = cap.blur_length - mean_l;
    cov += ds * dl;
    var_s += ds * ds;
    var_l += dl * dl;
  }
  const double pearson = cov / std::sqrt(var_s * var_l);
  c.require(pearson > 0.9, "Pearson r = " + std::to_string(pearson));

  // Zero-parameter degradation is the identity, bit for bit.
  const auto view = arena::render_object_view(arena_cfg.layout, object,
                                              log.captures[0].record.instantaneous_pose,
                                              arena_cfg.object_camera);
  capture::DegradationParams zero;
  zero.exposure_jitter_std = 0.0;
  zero.sensor_noise_std = 0.0;
  const Frame same = capture::degrade(view.frame, {0.0, 0.0, 0.0}, zero,
                                      arena_cfg.object_camera.exposure_time);
  c.require(same == view.frame, "zero-parameter degrade is not the identity");

  std::printf("%s  criterion 8: degradation physics (blur/speed Pearson r = %.3f, zero-parameter "
              "identity)%s%s\n",
              c.ok ? "PASS" : "FAIL", pearson, c.ok ? "" : " -- ", c.detail.str().c_str());
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};

  const std::function<bool()> criteria[] = {
      criterion_mission_completeness, criterion_corpus_arithmetic, criterion_perception,
      criterion_control,              criterion_splits,            criterion_attack,
      criterion_determinism,          criterion_degradation,
  };

  bool all_ok = true;
  for (int n : which) {
    if (n < 1 || n > 8) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    all_ok = criteria[n - 1]() && all_ok;
  }
  return all_ok ? 0 : 1;
}
