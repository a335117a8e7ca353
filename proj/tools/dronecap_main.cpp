#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "dronecap/arena.hpp"
#include "dronecap/datastore.hpp"
#include "dronecap/oracle.hpp"
#include "dronecap/pipeline.hpp"
#include "dronecap/protocols.hpp"
#include "dronecap/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dronecap;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// stub:perfect | stub:pose-biased:BASE:DECAY | stub:shake-sensitive:BASE | cmd:<command line>
struct OracleChoice {
  bool is_stub = true;
  oracle::StubOracleSpec stub;
  std::string command;
};

OracleChoice parse_oracle_spec(const std::string& text, std::uint64_t seed) {
  OracleChoice choice;
  choice.stub.seed = seed;
  if (text.rfind("cmd:", 0) == 0) {
    choice.is_stub = false;
    choice.command = text.substr(4);
    if (choice.command.empty()) throw CLI::ValidationError("--oracle", "empty command");
    return choice;
  }
  if (text.rfind("stub:", 0) != 0)
    throw CLI::ValidationError("--oracle", "expected stub:... or cmd:...");
  std::vector<std::string> parts;
  std::stringstream ss(text.substr(5));
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw CLI::ValidationError("--oracle", "missing stub mode");
  if (parts[0] == "perfect") {
    choice.stub.mode = oracle::StubMode::Perfect;
  } else if (parts[0] == "pose-biased") {
    choice.stub.mode = oracle::StubMode::PoseBiased;
    if (parts.size() > 1) choice.stub.base_accuracy = std::stod(parts[1]);
    if (parts.size() > 2) choice.stub.decay_per_45deg = std::stod(parts[2]);
  } else if (parts[0] == "shake-sensitive") {
    choice.stub.mode = oracle::StubMode::ShakeSensitive;
    if (parts.size() > 1) choice.stub.base_accuracy = std::stod(parts[1]);
  } else {
    throw CLI::ValidationError("--oracle", "unknown stub mode " + parts[0]);
  }
  return choice;
}

std::unique_ptr<oracle::Oracle> make_oracle(const OracleChoice& choice,
                                            const protocols::DatasetIndex& index,
                                            const std::map<std::string, int>& frontal,
                                            double timeout_s, int window) {
  if (!choice.is_stub) {
    oracle::SubprocessOptions options;
    options.timeout_seconds = timeout_s;
    options.pipeline_window = window;
    return std::make_unique<oracle::SubprocessOracle>(choice.command, options);
  }
  std::map<std::string, oracle::ImageTruth> truth;
  std::vector<std::string> class_names;
  for (const auto& cls : index.classes) {
    class_names.push_back(cls.name);
    for (const auto& obj : cls.objects)
      for (const auto& [view, frames] : obj.views)
        for (const auto& rec : frames) truth[rec.image_file] = {cls.name, view};
  }
  return std::make_unique<oracle::StubOracle>(choice.stub, truth, frontal, class_names);
}

std::map<std::string, int> load_frontal_map(const std::string& path) {
  const json j = json::parse(slurp(path));
  std::map<std::string, int> frontal;
  for (const auto& [cls, view] : j.items()) frontal[cls] = view.get<int>();
  return frontal;
}

std::string frontal_map_to_json(const std::map<std::string, int>& frontal) {
  json j;
  for (const auto& [cls, view] : frontal) j[cls] = view;
  return j.dump(2) + "\n";
}

struct CurveRow {
  std::string scope;
  std::string class_name;
  int delta = 0;
  long n = 0;
  long correct = 0;
};

std::vector<CurveRow> read_curve_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("scope,class,delta_theta", 0) != 0)
    throw std::runtime_error(path + " is not an attack curve CSV");
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = datastore::parse_csv_line(line);
    if (f.size() != 6) continue;
    rows.push_back({f[0], f[1], std::stoi(f[2]), std::stol(f[3]), std::stol(f[4])});
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drone-based in-the-lab dataset collection simulator and experiment tooling"};
  app.require_subcommand(1);

  // ---- layout ----
  auto* cmd_layout = app.add_subcommand("layout", "emit an arena config file");
  int lay_stops = 8;
  double lay_radius = 1.5;
  std::uint64_t lay_seed = 0;
  std::string lay_out = "arena_config.json";
  cmd_layout->add_option("--stops", lay_stops, "number of capture stops");
  cmd_layout->add_option("--radius", lay_radius, "stop circle ring radius, meters");
  cmd_layout->add_option("--seed", lay_seed, "layout seed");
  cmd_layout->add_option("--out", lay_out, "output path");

  // ---- fly ----
  auto* cmd_fly = app.add_subcommand("fly", "run capture missions and write a dataset");
  pipeline::FlyOptions fly;
  std::string fly_out = "dataset";
  std::string fly_layout_file;
  std::string fly_log_dir;
  cmd_fly->add_option("--out", fly_out, "dataset root directory")->required();
  cmd_fly->add_option("--classes", fly.n_classes, "number of object classes");
  cmd_fly->add_option("--objects", fly.n_objects, "objects per class");
  cmd_fly->add_option("--seed", fly.seed, "corpus seed");
  cmd_fly->add_option("--stops", fly.n_stops, "stops on the generated layout");
  cmd_fly->add_option("--radius", fly.stop_radius, "ring radius of the generated layout");
  cmd_fly->add_option("--layout", fly_layout_file, "arena config file to fly in");
  cmd_fly->add_option("--frames-per-stop", fly.mission.frames_per_stop, "frames per stop");
  cmd_fly->add_option("--capture-rate", fly.mission.capture_rate_hz, "capture rate, Hz");
  cmd_fly->add_option("--sigma-pos", fly.shake.sigma_pos, "shake positional std, meters");
  cmd_fly->add_option("--sigma-yaw", fly.shake.sigma_yaw, "shake yaw std, radians");
  cmd_fly->add_option("--shake-tau", fly.shake.tau, "shake time constant, seconds");
  cmd_fly->add_option("--blur-scale", fly.degradation.blur_scale, "motion blur gain");
  cmd_fly->add_option("--exposure-jitter", fly.degradation.exposure_jitter_std,
                      "exposure gain std");
  cmd_fly->add_option("--sensor-noise", fly.degradation.sensor_noise_std,
                      "sensor noise std, intensity units");
  cmd_fly->add_option("--jobs", fly.jobs, "parallel missions");
  cmd_fly->add_option("--log-dir", fly_log_dir, "write per-object tick logs here");
  std::string fly_mission_cfg;
  cmd_fly->add_option("--mission-config", fly_mission_cfg, "mission config JSON file");

  // ---- validate ----
  auto* cmd_validate = app.add_subcommand("validate", "check a dataset tree");
  std::string val_root;
  long val_max_print = 25;
  cmd_validate->add_option("--root", val_root, "dataset root")->required();
  cmd_validate->add_option("--max-print", val_max_print, "violations to print");

  // ---- split ----
  auto* cmd_split = app.add_subcommand("split", "emit a diversity-budget split manifest");
  std::string split_root, split_out = "split.json", split_strategy = "max-object-diversity";
  protocols::SplitConfig split_cfg;
  std::vector<int> split_views;
  std::uint64_t split_seed = 0;
  cmd_split->add_option("--root", split_root, "dataset root")->required();
  cmd_split->add_option("--classes", split_cfg.classes, "C")->required();
  cmd_split->add_option("--objects-per-class", split_cfg.objects_per_class, "O/C")->required();
  cmd_split->add_option("--poses-per-object", split_cfg.poses_per_object, "P/O")->required();
  cmd_split->add_option("--examples-per-pose", split_cfg.examples_per_pose, "E/P")->required();
  cmd_split->add_option("--strategy", split_strategy,
                        "max-object-diversity | max-pose-diversity | max-camera-shake | custom");
  cmd_split->add_option("--views", split_views, "explicit view list for --strategy custom");
  cmd_split->add_option("--seed", split_seed, "split seed");
  cmd_split->add_option("--out", split_out, "output manifest path");

  // ---- attack ----
  auto* cmd_attack = app.add_subcommand("attack", "run angle-perturbation curves via an oracle");
  std::string atk_root, atk_out = "curve.csv", atk_oracle = "stub:pose-biased:0.9:0.15";
  std::string atk_frontal_in, atk_frontal_out, atk_issues_out;
  protocols::AttackSpec atk_spec;
  int atk_samples = 10;
  double atk_timeout = 30.0;
  int atk_window = 32;
  cmd_attack->add_option("--root", atk_root, "dataset root")->required();
  cmd_attack->add_option("--oracle", atk_oracle,
                         "stub:perfect | stub:pose-biased:B:D | stub:shake-sensitive:B | cmd:...");
  cmd_attack->add_option("--pairs-per-class", atk_spec.pairs_per_class,
                         "pairs per class per delta");
  cmd_attack->add_option("--deltas", atk_spec.delta_thetas, "delta theta values");
  cmd_attack->add_option("--samples-per-cell", atk_samples,
                         "images per (class, view) for the accuracy table");
  cmd_attack->add_option("--seed", atk_spec.seed, "attack seed");
  cmd_attack->add_option("--out", atk_out, "curve CSV path");
  cmd_attack->add_option("--frontal-map", atk_frontal_in,
                         "use this frontal map instead of measuring");
  cmd_attack->add_option("--frontal-out", atk_frontal_out, "write the frontal map here");
  cmd_attack->add_option("--issues-out", atk_issues_out, "write skipped-bucket report here");
  cmd_attack->add_option("--timeout", atk_timeout, "per-request oracle timeout, seconds");
  cmd_attack->add_option("--window", atk_window, "oracle pipeline window");

  // ---- merge ----
  auto* cmd_merge = app.add_subcommand("merge", "build a class-merge sampling plan");
  std::string merge_manifest, merge_out = "merge_plan.json";
  std::uint64_t merge_seed = 0;
  cmd_merge->add_option("--manifest", merge_manifest, "merge manifest JSON")->required();
  cmd_merge->add_option("--seed", merge_seed, "sampling seed");
  cmd_merge->add_option("--out", merge_out, "output plan path");

  // ---- report ----
  auto* cmd_report = app.add_subcommand("report", "aggregate attack curve CSVs");
  cmd_report->require_subcommand(1);
  auto* rep_curves = cmd_report->add_subcommand("curves", "merge curve CSVs into one long table");
  std::string repc_out = "curves.csv";
  std::vector<std::string> repc_in;
  rep_curves->add_option("--out", repc_out, "merged CSV path");
  rep_curves->add_option("inputs", repc_in, "curve CSVs")->required();
  auto* rep_scatter =
      cmd_report->add_subcommand("scatter", "per-class accuracy of run A vs run B");
  std::string reps_out = "scatter.csv", reps_a, reps_b, reps_label_a = "a", reps_label_b = "b";
  rep_scatter->add_option("--out", reps_out, "scatter CSV path");
  rep_scatter->add_option("--a", reps_a, "curve CSV A")->required();
  rep_scatter->add_option("--b", reps_b, "curve CSV B")->required();
  rep_scatter->add_option("--label-a", reps_label_a, "column label for A");
  rep_scatter->add_option("--label-b", reps_label_b, "column label for B");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_layout) {
      const auto cfg =
          arena::default_arena_config(arena::generate_layout(lay_stops, lay_radius, lay_seed));
      spill(lay_out, arena::serialize_arena_config(cfg));
      std::cout << "wrote " << lay_out << " (" << lay_stops << " stops, radius " << lay_radius
                << " m)\n";
      return 0;
    }

    if (*cmd_fly) {
      if (!fly_mission_cfg.empty()) {
        const int frames = fly.mission.frames_per_stop;
        fly.mission = flightctl::parse_mission_config(slurp(fly_mission_cfg));
        if (cmd_fly->count("--frames-per-stop")) fly.mission.frames_per_stop = frames;
      }
      fly.out_root = fly_out;
      if (!fly_layout_file.empty()) fly.layout_file = fly_layout_file;
      if (!fly_log_dir.empty()) fly.log_dir = fly_log_dir;
      const pipeline::FlyResult result = pipeline::run_fly(fly);
      std::cout << "missions: " << result.missions << "\n"
                << "files written: " << result.files_written << "\n"
                << "manifest total images: " << result.manifest.total_images << "\n";
      if (!result.ok()) {
        std::cerr << result.failures.size() << " mission(s) failed:\n";
        for (const auto& f : result.failures) std::cerr << "  " << f << "\n";
        return 1;
      }
      return 0;
    }

    if (*cmd_validate) {
      const datastore::ValidationReport report = datastore::validate(val_root);
      std::cout << "records: " << report.records_seen << ", images: " << report.images_seen
                << ", violations: " << report.violations.size() << "\n";
      long printed = 0;
      for (const auto& v : report.violations) {
        if (printed++ >= val_max_print) {
          std::cout << "  ... " << (report.violations.size() - val_max_print) << " more\n";
          break;
        }
        std::cout << "  " << v.file << " [" << v.field << "] " << v.message << "\n";
      }
      return report.ok() ? 0 : 1;
    }

    if (*cmd_split) {
      const auto reader = datastore::DatasetReader::open(split_root);
      const auto index = protocols::DatasetIndex::from_reader(reader);
      const auto strategy = protocols::strategy_from_name(split_strategy);
      const auto manifest = protocols::make_split(index, split_cfg, strategy, split_seed,
                                                  split_views.empty() ? nullptr : &split_views);
      spill(split_out, protocols::serialize_split_manifest(manifest));
      std::cout << "wrote " << split_out << ": train " << manifest.train.size() << ", test "
                << manifest.test.size() << " (D = " << split_cfg.train_size() << ")\n";
      return 0;
    }

    if (*cmd_attack) {
      const auto reader = datastore::DatasetReader::open(atk_root);
      const auto index = protocols::DatasetIndex::from_reader(reader);
      const OracleChoice choice = parse_oracle_spec(atk_oracle, atk_spec.seed);

      std::map<std::string, int> frontal;
      if (!atk_frontal_in.empty()) {
        frontal = load_frontal_map(atk_frontal_in);
      } else {
        // Data-driven frontal pose: measure per-view accuracy, take the
        // argmax per class. Stubs carry an inherent seed-derived favorite
        // view, so this genuinely discovers their bias.
        const auto probe = make_oracle(choice, index, {}, atk_timeout, atk_window);
        const auto table = protocols::measure_accuracy_table(
            index, *probe, atk_samples, derive_seed(atk_spec.seed, 0x7461626c65ULL));
        frontal = protocols::assign_frontal(table);
      }
      if (!atk_frontal_out.empty()) spill(atk_frontal_out, frontal_map_to_json(frontal));

      const auto plan = protocols::sample_attack_pairs(index, frontal, atk_spec);
      if (!atk_issues_out.empty()) {
        json issues = json::array();
        for (const auto& issue : plan.issues)
          issues.push_back(json{{"class", issue.class_name},
                                {"delta_theta", issue.delta_theta},
                                {"reason", issue.reason}});
        spill(atk_issues_out, issues.dump(2) + "\n");
      }
      const auto endpoint = make_oracle(choice, index, {}, atk_timeout, atk_window);
      const auto curve = protocols::run_attack(plan, *endpoint);
      spill(atk_out, protocols::curve_to_csv(curve));
      std::cout << "pairs: " << plan.pairs.size() << ", sources kept: " << curve.sources_correct
                << "/" << curve.sources_total << "\n";
      for (const auto& b : curve.buckets)
        std::cout << "  dtheta " << b.delta_theta << ": " << b.correct << "/" << b.pairs << " = "
                  << b.accuracy() << "\n";
      if (curve.aborted) {
        std::cerr << "attack aborted: " << curve.error << " (partial results saved)\n";
        return 1;
      }
      return 0;
    }

    if (*cmd_merge) {
      const auto manifest = protocols::parse_merge_manifest(slurp(merge_manifest));
      const auto plan = protocols::build_merge_plan(manifest, merge_seed);
      spill(merge_out, protocols::serialize_merge_plan(plan));
      for (const auto& [name, subs] : plan.per_merged)
        std::cout << name << ": train " << plan.train_total(name) << ", test "
                  << plan.test_total(name) << "\n";
      return 0;
    }

    if (*rep_curves) {
      std::ostringstream out;
      out << "source,scope,class,delta_theta,n,correct,accuracy\n";
      out.precision(10);
      for (const auto& path : repc_in) {
        for (const CurveRow& r : read_curve_csv(path)) {
          const double acc = r.n > 0 ? static_cast<double>(r.correct) / r.n : 0.0;
          out << datastore::csv_escape(fs::path(path).stem().string()) << ',' << r.scope << ','
              << datastore::csv_escape(r.class_name) << ',' << r.delta << ',' << r.n << ','
              << r.correct << ',' << acc << "\n";
        }
      }
      spill(repc_out, out.str());
      std::cout << "wrote " << repc_out << "\n";
      return 0;
    }

    if (*rep_scatter) {
      const auto acc_by_class = [](const std::vector<CurveRow>& rows) {
        std::map<std::string, std::pair<long, long>> agg;
        for (const CurveRow& r : rows) {
          if (r.scope != "class") continue;
          agg[r.class_name].first += r.n;
          agg[r.class_name].second += r.correct;
        }
        return agg;
      };
      const auto a = acc_by_class(read_curve_csv(reps_a));
      const auto b = acc_by_class(read_curve_csv(reps_b));
      std::ostringstream out;
      out << "class,acc_" << reps_label_a << ",acc_" << reps_label_b << "\n";
      out.precision(10);
      for (const auto& [cls, na] : a) {
        const auto it = b.find(cls);
        if (it == b.end()) continue;
        const double acc_a = na.first > 0 ? static_cast<double>(na.second) / na.first : 0.0;
        const double acc_b =
            it->second.first > 0 ? static_cast<double>(it->second.second) / it->second.first : 0.0;
        out << datastore::csv_escape(cls) << ',' << acc_a << ',' << acc_b << "\n";
      }
      spill(reps_out, out.str());
      std::cout << "wrote " << reps_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
