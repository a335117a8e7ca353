#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dronecap/arena.hpp"
#include "dronecap/capture.hpp"
#include "dronecap/datastore.hpp"
#include "dronecap/flightctl.hpp"
#include "dronecap/vehicle.hpp"

namespace dronecap::pipeline {

// Everyday object class names for generated corpora; indexes past the end
// fall back to numbered names.
std::string class_name_for(int class_index);

// Deterministic per-object spec: front-face category, symmetry, footprint and
// appearance all derive from (corpus_seed, class, instance).
arena::ObjectSpec make_object_spec(std::uint64_t corpus_seed, const std::string& class_name,
                                   int class_index, int instance_index);

struct FlyOptions {
  std::filesystem::path out_root;
  int n_classes = 2;
  int n_objects = 2;
  std::uint64_t seed = 0;
  int n_stops = 8;
  double stop_radius = 1.5;
  std::optional<std::string> layout_file;  // overrides the generated layout
  flightctl::MissionConfig mission;
  flightctl::ControllerGains gains;
  vehicle::ShakeModel shake;
  capture::DegradationParams degradation;
  int jobs = 1;
  std::optional<std::filesystem::path> log_dir;  // per-object tick logs (JSONL)
};

struct FlyResult {
  long missions = 0;
  long files_written = 0;
  datastore::DatasetManifest manifest;
  std::vector<std::string> failures;  // one entry per failed object mission
  bool ok() const { return failures.empty(); }
};

// Flies one mission per (class, object) and writes the dataset under
// out_root. Per-object seeds derive from the corpus seed, so results do not
// depend on the job count.
FlyResult run_fly(const FlyOptions& options);

// Order-independent digest of a directory tree (relative paths + contents).
std::uint64_t hash_tree(const std::filesystem::path& root);

}  // namespace dronecap::pipeline
