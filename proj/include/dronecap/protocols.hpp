#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dronecap/datastore.hpp"
#include "dronecap/oracle.hpp"

namespace dronecap::protocols {

// ---- Dataset index ----------------------------------------------------------
// The experiment protocols work over this index; pixels are never touched.

struct IndexRecord {
  std::string image_file;  // root-relative path
  int frame_index = 0;
};

struct IndexObject {
  std::string instance_id;
  int symmetry_degrees = 360;
  std::map<int, std::vector<IndexRecord>> views;  // view degrees -> frames in order
};

struct IndexClass {
  std::string name;
  std::vector<IndexObject> objects;  // sorted by instance_id
};

struct DatasetIndex {
  std::vector<IndexClass> classes;  // sorted by name

  const IndexClass* find_class(const std::string& name) const;
  static DatasetIndex from_reader(const datastore::DatasetReader& reader);
};

// ---- Frontal pose assignment -------------------------------------------------

struct AccuracyTable {
  // class -> view degrees -> accuracy in [0, 1]; every class needs all 8 views.
  std::map<std::string, std::map<int, double>> cells;
};

void check_accuracy_table(const AccuracyTable& table);

// Per class, the view of largest accuracy; ties break toward the smallest
// angle. Rejects incomplete tables.
std::map<std::string, int> assign_frontal(const AccuracyTable& table);

// Empirical per-(class, view) accuracy of an oracle over up to
// samples_per_cell frames per cell.
AccuracyTable measure_accuracy_table(const DatasetIndex& index, oracle::Oracle& endpoint,
                                     int samples_per_cell, std::uint64_t seed);

// ---- Angle arithmetic ---------------------------------------------------------

// Minimal angular distance on the 45-degree view grid; rejects off-grid input.
int angular_distance(int a_degrees, int b_degrees);

// ---- Pose-perturbation attack -------------------------------------------------

struct AttackSpec {
  std::vector<int> delta_thetas{0, 45, 90, 135, 180};
  int pairs_per_class = 40;
  std::uint64_t seed = 0;
};

void check_attack_spec(const AttackSpec& spec);

struct AttackPair {
  std::string class_name;
  std::string instance_id;
  IndexRecord source;  // a frontal-view frame
  int source_view = 0;
  IndexRecord target;  // same object, angular_distance(source, target) == delta
  int target_view = 0;
  int delta_theta = 0;
};

struct PairIssue {
  std::string class_name;
  int delta_theta = 0;
  std::string reason;
};

struct AttackPlan {
  std::vector<AttackPair> pairs;
  std::vector<PairIssue> issues;  // classes that could not serve a bucket, and why
};

// Samples pairs_per_class pairs per (class, delta). Sources are frames of the
// class's frontal view; targets are frames of the same object at the required
// angular distance. delta = 0 pairs differ only by frame index. Targets
// indistinguishable from the source by object symmetry are excluded and
// reported.
AttackPlan sample_attack_pairs(const DatasetIndex& index,
                               const std::map<std::string, int>& frontal_views,
                               const AttackSpec& spec);

struct AttackBucket {
  int delta_theta = 0;
  long pairs = 0;    // pairs whose source the oracle got right
  long correct = 0;  // of those, targets classified correctly
  double accuracy() const { return pairs > 0 ? static_cast<double>(correct) / pairs : 0.0; }
};

struct AttackCurve {
  std::vector<AttackBucket> buckets;  // ascending delta
  std::map<std::string, std::vector<AttackBucket>> per_class;
  long sources_total = 0;
  long sources_correct = 0;
  bool aborted = false;   // oracle transport failure; partial results kept
  std::string error;
};

// Classifies sources, keeps the correctly classified ones, then measures
// target accuracy per delta bucket.
AttackCurve run_attack(const AttackPlan& plan, oracle::Oracle& endpoint);

// CSV rows: scope,class,delta_theta,n,correct,accuracy ("overall" scope first).
std::string curve_to_csv(const AttackCurve& curve);

// ---- Diversity-budget splits ---------------------------------------------------

struct SplitConfig {
  int classes = 0;            // C
  int objects_per_class = 0;  // O/C
  int poses_per_object = 0;   // P/O
  int examples_per_pose = 0;  // E/P

  long train_size() const {
    return static_cast<long>(classes) * objects_per_class * poses_per_object * examples_per_pose;
  }
};

enum class SplitStrategy { MaxObjectDiversity, MaxPoseDiversity, MaxCameraShake, Custom };

const char* strategy_name(SplitStrategy s);
SplitStrategy strategy_from_name(const std::string& name);

struct SplitManifest {
  SplitConfig config;
  SplitStrategy strategy = SplitStrategy::MaxObjectDiversity;
  std::uint64_t seed = 0;
  std::vector<std::string> classes;  // selected class names
  std::vector<std::string> train;    // image paths, |train| == config.train_size()
  std::vector<std::string> test;     // every record of each held-out object
};

// Builds a train/test split honoring the budget identity exactly; test holds
// out whole objects. Throws std::invalid_argument naming the limiting factor
// when the config is infeasible. custom_views applies to Custom only.
SplitManifest make_split(const DatasetIndex& index, const SplitConfig& cfg,
                         SplitStrategy strategy, std::uint64_t seed,
                         const std::vector<int>* custom_views = nullptr);

std::string serialize_split_manifest(const SplitManifest& manifest);
SplitManifest parse_split_manifest(const std::string& text);

// ---- Class-merge plans -----------------------------------------------------------

struct SubClassSpec {
  std::string name;
  int train_count = 650;
  int test_count = 25;
  int train_pool = 1300;  // images available in the source sub-class
  int test_pool = 50;
};

struct MergeManifest {
  std::map<std::string, std::vector<SubClassSpec>> merged;  // merged class -> sub-classes
};

MergeManifest parse_merge_manifest(const std::string& text);
std::string serialize_merge_manifest(const MergeManifest& manifest);

struct SubClassPlan {
  std::string sub_class;
  std::vector<int> train_indices;  // sorted, unique, in [0, train_pool)
  std::vector<int> test_indices;
};

struct MergePlan {
  std::map<std::string, std::vector<SubClassPlan>> per_merged;

  long train_total(const std::string& merged_class) const;
  long test_total(const std::string& merged_class) const;
};

// Deterministic per-sub-class sample indices; rejects manifests whose
// sub-classes overlap across merged classes.
MergePlan build_merge_plan(const MergeManifest& manifest, std::uint64_t seed);

std::string serialize_merge_plan(const MergePlan& plan);

}  // namespace dronecap::protocols
