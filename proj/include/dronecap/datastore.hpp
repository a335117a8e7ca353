#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dronecap/arena.hpp"
#include "dronecap/flightctl.hpp"

namespace dronecap::datastore {

// One CSV row. image_file is relative to the dataset root.
struct AnnotationRecord {
  std::string image_file;
  std::string description;
  int pose_degrees = 0;   // {0, 45, ..., 315}
  int frontal = 0;        // 1 frontal face shown, 0 not shown, -1 no identifiable front
  int symmetry_degrees = 360;
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // half-open bbox
  bool operator==(const AnnotationRecord&) const = default;
};

inline constexpr const char* kCsvHeader =
    "image_file,description,pose_degrees,frontal,symmetry_degrees,x1,y1,x2,y2";

struct DatasetManifest {
  std::vector<std::string> classes;
  int objects_per_class = 0;
  int views_per_object = 0;
  int frames_per_view = 0;
  long total_images = 0;  // must equal the product of the factors

  long expected_total() const {
    return static_cast<long>(classes.size()) * objects_per_class * views_per_object *
           frames_per_view;
  }
};

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& root);
DatasetManifest read_manifest(const std::filesystem::path& root);

// Writes root/<class>/<instance>/view{DDD}_frame{FF}.png plus one
// annotations.csv per object. Returns the number of files written (PNGs plus
// the CSV). Cleans up the object directory if any write fails.
long write_object(const flightctl::MissionLog& log, const arena::ObjectSpec& object,
                  const std::filesystem::path& root);

struct Violation {
  std::string file;
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  long images_seen = 0;
  long records_seen = 0;
  bool ok() const { return violations.empty(); }
};

// Checks every record invariant, file existence, raster dimensions, and the
// manifest arithmetic. Violations are report entries, never exceptions.
ValidationReport validate(const std::filesystem::path& root);

struct DatasetRecord {
  AnnotationRecord ann;
  std::string class_name;
  std::string instance_id;
  int frame_index = 0;
};

class DatasetReader {
 public:
  // Refuses roots that fail validation unless force is set.
  static DatasetReader open(const std::filesystem::path& root, bool force = false);

  const DatasetManifest& manifest() const { return manifest_; }
  // Grouped by (class, object, view), lexicographic, frames in order.
  const std::vector<DatasetRecord>& records() const { return records_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  DatasetManifest manifest_;
  std::vector<DatasetRecord> records_;
};

// CSV plumbing shared with the protocols module's reports.
std::string csv_escape(const std::string& field);
std::vector<std::string> parse_csv_line(const std::string& line);

}  // namespace dronecap::datastore
