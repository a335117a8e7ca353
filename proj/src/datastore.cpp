#include "dronecap/datastore.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dronecap/png_io.hpp"

namespace dronecap::datastore {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

std::string view_frame_name(int view_degrees, int frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view%03d_frame%02d.png", view_degrees, frame_index);
  return buf;
}

int frontal_flag(const arena::ObjectSpec& object, int view_degrees) {
  switch (object.has_front_face) {
    case arena::FrontFace::NotIdentifiable: return -1;
    case arena::FrontFace::No: return 0;
    case arena::FrontFace::Yes: return view_degrees == 0 ? 1 : 0;
  }
  return 0;
}

}  // namespace

void write_manifest(const DatasetManifest& manifest, const fs::path& root) {
  json j{{"classes", manifest.classes},
         {"objects_per_class", manifest.objects_per_class},
         {"views_per_object", manifest.views_per_object},
         {"frames_per_view", manifest.frames_per_view},
         {"total_images", manifest.total_images}};
  std::ofstream out(root / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("write_manifest: cannot write under " + root.string());
  out << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& root) {
  std::ifstream in(root / "manifest.json", std::ios::binary);
  if (!in) throw std::runtime_error("read_manifest: missing manifest.json in " + root.string());
  json j;
  in >> j;
  DatasetManifest m;
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.objects_per_class = j.at("objects_per_class").get<int>();
  m.views_per_object = j.at("views_per_object").get<int>();
  m.frames_per_view = j.at("frames_per_view").get<int>();
  m.total_images = j.at("total_images").get<long>();
  return m;
}

long write_object(const flightctl::MissionLog& log, const arena::ObjectSpec& object,
                  const fs::path& root) {
  if (!log.completed)
    throw std::runtime_error("write_object: refusing to write an aborted mission log");
  arena::check_object_spec(object);

  const fs::path obj_dir = root / object.class_name / object.instance_id;
  long files = 0;
  try {
    fs::create_directories(obj_dir);

    std::vector<const flightctl::MissionCapture*> captures;
    captures.reserve(log.captures.size());
    for (const auto& c : log.captures) captures.push_back(&c);
    std::stable_sort(captures.begin(), captures.end(), [](const auto* a, const auto* b) {
      if (a->record.nominal_view_degrees != b->record.nominal_view_degrees)
        return a->record.nominal_view_degrees < b->record.nominal_view_degrees;
      return a->record.frame_index < b->record.frame_index;
    });

    std::ostringstream csv;
    csv << kCsvHeader << "\n";
    for (const auto* c : captures) {
      const int view = c->record.nominal_view_degrees;
      const std::string name = view_frame_name(view, c->record.frame_index);
      write_png((obj_dir / name).string(), c->record.frame);
      ++files;
      const std::string rel =
          object.class_name + "/" + object.instance_id + "/" + name;
      csv << csv_escape(rel) << ',' << csv_escape(object.description) << ',' << view << ','
          << frontal_flag(object, view) << ',' << object.symmetry_degrees << ','
          << c->record.bbox.x1 << ',' << c->record.bbox.y1 << ',' << c->record.bbox.x2 << ','
          << c->record.bbox.y2 << "\n";
    }

    std::ofstream out(obj_dir / "annotations.csv", std::ios::binary);
    if (!out) throw std::runtime_error("write_object: cannot write annotations.csv");
    out << csv.str();
    out.close();
    if (!out) throw std::runtime_error("write_object: failed writing annotations.csv");
    ++files;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(obj_dir, ec);  // no partial objects on disk
    throw;
  }
  return files;
}

// ---- Validation -------------------------------------------------------------

namespace {

struct CsvRow {
  AnnotationRecord rec;
  bool ok = false;
};

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoi(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

ValidationReport validate(const fs::path& root) {
  ValidationReport report;
  const auto flag = [&](const std::string& file, const std::string& field,
                        const std::string& message) {
    report.violations.push_back({file, field, message});
  };

  if (!fs::exists(root)) {
    flag(root.string(), "root", "dataset root does not exist");
    return report;
  }

  DatasetManifest manifest;
  bool have_manifest = false;
  try {
    manifest = read_manifest(root);
    have_manifest = true;
  } catch (const std::exception& e) {
    flag("manifest.json", "manifest", e.what());
  }
  if (have_manifest && manifest.total_images != manifest.expected_total()) {
    std::ostringstream msg;
    msg << "total_images=" << manifest.total_images << " but classes*objects*views*frames="
        << manifest.expected_total();
    flag("manifest.json", "total_images", msg.str());
  }

  std::set<std::string> manifest_classes(manifest.classes.begin(), manifest.classes.end());
  long images_found = 0;

  for (const std::string& class_name : sorted_subdirs(root)) {
    if (have_manifest && !manifest_classes.count(class_name))
      flag(class_name, "class", "class directory not listed in the manifest");

    const fs::path class_dir = root / class_name;
    const auto instances = sorted_subdirs(class_dir);
    if (have_manifest && static_cast<int>(instances.size()) != manifest.objects_per_class) {
      std::ostringstream msg;
      msg << "expected " << manifest.objects_per_class << " objects, found " << instances.size();
      flag(class_name, "objects_per_class", msg.str());
    }

    for (const std::string& instance : instances) {
      const fs::path obj_dir = class_dir / instance;
      const fs::path csv_path = obj_dir / "annotations.csv";
      const std::string csv_rel = class_name + "/" + instance + "/annotations.csv";
      std::ifstream in(csv_path, std::ios::binary);
      if (!in) {
        flag(csv_rel, "annotations", "annotations.csv missing");
        continue;
      }
      std::string line;
      if (!std::getline(in, line) || line != kCsvHeader) {
        flag(csv_rel, "header", "missing or wrong CSV header");
        continue;
      }

      std::set<int> frontal_views;
      std::set<int> flags_seen;
      std::set<int> symmetry_seen;
      std::map<int, int> frames_per_view;
      long row_no = 1;
      while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto fields = parse_csv_line(line);
        const std::string where = csv_rel + ":" + std::to_string(row_no);
        if (fields.size() != 9) {
          flag(where, "row", "expected 9 fields");
          continue;
        }
        AnnotationRecord rec;
        rec.image_file = fields[0];
        rec.description = fields[1];
        if (!parse_int(fields[2], rec.pose_degrees) || !parse_int(fields[3], rec.frontal) ||
            !parse_int(fields[4], rec.symmetry_degrees) || !parse_int(fields[5], rec.x1) ||
            !parse_int(fields[6], rec.y1) || !parse_int(fields[7], rec.x2) ||
            !parse_int(fields[8], rec.y2)) {
          flag(where, "row", "non-integer numeric field");
          continue;
        }
        ++report.records_seen;

        if (rec.pose_degrees % 45 != 0 || rec.pose_degrees < 0 || rec.pose_degrees >= 360)
          flag(where, "pose_degrees",
               "pose must lie on the 45-degree view grid {0,45,...,315}, got " +
                   std::to_string(rec.pose_degrees));
        if (rec.frontal < -1 || rec.frontal > 1)
          flag(where, "frontal", "frontal flag must be 1, 0 or -1");
        if (rec.frontal == 1) frontal_views.insert(rec.pose_degrees);
        flags_seen.insert(rec.frontal);
        if (rec.symmetry_degrees <= 0 || 360 % rec.symmetry_degrees != 0)
          flag(where, "symmetry_degrees", "symmetry must divide 360 evenly");
        symmetry_seen.insert(rec.symmetry_degrees);
        if (!(rec.x1 >= 0 && rec.x1 < rec.x2 && rec.x2 <= 640 && rec.y1 >= 0 && rec.y1 < rec.y2 &&
              rec.y2 <= 360))
          flag(where, "bbox", "bounding box violates 0<=x1<x2<=640, 0<=y1<y2<=360");

        const fs::path img = root / rec.image_file;
        if (!fs::exists(img)) {
          flag(rec.image_file, "image_file", "referenced PNG is missing");
        } else {
          try {
            const auto [w, h] = read_png_size(img.string());
            if (w != 640 || h != 360)
              flag(rec.image_file, "dimensions",
                   "raster is " + std::to_string(w) + "x" + std::to_string(h) +
                       ", expected 640x360");
          } catch (const std::exception& e) {
            flag(rec.image_file, "png", e.what());
          }
          ++images_found;
        }
        ++frames_per_view[rec.pose_degrees];
      }

      if (frontal_views.size() > 1)
        flag(csv_rel, "frontal", "more than one pose carries frontal=1");
      if (flags_seen.count(-1) && (flags_seen.count(0) || flags_seen.count(1)))
        flag(csv_rel, "frontal", "-1 rows mixed with 0/1 rows in one object");
      if (symmetry_seen.size() > 1)
        flag(csv_rel, "symmetry_degrees", "inconsistent symmetry across one object");
      if (have_manifest) {
        if (static_cast<int>(frames_per_view.size()) != manifest.views_per_object)
          flag(csv_rel, "views_per_object",
               "expected " + std::to_string(manifest.views_per_object) + " views, found " +
                   std::to_string(frames_per_view.size()));
        for (const auto& [view, n] : frames_per_view)
          if (n != manifest.frames_per_view)
            flag(csv_rel, "frames_per_view",
                 "view " + std::to_string(view) + " has " + std::to_string(n) + " frames, expected " +
                     std::to_string(manifest.frames_per_view));
      }
    }
  }

  report.images_seen = images_found;
  if (have_manifest && images_found != manifest.total_images) {
    std::ostringstream msg;
    msg << "manifest promises " << manifest.total_images << " images, found " << images_found;
    flag("manifest.json", "total_images", msg.str());
  }
  return report;
}

DatasetReader DatasetReader::open(const fs::path& root, bool force) {
  if (!force) {
    const ValidationReport report = validate(root);
    if (!report.ok()) {
      std::ostringstream msg;
      msg << "dataset fails validation with " << report.violations.size()
          << " violation(s); first: " << report.violations.front().file << " ["
          << report.violations.front().field << "] " << report.violations.front().message;
      throw std::runtime_error(msg.str());
    }
  }

  DatasetReader reader;
  reader.root_ = root;
  reader.manifest_ = read_manifest(root);

  for (const std::string& class_name : sorted_subdirs(root)) {
    for (const std::string& instance : sorted_subdirs(root / class_name)) {
      std::ifstream in(root / class_name / instance / "annotations.csv", std::ios::binary);
      if (!in) continue;
      std::string line;
      std::getline(in, line);  // header
      std::vector<DatasetRecord> rows;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = parse_csv_line(line);
        if (fields.size() != 9) continue;
        DatasetRecord r;
        r.ann.image_file = fields[0];
        r.ann.description = fields[1];
        r.ann.pose_degrees = std::stoi(fields[2]);
        r.ann.frontal = std::stoi(fields[3]);
        r.ann.symmetry_degrees = std::stoi(fields[4]);
        r.ann.x1 = std::stoi(fields[5]);
        r.ann.y1 = std::stoi(fields[6]);
        r.ann.x2 = std::stoi(fields[7]);
        r.ann.y2 = std::stoi(fields[8]);
        r.class_name = class_name;
        r.instance_id = instance;
        const std::string base = fs::path(r.ann.image_file).filename().string();
        const auto fpos = base.find("_frame");
        r.frame_index = fpos == std::string::npos ? 0 : std::stoi(base.substr(fpos + 6));
        rows.push_back(std::move(r));
      }
      std::sort(rows.begin(), rows.end(), [](const DatasetRecord& a, const DatasetRecord& b) {
        if (a.ann.pose_degrees != b.ann.pose_degrees) return a.ann.pose_degrees < b.ann.pose_degrees;
        return a.frame_index < b.frame_index;
      });
      for (auto& r : rows) reader.records_.push_back(std::move(r));
    }
  }
  return reader;
}

}  // namespace dronecap::datastore
