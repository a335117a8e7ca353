#include "dronecap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dronecap/rng.hpp"

namespace dronecap::pipeline {

namespace fs = std::filesystem;

namespace {

const char* kClassNames[] = {
    "airplane", "backpack", "ball",    "book",   "bottle",  "camera",  "car",
    "chair",    "clock",    "drill",   "guitar", "hat",     "helmet",  "kettle",
    "keyboard", "lamp",     "monitor", "mug",    "phone",   "plant",   "shoe",
    "speaker",  "teapot",   "teddy_bear", "toaster",
};
constexpr int kClassNameCount = 25;

const char* kAdjectives[] = {
    "crimson", "amber", "cobalt", "violet", "pale",   "charcoal",
    "yellow",  "magenta", "brown", "azure", "striped", "matte",
};
constexpr int kAdjectiveCount = 12;

}  // namespace

std::string class_name_for(int class_index) {
  if (class_index < 0) throw std::invalid_argument("class index must be >= 0");
  if (class_index < kClassNameCount) return kClassNames[class_index];
  char buf[24];
  std::snprintf(buf, sizeof buf, "class_%03d", class_index);
  return buf;
}

arena::ObjectSpec make_object_spec(std::uint64_t corpus_seed, const std::string& class_name,
                                   int class_index, int instance_index) {
  FastRng rng(derive_seed(corpus_seed, 0x6f626a65637473ULL, class_index, instance_index));
  arena::ObjectSpec spec;
  spec.class_name = class_name;
  char id[48];
  std::snprintf(id, sizeof id, "%s_%02d", class_name.c_str(), instance_index);
  spec.instance_id = id;

  const double front_draw = rng.uniform();
  if (front_draw < 0.75) {
    spec.has_front_face = arena::FrontFace::Yes;
    spec.symmetry_degrees = 360;  // an identifiable front implies no repeat
  } else if (front_draw < 0.85) {
    spec.has_front_face = arena::FrontFace::No;
    const int choices[] = {90, 180, 360};
    spec.symmetry_degrees = choices[rng.next() % 3];
  } else {
    spec.has_front_face = arena::FrontFace::NotIdentifiable;
    const int choices[] = {45, 90, 180, 360};
    spec.symmetry_degrees = choices[rng.next() % 4];
  }

  spec.footprint = {0.22 + rng.uniform() * 0.12, 0.22 + rng.uniform() * 0.12};
  spec.appearance_seed = derive_seed(corpus_seed, 0x6c6f6f6b73ULL, class_index, instance_index);
  spec.description =
      std::string(kAdjectives[rng.next() % kAdjectiveCount]) + " " + class_name;
  return spec;
}

FlyResult run_fly(const FlyOptions& options) {
  if (options.n_classes < 1 || options.n_objects < 1)
    throw std::invalid_argument("run_fly: class and object counts must be >= 1");
  if (options.jobs < 1) throw std::invalid_argument("run_fly: jobs must be >= 1");

  arena::ArenaConfig arena_cfg;
  if (options.layout_file) {
    std::ifstream in(*options.layout_file, std::ios::binary);
    if (!in) throw std::runtime_error("run_fly: cannot read layout " + *options.layout_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    arena_cfg = arena::parse_arena_config(buf.str());
  } else {
    arena_cfg = arena::default_arena_config(arena::generate_layout(
        options.n_stops, options.stop_radius, derive_seed(options.seed, 0x6c61796f7574ULL)));
  }

  fs::create_directories(options.out_root);
  if (options.log_dir) fs::create_directories(*options.log_dir);
  {
    std::ofstream out(options.out_root / "arena_config.json", std::ios::binary);
    out << arena::serialize_arena_config(arena_cfg);
  }

  FlyResult result;
  result.manifest.objects_per_class = options.n_objects;
  result.manifest.views_per_object = static_cast<int>(arena_cfg.layout.stops.size());
  result.manifest.frames_per_view = options.mission.frames_per_stop;
  for (int c = 0; c < options.n_classes; ++c)
    result.manifest.classes.push_back(class_name_for(c));
  result.manifest.total_images = result.manifest.expected_total();

  struct Job {
    int class_index;
    int instance_index;
  };
  std::vector<Job> jobs_list;
  for (int c = 0; c < options.n_classes; ++c)
    for (int o = 0; o < options.n_objects; ++o) jobs_list.push_back({c, o});

  std::atomic<std::size_t> next{0};
  std::atomic<long> files{0};
  std::atomic<long> missions{0};
  std::mutex failure_mutex;
  std::vector<std::string> failures;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs_list.size()) return;
      const Job job = jobs_list[i];
      const std::string class_name = class_name_for(job.class_index);
      const arena::ObjectSpec spec =
          make_object_spec(options.seed, class_name, job.class_index, job.instance_index);
      const std::uint64_t mission_seed =
          derive_seed(options.seed, 0x6d697373696f6eULL, job.class_index, job.instance_index);
      try {
        const flightctl::MissionLog log =
            flightctl::run_mission(arena_cfg, spec, options.mission, options.gains, options.shake,
                                   options.degradation, mission_seed);
        ++missions;
        if (!log.completed)
          throw std::runtime_error("mission aborted: " + log.abort_reason);
        files += datastore::write_object(log, spec, options.out_root);
        if (options.log_dir) {
          std::ofstream out(*options.log_dir / (spec.class_name + "_" + spec.instance_id + ".jsonl"),
                            std::ios::binary);
          out << flightctl::export_ticks_jsonl(log);
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failures.push_back(spec.class_name + "/" + spec.instance_id + ": " + e.what());
      }
    }
  };

  if (options.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < options.jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(failures.begin(), failures.end());
  result.failures = std::move(failures);
  result.files_written = files.load();
  result.missions = missions.load();
  datastore::write_manifest(result.manifest, options.out_root);
  return result;
}

std::uint64_t hash_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
      h = (h ^ static_cast<unsigned char>(data[i])) * 0x100000001b3ULL;
  };
  for (const fs::path& p : files) {
    const std::string rel = fs::relative(p, root).generic_string();
    mix(rel.data(), rel.size());
    std::ifstream in(p, std::ios::binary);
    char buf[1 << 16];
    while (in) {
      in.read(buf, sizeof buf);
      mix(buf, static_cast<std::size_t>(in.gcount()));
    }
  }
  return h;
}

}  // namespace dronecap::pipeline
