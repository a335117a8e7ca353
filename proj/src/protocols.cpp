#include "dronecap/protocols.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dronecap::protocols {

using json = nlohmann::json;

const IndexClass* DatasetIndex::find_class(const std::string& name) const {
  for (const auto& c : classes)
    if (c.name == name) return &c;
  return nullptr;
}

DatasetIndex DatasetIndex::from_reader(const datastore::DatasetReader& reader) {
  DatasetIndex index;
  std::map<std::string, std::map<std::string, IndexObject>> tree;
  for (const datastore::DatasetRecord& r : reader.records()) {
    IndexObject& obj = tree[r.class_name][r.instance_id];
    obj.instance_id = r.instance_id;
    obj.symmetry_degrees = r.ann.symmetry_degrees;
    obj.views[r.ann.pose_degrees].push_back({r.ann.image_file, r.frame_index});
  }
  for (auto& [class_name, objects] : tree) {
    IndexClass cls;
    cls.name = class_name;
    for (auto& [id, obj] : objects) cls.objects.push_back(std::move(obj));
    index.classes.push_back(std::move(cls));
  }
  return index;
}

// ---- Frontal pose -----------------------------------------------------------

namespace {
const int kViewGrid[8] = {0, 45, 90, 135, 180, 225, 270, 315};
}

void check_accuracy_table(const AccuracyTable& table) {
  if (table.cells.empty()) throw std::invalid_argument("accuracy table is empty");
  for (const auto& [class_name, views] : table.cells) {
    for (int v : kViewGrid)
      if (!views.count(v))
        throw std::invalid_argument("accuracy table incomplete: class " + class_name +
                                    " lacks view " + std::to_string(v));
    for (const auto& [view, acc] : views) {
      if (acc < 0.0 || acc > 1.0)
        throw std::invalid_argument("accuracy out of [0,1] for class " + class_name);
    }
  }
}

std::map<std::string, int> assign_frontal(const AccuracyTable& table) {
  check_accuracy_table(table);
  std::map<std::string, int> frontal;
  for (const auto& [class_name, views] : table.cells) {
    int best_view = 0;
    double best_acc = -1.0;
    for (int v : kViewGrid) {  // ascending angle, so ties keep the smallest
      const double acc = views.at(v);
      if (acc > best_acc) {
        best_acc = acc;
        best_view = v;
      }
    }
    frontal[class_name] = best_view;
  }
  return frontal;
}

AccuracyTable measure_accuracy_table(const DatasetIndex& index, oracle::Oracle& endpoint,
                                     int samples_per_cell, std::uint64_t seed) {
  if (samples_per_cell < 1)
    throw std::invalid_argument("measure_accuracy_table: samples_per_cell must be >= 1");
  std::mt19937_64 rng(seed);

  struct Cell {
    std::string class_name;
    int view = 0;
  };
  std::vector<oracle::OracleRequest> requests;
  std::vector<Cell> cell_of;
  for (const IndexClass& cls : index.classes) {
    for (int v : kViewGrid) {
      std::vector<const IndexRecord*> pool;
      for (const IndexObject& obj : cls.objects) {
        const auto it = obj.views.find(v);
        if (it == obj.views.end()) continue;
        for (const IndexRecord& r : it->second) pool.push_back(&r);
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      const int take = std::min<std::size_t>(samples_per_cell, pool.size());
      for (int i = 0; i < take; ++i) {
        requests.push_back({static_cast<std::int64_t>(requests.size()), pool[i]->image_file});
        cell_of.push_back({cls.name, v});
      }
    }
  }

  const auto responses = oracle::classify_batch(requests, endpoint);
  std::map<std::int64_t, const oracle::OracleResponse*> by_id;
  for (const auto& r : responses) by_id[r.id] = &r;

  AccuracyTable table;
  std::map<std::string, std::map<int, std::pair<long, long>>> counts;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto& [n, correct] = counts[cell_of[i].class_name][cell_of[i].view];
    ++n;
    if (by_id.at(requests[i].id)->label == cell_of[i].class_name) ++correct;
  }
  for (const IndexClass& cls : index.classes) {
    for (int v : kViewGrid) {
      const auto it = counts.find(cls.name);
      double acc = 0.0;
      if (it != counts.end() && it->second.count(v)) {
        const auto [n, correct] = it->second.at(v);
        acc = n > 0 ? static_cast<double>(correct) / n : 0.0;
      }
      table.cells[cls.name][v] = acc;
    }
  }
  return table;
}

// ---- Angle arithmetic ---------------------------------------------------------

int angular_distance(int a_degrees, int b_degrees) {
  const auto on_grid = [](int d) { return d >= 0 && d < 360 && d % 45 == 0; };
  if (!on_grid(a_degrees) || !on_grid(b_degrees))
    throw std::invalid_argument("angular_distance: angles must lie on the 45-degree grid");
  const int diff = std::abs(a_degrees - b_degrees) % 360;
  return std::min(diff, 360 - diff);
}

// ---- Attack pairs ---------------------------------------------------------------

void check_attack_spec(const AttackSpec& spec) {
  if (spec.pairs_per_class < 1)
    throw std::invalid_argument("AttackSpec: pairs_per_class must be >= 1");
  if (spec.delta_thetas.empty()) throw std::invalid_argument("AttackSpec: no delta values");
  for (int d : spec.delta_thetas) {
    if (d < 0 || d > 180 || d % 45 != 0)
      throw std::invalid_argument(
          "AttackSpec: delta values must be minimal grid distances {0,45,90,135,180}");
  }
}

AttackPlan sample_attack_pairs(const DatasetIndex& index,
                               const std::map<std::string, int>& frontal_views,
                               const AttackSpec& spec) {
  check_attack_spec(spec);
  for (const IndexClass& cls : index.classes)
    if (!frontal_views.count(cls.name))
      throw std::invalid_argument("sample_attack_pairs: frontal map lacks class " + cls.name);

  AttackPlan plan;
  std::mt19937_64 rng(spec.seed);
  const auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  for (const IndexClass& cls : index.classes) {
    const int frontal = frontal_views.at(cls.name);
    for (const int delta : spec.delta_thetas) {
      // Candidate (object, target view) combinations for this bucket.
      struct Candidate {
        const IndexObject* object;
        int target_view;
      };
      std::vector<Candidate> candidates;
      bool symmetry_degenerate = false;
      for (const IndexObject& obj : cls.objects) {
        const auto src_it = obj.views.find(frontal);
        if (src_it == obj.views.end() || src_it->second.empty()) continue;
        if (delta == 0) {
          if (src_it->second.size() >= 2) candidates.push_back({&obj, frontal});
          continue;
        }
        if (delta % obj.symmetry_degrees == 0) {
          // The perturbed view repeats the source appearance exactly; such a
          // pair cannot measure pose sensitivity.
          symmetry_degenerate = true;
          continue;
        }
        for (const int tv : {(frontal + delta) % 360, (frontal - delta + 360) % 360}) {
          if (tv != frontal && obj.views.count(tv) && !obj.views.at(tv).empty())
            candidates.push_back({&obj, tv});
          if (delta == 180) break;  // +180 and -180 are the same view
        }
      }
      if (candidates.empty()) {
        plan.issues.push_back({cls.name, delta,
                               symmetry_degenerate
                                   ? "all targets identical to the source by object symmetry"
                                   : "no object offers a view at this angular distance"});
        continue;
      }
      for (int k = 0; k < spec.pairs_per_class; ++k) {
        const Candidate& cand = candidates[pick(candidates.size())];
        const auto& src_frames = cand.object->views.at(frontal);
        const auto& tgt_frames = cand.object->views.at(cand.target_view);
        AttackPair pair;
        pair.class_name = cls.name;
        pair.instance_id = cand.object->instance_id;
        pair.delta_theta = delta;
        pair.source_view = frontal;
        pair.target_view = cand.target_view;
        pair.source = src_frames[pick(src_frames.size())];
        if (delta == 0) {
          // Same pose: the pair differs only by camera shake across frames.
          do {
            pair.target = tgt_frames[pick(tgt_frames.size())];
          } while (pair.target.frame_index == pair.source.frame_index);
        } else {
          pair.target = tgt_frames[pick(tgt_frames.size())];
        }
        plan.pairs.push_back(std::move(pair));
      }
    }
  }
  return plan;
}

AttackCurve run_attack(const AttackPlan& plan, oracle::Oracle& endpoint) {
  AttackCurve curve;
  std::set<int> deltas;
  for (const AttackPair& p : plan.pairs) deltas.insert(p.delta_theta);

  const auto classify_unique = [&](auto path_of) -> std::map<std::string, std::string> {
    std::set<std::string> unique;
    for (const AttackPair& p : plan.pairs) unique.insert(path_of(p));
    std::vector<oracle::OracleRequest> requests;
    std::vector<std::string> paths;
    for (const std::string& path : unique) {
      requests.push_back({static_cast<std::int64_t>(requests.size()), path});
      paths.push_back(path);
    }
    const auto responses = oracle::classify_batch(requests, endpoint);
    std::map<std::int64_t, const oracle::OracleResponse*> by_id;
    for (const auto& r : responses) by_id[r.id] = &r;
    std::map<std::string, std::string> labels;
    for (std::size_t i = 0; i < requests.size(); ++i)
      labels[paths[i]] = by_id.at(requests[i].id)->label;
    return labels;
  };

  std::map<std::string, std::string> source_labels;
  std::map<std::string, std::string> target_labels;
  std::vector<const AttackPair*> kept;
  try {
    source_labels = classify_unique([](const AttackPair& p) { return p.source.image_file; });
    std::set<std::string> source_seen;
    for (const AttackPair& p : plan.pairs) {
      if (source_seen.insert(p.source.image_file).second) {
        ++curve.sources_total;
        if (source_labels.at(p.source.image_file) == p.class_name) ++curve.sources_correct;
      }
      if (source_labels.at(p.source.image_file) == p.class_name) kept.push_back(&p);
    }
    std::set<std::string> target_unique;
    std::vector<oracle::OracleRequest> target_requests;
    std::vector<std::string> target_paths;
    for (const AttackPair* p : kept)
      if (target_unique.insert(p->target.image_file).second) {
        target_requests.push_back(
            {static_cast<std::int64_t>(target_requests.size()), p->target.image_file});
        target_paths.push_back(p->target.image_file);
      }
    const auto responses = oracle::classify_batch(target_requests, endpoint);
    std::map<std::int64_t, const oracle::OracleResponse*> by_id;
    for (const auto& r : responses) by_id[r.id] = &r;
    for (std::size_t i = 0; i < target_requests.size(); ++i)
      target_labels[target_paths[i]] = by_id.at(target_requests[i].id)->label;
  } catch (const oracle::TransportError& e) {
    curve.aborted = true;
    curve.error = e.what();
  }

  std::map<int, AttackBucket> buckets;
  std::map<std::string, std::map<int, AttackBucket>> per_class;
  for (int d : deltas) {
    buckets[d].delta_theta = d;
  }
  for (const AttackPair* p : kept) {
    const auto it = target_labels.find(p->target.image_file);
    if (it == target_labels.end()) continue;  // lost to an aborted run
    AttackBucket& b = buckets[p->delta_theta];
    ++b.pairs;
    AttackBucket& cb = per_class[p->class_name][p->delta_theta];
    cb.delta_theta = p->delta_theta;
    ++cb.pairs;
    if (it->second == p->class_name) {
      ++b.correct;
      ++cb.correct;
    }
  }
  for (const auto& [d, b] : buckets) curve.buckets.push_back(b);
  for (const auto& [cls, m] : per_class) {
    for (const auto& [d, b] : m) curve.per_class[cls].push_back(b);
  }
  return curve;
}

std::string curve_to_csv(const AttackCurve& curve) {
  std::ostringstream out;
  out << "scope,class,delta_theta,n,correct,accuracy\n";
  out.precision(10);
  for (const AttackBucket& b : curve.buckets)
    out << "overall,," << b.delta_theta << ',' << b.pairs << ',' << b.correct << ','
        << b.accuracy() << "\n";
  for (const auto& [cls, bs] : curve.per_class)
    for (const AttackBucket& b : bs)
      out << "class," << datastore::csv_escape(cls) << ',' << b.delta_theta << ',' << b.pairs
          << ',' << b.correct << ',' << b.accuracy() << "\n";
  return out.str();
}

// ---- Splits ----------------------------------------------------------------------

const char* strategy_name(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::MaxObjectDiversity: return "max-object-diversity";
    case SplitStrategy::MaxPoseDiversity: return "max-pose-diversity";
    case SplitStrategy::MaxCameraShake: return "max-camera-shake";
    case SplitStrategy::Custom: return "custom";
  }
  return "?";
}

SplitStrategy strategy_from_name(const std::string& name) {
  if (name == "max-object-diversity") return SplitStrategy::MaxObjectDiversity;
  if (name == "max-pose-diversity") return SplitStrategy::MaxPoseDiversity;
  if (name == "max-camera-shake") return SplitStrategy::MaxCameraShake;
  if (name == "custom") return SplitStrategy::Custom;
  throw std::invalid_argument("unknown split strategy: " + name);
}

SplitManifest make_split(const DatasetIndex& index, const SplitConfig& cfg,
                         SplitStrategy strategy, std::uint64_t seed,
                         const std::vector<int>* custom_views) {
  if (cfg.classes < 1 || cfg.objects_per_class < 1 || cfg.poses_per_object < 1 ||
      cfg.examples_per_pose < 1)
    throw std::invalid_argument("make_split: every budget factor must be >= 1");
  if (static_cast<int>(index.classes.size()) < cfg.classes)
    throw std::invalid_argument("make_split infeasible: C=" + std::to_string(cfg.classes) +
                                " but the dataset has only " +
                                std::to_string(index.classes.size()) + " classes");

  std::mt19937_64 rng(seed);

  std::vector<const IndexClass*> all_classes;
  for (const IndexClass& c : index.classes) all_classes.push_back(&c);
  std::shuffle(all_classes.begin(), all_classes.end(), rng);
  all_classes.resize(cfg.classes);
  std::sort(all_classes.begin(), all_classes.end(),
            [](const IndexClass* a, const IndexClass* b) { return a->name < b->name; });

  SplitManifest manifest;
  manifest.config = cfg;
  manifest.strategy = strategy;
  manifest.seed = seed;

  for (const IndexClass* cls : all_classes) {
    manifest.classes.push_back(cls->name);
    // Whole objects are held out: at least one per class must remain for test.
    if (static_cast<int>(cls->objects.size()) < cfg.objects_per_class + 1)
      throw std::invalid_argument(
          "make_split infeasible: class " + cls->name + " has " +
          std::to_string(cls->objects.size()) + " objects, need O/C=" +
          std::to_string(cfg.objects_per_class) + " plus a held-out object");

    std::vector<const IndexObject*> objects;
    for (const IndexObject& o : cls->objects) objects.push_back(&o);
    std::shuffle(objects.begin(), objects.end(), rng);

    for (int oi = 0; oi < static_cast<int>(objects.size()); ++oi) {
      const IndexObject& obj = *objects[oi];
      if (oi >= cfg.objects_per_class) {
        for (const auto& [view, frames] : obj.views)
          for (const IndexRecord& r : frames) manifest.test.push_back(r.image_file);
        continue;
      }

      std::vector<int> available;
      for (const auto& [view, frames] : obj.views)
        if (static_cast<int>(frames.size()) >= cfg.examples_per_pose) available.push_back(view);
      if (static_cast<int>(available.size()) < cfg.poses_per_object)
        throw std::invalid_argument(
            "make_split infeasible: object " + cls->name + "/" + obj.instance_id + " offers " +
            std::to_string(available.size()) + " views with E/P=" +
            std::to_string(cfg.examples_per_pose) + " frames, need P/O=" +
            std::to_string(cfg.poses_per_object));

      std::vector<int> chosen_views;
      if (strategy == SplitStrategy::MaxPoseDiversity) {
        // Evenly spread over the available views, rotated by a seeded offset.
        const int v = static_cast<int>(available.size());
        const int off = static_cast<int>(rng() % v);
        std::set<int> idx;
        for (int j = 0; j < cfg.poses_per_object; ++j)
          idx.insert((off + (j * v) / cfg.poses_per_object) % v);
        // Collisions are impossible when P/O <= V since strides differ by
        // at least one slot; assert by construction.
        for (int i : idx) chosen_views.push_back(available[i]);
      } else if (strategy == SplitStrategy::Custom) {
        if (!custom_views)
          throw std::invalid_argument("make_split: custom strategy needs an explicit view list");
        for (int v : *custom_views) {
          if (std::find(available.begin(), available.end(), v) == available.end())
            throw std::invalid_argument("make_split: custom view " + std::to_string(v) +
                                        " unavailable for " + cls->name + "/" + obj.instance_id);
          chosen_views.push_back(v);
        }
        if (static_cast<int>(chosen_views.size()) != cfg.poses_per_object)
          throw std::invalid_argument("make_split: custom view list size must equal P/O");
      } else {
        std::shuffle(available.begin(), available.end(), rng);
        chosen_views.assign(available.begin(), available.begin() + cfg.poses_per_object);
        std::sort(chosen_views.begin(), chosen_views.end());
      }

      for (const int view : chosen_views) {
        const auto& frames = obj.views.at(view);
        std::vector<int> order(frames.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(cfg.examples_per_pose);
        std::sort(order.begin(), order.end());
        for (const int i : order) manifest.train.push_back(frames[i].image_file);
      }
    }
  }

  if (static_cast<long>(manifest.train.size()) != cfg.train_size())
    throw std::logic_error("make_split: train cardinality mismatch");
  return manifest;
}

std::string serialize_split_manifest(const SplitManifest& m) {
  json j{{"config",
          {{"classes", m.config.classes},
           {"objects_per_class", m.config.objects_per_class},
           {"poses_per_object", m.config.poses_per_object},
           {"examples_per_pose", m.config.examples_per_pose},
           {"train_size", m.config.train_size()}}},
         {"strategy", strategy_name(m.strategy)},
         {"seed", m.seed},
         {"class_names", m.classes},
         {"train", m.train},
         {"test", m.test}};
  return j.dump(2) + "\n";
}

SplitManifest parse_split_manifest(const std::string& text) {
  const json j = json::parse(text);
  SplitManifest m;
  m.config.classes = j.at("config").at("classes").get<int>();
  m.config.objects_per_class = j.at("config").at("objects_per_class").get<int>();
  m.config.poses_per_object = j.at("config").at("poses_per_object").get<int>();
  m.config.examples_per_pose = j.at("config").at("examples_per_pose").get<int>();
  m.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.classes = j.at("class_names").get<std::vector<std::string>>();
  m.train = j.at("train").get<std::vector<std::string>>();
  m.test = j.at("test").get<std::vector<std::string>>();
  if (static_cast<long>(m.train.size()) != m.config.train_size())
    throw std::invalid_argument("split manifest: train list does not match its budget");
  return m;
}

// ---- Merge plans --------------------------------------------------------------------

MergeManifest parse_merge_manifest(const std::string& text) {
  const json j = json::parse(text);
  MergeManifest manifest;
  for (const auto& [merged_name, subs] : j.at("merged_classes").items()) {
    for (const json& js : subs) {
      SubClassSpec spec;
      spec.name = js.at("name").get<std::string>();
      spec.train_count = js.value("train_count", 650);
      spec.test_count = js.value("test_count", 25);
      spec.train_pool = js.value("train_pool", 1300);
      spec.test_pool = js.value("test_pool", 50);
      manifest.merged[merged_name].push_back(std::move(spec));
    }
  }
  return manifest;
}

std::string serialize_merge_manifest(const MergeManifest& manifest) {
  json merged;
  for (const auto& [name, subs] : manifest.merged) {
    json arr = json::array();
    for (const SubClassSpec& s : subs)
      arr.push_back(json{{"name", s.name},
                         {"train_count", s.train_count},
                         {"test_count", s.test_count},
                         {"train_pool", s.train_pool},
                         {"test_pool", s.test_pool}});
    merged[name] = std::move(arr);
  }
  return json{{"merged_classes", std::move(merged)}}.dump(2) + "\n";
}

long MergePlan::train_total(const std::string& merged_class) const {
  long total = 0;
  const auto it = per_merged.find(merged_class);
  if (it == per_merged.end()) return 0;
  for (const SubClassPlan& p : it->second) total += static_cast<long>(p.train_indices.size());
  return total;
}

long MergePlan::test_total(const std::string& merged_class) const {
  long total = 0;
  const auto it = per_merged.find(merged_class);
  if (it == per_merged.end()) return 0;
  for (const SubClassPlan& p : it->second) total += static_cast<long>(p.test_indices.size());
  return total;
}

MergePlan build_merge_plan(const MergeManifest& manifest, std::uint64_t seed) {
  std::set<std::string> seen;
  for (const auto& [merged_name, subs] : manifest.merged) {
    if (subs.empty())
      throw std::invalid_argument("merge manifest: class " + merged_name + " has no sub-classes");
    for (const SubClassSpec& s : subs) {
      if (!seen.insert(s.name).second)
        throw std::invalid_argument("merge manifest: sub-class " + s.name +
                                    " appears in more than one merged class");
      if (s.train_count > s.train_pool || s.test_count > s.test_pool)
        throw std::invalid_argument("merge manifest: sample counts exceed the pool for " + s.name);
      if (s.train_count < 0 || s.test_count < 0)
        throw std::invalid_argument("merge manifest: negative sample count for " + s.name);
    }
  }

  std::mt19937_64 rng(seed);
  const auto sample = [&rng](int count, int pool) {
    std::vector<int> all(pool);
    for (int i = 0; i < pool; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
  };

  MergePlan plan;
  for (const auto& [merged_name, subs] : manifest.merged) {
    for (const SubClassSpec& s : subs) {
      SubClassPlan p;
      p.sub_class = s.name;
      p.train_indices = sample(s.train_count, s.train_pool);
      p.test_indices = sample(s.test_count, s.test_pool);
      plan.per_merged[merged_name].push_back(std::move(p));
    }
  }
  return plan;
}

std::string serialize_merge_plan(const MergePlan& plan) {
  json merged;
  for (const auto& [name, subs] : plan.per_merged) {
    json arr = json::array();
    for (const SubClassPlan& p : subs)
      arr.push_back(json{{"sub_class", p.sub_class},
                         {"train_indices", p.train_indices},
                         {"test_indices", p.test_indices}});
    merged[name] = std::move(arr);
  }
  return json{{"plan", std::move(merged)}}.dump(2) + "\n";
}

}  // namespace dronecap::protocols
