#include "maxsim/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace maxsim {
namespace {

void sort_samples(std::vector<SampleRecord>& samples) {
  std::sort(samples.begin(), samples.end(),
            [](const SampleRecord& a, const SampleRecord& b) {
              return a.sample_id < b.sample_id;
            });
}

void check_unique_ids(const std::vector<SampleRecord>& sorted) {
  for (size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].sample_id == sorted[i - 1].sample_id) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "duplicate sample_id: " + sorted[i].sample_id);
    }
  }
}

void check_role_class_coupling(const SampleRecord& s) {
  if (s.role == Role::kQuery && !s.action) {
    throw Error(ErrorCode::kInconsistentInputs,
                s.sample_id + ": query without a class");
  }
  if (s.role == Role::kDistractor && s.action) {
    throw Error(ErrorCode::kInconsistentInputs,
                s.sample_id + ": distractor carrying a class");
  }
}

void validate_manifest(const BenchmarkManifest& m) {
  check_unique_ids(m.samples);
  switch (m.protocol) {
    case Protocol::kInterPair:
      for (const auto& s : m.samples) {
        check_role_class_coupling(s);
        if (s.pair_id && *s.pair_id == kExcludedInterPairId) {
          throw Error(ErrorCode::kExcludedPair,
                      s.sample_id + ": forward/reverse motion is excluded "
                                    "from inter-pair evaluation");
        }
      }
      break;
    case Protocol::kIntraPair:
      for (const auto& s : m.samples) {
        if (s.role == Role::kDistractor || !s.action) {
          throw Error(ErrorCode::kDistractorNotAllowed,
                      s.sample_id + ": intra-pair manifests hold labeled "
                                    "queries only");
        }
      }
      break;
    case Protocol::kClassification:
      for (const auto& s : m.samples) {
        auto it = m.choices.find(s.sample_id);
        if (it == m.choices.end()) {
          throw Error(ErrorCode::kInconsistentInputs,
                      s.sample_id + ": classification sample without choices");
        }
        const ChoiceSet& c = it->second;
        if (c.sentences.size() < 2) {
          throw Error(ErrorCode::kInconsistentInputs,
                      s.sample_id + ": needs at least 2 choice sentences");
        }
        if (c.correct < 0 || c.correct >= static_cast<int>(c.sentences.size())) {
          throw Error(ErrorCode::kInconsistentInputs,
                      s.sample_id + ": correct index out of range");
        }
      }
      for (const auto& [id, unused] : m.choices) {
        (void)unused;
        bool known = std::any_of(
            m.samples.begin(), m.samples.end(),
            [&](const SampleRecord& s) { return s.sample_id == id; });
        if (!known) {
          throw Error(ErrorCode::kInconsistentInputs,
                      "choices for unknown sample_id: " + id);
        }
      }
      break;
  }
}

}  // namespace

SampleRecord compute_clip_spec(const ActivityAnnotation& annotation,
                               double fps_of_source, double padding) {
  validate(annotation);
  if (fps_of_source <= 0) {
    throw Error(ErrorCode::kInconsistentInputs,
                annotation.activity_id + ": fps_of_source must be > 0");
  }

  bool any = false;
  Box roi;
  for (const auto& actor : annotation.actors) {
    for (const auto& fb : actor.boxes) {
      if (fb.frame < annotation.start_frame || fb.frame > annotation.end_frame)
        continue;
      roi = any ? union_box(roi, fb.box) : fb.box;
      any = true;
    }
  }
  if (!any) {
    throw Error(ErrorCode::kMissingGeometry,
                annotation.activity_id +
                    ": no actor boxes inside the activity span");
  }

  double dx = padding * roi.width();
  double dy = padding * roi.height();
  PixelBox crop;
  crop.x0 = std::max(0, static_cast<int>(std::floor(roi.x0 - dx)));
  crop.y0 = std::max(0, static_cast<int>(std::floor(roi.y0 - dy)));
  crop.x1 = static_cast<int>(std::ceil(roi.x1 + dx));
  crop.y1 = static_cast<int>(std::ceil(roi.y1 + dy));

  SampleRecord s;
  s.sample_id = annotation.activity_id;
  s.kind = MediaKind::kVideo;
  s.media = annotation.scene_id;
  if (!annotation.action_label.empty()) {
    const ActionClass& action = require_action(annotation.action_label);
    s.action = std::string(action.name);
    s.pair_id = std::string(action.pair_id);
    s.role = Role::kQuery;
  } else {
    s.role = Role::kDistractor;
  }
  s.crop = crop;
  s.span = TimeSpan{annotation.start_frame / fps_of_source,
                    annotation.end_frame / fps_of_source};
  return s;
}

BenchmarkManifest build_inter_pair_manifest(
    std::vector<SampleRecord> queries, std::vector<SampleRecord> distractors) {
  BenchmarkManifest m;
  m.protocol = Protocol::kInterPair;
  m.constrained = distractors.empty();

  for (SampleRecord& q : queries) {
    if (!q.action) {
      throw Error(ErrorCode::kInconsistentInputs,
                  q.sample_id + ": inter-pair query without a class");
    }
    const ActionClass& action = require_action(*q.action);
    if (action.pair_id == kExcludedInterPairId) {
      throw Error(ErrorCode::kExcludedPair,
                  q.sample_id + ": " + *q.action +
                      " always co-occurs with other vehicle movement and is "
                      "excluded from inter-pair evaluation");
    }
    q.pair_id = std::string(action.pair_id);
    q.role = Role::kQuery;
    m.samples.push_back(std::move(q));
  }
  for (SampleRecord& d : distractors) {
    if (d.action) {
      throw Error(ErrorCode::kInconsistentInputs,
                  d.sample_id + ": distractor carrying a class");
    }
    d.pair_id.reset();
    d.role = Role::kDistractor;
    m.samples.push_back(std::move(d));
  }
  sort_samples(m.samples);
  validate_manifest(m);
  return m;
}

BenchmarkManifest build_intra_pair_manifest(std::vector<SampleRecord> queries) {
  BenchmarkManifest m;
  m.protocol = Protocol::kIntraPair;
  for (SampleRecord& q : queries) {
    if (q.role == Role::kDistractor || !q.action) {
      throw Error(ErrorCode::kDistractorNotAllowed,
                  q.sample_id + ": intra-pair manifests hold labeled queries "
                                "only");
    }
    const ActionClass& action = require_action(*q.action);
    q.pair_id = std::string(action.pair_id);
    q.role = Role::kQuery;
    m.samples.push_back(std::move(q));
  }
  sort_samples(m.samples);
  validate_manifest(m);
  return m;
}

StatsReport manifest_stats(const BenchmarkManifest& manifest) {
  static const double kDurationEdges[] = {0, 2, 5, 10, 20, 40};
  static const int kResolutionEdges[] = {0, 64, 128, 256, 512};

  StatsReport r;
  r.duration_histogram.assign(std::size(kDurationEdges), 0);
  r.crop_resolution_histogram.assign(std::size(kResolutionEdges), 0);
  for (const auto& s : manifest.samples) {
    ++r.total_samples;
    if (s.role == Role::kQuery) {
      ++r.queries;
    } else {
      ++r.distractors;
    }
    if (s.action) ++r.per_class[*s.action];
    if (s.pair_id) ++r.per_pair[*s.pair_id];
    if (s.span) {
      double d = s.span->duration();
      size_t b = 0;
      while (b + 1 < std::size(kDurationEdges) && d >= kDurationEdges[b + 1])
        ++b;
      ++r.duration_histogram[b];
    }
    if (s.crop) {
      int long_side = std::max(s.crop->width(), s.crop->height());
      size_t b = 0;
      while (b + 1 < std::size(kResolutionEdges) &&
             long_side >= kResolutionEdges[b + 1])
        ++b;
      ++r.crop_resolution_histogram[b];
    }
  }
  return r;
}

Json StatsReport::to_json() const {
  Json j;
  j["total_samples"] = total_samples;
  j["queries"] = queries;
  j["distractors"] = distractors;
  j["classes"] = per_class.size();
  j["pairs"] = per_pair.size();
  j["per_class"] = per_class;
  j["per_pair"] = per_pair;
  j["duration_histogram"] = Json::object({
      {"lower_edges_s", {0, 2, 5, 10, 20, 40}},
      {"counts", duration_histogram},
  });
  j["crop_resolution_histogram"] = Json::object({
      {"lower_edges_px", {0, 64, 128, 256, 512}},
      {"counts", crop_resolution_histogram},
  });
  return j;
}

std::string sanitize_id(std::string_view sample_id) {
  std::string out;
  for (char c : sample_id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    out.push_back(ok ? c : '_');
  }
  return out;
}

ExtractionPlan emit_extraction_plan(const BenchmarkManifest& manifest,
                                    const std::filesystem::path& out_dir) {
  ExtractionPlan plan;
  std::unordered_set<std::string> outputs;
  for (const auto& s : manifest.samples) {
    if (s.kind != MediaKind::kVideo) continue;  // images need no extraction
    if (!s.crop || !s.span) {
      throw Error(ErrorCode::kIncompleteSpec,
                  s.sample_id + ": video sample without crop/span");
    }
    PlanRow row;
    row.sample_id = s.sample_id;
    row.source = s.media;
    row.crop = s.crop;
    row.span = s.span;
    row.output = (out_dir / (sanitize_id(s.sample_id) + ".mp4")).string();
    if (!outputs.insert(row.output).second) {
      throw Error(ErrorCode::kDuplicateOutput,
                  "extraction plan output collides: " + row.output);
    }
    plan.rows.push_back(std::move(row));
  }
  std::sort(plan.rows.begin(), plan.rows.end(),
            [](const PlanRow& a, const PlanRow& b) {
              if (a.source != b.source) return a.source < b.source;
              return a.sample_id < b.sample_id;
            });
  return plan;
}

// ---------------------------------------------------------------------------
// Serialization

ActivityAnnotation parse_annotation(const Json& row) {
  ActivityAnnotation a;
  try {
    a.activity_id = row.at("activity_id").get<std::string>();
    a.source = annotation_source_from_string(row.at("source").get<std::string>());
    a.action_label = row.at("action_label").get<std::string>();
    a.start_frame = row.at("start_frame").get<int>();
    a.end_frame = row.at("end_frame").get<int>();
    a.fps = row.at("fps").get<double>();
    a.scene_id = row.at("scene_id").get<std::string>();
    for (const auto& actor_row : row.at("actors")) {
      ActorTrack actor;
      actor.actor_id = actor_row.at("actor_id").get<std::string>();
      for (const auto& b : actor_row.at("boxes")) {
        if (!b.is_array() || b.size() != 5) {
          throw Error(ErrorCode::kParseError,
                      a.activity_id + ": box must be [frame,x0,y0,x1,y1]");
        }
        FrameBox fb;
        fb.frame = b[0].get<int>();
        fb.box = Box{b[1].get<double>(), b[2].get<double>(),
                     b[3].get<double>(), b[4].get<double>()};
        actor.boxes.push_back(fb);
      }
      a.actors.push_back(std::move(actor));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("bad annotation record: ") + e.what());
  }
  if (!a.action_label.empty()) require_action(a.action_label);
  validate(a);
  return a;
}

std::vector<ActivityAnnotation> load_annotations(
    const std::filesystem::path& path) {
  std::vector<ActivityAnnotation> out;
  for_each_jsonl_file(path, [&](const Json& row, size_t line_no) {
    try {
      out.push_back(parse_annotation(row));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) +
                                ": " + e.what());
    }
  });
  return out;
}

Json sample_to_json(const SampleRecord& s) {
  Json j;
  j["sample_id"] = s.sample_id;
  j["kind"] = to_string(s.kind);
  j["media"] = s.media;
  j["class"] = s.action ? Json(*s.action) : Json(nullptr);
  j["pair_id"] = s.pair_id ? Json(*s.pair_id) : Json(nullptr);
  j["role"] = to_string(s.role);
  if (s.crop) {
    j["crop"] = {s.crop->x0, s.crop->y0, s.crop->x1, s.crop->y1};
  } else {
    j["crop"] = nullptr;
  }
  if (s.span) {
    j["span"] = {s.span->start_s, s.span->end_s};
  } else {
    j["span"] = nullptr;
  }
  return j;
}

SampleRecord sample_from_json(const Json& row) {
  SampleRecord s;
  try {
    s.sample_id = row.at("sample_id").get<std::string>();
    s.kind = media_kind_from_string(row.at("kind").get<std::string>());
    s.media = row.at("media").get<std::string>();
    if (!row.at("class").is_null()) s.action = row.at("class").get<std::string>();
    if (!row.at("pair_id").is_null())
      s.pair_id = row.at("pair_id").get<std::string>();
    s.role = role_from_string(row.at("role").get<std::string>());
    if (!row.at("crop").is_null()) {
      const auto& c = row.at("crop");
      if (!c.is_array() || c.size() != 4) {
        throw Error(ErrorCode::kParseError,
                    s.sample_id + ": crop must be [x0,y0,x1,y1]");
      }
      s.crop = PixelBox{c[0].get<int>(), c[1].get<int>(), c[2].get<int>(),
                        c[3].get<int>()};
    }
    if (!row.at("span").is_null()) {
      const auto& v = row.at("span");
      if (!v.is_array() || v.size() != 2) {
        throw Error(ErrorCode::kParseError,
                    s.sample_id + ": span must be [start_s,end_s]");
      }
      s.span = TimeSpan{v[0].get<double>(), v[1].get<double>()};
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("bad sample record: ") + e.what());
  }
  return s;
}

void write_manifest(const BenchmarkManifest& manifest,
                    const std::filesystem::path& path) {
  validate_manifest(manifest);
  auto out = open_output(path);
  for (const auto& s : manifest.samples) {
    out << sample_to_json(s).dump() << '\n';
  }
  out.close();

  Json meta;
  meta["protocol"] = to_string(manifest.protocol);
  meta["constrained"] = manifest.constrained;
  write_file(path.string() + ".meta.json", meta.dump(2) + "\n");

  if (!manifest.choices.empty()) {
    auto cout_ = open_output(path.string() + ".choices.jsonl");
    for (const auto& [id, c] : manifest.choices) {
      Json j;
      j["sample_id"] = id;
      j["choices"] = c.sentences;
      j["correct"] = c.correct;
      cout_ << j.dump() << '\n';
    }
  }
}

BenchmarkManifest read_manifest(const std::filesystem::path& path) {
  BenchmarkManifest m;
  std::filesystem::path meta_path = path.string() + ".meta.json";
  if (!std::filesystem::exists(meta_path)) {
    throw Error(ErrorCode::kIoError,
                "missing manifest sidecar: " + meta_path.string());
  }
  Json meta = Json::parse(read_file(meta_path));
  m.protocol = protocol_from_string(meta.at("protocol").get<std::string>());
  m.constrained = meta.at("constrained").get<bool>();

  for_each_jsonl_file(path, [&](const Json& row, size_t) {
    m.samples.push_back(sample_from_json(row));
  });
  sort_samples(m.samples);

  std::filesystem::path choices_path = path.string() + ".choices.jsonl";
  if (std::filesystem::exists(choices_path)) {
    for_each_jsonl_file(choices_path, [&](const Json& row, size_t) {
      ChoiceSet c;
      for (const auto& s : row.at("choices")) c.sentences.push_back(s);
      c.correct = row.at("correct").get<int>();
      m.choices[row.at("sample_id").get<std::string>()] = c;
    });
  }
  validate_manifest(m);
  return m;
}

void write_extraction_plan(const ExtractionPlan& plan,
                           const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& r : plan.rows) {
    Json j;
    j["sample_id"] = r.sample_id;
    j["source"] = r.source;
    j["crop"] = r.crop ? Json({r.crop->x0, r.crop->y0, r.crop->x1, r.crop->y1})
                       : Json(nullptr);
    j["span"] = r.span ? Json({r.span->start_s, r.span->end_s}) : Json(nullptr);
    j["output"] = r.output;
    out << j.dump() << '\n';
  }
}

ExtractionPlan read_extraction_plan(const std::filesystem::path& path) {
  ExtractionPlan plan;
  for_each_jsonl_file(path, [&](const Json& row, size_t) {
    PlanRow r;
    r.sample_id = row.at("sample_id").get<std::string>();
    r.source = row.at("source").get<std::string>();
    if (!row.at("crop").is_null()) {
      const auto& c = row.at("crop");
      r.crop = PixelBox{c[0].get<int>(), c[1].get<int>(), c[2].get<int>(),
                        c[3].get<int>()};
    }
    if (!row.at("span").is_null()) {
      const auto& v = row.at("span");
      r.span = TimeSpan{v[0].get<double>(), v[1].get<double>()};
    }
    r.output = row.at("output").get<std::string>();
    plan.rows.push_back(std::move(r));
  });
  return plan;
}

}  // namespace maxsim
