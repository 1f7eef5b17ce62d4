#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maxsim/error.hpp"

namespace maxsim {

// ---------------------------------------------------------------------------
// Geometry

/// Axis-aligned box in pixel coordinates, x0 < x1 and y0 < y1.
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool valid() const { return x0 < x1 && y0 < y1; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(const Box& other) const {
    return x0 <= other.x0 && y0 <= other.y0 && x1 >= other.x1 && y1 >= other.y1;
  }
};

/// Integer crop box; mins are floored and maxes ceiled so no pixel is lost.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};

/// Coordinate-wise union: (min x0, min y0, max x1, max y1).
Box union_box(const Box& a, const Box& b);

struct TimeSpan {
  double start_s = 0;
  double end_s = 0;

  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
  double duration() const { return end_s - start_s; }
};

// ---------------------------------------------------------------------------
// Action vocabulary

enum class Polarity { kFirst, kSecond };

/// One of the 14 vehicle actions, organized as 7 opposite pairs.
struct ActionClass {
  std::string_view name;
  std::string_view pair_id;
  Polarity polarity;
};

const std::array<ActionClass, 14>& action_classes();
const std::array<std::string_view, 7>& pair_ids();

/// The opposite-pair excluded from inter-pair evaluation: its motions always
/// co-occur with other vehicle-movement actions.
inline constexpr std::string_view kExcludedInterPairId = "drive_forward_reverse";

/// nullptr when the label is not part of the closed vocabulary.
const ActionClass* find_action(std::string_view name);

/// Throwing variant: unknown labels are rejected at ingestion.
const ActionClass& require_action(std::string_view name);

// ---------------------------------------------------------------------------
// Annotations

enum class AnnotationSource { kMeva, kVirat, kOther };

std::string_view to_string(AnnotationSource source);
AnnotationSource annotation_source_from_string(std::string_view text);

struct FrameBox {
  int frame = 0;
  Box box;
};

/// Per-actor geometry the ROI union is computed over.
struct ActorTrack {
  std::string actor_id;
  std::vector<FrameBox> boxes;  // frame indices strictly increasing
};

struct ActivityAnnotation {
  std::string activity_id;
  AnnotationSource source = AnnotationSource::kOther;
  std::string action_label;  // empty for class-less (distractor) activities
  int start_frame = 0;
  int end_frame = 0;
  double fps = 0;  // frame rate of the source footage
  std::string scene_id;
  std::vector<ActorTrack> actors;
};

/// Throws kInconsistentInputs / kParseError when invariants are violated.
void validate(const ActivityAnnotation& annotation);

// ---------------------------------------------------------------------------
// Samples and manifests

enum class MediaKind { kVideo, kImage };
enum class Role { kQuery, kDistractor };
enum class Protocol { kInterPair, kIntraPair, kClassification };

std::string_view to_string(MediaKind kind);
std::string_view to_string(Role role);
std::string_view to_string(Protocol protocol);
MediaKind media_kind_from_string(std::string_view text);
Role role_from_string(std::string_view text);
Protocol protocol_from_string(std::string_view text);

struct SampleRecord {
  std::string sample_id;
  MediaKind kind = MediaKind::kVideo;
  std::string media;  // source reference (scene/video/image path)
  std::optional<std::string> action;   // class name, absent for distractors
  std::optional<std::string> pair_id;  // unified pair label, derived from action
  Role role = Role::kQuery;
  std::optional<PixelBox> crop;
  std::optional<TimeSpan> span;
};

/// Candidate sentences for one classification sample; exactly one is correct.
struct ChoiceSet {
  std::vector<std::string> sentences;
  int correct = 0;
};

struct BenchmarkManifest {
  Protocol protocol = Protocol::kInterPair;
  std::vector<SampleRecord> samples;  // canonically sorted by sample_id
  std::map<std::string, ChoiceSet> choices;  // classification only, keyed by sample_id
  bool constrained = false;  // database restricted to query samples
};

}  // namespace maxsim
