#include "maxsim/types.hpp"

#include <algorithm>

namespace maxsim {

Box union_box(const Box& a, const Box& b) {
  return Box{std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
             std::max(a.y1, b.y1)};
}

const std::array<ActionClass, 14>& action_classes() {
  static const std::array<ActionClass, 14> table = {{
      {"Drive forward", "drive_forward_reverse", Polarity::kFirst},
      {"Reverse", "drive_forward_reverse", Polarity::kSecond},
      {"Enter vehicle", "enter_exit_vehicle", Polarity::kFirst},
      {"Exit vehicle", "enter_exit_vehicle", Polarity::kSecond},
      {"Load vehicle", "load_unload_vehicle", Polarity::kFirst},
      {"Unload vehicle", "load_unload_vehicle", Polarity::kSecond},
      {"Open trunk", "open_close_trunk", Polarity::kFirst},
      {"Close trunk", "open_close_trunk", Polarity::kSecond},
      {"Open vehicle door", "open_close_vehicle_door", Polarity::kFirst},
      {"Close vehicle door", "open_close_vehicle_door", Polarity::kSecond},
      {"Start", "start_stop", Polarity::kFirst},
      {"Stop", "start_stop", Polarity::kSecond},
      {"Turn left", "turn_left_right", Polarity::kFirst},
      {"Turn right", "turn_left_right", Polarity::kSecond},
  }};
  return table;
}

const std::array<std::string_view, 7>& pair_ids() {
  static const std::array<std::string_view, 7> ids = {
      "drive_forward_reverse",   "enter_exit_vehicle", "load_unload_vehicle",
      "open_close_trunk",        "open_close_vehicle_door",
      "start_stop",              "turn_left_right",
  };
  return ids;
}

const ActionClass* find_action(std::string_view name) {
  for (const auto& action : action_classes()) {
    if (action.name == name) return &action;
  }
  return nullptr;
}

const ActionClass& require_action(std::string_view name) {
  const ActionClass* action = find_action(name);
  if (action == nullptr) {
    throw Error(ErrorCode::kUnknownAction, "action label not in vocabulary: '" + std::string(name) + "'");
  }
  return *action;
}

std::string_view to_string(AnnotationSource source) {
  switch (source) {
    case AnnotationSource::kMeva: return "MEVA";
    case AnnotationSource::kVirat: return "VIRAT";
    case AnnotationSource::kOther: return "OTHER";
  }
  return "OTHER";
}

AnnotationSource annotation_source_from_string(std::string_view text) {
  if (text == "MEVA") return AnnotationSource::kMeva;
  if (text == "VIRAT") return AnnotationSource::kVirat;
  if (text == "OTHER") return AnnotationSource::kOther;
  throw Error(ErrorCode::kParseError, "unknown annotation source: '" + std::string(text) + "'");
}

void validate(const ActivityAnnotation& annotation) {
  if (annotation.activity_id.empty()) {
    throw Error(ErrorCode::kInconsistentInputs, "annotation with empty activity_id");
  }
  if (annotation.start_frame >= annotation.end_frame) {
    throw Error(ErrorCode::kInconsistentInputs,
                annotation.activity_id + ": start_frame must be < end_frame");
  }
  if (annotation.actors.empty()) {
    throw Error(ErrorCode::kInconsistentInputs, annotation.activity_id + ": at least one actor required");
  }
  if (annotation.fps <= 0) {
    throw Error(ErrorCode::kInconsistentInputs, annotation.activity_id + ": fps must be > 0");
  }
  for (const auto& actor : annotation.actors) {
    int last_frame = -1;
    for (const auto& fb : actor.boxes) {
      if (fb.frame < 0) {
        throw Error(ErrorCode::kInconsistentInputs,
                    annotation.activity_id + ": negative frame index in actor " + actor.actor_id);
      }
      if (fb.frame <= last_frame) {
        throw Error(ErrorCode::kInconsistentInputs,
                    annotation.activity_id + ": frame indices not strictly increasing in actor " +
                        actor.actor_id);
      }
      last_frame = fb.frame;
      if (!fb.box.valid()) {
        throw Error(ErrorCode::kInconsistentInputs,
                    annotation.activity_id + ": degenerate box in actor " + actor.actor_id);
      }
    }
  }
}

std::string_view to_string(MediaKind kind) {
  return kind == MediaKind::kVideo ? "VIDEO" : "IMAGE";
}

std::string_view to_string(Role role) {
  return role == Role::kQuery ? "QUERY" : "DISTRACTOR";
}

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::kInterPair: return "INTER_PAIR";
    case Protocol::kIntraPair: return "INTRA_PAIR";
    case Protocol::kClassification: return "CLASSIFICATION";
  }
  return "INTER_PAIR";
}

MediaKind media_kind_from_string(std::string_view text) {
  if (text == "VIDEO") return MediaKind::kVideo;
  if (text == "IMAGE") return MediaKind::kImage;
  throw Error(ErrorCode::kParseError, "unknown media kind: '" + std::string(text) + "'");
}

Role role_from_string(std::string_view text) {
  if (text == "QUERY") return Role::kQuery;
  if (text == "DISTRACTOR") return Role::kDistractor;
  throw Error(ErrorCode::kParseError, "unknown role: '" + std::string(text) + "'");
}

Protocol protocol_from_string(std::string_view text) {
  if (text == "INTER_PAIR" || text == "inter-pair") return Protocol::kInterPair;
  if (text == "INTRA_PAIR" || text == "intra-pair") return Protocol::kIntraPair;
  if (text == "CLASSIFICATION" || text == "classification") return Protocol::kClassification;
  throw Error(ErrorCode::kParseError, "unknown protocol: '" + std::string(text) + "'");
}

}  // namespace maxsim
