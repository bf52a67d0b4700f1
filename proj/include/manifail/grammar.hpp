#pragma once

// Magnitude-free direction grammar for corrective instructions:
//   move words   forward | backward | left | right | up | down
//   rotations    "<clockwise|counterclockwise> about the <forward|sideways|vertical> axis"
//   execution    "redo grasp firmly" | "wait for alignment" | "act without delay"
// Directions are in the manipulator frame (+X forward, +Y left, +Z up).

#include <string>
#include <string_view>
#include <vector>

#include "manifail/geometry.hpp"

namespace manifail {

enum class Direction { Forward, Backward, Left, Right, Up, Down };

std::string_view direction_word(Direction d);
// "move the end-effector backward", "move the end-effector to the left", ...
std::string move_phrase(Direction d);
// Unit vector of a direction.
Position direction_vector(Direction d);

// Directions that undo `deviation`, X then Y then Z, skipping axes with
// |component| <= min_abs.
std::vector<Direction> corrective_directions(const Position& deviation, double min_abs = 0.0);

struct RotationSense {
  int axis{2};  // 0 forward (X), 1 sideways (Y), 2 vertical (Z)
  bool counterclockwise{true};
  bool operator==(const RotationSense&) const = default;
};

// Dominant axis and sense of a rotation (right-hand rule).
RotationSense dominant_rotation(const Orientation& q);
RotationSense reversed(RotationSense s);
std::string rotation_phrase(RotationSense s);

// Low-level instruction text for a list of moves, e.g.
// "Move the end-effector backward, then move the end-effector down".
std::string join_moves(const std::vector<Direction>& moves);

inline constexpr std::string_view kRedoGraspPhrase = "redo grasp firmly";
inline constexpr std::string_view kWaitPhrase = "wait for alignment";
inline constexpr std::string_view kNoDelayPhrase = "act without delay";

struct ParsedInstruction {
  std::vector<Direction> moves;
  std::vector<RotationSense> rotations;
  bool redo_grasp{false};
  bool wait_for_alignment{false};
  bool act_without_delay{false};
  std::vector<std::string> quoted;  // '...' names in order
  std::vector<std::string> unrecognized;  // sentences that matched nothing
};

// Total: unknown text lands in `unrecognized` and changes nothing else.
ParsedInstruction parse_instruction(std::string_view text);

}  // namespace manifail
