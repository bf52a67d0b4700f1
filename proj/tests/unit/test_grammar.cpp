#include "doctest.h"
#include "manifail/grammar.hpp"

using namespace manifail;

TEST_CASE("corrective directions oppose the deviation axis by axis") {
  CHECK(corrective_directions({0.05, 0, 0}) == std::vector<Direction>{Direction::Backward});
  CHECK(corrective_directions({0, -0.04, 0}) == std::vector<Direction>{Direction::Left});
  CHECK(corrective_directions({-0.03, 0.03, 0.05}) ==
        std::vector<Direction>{Direction::Forward, Direction::Right, Direction::Down});
  CHECK(corrective_directions({0, 0, 0}).empty());
  CHECK(corrective_directions({1e-9, 0, 0}, 1e-6).empty());
}

TEST_CASE("direction vectors follow the manipulator frame") {
  CHECK(direction_vector(Direction::Forward) == Position{1, 0, 0});
  CHECK(direction_vector(Direction::Left) == Position{0, 1, 0});
  CHECK(direction_vector(Direction::Down) == Position{0, 0, -1});
}

TEST_CASE("move phrases join into one sentence") {
  CHECK(join_moves({Direction::Backward, Direction::Down}) ==
        "Move the end-effector backward, then move the end-effector down");
  CHECK(move_phrase(Direction::Left) == "move the end-effector to the left");
}

TEST_CASE("dominant rotation and its reverse") {
  const RotationSense s = dominant_rotation(Orientation::about_z(0.5));
  CHECK(s == RotationSense{2, true});
  CHECK(reversed(s) == RotationSense{2, false});
  CHECK(dominant_rotation(Orientation::about_x(-0.7)) == RotationSense{0, false});
  CHECK(rotation_phrase({1, true}) == "counterclockwise about the sideways axis");
}

TEST_CASE("parser recovers what the generators produce") {
  const auto p = parse_instruction(
      "Move the end-effector backward, then move the end-effector to the left. Rotate the gripper "
      "clockwise about the vertical axis and redo grasp firmly in the 'grasp' substage.");
  CHECK(p.moves == std::vector<Direction>{Direction::Backward, Direction::Left});
  CHECK(p.rotations == std::vector<RotationSense>{RotationSense{2, false}});
  CHECK(p.redo_grasp);
  CHECK(p.quoted == std::vector<std::string>{"grasp"});
  CHECK(p.unrecognized.empty());
}

TEST_CASE("parser is total") {
  const auto p = parse_instruction("Please do a little dance.");
  CHECK(p.moves.empty());
  CHECK(p.rotations.empty());
  CHECK_FALSE(p.redo_grasp);
  CHECK(p.unrecognized.size() == 1);
  CHECK(parse_instruction("").unrecognized.empty());
  const auto t = parse_instruction("Wait for alignment, then act without delay.");
  CHECK(t.wait_for_alignment);
  CHECK(t.act_without_delay);
}
