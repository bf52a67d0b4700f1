#include "manifail/grammar.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

namespace manifail {

namespace {

constexpr std::array<std::string_view, 6> kWords{"forward", "backward", "left",
                                                 "right",   "up",       "down"};
constexpr std::array<std::string_view, 3> kAxisNames{"forward", "sideways", "vertical"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\n\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\n\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view direction_word(Direction d) { return kWords[static_cast<std::size_t>(d)]; }

std::string move_phrase(Direction d) {
  switch (d) {
    case Direction::Left: return "move the end-effector to the left";
    case Direction::Right: return "move the end-effector to the right";
    default: return "move the end-effector " + std::string(direction_word(d));
  }
}

Position direction_vector(Direction d) {
  switch (d) {
    case Direction::Forward: return {1, 0, 0};
    case Direction::Backward: return {-1, 0, 0};
    case Direction::Left: return {0, 1, 0};
    case Direction::Right: return {0, -1, 0};
    case Direction::Up: return {0, 0, 1};
    case Direction::Down: return {0, 0, -1};
  }
  return {};
}

std::vector<Direction> corrective_directions(const Position& deviation, double min_abs) {
  std::vector<Direction> out;
  if (std::abs(deviation.x) > min_abs) {
    out.push_back(deviation.x > 0 ? Direction::Backward : Direction::Forward);
  }
  if (std::abs(deviation.y) > min_abs) {
    out.push_back(deviation.y > 0 ? Direction::Right : Direction::Left);
  }
  if (std::abs(deviation.z) > min_abs) {
    out.push_back(deviation.z > 0 ? Direction::Down : Direction::Up);
  }
  return out;
}

RotationSense dominant_rotation(const Orientation& q) {
  const Position a = q.axis();
  const std::array<double, 3> c{a.x, a.y, a.z};
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(c[static_cast<std::size_t>(i)]) > std::abs(c[static_cast<std::size_t>(best)])) {
      best = i;
    }
  }
  return {best, c[static_cast<std::size_t>(best)] >= 0.0};
}

RotationSense reversed(RotationSense s) { return {s.axis, !s.counterclockwise}; }

std::string rotation_phrase(RotationSense s) {
  return std::string(s.counterclockwise ? "counterclockwise" : "clockwise") + " about the " +
         std::string(kAxisNames[static_cast<std::size_t>(s.axis)]) + " axis";
}

std::string join_moves(const std::vector<Direction>& moves) {
  std::string out;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    std::string p = move_phrase(moves[i]);
    if (i == 0) {
      p[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(p[0])));
    } else {
      out += ", then ";
    }
    out += p;
  }
  return out;
}

ParsedInstruction parse_instruction(std::string_view text) {
  ParsedInstruction out;
  static const std::regex quoted_re("'([^']+)'");
  static const std::regex rot_re(
      R"((counterclockwise|clockwise) about the (forward|sideways|vertical) axis)");
  static const std::regex sentence_re(R"([^.;!?\n]+)");

  const std::string original(text);
  for (std::sregex_iterator it(original.begin(), original.end(), quoted_re), end; it != end; ++it) {
    out.quoted.push_back((*it)[1].str());
  }
  std::string s = std::regex_replace(lower(original), quoted_re, " ");

  for (std::sregex_iterator it(s.begin(), s.end(), sentence_re), end; it != end; ++it) {
    std::string sentence = it->str();
    bool matched = false;
    for (std::sregex_iterator r(sentence.begin(), sentence.end(), rot_re), re; r != re; ++r) {
      const std::string axis = (*r)[2].str();
      const int idx = axis == "forward" ? 0 : axis == "sideways" ? 1 : 2;
      out.rotations.push_back({idx, (*r)[1].str() == "counterclockwise"});
      matched = true;
    }
    sentence = std::regex_replace(sentence, rot_re, " ");
    if (sentence.find(kRedoGraspPhrase) != std::string::npos) {
      out.redo_grasp = matched = true;
    }
    if (sentence.find(kWaitPhrase) != std::string::npos) out.wait_for_alignment = matched = true;
    if (sentence.find(kNoDelayPhrase) != std::string::npos) out.act_without_delay = matched = true;

    std::string word;
    auto flush = [&]() {
      for (std::size_t i = 0; i < kWords.size(); ++i) {
        if (word == kWords[i]) {
          out.moves.push_back(static_cast<Direction>(i));
          matched = true;
        }
      }
      word.clear();
    };
    for (char c : sentence) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        word += c;
      } else {
        flush();
      }
    }
    flush();
    const std::string t = trim(it->str());
    if (!matched && !t.empty()) out.unrecognized.push_back(t);
  }
  return out;
}

}  // namespace manifail
