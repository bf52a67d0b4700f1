// Static SVG plots: dataset histograms and top-down episode views.
#include <algorithm>
#include <cstdio>
#include <sstream>

#include "manifail/pipeline.hpp"
#include "manifail/serialize.hpp"

namespace manifail {

namespace {

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::string header(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" "
         "fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                 int size = 12) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
         "\" font-size=\"" + std::to_string(size) + "\">" + esc(s) + "</text>\n";
}

std::string rect(double x, double y, double w, double h, const char* fill) {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"" + fill + "\"/>\n";
}

std::string compact(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

// Vertical bars with labels under them; the unit goes in the title.
std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values, const char* fill) {
  const int w = std::max(360, 60 * static_cast<int>(labels.size()) + 80);
  const int h = 360;
  const double left = 40, bottom = 290, top = 50;
  const double peak = std::max(1.0, *std::max_element(values.begin(), values.end()));
  const double slot = (w - left - 20) / std::max<double>(1.0, static_cast<double>(labels.size()));
  std::ostringstream o;
  o << header(w, h) << text(w / 2.0, 24, title, "middle", 14);
  o << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << w - 20 << "\" y2=\""
    << bottom << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double bh = (bottom - top) * values[i] / peak;
    const double x = left + slot * static_cast<double>(i) + slot * 0.15;
    o << rect(x, bottom - bh, slot * 0.7, bh, fill);
    o << text(x + slot * 0.35, bottom - bh - 4, compact(values[i]), "middle", 10);
    o << "<text transform=\"translate(" << num(x + slot * 0.2) << "," << num(bottom + 14)
      << ") rotate(35)\" font-size=\"10\">" << esc(labels[i]) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string histogram_svg(const DatasetStats& s) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (std::size_t i = 0; i < s.duration_histogram.size(); ++i) {
    labels.push_back(duration_bucket_label(i) + " s");
    values.push_back(s.duration_histogram[i]);
  }
  return bar_chart("Trajectories by duration (episodes)", labels, values, "#4a78b5");
}

std::string task_duration_svg(const DatasetStats& s) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& [task, mean] : s.mean_duration_by_task) {
    labels.push_back(task);
    values.push_back(mean);
  }
  if (labels.empty()) {
    labels.push_back("(none)");
    values.push_back(0.0);
  }
  return bar_chart("Mean duration per task (s)", labels, values, "#d08a3c");
}

std::string render_svg(const Trajectory& t) {
  // Goal positions, resolved against the final object poses.
  std::vector<Position> goals;
  if (!t.frames.empty()) {
    const Frame& last = t.frames.back();
    for (const auto& g : t.plan.goals) {
      Pose ref;
      if (!g.reference.empty()) {
        const auto it = last.object_poses.find(g.reference);
        if (it == last.object_poses.end()) continue;
        ref = it->second;
      }
      goals.push_back(compose(ref, g.relative).position);
    }
  }
  std::map<std::string, std::vector<Position>> paths;
  std::vector<Position> ee;
  for (const auto& f : t.frames) {
    ee.push_back(f.ee_pose.position);
    for (const auto& [id, p] : f.object_poses) paths[id].push_back(p.position);
  }

  // Fit the view to everything drawn, with a margin, at equal scale.
  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  auto grow = [&](const Position& p) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  };
  for (const auto& p : ee) grow(p);
  for (const auto& [id, pts] : paths) for (const auto& p : pts) grow(p);
  for (const auto& p : goals) grow(p);
  if (x0 > x1) x0 = x1 = y0 = y1 = 0.0;
  const double pad = 0.05;
  x0 -= pad, x1 += pad, y0 -= pad, y1 += pad;
  const double size = 560, margin = 40;
  const double scale = (size - 2 * margin) / std::max(x1 - x0, y1 - y0);
  const double cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  // X grows up the page, +Y to the left.
  auto sx = [&](const Position& p) { return size / 2 - (p.y - cy) * scale; };
  auto sy = [&](const Position& p) { return 40 + (size - 2 * margin) / 2 + margin - (p.x - cx) * scale; };
  auto polyline = [&](const std::vector<Position>& pts, const char* stroke, double width) {
    std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(stroke) +
                    "\" stroke-width=\"" + num(width) + "\" points=\"";
    for (const auto& p : pts) s += num(sx(p)) + "," + num(sy(p)) + " ";
    return s + "\"/>\n";
  };

  std::ostringstream o;
  o << header(static_cast<int>(size), static_cast<int>(size + 70));
  o << "<rect x=\"" << margin << "\" y=\"" << 40 + margin << "\" width=\"" << size - 2 * margin
    << "\" height=\"" << size - 2 * margin << "\" fill=\"#f4f4f0\" stroke=\"#bbb\"/>\n";
  for (const auto& [id, pts] : paths) o << polyline(pts, "#888", 3);
  o << polyline(ee, "#2a5db0", 1.2);
  for (const auto& p : goals) {
    o << "<path d=\"M" << num(sx(p) - 6) << "," << num(sy(p) - 6) << " l12,12 m0,-12 l-12,12\" "
      << "stroke=\"#2a9d4b\" stroke-width=\"2\"/>\n";
  }
  if (!t.frames.empty()) {
    // Labels that would collide are stacked downward.
    std::vector<std::pair<double, double>> placed;
    for (const auto& [id, pose] : t.frames.back().object_poses) {
      const Position& p = pose.position;
      o << "<circle cx=\"" << num(sx(p)) << "\" cy=\"" << num(sy(p)) << "\" r=\"4\" fill=\"#555\"/>\n";
      double lx = sx(p) + 7, ly = sy(p) - 6;
      for (bool moved = true; moved;) {
        moved = false;
        for (const auto& [px, py] : placed) {
          if (std::abs(px - lx) < 60 && std::abs(py - ly) < 12) {
            ly = py + 12;
            moved = true;
          }
        }
      }
      placed.emplace_back(lx, ly);
      o << text(lx, ly, id, "start", 10);
    }
    const Position& start = t.frames.front().ee_pose.position;
    o << "<circle cx=\"" << num(sx(start)) << "\" cy=\"" << num(sy(start))
      << "\" r=\"5\" fill=\"none\" stroke=\"#2a5db0\"/>\n";
  }
  // 10 cm scale bar.
  const double bar = 0.10 * scale, by = size + 20;
  o << "<line x1=\"" << margin << "\" y1=\"" << by << "\" x2=\"" << num(margin + bar) << "\" y2=\""
    << by << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  o << text(margin + bar + 6, by + 4, "10 cm", "start", 10);
  const char* outcome = t.outcome == Outcome::Success ? "success" : "failure";
  o << text(size / 2, 24, trajectory_id(t) + " (" + outcome + ")", "middle", 13);
  o << text(size / 2, size + 50,
            "top-down view, +X up, +Y left; blue end-effector, grey objects, green goals", "middle", 10);
  o << "</svg>\n";
  return o.str();
}

}  // namespace manifail
