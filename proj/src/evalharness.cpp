#include "manifail/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>
#include <thread>

#include "manifail/errors.hpp"
#include "manifail/injector.hpp"
#include "manifail/prompts.hpp"
#include "manifail/random.hpp"

namespace manifail {

namespace {

std::size_t expected_size(QuestionType q) {
  switch (q) {
    case QuestionType::FailureDetection: return 2;
    case QuestionType::FailureIdentification: return 6;
    case QuestionType::FailureLocating: return 5;
    default: throw InvalidArgument("question type has no options: " + std::string(to_string(q)));
  }
}

// Lowercase, punctuation to spaces, whitespace collapsed.
std::string normalize(const std::string& s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      if (space && !out.empty()) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      space = true;
    }
  }
  return out;
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  const std::string n = normalize(s);
  std::size_t i = 0;
  while (i < n.size()) {
    const std::size_t j = std::min(n.find(' ', i), n.size());
    out.push_back(n.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

int band(double r) {
  if (r >= 0.8) return 4;
  if (r >= 0.6) return 3;
  if (r >= 0.4) return 2;
  if (r >= 0.2) return 1;
  return 0;
}

// Order-independent mean: sums sorted values so permuted inputs agree bit for bit.
double mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<int> read_score(const nlohmann::json& c, bool& clamped) {
  if (!c.is_object() || !c.contains("score")) return std::nullopt;
  const auto& s = c["score"];
  double v = 0.0;
  if (s.is_number()) {
    v = s.get<double>();
  } else if (s.is_string()) {
    try {
      std::size_t used = 0;
      v = std::stod(s.get<std::string>(), &used);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  } else {
    return std::nullopt;
  }
  if (!std::isfinite(v)) return std::nullopt;
  long r = std::lround(v);
  if (r < 0 || r > 5) {
    clamped = true;
    r = std::clamp(r, 0L, 5L);
  }
  return static_cast<int>(r);
}

std::string read_explanation(const nlohmann::json& c) {
  if (c.contains("explanation") && c["explanation"].is_string()) {
    return c["explanation"].get<std::string>();
  }
  return {};
}

}  // namespace

std::string option_label(int i) {
  if (i < 0 || i >= 26) throw InvalidArgument("option index out of range");
  return std::string(1, static_cast<char>('A' + i));
}

MCOptionSet build_mc_options(QuestionType q, const std::string& correct,
                             const std::vector<std::string>& substage_pool, std::uint64_t seed) {
  Rng rng(seed);
  MCOptionSet set;
  switch (q) {
    case QuestionType::FailureDetection:
      set.options.assign(kDetectionOptions.begin(), kDetectionOptions.end());
      break;
    case QuestionType::FailureIdentification:
      for (FailureTaxonomy t : kAllTaxonomies) set.options.emplace_back(option_string(t));
      break;
    case QuestionType::FailureLocating: {
      std::vector<std::string> pool(substage_pool);
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
      pool.erase(std::remove(pool.begin(), pool.end(), correct), pool.end());
      if (pool.size() < 4) {
        throw ConfigError("substage pool has fewer than 4 distractors for '" + correct + "'");
      }
      // Partial Fisher-Yates: the first four slots are a uniform sample.
      for (std::size_t i = 0; i < 4; ++i) {
        std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      }
      set.options.assign(pool.begin(), pool.begin() + 4);
      set.options.push_back(correct);
      break;
    }
    default:
      throw InvalidArgument("question type has no options: " + std::string(to_string(q)));
  }
  rng.shuffle(set.options);
  const auto it = std::find(set.options.begin(), set.options.end(), correct);
  if (it == set.options.end()) {
    throw InvalidArgument("correct answer is not a valid option: " + correct);
  }
  set.correct_index = static_cast<int>(it - set.options.begin());
  validate_options(q, set);
  return set;
}

void validate_options(QuestionType q, const MCOptionSet& set) {
  if (set.options.size() != expected_size(q)) {
    throw InvalidArgument("wrong number of options for " + std::string(to_string(q)));
  }
  const std::set<std::string> unique(set.options.begin(), set.options.end());
  if (unique.size() != set.options.size()) throw InvalidArgument("duplicate options");
  if (set.correct_index < 0 || set.correct_index >= static_cast<int>(set.options.size())) {
    throw InvalidArgument("correct index out of range");
  }
}

MCScore score_mc(const std::string& answer, const MCOptionSet& options) {
  MCScore out;
  static const std::regex label_re(R"(^\s*\(?([A-Z])\s*(?:[\).:]\s*.*)?$)");
  std::smatch m;
  if (std::regex_match(answer, m, label_re)) {
    const int i = m[1].str()[0] - 'A';
    if (i < static_cast<int>(options.options.size())) out.chosen = i;
  }
  if (out.chosen < 0) {
    const std::string n = normalize(answer);
    for (std::size_t i = 0; i < options.options.size(); ++i) {
      if (!n.empty() && normalize(options.options[i]) == n) out.chosen = static_cast<int>(i);
    }
  }
  out.unmatched = out.chosen < 0;
  out.score = out.chosen == options.correct_index ? 1 : 0;
  return out;
}

JudgeScore make_judge_score(int correctness, int relevance, int completeness) {
  JudgeScore s;
  s.correctness = correctness;
  s.relevance = relevance;
  s.completeness = completeness;
  s.normalized = static_cast<double>(correctness + relevance + completeness) / 3.0 * 20.0;
  return s;
}

std::string fill_judge_prompt(const std::string& question, const std::string& reference,
                              const std::string& prediction) {
  std::string out(judge_prompt());
  const std::pair<std::string_view, const std::string*> fields[] = {
      {"{question}", &question}, {"{ref}", &reference}, {"{pred}", &prediction}};
  // Single left-to-right pass so substituted text is never re-scanned.
  std::string result;
  std::size_t i = 0;
  while (i < out.size()) {
    bool hit = false;
    for (const auto& [key, value] : fields) {
      if (out.compare(i, key.size(), key) == 0) {
        result += *value;
        i += key.size();
        hit = true;
        break;
      }
    }
    if (!hit) result += out[i++];
  }
  return result;
}

std::optional<JudgeScore> parse_judge_reply(const nlohmann::json& reply) {
  const auto doc = unwrap_reply(reply, "criteria");
  if (!doc || !doc->is_object() || !doc->contains("criteria")) return std::nullopt;
  const auto& c = (*doc)["criteria"];
  if (!c.is_object()) return std::nullopt;
  bool clamped = false;
  std::optional<int> v[3];
  const char* keys[3] = {"correctness", "relevance", "completeness"};
  for (int i = 0; i < 3; ++i) {
    if (!c.contains(keys[i])) return std::nullopt;
    v[i] = read_score(c[keys[i]], clamped);
    if (!v[i]) return std::nullopt;
  }
  JudgeScore s = make_judge_score(*v[0], *v[1], *v[2]);
  s.correctness_explanation = read_explanation(c["correctness"]);
  s.relevance_explanation = read_explanation(c["relevance"]);
  s.completeness_explanation = read_explanation(c["completeness"]);
  s.clamped = clamped;
  return s;
}

std::optional<JudgeScore> MockJudge::score(const std::string&, const std::string& reference,
                                           const std::string& prediction) {
  if (normalize(reference) == normalize(prediction) && !normalize(reference).empty()) {
    JudgeScore s = make_judge_score(5, 5, 5);
    s.correctness_explanation = s.relevance_explanation = s.completeness_explanation =
        "matches the reference";
    return s;
  }
  const auto rt = tokens(reference);
  const auto pt = tokens(prediction);
  const std::set<std::string> r(rt.begin(), rt.end());
  const std::set<std::string> p(pt.begin(), pt.end());
  std::size_t inter = 0;
  for (const auto& t : p) inter += r.count(t);
  const std::size_t uni = r.size() + p.size() - inter;
  const double jaccard = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
  const double recall = r.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(r.size());
  const double precision =
      p.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(p.size());
  JudgeScore s = make_judge_score(band(jaccard), band(precision), band(recall));
  s.correctness_explanation = "token overlap with the reference";
  s.relevance_explanation = "share of response tokens found in the reference";
  s.completeness_explanation = "share of reference tokens covered";
  return s;
}

std::optional<JudgeScore> RemoteJudge::score(const std::string& question,
                                             const std::string& reference,
                                             const std::string& prediction) {
  const nlohmann::json body{{"prompt", fill_judge_prompt(question, reference, prediction)},
                            {"temperature", kJudgeTemperature},
                            {"top_p", kJudgeTopP}};
  const RemoteResult r = post_json(ep_, body, [](const nlohmann::json& reply) {
    auto s = parse_judge_reply(reply);
    return s ? std::optional<nlohmann::json>(reply) : std::nullopt;
  });
  if (!r.value) return std::nullopt;
  return parse_judge_reply(*r.value);
}

std::optional<JudgeScore> judge_score(const std::string& question, const std::string& reference,
                                      const std::string& prediction, Judge& judge) {
  try {
    auto s = judge.score(question, reference, prediction);
    if (!s) return std::nullopt;
    if (s->correctness < 0 || s->correctness > 5 || s->relevance < 0 || s->relevance > 5 ||
        s->completeness < 0 || s->completeness > 5) {
      JudgeScore c = make_judge_score(std::clamp(s->correctness, 0, 5),
                                      std::clamp(s->relevance, 0, 5),
                                      std::clamp(s->completeness, 0, 5));
      c.correctness_explanation = s->correctness_explanation;
      c.relevance_explanation = s->relevance_explanation;
      c.completeness_explanation = s->completeness_explanation;
      c.clamped = true;
      return c;
    }
    JudgeScore out = make_judge_score(s->correctness, s->relevance, s->completeness);
    out.correctness_explanation = s->correctness_explanation;
    out.relevance_explanation = s->relevance_explanation;
    out.completeness_explanation = s->completeness_explanation;
    out.clamped = s->clamped;
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string report_column(const ItemResult& r) {
  return r.variant == "real-analog" ? "real" : r.category;
}

EvaluationReport aggregate(const std::vector<ItemResult>& items) {
  EvaluationReport rep;
  rep.items = items;
  std::map<std::string, std::vector<double>> by_col, by_type, by_group;
  std::map<std::string, std::map<std::string, std::vector<double>>> by_type_col;
  for (const auto& r : items) {
    if (r.unmatched) ++rep.unmatched;
    if (r.judge && r.judge->clamped) ++rep.clamped;
    if (!r.scored) {
      ++rep.unscored;
      continue;
    }
    ++rep.scored;
    const std::string type(to_string(r.question_type));
    const std::string col = report_column(r);
    by_col[col].push_back(r.score);
    by_type[type].push_back(r.score);
    by_group[std::string(to_string(group_of(r.question_type)))].push_back(r.score);
    by_type_col[type][col].push_back(r.score);
  }
  if (rep.scored == 0) throw EmptyReport("no scored items to aggregate");
  std::vector<double> col_means;
  for (auto& [k, v] : by_col) {
    rep.category_means[k] = mean(v);
    col_means.push_back(rep.category_means[k]);
  }
  for (auto& [k, v] : by_type) rep.question_type_means[k] = mean(v);
  for (auto& [k, v] : by_group) rep.group_means[k] = mean(v);
  for (auto& [t, cols] : by_type_col) {
    for (auto& [c, v] : cols) rep.type_by_category[t][c] = mean(v);
  }
  rep.overall = mean(col_means);
  return rep;
}

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json columns = nlohmann::json::array();
  for (auto c : kReportColumns) {
    if (r.category_means.count(std::string(c))) columns.push_back(c);
  }
  nlohmann::json rows = nlohmann::json::array();
  for (QuestionType q : kAllQuestionTypes) {
    const std::string t(to_string(q));
    const auto it = r.type_by_category.find(t);
    if (it == r.type_by_category.end()) continue;
    nlohmann::json row{{"question_type", t}, {"overall", r.question_type_means.at(t)}};
    for (const auto& c : columns) {
      const auto v = it->second.find(c.get<std::string>());
      row[c.get<std::string>()] =
          v == it->second.end() ? nlohmann::json(nullptr) : nlohmann::json(v->second);
    }
    rows.push_back(row);
  }
  nlohmann::json avg{{"question_type", "average"}, {"overall", r.overall}};
  for (const auto& c : columns) avg[c.get<std::string>()] = r.category_means.at(c.get<std::string>());
  rows.push_back(avg);

  nlohmann::json items = nlohmann::json::array();
  for (const auto& i : r.items) {
    nlohmann::json j{{"id", i.item_id},
                     {"task_id", i.task_id},
                     {"column", report_column(i)},
                     {"question_type", to_string(i.question_type)},
                     {"scored", i.scored},
                     {"score", i.score},
                     {"unmatched", i.unmatched}};
    if (i.judge) {
      j["judge"] = {{"correctness", i.judge->correctness},
                    {"relevance", i.judge->relevance},
                    {"completeness", i.judge->completeness},
                    {"clamped", i.judge->clamped},
                    {"normalized", i.judge->normalized}};
    }
    items.push_back(j);
  }
  return {{"columns", columns},
          {"table", rows},
          {"categories", r.category_means},
          {"question_types", r.question_type_means},
          {"capability_groups", r.group_means},
          {"overall", r.overall},
          {"counts",
           {{"scored", r.scored}, {"unscored", r.unscored}, {"unmatched", r.unmatched},
            {"clamped", r.clamped}}},
          {"items", items}};
}

EvaluationReport evaluate(const std::vector<QAItem>& items,
                          const std::map<std::string, std::string>& answers, Judge* judge,
                          int concurrency) {
  if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
  const bool needs_judge = std::any_of(items.begin(), items.end(), [](const QAItem& i) {
    return !is_multiple_choice(i.question_type);
  });
  if (needs_judge && judge == nullptr) {
    throw ConfigError("free-form items need a judge endpoint or the mock judge");
  }
  std::vector<ItemResult> results(items.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const QAItem& it = items[i];
      ItemResult& r = results[i];
      r.item_id = it.id;
      r.task_id = it.task_id;
      r.category = it.category;
      r.variant = it.variant;
      r.question_type = it.question_type;
      const auto a = answers.find(it.id);
      if (a == answers.end()) {
        r.scored = true;
        r.unmatched = true;
        continue;
      }
      r.answer = a->second;
      if (it.mc) {
        const MCScore s = score_mc(a->second, *it.mc);
        r.scored = true;
        r.unmatched = s.unmatched;
        r.score = 100.0 * s.score;
      } else {
        r.judge = judge_score(it.question_text, it.reference_answer, a->second, *judge);
        r.scored = r.judge.has_value();
        r.score = r.judge ? r.judge->normalized : 0.0;
      }
    }
  };
  const int n = std::min<int>(concurrency, static_cast<int>(std::max<std::size_t>(items.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return aggregate(results);
}

}  // namespace manifail
