#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "styloprof/aggregate.hpp"
#include "styloprof/model_io.hpp"
#include "styloprof/userlevel.hpp"

namespace styloprof {

enum class PipelineMode { MessageBased, UserBased };

inline const char* to_string(PipelineMode m) {
  return m == PipelineMode::MessageBased ? "message_based" : "user_based";
}

inline PipelineMode parse_pipeline_mode(const std::string& s) {
  if (s == "message_based") return PipelineMode::MessageBased;
  if (s == "user_based") return PipelineMode::UserBased;
  throw DataError(concat("unknown pipeline mode '", s, "'"));
}

// A full trained pipeline: post- or user-level model, preprocessing, and the
// ensemble when predictions are aggregated. Without an ensemble the
// message-based mode falls back to majority vote over post predictions.
struct PipelineModel {
  PipelineMode mode = PipelineMode::MessageBased;
  Task task = Task::Age;
  FeatureConfig features;
  TrainedModel model;  // post model (message based) or user model
  std::optional<TrainedModel> ensemble;
  ProfileFeatures profile_features = ProfileFeatures::Full;
  std::vector<std::string> classes;  // global class list for profiles
  std::string config_hash;
  std::string config_text;
  std::string tool_version = kToolVersion;
};

inline void save_pipeline_file(const std::string& path, const PipelineModel& p) {
  json payload{{"format_version", 1},
               {"kind", "pipeline"},
               {"mode", to_string(p.mode)},
               {"task", to_string(p.task)},
               {"feature_config", feature_config_to_json(p.features)},
               {"model", model_to_json(p.model)},
               {"profile_features", to_string(p.profile_features)},
               {"classes", p.classes},
               {"config_hash", p.config_hash},
               {"config", p.config_text},
               {"tool_version", p.tool_version}};
  payload["ensemble"] = p.ensemble ? model_to_json(*p.ensemble) : json();
  write_container(path, payload);
}

inline PipelineModel load_pipeline_file(const std::string& path) {
  json payload = read_container(path);
  PipelineModel p;
  std::string kind = payload.value("kind", std::string());
  if (kind == "model") {
    // a bare model file acts as an ensemble-free pipeline
    ModelFile f = load_model_file(path);
    p.mode = f.level == "user" ? PipelineMode::UserBased : PipelineMode::MessageBased;
    p.task = f.task;
    p.features = std::move(f.features);
    p.classes = f.model.classes;
    p.model = std::move(f.model);
    p.config_hash = f.config_hash;
    p.config_text = f.config_text;
    p.tool_version = f.tool_version;
    return p;
  }
  if (kind != "pipeline") throw DataError(concat(path, ": not a model or pipeline file"));
  p.mode = parse_pipeline_mode(payload.at("mode"));
  p.task = parse_task(payload.at("task"));
  p.features = feature_config_from_json(payload.at("feature_config"));
  p.model = model_from_json(payload.at("model"));
  if (!payload.at("ensemble").is_null())
    p.ensemble = model_from_json(payload.at("ensemble"));
  p.profile_features = parse_profile_features(payload.at("profile_features"));
  p.classes = payload.at("classes").get<std::vector<std::string>>();
  p.config_hash = payload.value("config_hash", std::string());
  p.config_text = payload.value("config", std::string());
  p.tool_version = payload.value("tool_version", std::string());
  return p;
}

// Labels every user with at least one post. No label access anywhere on this
// path; metrics happen downstream when ground truth exists.
inline std::vector<UserPrediction> apply_pipeline(const PipelineModel& p,
                                                  const Corpus& corpus,
                                                  unsigned jobs = 1) {
  std::vector<UserPrediction> out;
  if (p.mode == PipelineMode::UserBased) {
    std::vector<UserDocument> docs = merge_user_documents(corpus, p.features, jobs);
    FeatureExtractor extractor(p.features.extractor_config());
    std::vector<UserPrediction> preds(docs.size());
    parallel_for(docs.size(), jobs, [&](std::size_t i) {
      FeatureBag bag = doc_bag(docs[i].doc, extractor, p.features.span_post_boundaries);
      Prediction pr = predict(p.model, vectorize(bag, p.model.space));
      preds[i] = {docs[i].user_id, pr.label,
                  map_scores(pr, p.model.classes, p.classes), docs[i].post_count};
    });
    return preds;
  }

  // message based: post predictions, then aggregation per user
  std::vector<AnalyzedDoc> docs = analyze_posts(corpus.posts, p.features, jobs);
  std::vector<FeatureBag> bags = doc_bags(docs, p.features, jobs);
  std::vector<SparseVector> x = vectorize_all(bags, p.model.space, jobs);
  std::vector<Prediction> preds(x.size());
  parallel_for(x.size(), jobs, [&](std::size_t i) { preds[i] = predict(p.model, x[i]); });
  std::vector<std::string> post_users;
  post_users.reserve(corpus.posts.size());
  for (const Post& post : corpus.posts) post_users.push_back(post.user_id);

  auto profiles = build_profiles(preds, post_users, p.model.classes, p.classes);
  out.reserve(profiles.size());
  for (const auto& prof : profiles) {
    if (p.ensemble) {
      Prediction up = predict(*p.ensemble, profile_vector(prof, p.profile_features));
      out.push_back({prof.user_id, up.label, up.scores, prof.post_count});
    } else {
      // majority vote over the user's post predictions
      std::size_t best = argmax(prof.label_proportions);
      out.push_back({prof.user_id, p.classes[best], prof.label_proportions,
                     prof.post_count});
    }
  }
  return out;
}

// Zero-adaptation evaluation on a foreign corpus: same preprocessing, space
// and model; the report carries the foreign corpus's own stratified baseline.
inline MetricsReport cross_domain_evaluate(const PipelineModel& p, const Corpus& foreign,
                                           unsigned jobs = 1) {
  std::vector<UserPrediction> preds = apply_pipeline(p, foreign, jobs);
  std::vector<std::string> y_true, y_pred;
  for (const auto& up : preds) {
    const UserRecord* u = foreign.find_user(up.user_id);
    auto label = u ? u->label(p.task) : std::nullopt;
    if (!label) continue;
    y_true.push_back(*label);
    y_pred.push_back(up.label);
  }
  if (y_true.empty())
    throw DataError("cross-domain evaluation: foreign corpus has no labeled users "
                    "(check the label mapping)");
  std::vector<std::string> classes = p.classes;
  for (const auto& l : y_true)
    if (std::find(classes.begin(), classes.end(), l) == classes.end())
      classes.push_back(l);
  MetricsReport r = compute_metrics(y_true, y_pred, classes);
  r.baseline_micro_f = expected_stratified_micro_f(y_true);
  return r;
}

// ---------------------------------------------------------------------------
// Demographic distribution report (per forum, user counts per age group and
// gender). No ground truth exists for these corpora; the banner says so.

struct DemographicReport {
  std::vector<std::string> age_classes;
  std::vector<std::string> gender_classes;
  // forum -> class -> user count
  std::map<std::string, std::map<std::string, std::uint32_t>> age_counts;
  std::map<std::string, std::map<std::string, std::uint32_t>> gender_counts;
  std::uint32_t total_users = 0;
};

inline DemographicReport build_demographic_report(
    const Corpus& corpus, const std::vector<UserPrediction>& age_preds,
    const std::vector<UserPrediction>& gender_preds,
    const std::vector<std::string>& age_classes,
    const std::vector<std::string>& gender_classes) {
  DemographicReport report;
  report.age_classes = age_classes;
  report.gender_classes = gender_classes;

  std::map<std::string, std::string> forum_of;
  for (const Post& p : corpus.posts) {
    auto [it, inserted] = forum_of.emplace(p.user_id, p.forum);
    if (!inserted && it->second != p.forum) it->second = p.forum;  // last one wins
  }
  auto forum_name = [&](const std::string& user_id) {
    auto it = forum_of.find(user_id);
    if (it == forum_of.end() || it->second.empty()) return std::string("(all)");
    return it->second;
  };
  for (const auto& forum : forum_of) {
    std::string f = forum.second.empty() ? "(all)" : forum.second;
    report.age_counts[f];
    report.gender_counts[f];
  }
  if (forum_of.empty()) return report;

  for (const auto& up : age_preds) ++report.age_counts[forum_name(up.user_id)][up.label];
  for (const auto& up : gender_preds)
    ++report.gender_counts[forum_name(up.user_id)][up.label];
  report.total_users = static_cast<std::uint32_t>(age_preds.size());
  return report;
}

inline std::string render_demographic_report(const DemographicReport& r) {
  std::ostringstream os;
  os << "Demographic distribution report (no ground truth available)\n";
  std::size_t name_w = 8;
  for (const auto& [forum, counts] : r.age_counts) name_w = std::max(name_w, forum.size());

  os << std::left << std::setw(static_cast<int>(name_w + 2)) << "forum";
  for (const auto& c : r.age_classes) os << std::right << std::setw(10) << c;
  for (const auto& c : r.gender_classes) os << std::right << std::setw(10) << c;
  os << "\n";

  std::map<std::string, std::uint64_t> age_total, gender_total;
  std::uint64_t age_sum = 0, gender_sum = 0;
  for (const auto& [forum, counts] : r.age_counts) {
    os << std::left << std::setw(static_cast<int>(name_w + 2)) << forum;
    for (const auto& c : r.age_classes) {
      std::uint32_t n = counts.count(c) ? counts.at(c) : 0;
      age_total[c] += n;
      age_sum += n;
      os << std::right << std::setw(10) << n;
    }
    const auto& gcounts = r.gender_counts.at(forum);
    for (const auto& c : r.gender_classes) {
      std::uint32_t n = gcounts.count(c) ? gcounts.at(c) : 0;
      gender_total[c] += n;
      gender_sum += n;
      os << std::right << std::setw(10) << n;
    }
    os << "\n";
  }

  os << std::left << std::setw(static_cast<int>(name_w + 2)) << "Total (%)";
  os << std::fixed << std::setprecision(1);
  for (const auto& c : r.age_classes)
    os << std::right << std::setw(10)
       << (age_sum > 0 ? 100.0 * static_cast<double>(age_total[c]) / static_cast<double>(age_sum) : 0.0);
  for (const auto& c : r.gender_classes)
    os << std::right << std::setw(10)
       << (gender_sum > 0 ? 100.0 * static_cast<double>(gender_total[c]) / static_cast<double>(gender_sum) : 0.0);
  os << "\n";
  return os.str();
}

inline json demographic_report_to_json(const DemographicReport& r) {
  json j;
  j["banner"] = "no ground truth available";
  j["age_classes"] = r.age_classes;
  j["gender_classes"] = r.gender_classes;
  json fora = json::array();
  std::map<std::string, std::uint64_t> age_total, gender_total;
  std::uint64_t age_sum = 0, gender_sum = 0;
  for (const auto& [forum, counts] : r.age_counts) {
    json row{{"forum", forum}};
    for (const auto& c : r.age_classes) {
      std::uint32_t n = counts.count(c) ? counts.at(c) : 0;
      row["age"][c] = n;
      age_total[c] += n;
      age_sum += n;
    }
    const auto& gcounts = r.gender_counts.at(forum);
    for (const auto& c : r.gender_classes) {
      std::uint32_t n = gcounts.count(c) ? gcounts.at(c) : 0;
      row["gender"][c] = n;
      gender_total[c] += n;
      gender_sum += n;
    }
    fora.push_back(std::move(row));
  }
  j["fora"] = fora;
  for (const auto& c : r.age_classes)
    j["total_pct"]["age"][c] =
        age_sum > 0 ? 100.0 * static_cast<double>(age_total[c]) / static_cast<double>(age_sum) : 0.0;
  for (const auto& c : r.gender_classes)
    j["total_pct"]["gender"][c] =
        gender_sum > 0 ? 100.0 * static_cast<double>(gender_total[c]) / static_cast<double>(gender_sum)
                       : 0.0;
  return j;
}

}  // namespace styloprof
