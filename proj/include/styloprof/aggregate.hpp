#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "styloprof/evaluate.hpp"
#include "styloprof/learners.hpp"
#include "styloprof/pipeline.hpp"

namespace styloprof {

// Per-user aggregate of post-level predictions: for each class, the fraction
// of the user's posts predicted as that class and the mean decision score.
struct UserPredictionProfile {
  std::string user_id;
  std::vector<double> label_proportions;  // sums to 1
  std::vector<double> mean_scores;
  std::uint32_t post_count = 0;
};

enum class ProfileFeatures { Full, LabelsOnly };

inline ProfileFeatures parse_profile_features(const std::string& s) {
  if (s == "full") return ProfileFeatures::Full;
  if (s == "labels-only") return ProfileFeatures::LabelsOnly;
  throw UsageError(concat("unknown profile feature mode '", s, "'"));
}

inline const char* to_string(ProfileFeatures m) {
  return m == ProfileFeatures::Full ? "full" : "labels-only";
}

// Re-expresses a model's score vector in a global class ordering; classes the
// model never saw score zero.
inline std::vector<double> map_scores(const Prediction& pred,
                                      std::span<const std::string> model_classes,
                                      std::span<const std::string> global_classes) {
  std::vector<double> out(global_classes.size(), 0.0);
  for (std::size_t c = 0; c < model_classes.size(); ++c) {
    auto it = std::find(global_classes.begin(), global_classes.end(), model_classes[c]);
    if (it == global_classes.end())
      throw DataError(concat("model class '", model_classes[c], "' missing from class list"));
    out[static_cast<std::size_t>(it - global_classes.begin())] = pred.scores[c];
  }
  return out;
}

inline std::vector<UserPredictionProfile> build_profiles(
    std::span<const Prediction> predictions, std::span<const std::string> post_user_ids,
    std::span<const std::string> model_classes,
    std::span<const std::string> global_classes) {
  if (predictions.size() != post_user_ids.size())
    throw DataError("build_profiles: prediction without matching post");
  std::map<std::string, UserPredictionProfile> by_user;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    UserPredictionProfile& p = by_user[post_user_ids[i]];
    if (p.post_count == 0) {
      p.user_id = post_user_ids[i];
      p.label_proportions.assign(global_classes.size(), 0.0);
      p.mean_scores.assign(global_classes.size(), 0.0);
    }
    auto it = std::find(global_classes.begin(), global_classes.end(),
                        predictions[i].label);
    if (it == global_classes.end())
      throw DataError(concat("predicted label '", predictions[i].label,
                             "' missing from class list"));
    p.label_proportions[static_cast<std::size_t>(it - global_classes.begin())] += 1;
    auto scores = map_scores(predictions[i], model_classes, global_classes);
    for (std::size_t c = 0; c < scores.size(); ++c) p.mean_scores[c] += scores[c];
    ++p.post_count;
  }
  std::vector<UserPredictionProfile> out;
  out.reserve(by_user.size());
  for (auto& [id, p] : by_user) {
    for (double& v : p.label_proportions) v /= p.post_count;
    for (double& v : p.mean_scores) v /= p.post_count;
    out.push_back(std::move(p));
  }
  return out;
}

// The ensemble's own little feature space: label proportions, mean scores and
// log post count (or proportions alone in labels-only mode).
inline FeatureSpace profile_space(std::span<const std::string> classes,
                                  ProfileFeatures mode) {
  FeatureSpace space;
  auto add = [&](const std::string& name) {
    space.vocab.index[name] = space.vocab.size();
    space.vocab.features.push_back(name);
  };
  for (const auto& c : classes) add(concat("prof:prop:", c));
  if (mode == ProfileFeatures::Full) {
    for (const auto& c : classes) add(concat("prof:score:", c));
    add("prof:logcount");
  }
  space.df.assign(space.vocab.size(), 0);
  space.kept.resize(space.vocab.size());
  std::iota(space.kept.begin(), space.kept.end(), 0u);
  space.blocks.push_back({0, space.vocab.size(), Representation::Absolute, 0});
  return space;
}

inline SparseVector profile_vector(const UserPredictionProfile& p, ProfileFeatures mode) {
  const std::size_t n_classes = p.label_proportions.size();
  SparseVector x;
  x.dim = static_cast<std::uint32_t>(mode == ProfileFeatures::Full ? 2 * n_classes + 1
                                                                   : n_classes);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (p.label_proportions[c] != 0)
      x.push(static_cast<std::uint32_t>(c), p.label_proportions[c]);
  if (mode == ProfileFeatures::Full) {
    for (std::size_t c = 0; c < n_classes; ++c)
      if (p.mean_scores[c] != 0)
        x.push(static_cast<std::uint32_t>(n_classes + c), p.mean_scores[c]);
    x.push(static_cast<std::uint32_t>(2 * n_classes),
           std::log(static_cast<double>(p.post_count)) + 1.0);
  }
  return x;
}

inline TrainedModel train_ensemble(std::span<const UserPredictionProfile> profiles,
                                   std::span<const std::string> user_labels,
                                   std::span<const std::string> classes,
                                   const ModelSpec& spec, ProfileFeatures mode,
                                   std::vector<std::string>* warnings = nullptr) {
  if (profiles.empty()) throw DataError("train_ensemble: no profiles");
  std::vector<SparseVector> x;
  x.reserve(profiles.size());
  for (const auto& p : profiles) x.push_back(profile_vector(p, mode));

  bool constant = true;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] == x[0])) constant = false;
  if (constant && warnings)
    warnings->push_back(
        "aggregation profiles are constant; ensemble degenerates to the majority class");

  return train(spec, x, user_labels, profile_space(classes, mode));
}

struct UserPrediction {
  std::string user_id;
  std::string label;
  std::vector<double> scores;
  std::uint32_t post_count = 0;
};

struct MessageBasedOptions {
  Task task = Task::Age;
  ProfileFeatures profile_features = ProfileFeatures::Full;
  bool retrain_on_aggregation = true;
  unsigned jobs = 1;
};

struct MessageBasedResult {
  MetricsReport post_metrics;  // post level, test partition
  MetricsReport user_metrics;  // user level, test partition
  std::vector<UserPrediction> user_predictions;
  TrainedModel post_model;  // the final post model (retrained when enabled)
  TrainedModel ensemble;
  std::vector<std::string> classes;
  std::vector<std::string> warnings;
};

namespace detail {

struct PartitionedPosts {
  std::vector<std::size_t> train, aggregation, test;
};

inline PartitionedPosts partition_labeled_posts(const Corpus& corpus,
                                                const SplitAssignment& split, Task task) {
  PartitionedPosts out;
  for (std::size_t i = 0; i < corpus.posts.size(); ++i) {
    const Post& p = corpus.posts[i];
    const UserRecord* u = corpus.find_user(p.user_id);
    if (!u || !u->label(task)) continue;  // unlabeled users join predict-only flows
    auto it = split.by_user.find(p.user_id);
    if (it == split.by_user.end()) continue;
    switch (it->second) {
      case Partition::Train: out.train.push_back(i); break;
      case Partition::Aggregation: out.aggregation.push_back(i); break;
      case Partition::Test: out.test.push_back(i); break;
    }
  }
  return out;
}

}  // namespace detail

// The three-step protocol: a post model trained on the training partition
// labels the aggregation set; the ensemble is trained on those per-user
// profiles; the post model is then retrained on training+aggregation and the
// ensemble decides each test user from their test-post predictions.
inline MessageBasedResult run_message_based_pipeline(const Corpus& corpus,
                                                     const SplitAssignment& split,
                                                     const ModelSpec& post_spec,
                                                     const ModelSpec& ensemble_spec,
                                                     const FeatureConfig& cfg,
                                                     const MessageBasedOptions& opts) {
  MessageBasedResult result;
  auto parts = detail::partition_labeled_posts(corpus, split, opts.task);
  if (parts.train.empty()) throw DataError("message-based pipeline: empty training partition");
  if (parts.aggregation.empty())
    throw DataError("message-based pipeline: empty aggregation partition");
  if (parts.test.empty()) throw DataError("message-based pipeline: empty test partition");

  // global class list over every labeled user
  {
    std::set<std::string> cs;
    for (const auto& u : corpus.users)
      if (auto l = u.label(opts.task)) cs.insert(*l);
    result.classes.assign(cs.begin(), cs.end());
  }

  auto post_label = [&](std::size_t i) {
    return *corpus.find_user(corpus.posts[i].user_id)->label(opts.task);
  };

  std::vector<AnalyzedDoc> docs = analyze_posts(corpus.posts, cfg, opts.jobs);
  std::vector<FeatureBag> bags = doc_bags(docs, cfg, opts.jobs);

  auto gather_bags = [&](const std::vector<std::size_t>& idx) {
    std::vector<FeatureBag> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(bags[i]);
    return out;
  };
  auto gather_labels = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(post_label(i));
    return out;
  };
  auto gather_users = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(corpus.posts[i].user_id);
    return out;
  };

  // step 1: post model on the training partition
  auto train_bags = gather_bags(parts.train);
  auto train_labels = gather_labels(parts.train);
  FeatureSpace space1 = space_from_config(train_bags, cfg, train_labels, result.classes);
  TrainedModel m1 = train(post_spec, vectorize_all(train_bags, space1, opts.jobs),
                          train_labels, space1);

  // step 2: label the aggregation set, build per-user profiles
  auto agg_bags = gather_bags(parts.aggregation);
  auto agg_users = gather_users(parts.aggregation);
  std::vector<SparseVector> agg_x = vectorize_all(agg_bags, m1.space, opts.jobs);
  std::vector<Prediction> agg_preds(agg_x.size());
  parallel_for(agg_x.size(), opts.jobs,
               [&](std::size_t i) { agg_preds[i] = predict(m1, agg_x[i]); });
  auto agg_profiles = build_profiles(agg_preds, agg_users, m1.classes, result.classes);
  if (agg_profiles.empty())
    throw DataError("message-based pipeline: no aggregation profiles");

  std::vector<std::string> agg_user_labels;
  for (const auto& p : agg_profiles)
    agg_user_labels.push_back(*corpus.find_user(p.user_id)->label(opts.task));

  // step 3: ensemble over the aggregation profiles
  result.ensemble = train_ensemble(agg_profiles, agg_user_labels, result.classes,
                                   ensemble_spec, opts.profile_features, &result.warnings);

  // step 4: final post model, then test predictions at both levels
  if (opts.retrain_on_aggregation) {
    std::vector<std::size_t> both = parts.train;
    both.insert(both.end(), parts.aggregation.begin(), parts.aggregation.end());
    auto both_bags = gather_bags(both);
    auto both_labels = gather_labels(both);
    FeatureSpace space2 = space_from_config(both_bags, cfg, both_labels, result.classes);
    result.post_model = train(post_spec, vectorize_all(both_bags, space2, opts.jobs),
                              both_labels, space2);
  } else {
    result.post_model = std::move(m1);
  }

  auto test_bags = gather_bags(parts.test);
  auto test_users = gather_users(parts.test);
  auto test_labels = gather_labels(parts.test);
  std::vector<SparseVector> test_x =
      vectorize_all(test_bags, result.post_model.space, opts.jobs);
  std::vector<Prediction> test_preds(test_x.size());
  parallel_for(test_x.size(), opts.jobs,
               [&](std::size_t i) { test_preds[i] = predict(result.post_model, test_x[i]); });

  std::vector<std::string> test_pred_labels;
  for (const auto& p : test_preds) test_pred_labels.push_back(p.label);
  result.post_metrics = compute_metrics(test_labels, test_pred_labels, result.classes);
  result.post_metrics.baseline_micro_f = expected_stratified_micro_f(train_labels);

  auto test_profiles =
      build_profiles(test_preds, test_users, result.post_model.classes, result.classes);
  std::vector<std::string> user_true, user_pred;
  for (const auto& prof : test_profiles) {
    Prediction up =
        predict(result.ensemble, profile_vector(prof, opts.profile_features));
    result.user_predictions.push_back(
        {prof.user_id, up.label, up.scores, prof.post_count});
    user_true.push_back(*corpus.find_user(prof.user_id)->label(opts.task));
    user_pred.push_back(up.label);
  }
  result.user_metrics = compute_metrics(user_true, user_pred, result.classes);
  std::vector<std::string> train_user_labels;
  for (const auto& u : corpus.users) {
    auto it = split.by_user.find(u.user_id);
    if (it != split.by_user.end() && it->second == Partition::Train)
      if (auto l = u.label(opts.task)) train_user_labels.push_back(*l);
  }
  if (!train_user_labels.empty())
    result.user_metrics.baseline_micro_f = expected_stratified_micro_f(train_user_labels);
  return result;
}

}  // namespace styloprof
