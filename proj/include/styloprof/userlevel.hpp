#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "styloprof/aggregate.hpp"
#include "styloprof/evaluate.hpp"
#include "styloprof/pipeline.hpp"

namespace styloprof {

// All of a user's messages as one document. Posts stay separate segments so
// character windows and bigrams do not cross post boundaries (unless the
// feature config says they may).
struct UserDocument {
  std::string user_id;
  AnalyzedDoc doc;
  std::uint32_t post_count = 0;
};

inline std::vector<UserDocument> merge_user_documents(const Corpus& corpus,
                                                      const FeatureConfig& cfg,
                                                      unsigned jobs = 1,
                                                      const LintProvider* lint = nullptr) {
  // deterministic post order: timestamp, then post_id
  std::vector<std::size_t> order(corpus.posts.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Post& pa = corpus.posts[a];
    const Post& pb = corpus.posts[b];
    if (pa.user_id != pb.user_id) return pa.user_id < pb.user_id;
    if (pa.timestamp != pb.timestamp) return pa.timestamp < pb.timestamp;
    return pa.post_id < pb.post_id;
  });

  std::vector<AnalyzedDoc> analyzed = analyze_posts(corpus.posts, cfg, jobs, lint);

  std::vector<UserDocument> out;
  for (std::size_t i : order) {
    const Post& p = corpus.posts[i];
    if (out.empty() || out.back().user_id != p.user_id) {
      out.push_back({p.user_id, {}, 0});
    }
    UserDocument& d = out.back();
    d.doc.append(std::move(analyzed[i].streams[0]), std::move(analyzed[i].segments[0]));
    ++d.post_count;
  }
  return out;  // sorted by user_id by construction
}

struct UserBasedOptions {
  Task task = Task::Age;
  std::uint32_t cv_folds = 10;
  std::uint64_t cv_seed = 1;
  std::vector<std::uint32_t> knn_k_grid = {1, 3, 5, 9};  // used when spec is knn
  unsigned jobs = 1;
};

struct UserBasedResult {
  CvResult cv;                 // within the training partition
  ModelSpec chosen_spec;       // after any grid selection
  MetricsReport test_metrics;  // on test users
  std::vector<UserPrediction> user_predictions;
  TrainedModel model;
  std::vector<std::string> classes;
  std::vector<std::string> warnings;
};

// Model selection by cross-validation inside the training partition, then one
// final fit on all of it; test users are labeled directly, no aggregation.
inline UserBasedResult run_user_based_pipeline(const Corpus& corpus,
                                               const SplitAssignment& split,
                                               const ModelSpec& spec,
                                               const FeatureConfig& cfg,
                                               const UserBasedOptions& opts) {
  UserBasedResult result;
  result.chosen_spec = spec;

  std::vector<UserDocument> docs = merge_user_documents(corpus, cfg, opts.jobs);

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const UserRecord* u = corpus.find_user(docs[i].user_id);
    if (!u || !u->label(opts.task)) continue;
    auto it = split.by_user.find(docs[i].user_id);
    if (it == split.by_user.end()) continue;
    if (it->second == Partition::Train) train_idx.push_back(i);
    else if (it->second == Partition::Test) test_idx.push_back(i);
  }
  if (train_idx.empty()) throw DataError("user-based pipeline: empty training partition");
  if (test_idx.empty()) throw DataError("user-based pipeline: empty test partition");

  auto label_of = [&](std::size_t i) {
    return *corpus.find_user(docs[i].user_id)->label(opts.task);
  };

  std::vector<AnalyzedDoc> train_docs;
  std::vector<std::string> train_labels, train_users;
  for (std::size_t i : train_idx) {
    train_docs.push_back(docs[i].doc);
    train_labels.push_back(label_of(i));
    train_users.push_back(docs[i].user_id);
  }
  {
    std::set<std::string> cs(train_labels.begin(), train_labels.end());
    for (std::size_t i : test_idx) cs.insert(label_of(i));
    result.classes.assign(cs.begin(), cs.end());
  }

  // grid-select k for knn by CV micro F; otherwise CV is reporting only
  if (spec.algorithm == Algorithm::Knn && opts.knn_k_grid.size() > 1) {
    double best_score = -1;
    std::uint32_t best_k = opts.knn_k_grid.front();
    for (std::uint32_t k : opts.knn_k_grid) {
      ModelSpec candidate = spec;
      candidate.hyper["k"] = k;
      CvResult cv = cross_validate(train_docs, train_labels, train_users, opts.cv_folds,
                                   opts.cv_seed, candidate, cfg, opts.jobs);
      if (cv.mean_micro_f > best_score) {
        best_score = cv.mean_micro_f;
        best_k = k;
        result.cv = std::move(cv);
      }
    }
    result.chosen_spec.hyper["k"] = best_k;
    result.warnings.push_back(concat("knn k selected by CV: ", best_k));
  } else {
    result.cv = cross_validate(train_docs, train_labels, train_users, opts.cv_folds,
                               opts.cv_seed, result.chosen_spec, cfg, opts.jobs);
  }

  // final fit on the whole training partition
  std::vector<FeatureBag> train_bags(train_docs.size());
  {
    FeatureExtractor extractor(cfg.extractor_config());
    parallel_for(train_docs.size(), opts.jobs, [&](std::size_t i) {
      train_bags[i] = doc_bag(train_docs[i], extractor, cfg.span_post_boundaries);
    });
  }
  FeatureSpace space = space_from_config(train_bags, cfg, train_labels, result.classes);
  result.model = train(result.chosen_spec, vectorize_all(train_bags, space, opts.jobs),
                       train_labels, space);

  FeatureExtractor extractor(cfg.extractor_config());
  std::vector<std::string> y_true, y_pred;
  for (std::size_t i : test_idx) {
    FeatureBag bag = doc_bag(docs[i].doc, extractor, cfg.span_post_boundaries);
    Prediction p = predict(result.model, vectorize(bag, result.model.space));
    result.user_predictions.push_back(
        {docs[i].user_id, p.label, map_scores(p, result.model.classes, result.classes),
         docs[i].post_count});
    y_true.push_back(label_of(i));
    y_pred.push_back(p.label);
  }
  result.test_metrics = compute_metrics(y_true, y_pred, result.classes);
  result.test_metrics.baseline_micro_f = expected_stratified_micro_f(train_labels);
  return result;
}

}  // namespace styloprof
