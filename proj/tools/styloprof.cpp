// Command line surface binding corpus ingestion, splitting, training,
// prediction, aggregation, evaluation and demographic reports into
// reproducible runs. Every artifact embeds the config hash of the invocation
// that produced it.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "styloprof/aggregate.hpp"
#include "styloprof/evaluate.hpp"
#include "styloprof/forum_ingest.hpp"
#include "styloprof/lint_remote.hpp"
#include "styloprof/model_io.hpp"
#include "styloprof/profiling.hpp"
#include "styloprof/userlevel.hpp"
#include "styloprof/version.hpp"

namespace sp = styloprof;

namespace {

#ifdef STYLOPROF_DATA_DIR
const char* kDataDir = STYLOPROF_DATA_DIR;
#else
const char* kDataDir = "data";
#endif

std::string data_path(const char* name) {
  return (std::filesystem::path(kDataDir) / name).string();
}

void log_line(const std::string& cmd, const std::string& msg) {
  std::cerr << "[styloprof] cmd=" << cmd << " " << msg << "\n";
}

// Canonical serialization of a subcommand's option state. Output destinations
// stay out of it: where an artifact is written does not change what
// experiment produced it.
std::string canonical_config(CLI::App* cmd) {
  std::vector<std::string> lines;
  for (const CLI::Option* opt : cmd->get_options()) {
    std::string name = opt->get_name();
    if (name == "--out" || name == "--out-json" || name == "--out-csv" ||
        name == "--help" || name.empty())
      continue;
    std::string value = opt->count() ? CLI::detail::join(opt->results(), ",")
                                     : opt->get_default_str();
    lines.push_back(name.substr(2) + "=" + value);
  }
  std::sort(lines.begin(), lines.end());
  std::string canon = "command=" + cmd->get_name();
  for (const auto& l : lines) canon += "\n" + l;
  return canon;
}

std::string config_hash_of(CLI::App* cmd) {
  return sp::to_hex(sp::fnv1a64(canonical_config(cmd)));
}

sp::json meta_for(CLI::App* cmd, std::string inherited_hash = {}) {
  return sp::json{
      {"config_hash", inherited_hash.empty() ? config_hash_of(cmd) : inherited_hash},
      {"config", canonical_config(cmd)},
      {"tool_version", sp::kToolVersion},
      {"command", cmd->get_name()}};
}

struct FeatureFlags {
  std::vector<std::string> kinds = {"bow"};
  std::string select = "none";
  std::string chi2_pooling = "max";
  std::string repr = "binary";
  std::vector<int> char_ns = {2, 3, 4};
  std::string function_words_path = data_path("function_words.txt");
  std::string acronyms_path = data_path("acronyms.txt");
  std::string dictionary_path = data_path("english_words.txt");
  bool span_posts = false;
  std::string lint_endpoint;
  std::string lint_cache;
  unsigned lint_timeout_ms = 5000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--features", kinds,
                    "feature kinds: bow,content,bigrams,char_ngrams,chatspeak,lint")
        ->delimiter(',');
    cmd->add_option("--select", select, "feature selection: none|df:K|chi2:K|mi:K");
    cmd->add_option("--chi2-pooling", chi2_pooling, "chi2 class pooling: max|sum");
    cmd->add_option("--repr", repr, "representation: binary|absolute|tfidf|l2");
    cmd->add_option("--char-ns", char_ns, "character n-gram sizes")->delimiter(',');
    cmd->add_option("--function-words", function_words_path, "function word list file");
    cmd->add_option("--acronyms", acronyms_path, "all-caps acronym exemption list");
    cmd->add_option("--dictionary", dictionary_path, "dictionary for lint checks");
    cmd->add_flag("--span-posts", span_posts,
                  "let n-gram windows cross post boundaries in merged documents");
    cmd->add_option("--lint-endpoint", lint_endpoint,
                    "optional check service base URL; builtin checker on failure");
    cmd->add_option("--lint-cache", lint_cache, "JSONL cache for remote lint responses");
    cmd->add_option("--lint-timeout-ms", lint_timeout_ms, "remote lint timeout");
  }

  // lives for the whole command; holds the client the provider closes over
  struct LintWiring {
    std::shared_ptr<sp::LintClient> client;
    sp::LintProvider provider;
    std::size_t fallbacks = 0;
  };

  std::shared_ptr<LintWiring> wire_lint(const sp::FeatureConfig& cfg) const {
    if (lint_endpoint.empty() || !cfg.wants_lint()) return nullptr;
    auto wiring = std::make_shared<LintWiring>();
    wiring->client = std::make_shared<sp::LintClient>(
        lint_endpoint, cfg.lint_dictionary.get(),
        std::chrono::milliseconds(lint_timeout_ms), lint_cache);
    auto* w = wiring.get();
    wiring->provider = [w](const std::string& text) {
      auto result = w->client->check(text);
      if (result.fallback) ++w->fallbacks;
      return result.findings;
    };
    return wiring;
  }

  sp::FeatureConfig build() const {
    sp::FeatureConfig cfg;
    cfg.kinds.clear();
    for (const auto& k : kinds) cfg.kinds.insert(sp::parse_feature_kind(k));
    cfg.char_ns = std::set<int>(char_ns.begin(), char_ns.end());
    cfg.textprep = sp::TextprepOptions::with_default_acronyms();
    if (std::filesystem::exists(acronyms_path)) {
      cfg.textprep.acronyms.clear();
      std::ifstream in(acronyms_path);
      std::string line;
      while (std::getline(in, line)) {
        std::string w = sp::trim(line);
        if (!w.empty() && w[0] != '#') cfg.textprep.acronyms.insert(w);
      }
    }
    if (cfg.kinds.count(sp::FeatureKind::Content) ||
        std::filesystem::exists(function_words_path))
      cfg.function_words = sp::FunctionWordList::from_file(function_words_path);
    if (cfg.kinds.count(sp::FeatureKind::Lint))
      cfg.lint_dictionary =
          std::make_shared<sp::Dictionary>(sp::Dictionary::from_file(dictionary_path));
    auto parts = sp::split(select, ':');
    cfg.selection = sp::parse_selection_method(parts[0]);
    if (parts.size() > 1) {
      try {
        cfg.selection_k = static_cast<std::uint32_t>(std::stoul(parts[1]));
      } catch (const std::exception&) {
        throw sp::UsageError(sp::concat("bad --select count '", parts[1], "'"));
      }
      if (cfg.selection_k == 0) throw sp::UsageError("--select count must be >= 1");
    }
    cfg.chi2_pooling = sp::parse_chi2_pooling(chi2_pooling);
    cfg.repr = sp::parse_representation(repr);
    cfg.span_post_boundaries = span_posts;
    return cfg;
  }
};

struct ModelFlags {
  std::string algo = "mnb";
  std::vector<std::string> hyper;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--algo", algo, "algorithm: mnb|cnb|sgd|pac|ridge|knn|rf");
    cmd->add_option("--hyper", hyper, "hyperparameter overrides, key=value")
        ->delimiter(',');
    cmd->add_option("--seed", seed, "random seed");
  }

  sp::ModelSpec build() const {
    sp::ModelSpec spec;
    spec.algorithm = sp::parse_algorithm(algo);
    spec.seed = seed;
    for (const auto& kv : hyper) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw sp::UsageError(sp::concat("bad --hyper '", kv, "', expected key=value"));
      try {
        spec.hyper[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw sp::UsageError(sp::concat("bad --hyper value in '", kv, "'"));
      }
    }
    sp::validate_spec(spec);
    return spec;
  }
};

std::vector<std::pair<sp::Partition, double>> parse_fractions(
    const std::vector<double>& fracs) {
  if (fracs.size() == 2)
    return {{sp::Partition::Train, fracs[0]}, {sp::Partition::Test, fracs[1]}};
  if (fracs.size() == 3)
    return {{sp::Partition::Train, fracs[0]},
            {sp::Partition::Aggregation, fracs[1]},
            {sp::Partition::Test, fracs[2]}};
  throw sp::UsageError("--fractions takes 2 (train,test) or 3 (train,aggregation,test) values");
}

sp::Corpus corpus_partition(const sp::Corpus& corpus, const sp::SplitAssignment& split,
                            std::initializer_list<sp::Partition> parts) {
  return sp::filter_users(corpus, [&](const sp::UserRecord& u) {
    auto it = split.by_user.find(u.user_id);
    if (it == split.by_user.end()) return false;
    for (auto p : parts)
      if (it->second == p) return true;
    return false;
  });
}

std::string read_artifact_hash(const std::string& path) {
  // container files carry it in the payload, JSONL files in the _meta line
  std::ifstream in(path);
  std::string first;
  if (!in || !std::getline(in, first)) return {};
  if (first == sp::kModelMagic) {
    sp::json payload = sp::read_container(path);
    return payload.value("config_hash", std::string());
  }
  sp::json rec = sp::json::parse(first, nullptr, false);
  if (!rec.is_discarded() && rec.contains("_meta"))
    return rec["_meta"].value("config_hash", std::string());
  return {};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sp::DataError(sp::concat("cannot write ", path));
  out << text;
}

// ---------------------------------------------------------------------------

int cmd_ingest(CLI::App* cmd, const std::string& archive_dir, const std::string& adapter,
               const std::string& forum, const std::string& out_path) {
  sp::SnapshotArchive archive = sp::load_snapshot_archive(archive_dir, forum);
  sp::IngestResult result = sp::build_corpus(archive, sp::find_adapter(adapter));
  for (const auto& d : result.diagnostics) log_line("ingest", "diagnostic=\"" + d + "\"");
  sp::json meta = meta_for(cmd);
  sp::save_corpus(out_path, result.corpus, &meta);
  log_line("ingest", sp::concat("posts=", result.corpus.posts.size(),
                                " users=", result.corpus.users.size(),
                                " synthesized=", result.synthesized_users,
                                " skipped_pages=", result.skipped_pages,
                                " out=", out_path));
  return 0;
}

int cmd_split(CLI::App* cmd, const std::string& corpus_path,
              const std::vector<double>& fractions, std::uint64_t seed,
              std::uint32_t min_posts, const std::string& out_path) {
  sp::Corpus corpus = sp::load_corpus(corpus_path);
  if (min_posts > 1) corpus = sp::filter_min_posts(corpus, min_posts);
  sp::SplitAssignment split =
      sp::split_user_disjoint(corpus, parse_fractions(fractions), seed);
  for (const auto& w : split.warnings) log_line("split", "warning=\"" + w + "\"");
  sp::json meta = meta_for(cmd);
  sp::save_split(out_path, split, &meta);
  std::ostringstream achieved;
  for (std::size_t i = 0; i < split.partitions.size(); ++i)
    achieved << (i ? "," : "") << sp::to_string(split.partitions[i]) << "="
             << split.achieved_fractions[i];
  log_line("split", sp::concat("users=", split.by_user.size(), " achieved=",
                               achieved.str(), " out=", out_path));
  return 0;
}

int cmd_train(CLI::App* cmd, const std::string& corpus_path, const std::string& split_path,
              const std::vector<std::string>& partitions, const std::string& task_str,
              const std::string& level, const FeatureFlags& ff, const ModelFlags& mf,
              bool balance, unsigned jobs, const std::string& out_path) {
  sp::Task task = sp::parse_task(task_str);
  sp::FeatureConfig cfg = ff.build();
  sp::ModelSpec spec = mf.build();

  sp::Corpus corpus = sp::load_corpus(corpus_path, task);
  if (!split_path.empty()) {
    sp::SplitAssignment split = sp::load_split(split_path);
    std::vector<sp::Partition> parts;
    for (const auto& p : partitions) parts.push_back(sp::parse_partition(p, "--partition"));
    corpus = sp::filter_users(corpus, [&](const sp::UserRecord& u) {
      auto it = split.by_user.find(u.user_id);
      if (it == split.by_user.end()) return false;
      for (auto p : parts)
        if (it->second == p) return true;
      return false;
    });
  }
  corpus = sp::filter_users(corpus, [&](const sp::UserRecord& u) {
    return u.label(task).has_value();
  });
  if (corpus.posts.empty()) throw sp::DataError("training partition is empty");

  auto lint_wiring = ff.wire_lint(cfg);
  const sp::LintProvider* lint = lint_wiring ? &lint_wiring->provider : nullptr;

  std::vector<sp::FeatureBag> bags;
  std::vector<std::string> labels;
  if (level == "post") {
    auto docs = sp::analyze_posts(corpus.posts, cfg, jobs, lint);
    bags = sp::doc_bags(docs, cfg, jobs);
    for (const auto& p : corpus.posts)
      labels.push_back(*corpus.find_user(p.user_id)->label(task));
  } else if (level == "user") {
    auto docs = sp::merge_user_documents(corpus, cfg, jobs, lint);
    sp::FeatureExtractor extractor(cfg.extractor_config());
    bags.resize(docs.size());
    sp::parallel_for(docs.size(), jobs, [&](std::size_t i) {
      bags[i] = sp::doc_bag(docs[i].doc, extractor, cfg.span_post_boundaries);
    });
    for (const auto& d : docs)
      labels.push_back(*corpus.find_user(d.user_id)->label(task));
  } else {
    throw sp::UsageError("--level must be post or user");
  }
  if (lint_wiring && lint_wiring->fallbacks > 0)
    log_line("train", sp::concat("lint_fallbacks=", lint_wiring->fallbacks));

  if (balance) {
    auto idx = sp::balance_training(labels, spec.seed);
    std::vector<sp::FeatureBag> b2;
    std::vector<std::string> l2;
    for (auto i : idx) {
      b2.push_back(bags[i]);
      l2.push_back(labels[i]);
    }
    bags = std::move(b2);
    labels = std::move(l2);
  }

  std::set<std::string> class_set(labels.begin(), labels.end());
  std::vector<std::string> classes(class_set.begin(), class_set.end());
  sp::FeatureSpace space = sp::space_from_config(bags, cfg, labels, classes);
  sp::TrainedModel model =
      sp::train(spec, sp::vectorize_all(bags, space, jobs), labels, space);

  sp::ModelFile file;
  file.level = level;
  file.task = task;
  file.features = cfg;
  file.model = std::move(model);
  file.config_hash = config_hash_of(cmd);
  file.config_text = canonical_config(cmd);
  sp::save_model_file(out_path, file);
  log_line("train", sp::concat("level=", level, " instances=", bags.size(),
                               " dim=", file.model.space.dim(), " out=", out_path));
  return 0;
}

int cmd_predict(CLI::App* cmd, const std::string& model_path,
                const std::string& corpus_path, const std::string& split_path,
                const std::vector<std::string>& partitions, unsigned jobs,
                const std::string& out_path) {
  sp::ModelFile file = sp::load_model_file(model_path);
  sp::Corpus corpus = sp::load_corpus(corpus_path);
  if (!split_path.empty()) {
    sp::SplitAssignment split = sp::load_split(split_path);
    std::vector<sp::Partition> parts;
    for (const auto& p : partitions) parts.push_back(sp::parse_partition(p, "--partition"));
    corpus = sp::filter_users(corpus, [&](const sp::UserRecord& u) {
      auto it = split.by_user.find(u.user_id);
      if (it == split.by_user.end()) return false;
      for (auto p : parts)
        if (it->second == p) return true;
      return false;
    });
  }

  // predictions inherit the model's experiment hash so evaluate can match them
  sp::JsonlWriter out(out_path);
  out.write(sp::json{{"_meta", meta_for(cmd, file.config_hash)}});
  std::size_t n = 0;
  if (file.level == "post") {
    auto docs = sp::analyze_posts(corpus.posts, file.features, jobs);
    auto bags = sp::doc_bags(docs, file.features, jobs);
    auto x = sp::vectorize_all(bags, file.model.space, jobs);
    std::vector<sp::Prediction> preds(x.size());
    sp::parallel_for(x.size(), jobs,
                     [&](std::size_t i) { preds[i] = sp::predict(file.model, x[i]); });
    for (std::size_t i = 0; i < preds.size(); ++i) {
      out.write(sp::json{{"post_id", corpus.posts[i].post_id},
                         {"user_id", corpus.posts[i].user_id},
                         {"predicted_label", preds[i].label},
                         {"scores", preds[i].scores}});
      ++n;
    }
  } else {
    auto docs = sp::merge_user_documents(corpus, file.features, jobs);
    sp::FeatureExtractor extractor(file.features.extractor_config());
    for (const auto& d : docs) {
      sp::FeatureBag bag =
          sp::doc_bag(d.doc, extractor, file.features.span_post_boundaries);
      sp::Prediction p = sp::predict(file.model, sp::vectorize(bag, file.model.space));
      out.write(sp::json{{"user_id", d.user_id},
                         {"predicted_label", p.label},
                         {"scores", p.scores},
                         {"post_count", d.post_count}});
      ++n;
    }
  }
  log_line("predict", sp::concat("level=", file.level, " predictions=", n,
                                 " out=", out_path));
  return 0;
}

int cmd_aggregate(CLI::App* cmd, const std::string& post_model_path,
                  const std::string& corpus_path, const std::string& split_path,
                  const ModelFlags& ensemble_flags, const std::string& profile_features,
                  bool no_retrain, unsigned jobs, const std::string& out_path) {
  sp::ModelFile file = sp::load_model_file(post_model_path);
  if (file.level != "post")
    throw sp::UsageError("aggregate needs a post-level model (--level post)");
  sp::Corpus corpus = sp::load_corpus(corpus_path, file.task);
  sp::SplitAssignment split = sp::load_split(split_path);
  sp::ModelSpec ensemble_spec = ensemble_flags.build();
  sp::ProfileFeatures mode = sp::parse_profile_features(profile_features);

  std::set<std::string> class_set(file.model.classes.begin(), file.model.classes.end());
  for (const auto& u : corpus.users)
    if (auto l = u.label(file.task)) class_set.insert(*l);
  std::vector<std::string> classes(class_set.begin(), class_set.end());

  auto labeled = sp::filter_users(corpus, [&](const sp::UserRecord& u) {
    return u.label(file.task).has_value() && split.by_user.count(u.user_id) > 0;
  });

  // post predictions on the aggregation partition feed the ensemble
  auto agg = corpus_partition(labeled, split, {sp::Partition::Aggregation});
  if (agg.posts.empty()) throw sp::DataError("aggregation partition is empty");
  auto docs = sp::analyze_posts(agg.posts, file.features, jobs);
  auto bags = sp::doc_bags(docs, file.features, jobs);
  auto x = sp::vectorize_all(bags, file.model.space, jobs);
  std::vector<sp::Prediction> preds(x.size());
  sp::parallel_for(x.size(), jobs,
                   [&](std::size_t i) { preds[i] = sp::predict(file.model, x[i]); });
  std::vector<std::string> post_users;
  for (const auto& p : agg.posts) post_users.push_back(p.user_id);
  auto profiles = sp::build_profiles(preds, post_users, file.model.classes, classes);
  std::vector<std::string> profile_labels;
  for (const auto& prof : profiles)
    profile_labels.push_back(*agg.find_user(prof.user_id)->label(file.task));

  std::vector<std::string> warnings;
  sp::TrainedModel ensemble = sp::train_ensemble(profiles, profile_labels, classes,
                                                 ensemble_spec, mode, &warnings);
  for (const auto& w : warnings) log_line("aggregate", "warning=\"" + w + "\"");

  sp::PipelineModel pipeline;
  pipeline.mode = sp::PipelineMode::MessageBased;
  pipeline.task = file.task;
  pipeline.features = file.features;
  pipeline.profile_features = mode;
  pipeline.classes = classes;
  pipeline.ensemble = std::move(ensemble);
  // the pipeline continues the post model's experiment chain
  pipeline.config_hash = file.config_hash;
  pipeline.config_text = file.config_text + "\n" + canonical_config(cmd);

  if (no_retrain) {
    pipeline.model = std::move(file.model);
  } else {
    auto trainagg =
        corpus_partition(labeled, split, {sp::Partition::Train, sp::Partition::Aggregation});
    auto docs2 = sp::analyze_posts(trainagg.posts, file.features, jobs);
    auto bags2 = sp::doc_bags(docs2, file.features, jobs);
    std::vector<std::string> labels2;
    for (const auto& p : trainagg.posts)
      labels2.push_back(*trainagg.find_user(p.user_id)->label(file.task));
    sp::FeatureSpace space2 = sp::space_from_config(bags2, file.features, labels2, classes);
    pipeline.model = sp::train(file.model.spec, sp::vectorize_all(bags2, space2, jobs),
                               labels2, space2);
  }

  sp::save_pipeline_file(out_path, pipeline);
  log_line("aggregate", sp::concat("profiles=", profiles.size(), " retrain=",
                                   no_retrain ? "no" : "yes", " out=", out_path));
  return 0;
}

int cmd_evaluate(CLI::App* cmd, const std::string& preds_path,
                 const std::string& pipeline_path, const std::string& corpus_path,
                 const std::string& split_path, const std::vector<std::string>& partitions,
                 const std::string& task_str, const std::string& age_map,
                 std::uint32_t cv_folds, std::uint64_t cv_seed, const FeatureFlags& ff,
                 const ModelFlags& mf, bool force, unsigned jobs,
                 const std::string& out_json, const std::string& out_csv) {
  // artifacts being compared must come from one configuration
  std::set<std::string> hashes;
  for (const auto& p : {preds_path, pipeline_path}) {
    if (p.empty()) continue;
    std::string h = read_artifact_hash(p);
    if (!h.empty()) hashes.insert(h);
  }
  if (hashes.size() > 1 && !force)
    throw sp::DataError(
        "artifacts come from different config hashes; pass --force to compare anyway");

  sp::LabelMap label_map;
  const sp::LabelMap* map_ptr = nullptr;
  if (age_map == "default") {
    label_map = sp::default_age_bracket_map();
    map_ptr = &label_map;
  } else if (!age_map.empty()) {
    sp::for_each_jsonl(age_map, [&](std::size_t, const sp::json& rec) {
      for (auto it = rec.begin(); it != rec.end(); ++it)
        label_map[it.key()] = it.value().get<std::string>();
    });
    map_ptr = &label_map;
  }

  sp::MetricsReport report;
  std::string what;
  if (!preds_path.empty()) {
    // prediction file against corpus labels
    sp::Task task = sp::parse_task(task_str);
    sp::Corpus corpus = sp::load_corpus(corpus_path, task, map_ptr);
    std::vector<std::string> y_true, y_pred;
    sp::for_each_jsonl(preds_path, [&](std::size_t, const sp::json& rec) {
      if (rec.contains("_meta")) return;
      const sp::UserRecord* u = corpus.find_user(rec.at("user_id").get<std::string>());
      if (!u) return;
      auto label = u->label(task);
      if (!label) return;
      y_true.push_back(*label);
      y_pred.push_back(rec.at("predicted_label").get<std::string>());
    });
    if (y_true.empty()) throw sp::DataError("no labeled predictions to evaluate");
    report = sp::compute_metrics(y_true, y_pred);
    report.baseline_micro_f = sp::expected_stratified_micro_f(y_true);
    what = "preds";
  } else if (!pipeline_path.empty()) {
    sp::PipelineModel pipeline = sp::load_pipeline_file(pipeline_path);
    sp::Corpus corpus = sp::load_corpus(corpus_path, pipeline.task, map_ptr);
    if (!split_path.empty()) {
      sp::SplitAssignment split = sp::load_split(split_path);
      std::vector<sp::Partition> parts;
      for (const auto& p : partitions)
        parts.push_back(sp::parse_partition(p, "--partition"));
      corpus = sp::filter_users(corpus, [&](const sp::UserRecord& u) {
        auto it = split.by_user.find(u.user_id);
        if (it == split.by_user.end()) return false;
        for (auto p : parts)
          if (it->second == p) return true;
        return false;
      });
    }
    report = sp::cross_domain_evaluate(pipeline, corpus, jobs);
    what = "pipeline";
  } else if (cv_folds > 0) {
    sp::Task task = sp::parse_task(task_str);
    sp::FeatureConfig cfg = ff.build();
    sp::ModelSpec spec = mf.build();
    sp::Corpus corpus = sp::load_corpus(corpus_path, task, map_ptr);
    if (!split_path.empty()) {
      sp::SplitAssignment split = sp::load_split(split_path);
      std::vector<sp::Partition> parts;
      for (const auto& p : partitions)
        parts.push_back(sp::parse_partition(p, "--partition"));
      corpus = sp::filter_users(corpus, [&](const sp::UserRecord& u) {
        auto it = split.by_user.find(u.user_id);
        if (it == split.by_user.end()) return false;
        for (auto pt : parts)
          if (it->second == pt) return true;
        return false;
      });
    }
    corpus = sp::filter_users(corpus, [&](const sp::UserRecord& u) {
      return u.label(task).has_value();
    });
    auto docs = sp::analyze_posts(corpus.posts, cfg, jobs);
    std::vector<std::string> labels, users;
    for (const auto& p : corpus.posts) {
      labels.push_back(*corpus.find_user(p.user_id)->label(task));
      users.push_back(p.user_id);
    }
    sp::CvResult cv = sp::cross_validate(docs, labels, users, cv_folds, cv_seed, spec,
                                         cfg, jobs);
    for (const auto& w : cv.warnings) log_line("evaluate", "warning=\"" + w + "\"");
    sp::json j{{"_meta", meta_for(cmd)},
               {"folds", sp::json::array()},
               {"mean_accuracy", cv.mean_accuracy},
               {"mean_micro_f", cv.mean_micro_f},
               {"mean_weighted_f", cv.mean_weighted_f},
               {"evaluated_folds", cv.evaluated_folds}};
    std::string csv = "fold,class,precision,recall,f1,support,accuracy,micro_f,weighted_f\n";
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
      j["folds"].push_back(sp::report_to_json(cv.folds[f]));
      std::string block = sp::report_to_csv(cv.folds[f], sp::concat("fold", f));
      csv += block.substr(block.find('\n') + 1);  // drop repeated header
    }
    if (!out_json.empty()) write_text(out_json, j.dump(2) + "\n");
    if (!out_csv.empty()) write_text(out_csv, csv);
    std::cout << "cv mean_accuracy=" << cv.mean_accuracy
              << " mean_micro_f=" << cv.mean_micro_f
              << " mean_weighted_f=" << cv.mean_weighted_f
              << " folds=" << cv.evaluated_folds << "\n";
    return 0;
  } else {
    throw sp::UsageError("evaluate needs --preds, --pipeline, or --cv");
  }

  sp::json j = sp::report_to_json(report);
  j["_meta"] = meta_for(cmd);
  if (!out_json.empty()) write_text(out_json, j.dump(2) + "\n");
  if (!out_csv.empty()) write_text(out_csv, sp::report_to_csv(report, what));
  std::cout << "accuracy=" << report.accuracy << " micro_f=" << report.micro_f
            << " weighted_f=" << report.weighted_f;
  if (report.baseline_micro_f) std::cout << " baseline_micro_f=" << *report.baseline_micro_f;
  std::cout << " n=" << report.n_instances << "\n";
  return 0;
}

int cmd_profile(CLI::App* cmd, const std::string& corpus_path,
                const std::string& age_pipeline_path,
                const std::string& gender_pipeline_path, unsigned jobs,
                const std::string& out_path, const std::string& out_json,
                const std::string& out_csv) {
  sp::Corpus corpus = sp::load_corpus(corpus_path);
  sp::PipelineModel age_pipeline = sp::load_pipeline_file(age_pipeline_path);
  sp::PipelineModel gender_pipeline = sp::load_pipeline_file(gender_pipeline_path);
  if (age_pipeline.task != sp::Task::Age)
    throw sp::UsageError("--age-pipeline does not hold an age model");
  if (gender_pipeline.task != sp::Task::Gender)
    throw sp::UsageError("--gender-pipeline does not hold a gender model");

  auto age_preds = sp::apply_pipeline(age_pipeline, corpus, jobs);
  auto gender_preds = sp::apply_pipeline(gender_pipeline, corpus, jobs);
  sp::DemographicReport report = sp::build_demographic_report(
      corpus, age_preds, gender_preds, age_pipeline.classes, gender_pipeline.classes);

  std::string text = sp::render_demographic_report(report);
  text += sp::concat("config_hash=", config_hash_of(cmd), " tool_version=",
                     sp::kToolVersion, "\n");
  if (!out_path.empty())
    write_text(out_path, text);
  else
    std::cout << text;

  if (!out_json.empty()) {
    sp::json j = sp::demographic_report_to_json(report);
    j["_meta"] = meta_for(cmd);
    write_text(out_json, j.dump(2) + "\n");
  }
  if (!out_csv.empty()) {
    std::ostringstream csv;
    csv << "forum";
    for (const auto& c : report.age_classes) csv << ',' << c;
    for (const auto& c : report.gender_classes) csv << ',' << c;
    csv << "\n";
    for (const auto& [forum, counts] : report.age_counts) {
      csv << forum;
      for (const auto& c : report.age_classes)
        csv << ',' << (counts.count(c) ? counts.at(c) : 0);
      const auto& g = report.gender_counts.at(forum);
      for (const auto& c : report.gender_classes)
        csv << ',' << (g.count(c) ? g.at(c) : 0);
      csv << "\n";
    }
    write_text(out_csv, csv.str());
  }
  log_line("profile", sp::concat("users=", report.total_users, " fora=",
                                 report.age_counts.size()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"styloprof: author profiling pipelines for forum corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sp::kToolVersion);
  // key=value config with [section] / dotted keys; explicit flags override,
  // unknown keys are errors
  app.set_config("--config", "", "configuration file (key=value, dotted sections)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  unsigned jobs = 1;
  app.add_option("--jobs", jobs, "worker count hint")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build a corpus from a snapshot archive");
  std::string archive_dir, adapter = "reference", forum, ingest_out;
  ingest->add_option("--archive", archive_dir, "snapshot archive directory")->required();
  ingest->add_option("--adapter", adapter, "forum adapter name");
  ingest->add_option("--forum", forum, "forum name (defaults to archive directory name)");
  ingest->add_option("--out", ingest_out, "output corpus JSONL")->required();

  // split
  auto* split_cmd = app.add_subcommand("split", "user-disjoint corpus split");
  std::string split_corpus, split_out;
  std::vector<double> fractions = {0.5, 0.3, 0.2};
  std::uint64_t split_seed = 0;
  std::uint32_t min_posts = 1;
  split_cmd->add_option("--corpus", split_corpus, "corpus JSONL")->required();
  split_cmd->add_option("--fractions", fractions, "post fractions per partition")
      ->delimiter(',');
  split_cmd->add_option("--seed", split_seed, "random seed");
  split_cmd->add_option("--min-posts", min_posts, "drop users with fewer posts");
  split_cmd->add_option("--out", split_out, "output split JSONL")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a post- or user-level model");
  std::string train_corpus, train_split, train_task = "age", train_level = "post",
              train_out;
  std::vector<std::string> train_partitions = {"train"};
  bool balance = false;
  FeatureFlags train_ff;
  ModelFlags train_mf;
  train_cmd->add_option("--corpus", train_corpus, "corpus JSONL")->required();
  train_cmd->add_option("--split", train_split, "split JSONL (omit to use all posts)");
  train_cmd->add_option("--partition", train_partitions, "partitions to train on")
      ->delimiter(',');
  train_cmd->add_option("--task", train_task, "age|gender");
  train_cmd->add_option("--level", train_level, "post|user");
  train_cmd->add_flag("--balance", balance, "oversample minority classes in training");
  train_ff.attach(train_cmd);
  train_mf.attach(train_cmd);
  train_cmd->add_option("--out", train_out, "output model file")->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "apply a model to a corpus");
  std::string predict_model, predict_corpus, predict_split, predict_out;
  std::vector<std::string> predict_partitions = {"test"};
  predict_cmd->add_option("--model", predict_model, "model file")->required();
  predict_cmd->add_option("--corpus", predict_corpus, "corpus JSONL")->required();
  predict_cmd->add_option("--split", predict_split, "restrict to a split partition");
  predict_cmd->add_option("--partition", predict_partitions, "partitions to predict")
      ->delimiter(',');
  predict_cmd->add_option("--out", predict_out, "output predictions JSONL")->required();

  // aggregate
  auto* agg_cmd =
      app.add_subcommand("aggregate", "train the user-level ensemble over post predictions");
  std::string agg_model, agg_corpus, agg_split, agg_profile_features = "full", agg_out;
  bool no_retrain = false;
  ModelFlags agg_mf;
  agg_mf.algo = "rf";
  agg_cmd->add_option("--post-model", agg_model, "post-level model file")->required();
  agg_cmd->add_option("--corpus", agg_corpus, "corpus JSONL")->required();
  agg_cmd->add_option("--split", agg_split, "split JSONL with an aggregation partition")
      ->required();
  agg_cmd->add_option("--profile-features", agg_profile_features, "full|labels-only");
  agg_cmd->add_flag("--no-retrain", no_retrain,
                    "skip retraining the post model on train+aggregation");
  agg_mf.attach(agg_cmd);
  agg_cmd->add_option("--out", agg_out, "output pipeline file")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "metrics for predictions or pipelines");
  std::string eval_preds, eval_pipeline, eval_corpus, eval_split, eval_task = "age",
              eval_age_map, eval_json, eval_csv;
  std::vector<std::string> eval_partitions = {"test"};
  std::uint32_t cv_folds = 0;
  std::uint64_t cv_seed = 1;
  bool force = false;
  FeatureFlags eval_ff;
  ModelFlags eval_mf;
  eval_cmd->add_option("--preds", eval_preds, "prediction JSONL to score");
  eval_cmd->add_option("--pipeline", eval_pipeline, "pipeline/model file to run and score");
  eval_cmd->add_option("--corpus", eval_corpus, "labeled corpus JSONL")->required();
  eval_cmd->add_option("--split", eval_split, "restrict to split partitions");
  eval_cmd->add_option("--partition", eval_partitions, "partitions to evaluate")
      ->delimiter(',');
  eval_cmd->add_option("--task", eval_task, "age|gender (for --preds and --cv)");
  eval_cmd->add_option("--age-map", eval_age_map,
                       "'default' or JSONL mapping for foreign age brackets");
  eval_cmd->add_option("--cv", cv_folds, "run k-fold grouped cross-validation instead");
  eval_cmd->add_option("--cv-seed", cv_seed, "fold assignment seed");
  eval_cmd->add_flag("--force", force, "compare artifacts despite config hash mismatch");
  eval_ff.attach(eval_cmd);
  eval_mf.attach(eval_cmd);
  eval_cmd->add_option("--out-json", eval_json, "write JSON report");
  eval_cmd->add_option("--out-csv", eval_csv, "write CSV report");

  // profile
  auto* profile_cmd =
      app.add_subcommand("profile", "demographic distribution report for an unlabeled corpus");
  std::string prof_corpus, prof_age, prof_gender, prof_out, prof_json, prof_csv;
  profile_cmd->add_option("--corpus", prof_corpus, "corpus JSONL")->required();
  profile_cmd->add_option("--age-pipeline", prof_age, "age pipeline/model file")->required();
  profile_cmd->add_option("--gender-pipeline", prof_gender, "gender pipeline/model file")
      ->required();
  profile_cmd->add_option("--out", prof_out, "write the aligned-text report here");
  profile_cmd->add_option("--out-json", prof_json, "write JSON report");
  profile_cmd->add_option("--out-csv", prof_csv, "write CSV report");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(ingest))
      return cmd_ingest(ingest, archive_dir, adapter, forum, ingest_out);
    if (app.got_subcommand(split_cmd))
      return cmd_split(split_cmd, split_corpus, fractions, split_seed, min_posts, split_out);
    if (app.got_subcommand(train_cmd))
      return cmd_train(train_cmd, train_corpus, train_split, train_partitions, train_task,
                       train_level, train_ff, train_mf, balance, jobs, train_out);
    if (app.got_subcommand(predict_cmd))
      return cmd_predict(predict_cmd, predict_model, predict_corpus, predict_split,
                         predict_partitions, jobs, predict_out);
    if (app.got_subcommand(agg_cmd))
      return cmd_aggregate(agg_cmd, agg_model, agg_corpus, agg_split, agg_mf,
                           agg_profile_features, no_retrain, jobs, agg_out);
    if (app.got_subcommand(eval_cmd))
      return cmd_evaluate(eval_cmd, eval_preds, eval_pipeline, eval_corpus, eval_split,
                          eval_partitions, eval_task, eval_age_map, cv_folds, cv_seed,
                          eval_ff, eval_mf, force, jobs, eval_json, eval_csv);
    if (app.got_subcommand(profile_cmd))
      return cmd_profile(profile_cmd, prof_corpus, prof_age, prof_gender, jobs, prof_out,
                         prof_json, prof_csv);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const sp::UsageError& e) {
    std::cerr << "[styloprof] error=usage msg=\"" << e.what() << "\"\n";
    return 1;
  } catch (const sp::DataError& e) {
    std::cerr << "[styloprof] error=data msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "[styloprof] error=internal msg=\"" << e.what() << "\"\n";
    return 3;
  }
}
