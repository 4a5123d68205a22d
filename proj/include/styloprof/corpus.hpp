#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "styloprof/jsonl.hpp"
#include "styloprof/rng.hpp"
#include "styloprof/util.hpp"

namespace styloprof {

enum class AgeGroup { A18_24, A25_34, A35_49, A50Plus };
enum class Gender { Female, Male };
enum class Task { Age, Gender };

inline const char* to_string(AgeGroup g) {
  switch (g) {
    case AgeGroup::A18_24: return "18-24";
    case AgeGroup::A25_34: return "25-34";
    case AgeGroup::A35_49: return "35-49";
    case AgeGroup::A50Plus: return "50-XX";
  }
  return "?";
}

inline const char* to_string(Gender g) {
  return g == Gender::Female ? "female" : "male";
}

inline const char* to_string(Task t) { return t == Task::Age ? "age" : "gender"; }

inline AgeGroup parse_age_group(const std::string& s, const std::string& where) {
  if (s == "18-24") return AgeGroup::A18_24;
  if (s == "25-34") return AgeGroup::A25_34;
  if (s == "35-49") return AgeGroup::A35_49;
  if (s == "50-XX") return AgeGroup::A50Plus;
  throw DataError(concat(where, ": unknown label '", s, "' for age_group"));
}

inline Gender parse_gender(const std::string& s, const std::string& where) {
  if (s == "female") return Gender::Female;
  if (s == "male") return Gender::Male;
  throw DataError(concat(where, ": unknown label '", s, "' for gender"));
}

inline Task parse_task(const std::string& s) {
  if (s == "age") return Task::Age;
  if (s == "gender") return Task::Gender;
  throw UsageError(concat("unknown task '", s, "' (expected age|gender)"));
}

inline const std::vector<std::string>& age_labels() {
  static const std::vector<std::string> v = {"18-24", "25-34", "35-49", "50-XX"};
  return v;
}

inline const std::vector<std::string>& gender_labels() {
  static const std::vector<std::string> v = {"female", "male"};
  return v;
}

struct Post {
  std::string post_id;
  std::string user_id;
  std::string text;       // authored portion only, quotes already removed
  std::string forum;      // optional
  std::string timestamp;  // optional, ISO-8601
};

struct UserRecord {
  std::string user_id;
  std::optional<AgeGroup> age_group;
  std::optional<Gender> gender;
  std::uint32_t post_count = 0;
  bool synthetic = false;  // created on the fly during ingest (no profile page)

  std::optional<std::string> label(Task task) const {
    if (task == Task::Age) {
      if (age_group) return std::string(to_string(*age_group));
    } else {
      if (gender) return std::string(to_string(*gender));
    }
    return std::nullopt;
  }
};

class Corpus {
 public:
  std::vector<Post> posts;
  std::vector<UserRecord> users;  // sorted by user_id
  std::optional<Task> label_task;

  const UserRecord* find_user(const std::string& user_id) const {
    auto it = index_.find(user_id);
    return it == index_.end() ? nullptr : &users[it->second];
  }

  UserRecord* find_user(const std::string& user_id) {
    auto it = index_.find(user_id);
    return it == index_.end() ? nullptr : &users[it->second];
  }

  // Rebuilds user records from posts, preserving labels/flags of known users.
  void reindex() {
    std::sort(users.begin(), users.end(),
              [](const UserRecord& a, const UserRecord& b) { return a.user_id < b.user_id; });
    index_.clear();
    for (std::size_t i = 0; i < users.size(); ++i) {
      users[i].post_count = 0;
      index_[users[i].user_id] = i;
    }
    for (const Post& p : posts) {
      auto it = index_.find(p.user_id);
      if (it == index_.end())
        throw DataError(concat("post ", p.post_id, ": user_id '", p.user_id,
                               "' has no user record"));
      ++users[it->second].post_count;
    }
  }

  std::vector<std::string> labeled_user_ids(Task task) const {
    std::vector<std::string> out;
    for (const auto& u : users)
      if (u.label(task)) out.push_back(u.user_id);
    return out;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// JSONL corpus file: one record per post, labels carried on the post records.

// Maps foreign label vocabularies (e.g. "[20,30)" age brackets) onto the
// canonical ones at load time; an empty target drops the label, leaving the
// user unlabeled.
using LabelMap = std::map<std::string, std::string>;

// Default bracket mapping for foreign age vocabularies. Users at or under 19
// are dropped rather than guessed into 18-24.
inline LabelMap default_age_bracket_map() {
  return {{"<=19", ""},          {"<= 20", ""},        {"[20,25)", "18-24"},
          {"[20,30)", "18-24"},  {"[25,35)", "25-34"}, {"[30,40)", "25-34"},
          {"[35,50)", "35-49"},  {"[40,50)", "35-49"}, {"[50,60)", "50-XX"},
          {"[60,70)", "50-XX"},  {"50+", "50-XX"}};
}

inline Corpus load_corpus(const std::string& path, std::optional<Task> task = std::nullopt,
                          const LabelMap* label_map = nullptr) {
  Corpus corpus;
  corpus.label_task = task;
  std::unordered_set<std::string> seen_post_ids;
  std::map<std::string, UserRecord> users;
  auto remap = [&](std::string s) {
    if (label_map) {
      auto it = label_map->find(s);
      if (it != label_map->end()) return it->second;
    }
    return s;
  };

  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    if (rec.contains("_meta")) return;  // provenance header written by the CLI
    std::string where = concat(path, ":", line_no);
    Post p;
    p.post_id = require_string(rec, "post_id", where);
    p.user_id = require_string(rec, "user_id", where);
    p.text = require_string(rec, "text", where);
    p.forum = optional_string(rec, "forum");
    p.timestamp = optional_string(rec, "timestamp");
    if (p.user_id.empty()) throw DataError(concat(where, ": empty user_id"));
    if (!seen_post_ids.insert(p.post_id).second)
      throw DataError(concat(where, ": duplicate post_id '", p.post_id, "'"));

    UserRecord& u = users[p.user_id];
    u.user_id = p.user_id;
    std::string age = remap(optional_string(rec, "age_group"));
    if (!age.empty()) {
      AgeGroup g = parse_age_group(age, where);
      if (u.age_group && *u.age_group != g)
        throw DataError(concat(where, ": conflicting age_group for user ", p.user_id));
      u.age_group = g;
    }
    std::string gender = remap(optional_string(rec, "gender"));
    if (!gender.empty()) {
      Gender g = parse_gender(gender, where);
      if (u.gender && *u.gender != g)
        throw DataError(concat(where, ": conflicting gender for user ", p.user_id));
      u.gender = g;
    }
    corpus.posts.push_back(std::move(p));
  });

  corpus.users.reserve(users.size());
  for (auto& [id, u] : users) corpus.users.push_back(std::move(u));
  corpus.reindex();
  return corpus;
}

inline void save_corpus(const std::string& path, const Corpus& corpus,
                        const json* meta = nullptr) {
  JsonlWriter out(path);
  if (meta) out.write(json{{"_meta", *meta}});
  for (const Post& p : corpus.posts) {
    json rec{{"post_id", p.post_id}, {"user_id", p.user_id}, {"text", p.text}};
    if (!p.forum.empty()) rec["forum"] = p.forum;
    if (!p.timestamp.empty()) rec["timestamp"] = p.timestamp;
    const UserRecord* u = corpus.find_user(p.user_id);
    if (u) {
      if (u->age_group) rec["age_group"] = to_string(*u->age_group);
      if (u->gender) rec["gender"] = to_string(*u->gender);
    }
    out.write(rec);
  }
}

// ---------------------------------------------------------------------------
// Filtering and splitting

inline Corpus filter_min_posts(const Corpus& corpus, std::uint32_t min_posts) {
  if (min_posts < 1) throw UsageError("min_posts must be >= 1");
  Corpus out;
  out.label_task = corpus.label_task;
  for (const UserRecord& u : corpus.users)
    if (u.post_count >= min_posts) out.users.push_back(u);
  std::unordered_set<std::string> keep;
  for (const UserRecord& u : out.users) keep.insert(u.user_id);
  for (const Post& p : corpus.posts)
    if (keep.count(p.user_id)) out.posts.push_back(p);
  out.reindex();
  return out;
}

template <typename Pred>
Corpus filter_users(const Corpus& corpus, Pred keep) {
  Corpus out;
  out.label_task = corpus.label_task;
  for (const UserRecord& u : corpus.users)
    if (keep(u)) out.users.push_back(u);
  std::unordered_set<std::string> ids;
  for (const UserRecord& u : out.users) ids.insert(u.user_id);
  for (const Post& p : corpus.posts)
    if (ids.count(p.user_id)) out.posts.push_back(p);
  out.reindex();
  return out;
}

enum class Partition { Train, Aggregation, Test };

inline const char* to_string(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Aggregation: return "aggregation";
    case Partition::Test: return "test";
  }
  return "?";
}

inline Partition parse_partition(const std::string& s, const std::string& where) {
  if (s == "train") return Partition::Train;
  if (s == "aggregation") return Partition::Aggregation;
  if (s == "test") return Partition::Test;
  throw DataError(concat(where, ": unknown partition '", s, "'"));
}

struct SplitAssignment {
  std::unordered_map<std::string, Partition> by_user;
  std::uint64_t seed = 0;
  std::vector<Partition> partitions;              // declared order
  std::vector<double> target_fractions;           // of posts
  std::vector<double> achieved_fractions;         // of posts
  std::vector<std::string> warnings;

  Partition partition_of(const std::string& user_id) const {
    auto it = by_user.find(user_id);
    if (it == by_user.end())
      throw DataError(concat("user '", user_id, "' missing from split"));
    return it->second;
  }

  std::vector<std::string> users_in(Partition p) const {
    std::vector<std::string> out;
    for (const auto& [id, part] : by_user)
      if (part == p) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Whole users are assigned to partitions: shuffle users by seed, then give
// each user to the partition with the largest remaining post deficit.
inline SplitAssignment split_user_disjoint(
    const Corpus& corpus, const std::vector<std::pair<Partition, double>>& fractions,
    std::uint64_t seed) {
  if (corpus.users.empty()) throw DataError("cannot split an empty corpus");
  double total_frac = 0;
  for (auto& [p, f] : fractions) total_frac += f;
  if (std::abs(total_frac - 1.0) > 1e-9)
    throw UsageError(concat("split fractions sum to ", total_frac, ", expected 1.0"));

  SplitAssignment split;
  split.seed = seed;
  for (auto& [p, f] : fractions) {
    split.partitions.push_back(p);
    split.target_fractions.push_back(f);
  }

  double total_posts = 0;
  for (const UserRecord& u : corpus.users) total_posts += u.post_count;

  std::vector<std::size_t> order(corpus.users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<double> assigned(fractions.size(), 0.0);
  double max_user_share = 0;
  std::string max_user_id;
  for (std::size_t ui : order) {
    const UserRecord& u = corpus.users[ui];
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t j = 0; j < fractions.size(); ++j) {
      double deficit = fractions[j].second * total_posts - assigned[j];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = j;
      }
    }
    split.by_user[u.user_id] = fractions[best].first;
    assigned[best] += u.post_count;
    double share = total_posts > 0 ? u.post_count / total_posts : 0;
    if (share > max_user_share) {
      max_user_share = share;
      max_user_id = u.user_id;
    }
  }

  for (std::size_t j = 0; j < fractions.size(); ++j)
    split.achieved_fractions.push_back(total_posts > 0 ? assigned[j] / total_posts : 0);

  if (corpus.users.size() == 1)
    split.warnings.push_back(concat("single user '", corpus.users[0].user_id,
                                    "' assigned to ", to_string(fractions[0].first)));

  constexpr double kTolerance = 0.03;
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    double err = std::abs(split.achieved_fractions[j] - split.target_fractions[j]);
    if (err > kTolerance) {
      split.warnings.push_back(concat(
          "partition ", to_string(fractions[j].first), " off target by ",
          err * 100, " points (largest user '", max_user_id, "' holds ",
          max_user_share * 100, "% of posts); best-achievable assignment kept"));
    }
  }
  return split;
}

inline void save_split(const std::string& path, const SplitAssignment& split,
                       const json* meta = nullptr) {
  JsonlWriter out(path);
  if (meta) out.write(json{{"_meta", *meta}});
  std::vector<std::string> ids;
  ids.reserve(split.by_user.size());
  for (const auto& [id, p] : split.by_user) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids)
    out.write(json{{"user_id", id},
                   {"partition", to_string(split.by_user.at(id))},
                   {"seed", split.seed}});
}

inline SplitAssignment load_split(const std::string& path) {
  SplitAssignment split;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    if (rec.contains("_meta")) return;
    std::string where = concat(path, ":", line_no);
    std::string id = require_string(rec, "user_id", where);
    Partition p = parse_partition(require_string(rec, "partition", where), where);
    if (rec.contains("seed")) split.seed = rec["seed"].get<std::uint64_t>();
    if (!split.by_user.emplace(id, p).second)
      throw DataError(concat(where, ": user '", id, "' assigned twice"));
  });
  return split;
}

// k folds over users; every user lands in exactly one validation fold and
// fold sizes differ by at most one user.
inline std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>
kfold_user_groups(std::vector<std::string> ids, std::uint32_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("k must be >= 2");
  if (ids.size() < k)
    throw DataError(concat("need at least ", k, " users for ", k, "-fold CV, have ",
                           ids.size()));
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);

  std::vector<std::vector<std::string>> folds(k);
  for (std::size_t i = 0; i < ids.size(); ++i) folds[i % k].push_back(ids[i]);

  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> out;
  for (std::uint32_t f = 0; f < k; ++f) {
    std::vector<std::string> train;
    for (std::uint32_t g = 0; g < k; ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    out.emplace_back(std::move(train), folds[f]);
  }
  return out;
}

inline std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>
kfold_user_groups(const Corpus& corpus, std::uint32_t k, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const UserRecord& u : corpus.users) ids.push_back(u.user_id);
  return kfold_user_groups(std::move(ids), k, seed);
}

// Random oversampling with replacement: every class is brought up to the
// majority count; original items are all retained. Returns indices into the
// input (originals first, in input order).
inline std::vector<std::size_t> balance_training(const std::vector<std::string>& labels,
                                                 std::uint64_t seed) {
  if (labels.empty()) throw DataError("balance_training: empty input");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::size_t majority = 0;
  for (const auto& [c, idx] : by_class) majority = std::max(majority, idx.size());

  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = i;
  Rng rng(seed);
  for (const auto& [c, idx] : by_class) {
    for (std::size_t n = idx.size(); n < majority; ++n)
      out.push_back(idx[rng.index(idx.size())]);
  }
  return out;
}

}  // namespace styloprof
