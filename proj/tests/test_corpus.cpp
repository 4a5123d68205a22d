#include <doctest.h>

#include <map>
#include <set>

#include "styloprof/corpus.hpp"
#include "helpers.hpp"

using namespace styloprof;
using testutil::TempDir;
using testutil::make_corpus;
using testutil::write_file;

TEST_CASE("load_corpus reads posts and derives user records") {
  TempDir tmp;
  std::string path = tmp.file("corpus.jsonl");
  write_file(path,
             R"({"post_id":"p1","user_id":"u1","text":"hello","gender":"female"})"
             "\n"
             R"({"post_id":"p2","user_id":"u1","text":"again","gender":"female"})"
             "\n"
             R"({"post_id":"p3","user_id":"u2","text":"hi","gender":"male"})"
             "\n");
  Corpus c = load_corpus(path, Task::Gender);
  CHECK(c.posts.size() == 3);
  CHECK(c.users.size() == 2);
  CHECK(c.find_user("u1")->post_count == 2);
  CHECK(c.find_user("u2")->post_count == 1);
  CHECK(*c.find_user("u1")->label(Task::Gender) == "female");
}

TEST_CASE("load_corpus rejects unknown labels with the line number") {
  TempDir tmp;
  std::string path = tmp.file("bad.jsonl");
  write_file(path,
             R"({"post_id":"p1","user_id":"u1","text":"x","age_group":"18-24"})"
             "\n"
             R"({"post_id":"p2","user_id":"u2","text":"y","age_group":"17-20"})"
             "\n");
  CHECK_THROWS_WITH_AS(load_corpus(path, Task::Age),
                       doctest::Contains(":2: unknown label"), DataError);
}

TEST_CASE("load_corpus rejects duplicate post ids and malformed lines") {
  TempDir tmp;
  std::string dup = tmp.file("dup.jsonl");
  write_file(dup,
             R"({"post_id":"p1","user_id":"u1","text":"x"})"
             "\n"
             R"({"post_id":"p1","user_id":"u2","text":"y"})"
             "\n");
  CHECK_THROWS_AS(load_corpus(dup), DataError);

  std::string bad = tmp.file("malformed.jsonl");
  write_file(bad, "{\"post_id\": \n");
  CHECK_THROWS_WITH_AS(load_corpus(bad), doctest::Contains(":1: malformed record"),
                       DataError);
}

TEST_CASE("unlabeled users are retained but flagged unlabeled") {
  TempDir tmp;
  std::string path = tmp.file("c.jsonl");
  write_file(path,
             R"({"post_id":"p1","user_id":"u1","text":"x","age_group":"25-34"})"
             "\n"
             R"({"post_id":"p2","user_id":"u2","text":"y"})"
             "\n");
  Corpus c = load_corpus(path, Task::Age);
  CHECK(c.users.size() == 2);
  CHECK(c.find_user("u2") != nullptr);
  CHECK(!c.find_user("u2")->label(Task::Age).has_value());
  CHECK(c.labeled_user_ids(Task::Age) == std::vector<std::string>{"u1"});
}

TEST_CASE("save then load is the identity on canonical fields") {
  TempDir tmp;
  Corpus c = make_corpus({{"p1", "u1", "some text"}, {"p2", "u2", "more text"}},
                         {{"u1", "18-24", "female"}, {"u2", "35-49", "male"}});
  c.posts[0].forum = "alpha";
  c.posts[0].timestamp = "2014-01-02T03:04:05Z";
  std::string path = tmp.file("round.jsonl");
  save_corpus(path, c);
  Corpus c2 = load_corpus(path, Task::Age);

  REQUIRE(c2.posts.size() == c.posts.size());
  for (std::size_t i = 0; i < c.posts.size(); ++i) {
    CHECK(c2.posts[i].post_id == c.posts[i].post_id);
    CHECK(c2.posts[i].user_id == c.posts[i].user_id);
    CHECK(c2.posts[i].text == c.posts[i].text);
    CHECK(c2.posts[i].forum == c.posts[i].forum);
    CHECK(c2.posts[i].timestamp == c.posts[i].timestamp);
  }
  REQUIRE(c2.users.size() == c.users.size());
  for (std::size_t i = 0; i < c.users.size(); ++i) {
    CHECK(c2.users[i].user_id == c.users[i].user_id);
    CHECK(c2.users[i].age_group == c.users[i].age_group);
    CHECK(c2.users[i].gender == c.users[i].gender);
    CHECK(c2.users[i].post_count == c.users[i].post_count);
  }
}

TEST_CASE("per-cell counts of a full-scale benchmark-shaped corpus") {
  std::map<std::pair<std::string, std::string>, int> cells = {
      {{"18-24", "female"}, 5572}, {{"18-24", "male"}, 5856},
      {{"25-34", "female"}, 6243}, {{"25-34", "male"}, 5749},
      {{"35-49", "female"}, 2005}, {{"35-49", "male"}, 1797},
      {{"50-XX", "female"}, 1013}, {{"50-XX", "male"}, 917}};
  TempDir tmp;
  std::string path = tmp.file("cells.jsonl");
  std::string data;
  int uid = 0;
  for (auto& [cell, n] : cells)
    for (int i = 0; i < n; ++i) {
      data += concat(R"({"post_id":"p)", uid, R"(","user_id":"u)", uid,
                     R"(","text":"t","age_group":")", cell.first, R"(","gender":")",
                     cell.second, "\"}\n");
      ++uid;
    }
  write_file(path, data);
  Corpus c = load_corpus(path, Task::Age);
  std::map<std::pair<std::string, std::string>, int> got;
  for (const auto& u : c.users)
    ++got[{*u.label(Task::Age), *u.label(Task::Gender)}];
  CHECK(got == cells);
  CHECK(c.posts.size() == 29152);
}

TEST_CASE("foreign age brackets map onto canonical labels, or error without a map") {
  TempDir tmp;
  std::string path = tmp.file("foreign.jsonl");
  write_file(path,
             R"x({"post_id":"p1","user_id":"u1","text":"x","age_group":"[20,30)"})x"
             "\n"
             R"x({"post_id":"p2","user_id":"u2","text":"y","age_group":"<=19"})x"
             "\n"
             R"x({"post_id":"p3","user_id":"u3","text":"z","age_group":"[50,60)"})x"
             "\n");
  CHECK_THROWS_AS(load_corpus(path, Task::Age), DataError);

  LabelMap map = default_age_bracket_map();
  Corpus c = load_corpus(path, Task::Age, &map);
  CHECK(*c.find_user("u1")->label(Task::Age) == "18-24");
  CHECK(!c.find_user("u2")->label(Task::Age).has_value());  // underage bracket dropped
  CHECK(*c.find_user("u3")->label(Task::Age) == "50-XX");
}

TEST_CASE("filter_min_posts keeps users at or above the threshold") {
  std::vector<std::tuple<std::string, std::string, std::string>> posts;
  auto add_n = [&](const std::string& user, int n) {
    for (int i = 0; i < n; ++i)
      posts.emplace_back(concat(user, "_p", i), user, "text");
  };
  add_n("u20", 20);
  add_n("u14", 14);
  add_n("u15", 15);
  Corpus c = make_corpus(posts);

  Corpus f = filter_min_posts(c, 15);
  CHECK(f.users.size() == 2);
  CHECK(f.find_user("u20") != nullptr);
  CHECK(f.find_user("u15") != nullptr);
  CHECK(f.find_user("u14") == nullptr);
  CHECK(f.posts.size() == 35);

  Corpus identity = filter_min_posts(c, 1);
  CHECK(identity.users.size() == c.users.size());
  CHECK(identity.posts.size() == c.posts.size());
}

TEST_CASE("filter_min_posts matches an independent scan on random counts") {
  Rng rng(41);
  std::vector<std::tuple<std::string, std::string, std::string>> posts;
  std::map<std::string, int> expected_counts;
  for (int u = 0; u < 100; ++u) {
    int n = 1 + static_cast<int>(rng.index(24));
    std::string user = concat("user", u);
    expected_counts[user] = n;
    for (int i = 0; i < n; ++i) posts.emplace_back(concat(user, "_", i), user, "t");
  }
  Corpus c = make_corpus(posts);
  Corpus f = filter_min_posts(c, 15);

  std::set<std::string> expected;
  for (auto& [user, n] : expected_counts)
    if (n >= 15) expected.insert(user);
  std::set<std::string> got;
  for (const auto& u : f.users) got.insert(u.user_id);
  CHECK(got == expected);
}

static std::vector<std::pair<Partition, double>> fractions_502030() {
  return {{Partition::Train, 0.5}, {Partition::Aggregation, 0.3}, {Partition::Test, 0.2}};
}

TEST_CASE("uniform post counts force an exact user split") {
  std::vector<std::tuple<std::string, std::string, std::string>> posts;
  for (int u = 0; u < 10; ++u)
    for (int i = 0; i < 10; ++i)
      posts.emplace_back(concat("u", u, "_p", i), concat("u", u), "t");
  Corpus c = make_corpus(posts);
  SplitAssignment split = split_user_disjoint(c, fractions_502030(), 3);
  CHECK(split.users_in(Partition::Train).size() == 5);
  CHECK(split.users_in(Partition::Aggregation).size() == 3);
  CHECK(split.users_in(Partition::Test).size() == 2);
}

TEST_CASE("single user lands in train with a warning") {
  Corpus c = make_corpus({{"p1", "only", "t"}, {"p2", "only", "t"}});
  SplitAssignment split = split_user_disjoint(c, fractions_502030(), 1);
  CHECK(split.by_user.at("only") == Partition::Train);
  CHECK(!split.warnings.empty());
}

TEST_CASE("skewed corpus split hits tolerance and recounts cleanly") {
  Rng rng(7);
  std::vector<std::tuple<std::string, std::string, std::string>> posts;
  std::map<std::string, int> count;
  for (int u = 0; u < 200; ++u) {
    int n = 1 + static_cast<int>(rng.index(20));  // max share stays < 3%
    std::string user = concat("u", u);
    count[user] = n;
    for (int i = 0; i < n; ++i) posts.emplace_back(concat(user, "_", i), user, "t");
  }
  Corpus c = make_corpus(posts);
  SplitAssignment split = split_user_disjoint(c, fractions_502030(), 7);

  // recount from the assignment
  std::map<Partition, double> recount;
  double total = 0;
  for (auto& [user, n] : count) {
    recount[split.by_user.at(user)] += n;
    total += n;
  }
  CHECK(std::abs(recount[Partition::Train] / total - 0.5) <= 0.03);
  CHECK(std::abs(recount[Partition::Aggregation] / total - 0.3) <= 0.03);
  CHECK(std::abs(recount[Partition::Test] / total - 0.2) <= 0.03);
  CHECK(split.achieved_fractions[0] ==
        doctest::Approx(recount[Partition::Train] / total));
}

TEST_CASE("split partitions are disjoint, exhaustive and seed-deterministic") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::tuple<std::string, std::string, std::string>> posts;
    int n_users = 2 + static_cast<int>(rng.index(40));
    for (int u = 0; u < n_users; ++u) {
      int n = 1 + static_cast<int>(rng.index(10));
      for (int i = 0; i < n; ++i)
        posts.emplace_back(concat("t", trial, "u", u, "p", i), concat("u", u), "t");
    }
    Corpus c = make_corpus(posts);
    std::uint64_t seed = rng.next();
    SplitAssignment a = split_user_disjoint(c, fractions_502030(), seed);
    SplitAssignment b = split_user_disjoint(c, fractions_502030(), seed);
    CHECK(a.by_user == b.by_user);

    std::set<std::string> seen;
    for (auto& [user, p] : a.by_user) CHECK(seen.insert(user).second);
    CHECK(seen.size() == c.users.size());
  }
}

TEST_CASE("fractions must sum to one") {
  Corpus c = make_corpus({{"p1", "u1", "t"}, {"p2", "u2", "t"}});
  CHECK_THROWS_AS(
      split_user_disjoint(c, {{Partition::Train, 0.6}, {Partition::Test, 0.5}}, 1),
      UsageError);
}

TEST_CASE("split file round trip") {
  TempDir tmp;
  Corpus c = make_corpus({{"p1", "u1", "t"}, {"p2", "u2", "t"}, {"p3", "u3", "t"}});
  SplitAssignment split =
      split_user_disjoint(c, {{Partition::Train, 0.8}, {Partition::Test, 0.2}}, 5);
  std::string path = tmp.file("split.jsonl");
  save_split(path, split);
  SplitAssignment loaded = load_split(path);
  CHECK(loaded.by_user == split.by_user);
  CHECK(loaded.seed == split.seed);
}

TEST_CASE("kfold forces singletons when k equals the user count") {
  std::vector<std::tuple<std::string, std::string, std::string>> posts;
  for (int u = 0; u < 10; ++u) posts.emplace_back(concat("p", u), concat("u", u), "t");
  Corpus c = make_corpus(posts);
  auto folds = kfold_user_groups(c, 10, 1);
  REQUIRE(folds.size() == 10);
  for (auto& [train, val] : folds) {
    CHECK(val.size() == 1);
    CHECK(train.size() == 9);
  }
}

TEST_CASE("kfold sizes follow the pigeonhole for 23 users in 5 folds") {
  std::vector<std::tuple<std::string, std::string, std::string>> posts;
  for (int u = 0; u < 23; ++u) posts.emplace_back(concat("p", u), concat("u", u), "t");
  Corpus c = make_corpus(posts);
  auto folds = kfold_user_groups(c, 5, 9);
  std::multiset<std::size_t> sizes;
  for (auto& [train, val] : folds) sizes.insert(val.size());
  CHECK(sizes == std::multiset<std::size_t>{4, 4, 5, 5, 5});
}

TEST_CASE("kfold validation folds partition the user set") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::tuple<std::string, std::string, std::string>> posts;
    int n_users = 5 + static_cast<int>(rng.index(30));
    for (int u = 0; u < n_users; ++u)
      posts.emplace_back(concat("t", trial, "p", u), concat("u", u), "t");
    Corpus c = make_corpus(posts);
    std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.index(4));
    auto folds = kfold_user_groups(c, k, rng.next());

    std::set<std::string> all;
    std::size_t total = 0;
    for (auto& [train, val] : folds) {
      for (auto& u : val) CHECK(all.insert(u).second);  // pairwise disjoint
      total += val.size();
      std::set<std::string> fold_union(train.begin(), train.end());
      fold_union.insert(val.begin(), val.end());
      CHECK(fold_union.size() == c.users.size());
    }
    CHECK(total == c.users.size());
  }
  Corpus tiny = make_corpus({{"p1", "u1", "t"}});
  CHECK_THROWS_AS(kfold_user_groups(tiny, 2, 1), DataError);
}

TEST_CASE("balance_training oversamples minorities to the majority count") {
  std::vector<std::string> labels;
  for (int i = 0; i < 100; ++i) labels.push_back("A");
  for (int i = 0; i < 40; ++i) labels.push_back("B");
  auto idx = balance_training(labels, 3);
  CHECK(idx.size() == 200);
  std::map<std::string, int> counts;
  for (auto i : idx) ++counts[labels[i]];
  CHECK(counts["A"] == 100);
  CHECK(counts["B"] == 100);
  // originals all retained, in order
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(idx[i] == i);
  // resampled entries only point at the minority class
  for (std::size_t i = labels.size(); i < idx.size(); ++i) CHECK(labels[idx[i]] == "B");
}

TEST_CASE("balance_training is the identity on balanced input") {
  std::vector<std::string> labels;
  for (int i = 0; i < 50; ++i) labels.push_back("A");
  for (int i = 0; i < 50; ++i) labels.push_back("B");
  auto idx = balance_training(labels, 9);
  CHECK(idx.size() == 100);
}

TEST_CASE("balance_training on the reference class ratios, scaled") {
  std::vector<std::string> labels;
  auto add = [&](const std::string& c, int n) {
    for (int i = 0; i < n; ++i) labels.push_back(c);
  };
  add("18-24", 1142);
  add("25-34", 1199);
  add("35-49", 380);
  add("50-XX", 193);
  auto idx = balance_training(labels, 11);
  std::map<std::string, int> counts;
  for (auto i : idx) ++counts[labels[i]];
  for (auto& [c, n] : counts) CHECK(n == 1199);
  CHECK(idx.size() == 4 * 1199);

  auto idx2 = balance_training(labels, 11);
  CHECK(idx == idx2);
}
