#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "styloprof/corpus.hpp"
#include "styloprof/jsonl.hpp"
#include "styloprof/rng.hpp"
#include "helpers.hpp"

using namespace styloprof;
using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = concat(STYLOPROF_CLI_PATH, " ", args, " 2>/dev/null");
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

// corpus with a planted per-class signal token, labels on both tasks
void write_planted_corpus(const std::string& path, int n_users, int posts_per_user) {
  Rng rng(99);
  std::string data;
  for (int u = 0; u < n_users; ++u) {
    std::string gender = u % 2 == 0 ? "male" : "female";
    std::string age = u % 4 < 2 ? "18-24" : "25-34";
    for (int p = 0; p < posts_per_user; ++p) {
      std::string text = concat("sig_", gender, " agesig_", age, " filler",
                                rng.index(20), " words to classify");
      data += json{{"post_id", concat("u", u, "p", p)},
                   {"user_id", concat("u", u)},
                   {"text", text},
                   {"forum", u % 2 ? "beta" : "alpha"},
                   {"gender", gender},
                   {"age_group", age}}
                  .dump() +
              "\n";
    }
  }
  write_file(path, data);
}

}  // namespace

TEST_CASE("split writes three partitions and reruns byte-identically") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  write_planted_corpus(corpus, 30, 6);
  std::string split1 = tmp.file("split1.jsonl");
  std::string split2 = tmp.file("split2.jsonl");

  std::string flags = concat("split --corpus ", corpus,
                             " --fractions 0.5,0.3,0.2 --seed 7 --out ");
  CHECK(run_cli(flags + split1) == 0);
  CHECK(run_cli(flags + split2) == 0);
  CHECK(read_file(split1) == read_file(split2));

  SplitAssignment split = load_split(split1);
  std::set<Partition> parts;
  for (auto& [u, p] : split.by_user) parts.insert(p);
  CHECK(parts.size() == 3);
  CHECK(split.by_user.size() == 30);
}

TEST_CASE("train, predict and evaluate round trip through artifacts") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  write_planted_corpus(corpus, 24, 6);
  std::string split = tmp.file("split.jsonl");
  REQUIRE(run_cli(concat("split --corpus ", corpus,
                         " --fractions 0.5,0.3,0.2 --seed 3 --out ", split)) == 0);

  std::string model = tmp.file("gender.model");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task gender --algo mnb --features bow --repr binary ",
                         "--seed 1 --out ", model)) == 0);
  CHECK(read_file(model).rfind("STYLOPROF1\n", 0) == 0);

  // byte-identical retrain
  std::string model2 = tmp.file("gender2.model");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task gender --algo mnb --features bow --repr binary ",
                         "--seed 1 --out ", model2)) == 0);
  CHECK(read_file(model) == read_file(model2));

  std::string preds = tmp.file("preds.jsonl");
  REQUIRE(run_cli(concat("predict --model ", model, " --corpus ", corpus, " --split ",
                         split, " --partition test --out ", preds)) == 0);
  std::size_t n_preds = 0;
  bool meta_seen = false;
  for_each_jsonl(preds, [&](std::size_t, const json& rec) {
    if (rec.contains("_meta")) {
      meta_seen = true;
      CHECK(rec["_meta"].contains("config_hash"));
      return;
    }
    CHECK(rec.contains("post_id"));
    CHECK(rec.contains("predicted_label"));
    ++n_preds;
  });
  CHECK(meta_seen);
  CHECK(n_preds > 0);

  std::string report = tmp.file("report.json");
  REQUIRE(run_cli(concat("evaluate --preds ", preds, " --corpus ", corpus,
                         " --task gender --out-json ", report, " --force")) == 0);
  json j = json::parse(read_file(report));
  CHECK(j["accuracy"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("aggregate builds a pipeline file and profile renders the report") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  write_planted_corpus(corpus, 32, 6);
  std::string split = tmp.file("split.jsonl");
  REQUIRE(run_cli(concat("split --corpus ", corpus,
                         " --fractions 0.5,0.3,0.2 --seed 11 --out ", split)) == 0);

  std::string gender_model = tmp.file("gender.model");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task gender --algo mnb --features bow --seed 2 --out ",
                         gender_model)) == 0);
  std::string gender_pipeline = tmp.file("gender.pipeline");
  REQUIRE(run_cli(concat("aggregate --post-model ", gender_model, " --corpus ", corpus,
                         " --split ", split, " --algo rf --seed 5 --out ",
                         gender_pipeline)) == 0);

  std::string age_model = tmp.file("age.model");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task age --algo cnb --features bow --seed 2 --out ",
                         age_model)) == 0);
  std::string age_pipeline = tmp.file("age.pipeline");
  REQUIRE(run_cli(concat("aggregate --post-model ", age_model, " --corpus ", corpus,
                         " --split ", split, " --algo rf --seed 5 --out ",
                         age_pipeline)) == 0);

  // pipeline evaluation on the held-out partition
  REQUIRE(run_cli(concat("evaluate --pipeline ", gender_pipeline, " --corpus ", corpus,
                         " --split ", split, " --partition test --force")) == 0);

  // unlabeled corpus for the demographic report
  std::string unlabeled = tmp.file("unlabeled.jsonl");
  {
    Corpus c = load_corpus(corpus);
    for (auto& u : c.users) {
      u.gender.reset();
      u.age_group.reset();
    }
    save_corpus(unlabeled, c);
  }
  std::string report = tmp.file("report.txt");
  std::string report_json = tmp.file("report.json");
  REQUIRE(run_cli(concat("profile --corpus ", unlabeled, " --age-pipeline ", age_pipeline,
                         " --gender-pipeline ", gender_pipeline, " --out ", report,
                         " --out-json ", report_json)) == 0);
  std::string text = read_file(report);
  CHECK(text.find("no ground truth available") != std::string::npos);
  CHECK(text.find("alpha") != std::string::npos);
  CHECK(text.find("beta") != std::string::npos);
  CHECK(text.find("Total (%)") != std::string::npos);

  json pj = json::parse(read_file(report_json));
  double pct = 0;
  for (const auto& [c, v] : pj["total_pct"]["age"].items()) pct += v.get<double>();
  CHECK(pct == doctest::Approx(100.0).epsilon(0.001));

  // rerunning profile is byte-identical
  std::string report2 = tmp.file("report2.txt");
  REQUIRE(run_cli(concat("profile --corpus ", unlabeled, " --age-pipeline ", age_pipeline,
                         " --gender-pipeline ", gender_pipeline, " --out ", report2)) == 0);
  CHECK(read_file(report2) == read_file(report));
}

TEST_CASE("ingest consumes a snapshot tree and emits a loadable corpus") {
  TempDir tmp;
  namespace fs = std::filesystem;
  fs::create_directories(tmp.path() / "archive" / "2014-01-01");
  fs::create_directories(tmp.path() / "archive" / "2014-02-01");
  json thread1{{"page_key", "thread/1"},
               {"kind", "thread"},
               {"payload",
                json{{"subforum", "s"},
                     {"posts", json::array({json{{"post_id", "1-1"},
                                                 {"author", "Alice"},
                                                 {"author_key", "alice"},
                                                 {"body", "old [quote]q[/quote] body"},
                                                 {"time", "2014-01-01T10:00:00Z"}}})}}}};
  json thread1_new = thread1;
  thread1_new["payload"]["posts"][0]["body"] = "new body text";
  json profile{{"page_key", "profile/alice"},
               {"kind", "profile"},
               {"payload", json{{"user_key", "alice"}, {"display_name", "Alice"}}}};
  write_file((tmp.path() / "archive" / "2014-01-01" / "pages.jsonl").string(),
             thread1.dump() + "\n" + profile.dump() + "\n");
  write_file((tmp.path() / "archive" / "2014-02-01" / "pages.jsonl").string(),
             thread1_new.dump() + "\n");

  std::string out = tmp.file("ingested.jsonl");
  REQUIRE(run_cli(concat("ingest --archive ", (tmp.path() / "archive").string(),
                         " --forum testforum --out ", out)) == 0);
  Corpus c = load_corpus(out);
  REQUIRE(c.posts.size() == 1);
  CHECK(c.posts[0].text == "new body text");  // latest version first
  CHECK(c.posts[0].user_id == "testforum/alice");

  std::string out2 = tmp.file("ingested2.jsonl");
  REQUIRE(run_cli(concat("ingest --archive ", (tmp.path() / "archive").string(),
                         " --forum testforum --out ", out2)) == 0);
  CHECK(read_file(out) == read_file(out2));
}

TEST_CASE("exit codes separate usage, data and success") {
  TempDir tmp;
  CHECK(run_cli("definitely-not-a-command") == 1);
  CHECK(run_cli("split") == 1);  // missing required flags
  CHECK(run_cli(concat("split --corpus ", tmp.file("missing.jsonl"),
                       " --fractions 0.5,0.5 --seed 1 --out ", tmp.file("s.jsonl"))) ==
        2);
  // unknown label inside the data is a data error with exit code 2
  std::string bad = tmp.file("bad.jsonl");
  write_file(bad,
             R"({"post_id":"p","user_id":"u","text":"t","age_group":"teen"})"
             "\n");
  CHECK(run_cli(concat("train --corpus ", bad,
                       " --task age --algo mnb --out ", tmp.file("m.out"))) == 2);
  // bad flag values are usage errors
  CHECK(run_cli(concat("train --corpus ", bad, " --task age --algo nope --out ",
                       tmp.file("m2.out"))) == 1);
}

TEST_CASE("evaluate refuses artifacts from different configurations") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  write_planted_corpus(corpus, 16, 5);
  std::string split = tmp.file("split.jsonl");
  REQUIRE(run_cli(concat("split --corpus ", corpus,
                         " --fractions 0.5,0.3,0.2 --seed 4 --out ", split)) == 0);
  std::string model_a = tmp.file("a.model");
  std::string model_b = tmp.file("b.model");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task gender --algo mnb --seed 1 --out ", model_a)) == 0);
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task gender --algo sgd --seed 9 --out ", model_b)) == 0);
  std::string preds = tmp.file("preds.jsonl");
  REQUIRE(run_cli(concat("predict --model ", model_a, " --corpus ", corpus, " --split ",
                         split, " --partition test --out ", preds)) == 0);

  // prediction artifact and pipeline artifact from different configs
  CHECK(run_cli(concat("evaluate --preds ", preds, " --pipeline ", model_b,
                       " --corpus ", corpus, " --task gender")) == 2);
  CHECK(run_cli(concat("evaluate --preds ", preds, " --pipeline ", model_b,
                       " --corpus ", corpus, " --task gender --force")) == 0);
}

TEST_CASE("user-level training works through the cli") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  write_planted_corpus(corpus, 20, 5);
  std::string split = tmp.file("split.jsonl");
  REQUIRE(run_cli(concat("split --corpus ", corpus,
                         " --fractions 0.8,0.2 --seed 6 --out ", split)) == 0);
  std::string model = tmp.file("user.model");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task gender --level user --algo mnb --features bow ",
                         "--seed 3 --out ", model)) == 0);
  std::string preds = tmp.file("user_preds.jsonl");
  REQUIRE(run_cli(concat("predict --model ", model, " --corpus ", corpus, " --split ",
                         split, " --partition test --out ", preds)) == 0);
  std::size_t n = 0;
  for_each_jsonl(preds, [&](std::size_t, const json& rec) {
    if (rec.contains("_meta")) return;
    CHECK(rec.contains("user_id"));
    CHECK(rec.contains("post_count"));
    ++n;
  });
  CHECK(n == 4);  // 20 percent of 20 users
}

TEST_CASE("balanced training and age-bracket mapping work through the cli") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  // skewed age distribution with a planted signal
  {
    std::string data;
    Rng rng(7);
    int uid = 0;
    auto add_users = [&](const std::string& age, int n_users) {
      for (int u = 0; u < n_users; ++u, ++uid)
        for (int p = 0; p < 4; ++p)
          data += json{{"post_id", concat("u", uid, "p", p)},
                       {"user_id", concat("u", uid)},
                       {"text", concat("agesig_", age, " filler", rng.index(10))},
                       {"age_group", age}}
                      .dump() +
                  "\n";
    };
    add_users("18-24", 12);
    add_users("50-XX", 4);
    write_file(corpus, data);
  }
  std::string split = tmp.file("split.jsonl");
  REQUIRE(run_cli(concat("split --corpus ", corpus,
                         " --fractions 0.5,0.3,0.2 --seed 1 --out ", split)) == 0);
  std::string model = tmp.file("age.model");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task age --algo mnb --balance --seed 2 --out ", model)) ==
          0);

  // foreign corpus spelled in bracket notation evaluates through --age-map
  std::string foreign = tmp.file("foreign.jsonl");
  {
    std::string data;
    for (int u = 0; u < 8; ++u) {
      std::string bracket = u % 2 ? "[20,25)" : "[50,60)";
      std::string age = u % 2 ? "18-24" : "50-XX";
      data += json{{"post_id", concat("f", u)},
                   {"user_id", concat("fu", u)},
                   {"text", concat("agesig_", age, " words")},
                   {"age_group", bracket}}
                  .dump() +
              "\n";
    }
    write_file(foreign, data);
  }
  REQUIRE(run_cli(concat("evaluate --pipeline ", model, " --corpus ", foreign,
                         " --age-map default --force")) == 0);
  // without the mapping the foreign vocabulary is a data error
  CHECK(run_cli(concat("evaluate --pipeline ", model, " --corpus ", foreign,
                       " --force")) == 2);
}

TEST_CASE("config files feed flags, flags override, unknown keys are errors") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  write_planted_corpus(corpus, 16, 5);
  std::string split = tmp.file("split.jsonl");
  REQUIRE(run_cli(concat("split --corpus ", corpus,
                         " --fractions 0.5,0.3,0.2 --seed 2 --out ", split)) == 0);

  std::string config = tmp.file("run.conf");
  write_file(config,
             "[train]\n"
             "task=gender\n"
             "algo=mnb\n"
             "features=bow\n"
             "repr=binary\n"
             "seed=4\n");
  std::string m1 = tmp.file("m1.sp");
  REQUIRE(run_cli(concat("--config ", config, " train --corpus ", corpus, " --split ",
                         split, " --out ", m1)) == 0);

  // the same settings spelled as flags give a byte-identical model
  std::string m2 = tmp.file("m2.sp");
  REQUIRE(run_cli(concat("train --corpus ", corpus, " --split ", split,
                         " --task gender --algo mnb --features bow --repr binary ",
                         "--seed 4 --out ", m2)) == 0);
  CHECK(read_file(m1) == read_file(m2));

  // a flag overrides the config value
  std::string m3 = tmp.file("m3.sp");
  REQUIRE(run_cli(concat("--config ", config, " train --corpus ", corpus, " --split ",
                         split, " --seed 9 --out ", m3)) == 0);
  CHECK(read_file(m3) != read_file(m1));

  // unknown keys are rejected, not ignored
  std::string bad = tmp.file("bad.conf");
  write_file(bad, "[train]\ntask=gender\nalgo=mnb\nnonsense_key=1\n");
  CHECK(run_cli(concat("--config ", bad, " train --corpus ", corpus, " --split ", split,
                       " --out ", tmp.file("m4.sp"))) == 1);
}

TEST_CASE("cross-validation mode prints fold summaries") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.jsonl");
  write_planted_corpus(corpus, 20, 4);
  std::string out_json = tmp.file("cv.json");
  REQUIRE(run_cli(concat("evaluate --corpus ", corpus,
                         " --task gender --cv 5 --algo mnb --features bow --out-json ",
                         out_json)) == 0);
  json j = json::parse(read_file(out_json));
  CHECK(j["evaluated_folds"].get<int>() == 5);
  CHECK(j["mean_accuracy"].get<double>() == doctest::Approx(1.0));
}
