#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "styloprof/corpus.hpp"

namespace testutil {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("styloprof_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline styloprof::Corpus make_corpus(
    const std::vector<std::tuple<std::string, std::string, std::string>>& posts,
    const std::vector<std::tuple<std::string, std::string, std::string>>& user_labels = {}) {
  styloprof::Corpus corpus;
  for (const auto& [post_id, user_id, text] : posts) {
    styloprof::Post p;
    p.post_id = post_id;
    p.user_id = user_id;
    p.text = text;
    corpus.posts.push_back(std::move(p));
  }
  std::set<std::string> ids;
  for (const auto& p : corpus.posts) ids.insert(p.user_id);
  for (const auto& id : ids) {
    styloprof::UserRecord u;
    u.user_id = id;
    corpus.users.push_back(std::move(u));
  }
  for (const auto& [user_id, age, gender] : user_labels) {
    for (auto& u : corpus.users) {
      if (u.user_id != user_id) continue;
      if (!age.empty()) u.age_group = styloprof::parse_age_group(age, "test");
      if (!gender.empty()) u.gender = styloprof::parse_gender(gender, "test");
    }
  }
  corpus.reindex();
  return corpus;
}

}  // namespace testutil
