#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "styloprof/learners.hpp"
#include "styloprof/pipeline.hpp"
#include "styloprof/version.hpp"

namespace styloprof {

inline json sparse_to_json(const SparseVector& x) {
  json i = json::array(), v = json::array();
  for (auto& [idx, val] : x.entries) {
    i.push_back(idx);
    v.push_back(val);
  }
  return json{{"dim", x.dim}, {"i", i}, {"v", v}};
}

inline SparseVector sparse_from_json(const json& j) {
  SparseVector x;
  x.dim = j.at("dim").get<std::uint32_t>();
  const auto& i = j.at("i");
  const auto& v = j.at("v");
  for (std::size_t n = 0; n < i.size(); ++n)
    x.push(i[n].get<std::uint32_t>(), v[n].get<double>());
  return x;
}

inline json space_to_json(const FeatureSpace& s) {
  json blocks = json::array();
  for (const auto& b : s.blocks)
    blocks.push_back(json{{"begin", b.begin},
                          {"end", b.end},
                          {"repr", to_string(b.repr)},
                          {"n_train_docs", b.n_train_docs}});
  return json{{"features", s.vocab.features},
              {"df", s.df},
              {"kept", s.kept},
              {"selection", to_string(s.selection)},
              {"selection_k", s.selection_k},
              {"blocks", blocks},
              {"fingerprint", to_hex(s.train_fingerprint)}};
}

inline FeatureSpace space_from_json(const json& j) {
  FeatureSpace s;
  s.vocab.features = j.at("features").get<std::vector<std::string>>();
  for (std::uint32_t i = 0; i < s.vocab.features.size(); ++i)
    s.vocab.index[s.vocab.features[i]] = i;
  s.df = j.at("df").get<std::vector<std::uint32_t>>();
  s.kept = j.at("kept").get<std::vector<std::uint32_t>>();
  s.selection = parse_selection_method(j.at("selection"));
  s.selection_k = j.at("selection_k").get<std::uint32_t>();
  for (const json& b : j.at("blocks"))
    s.blocks.push_back({b.at("begin").get<std::uint32_t>(),
                        b.at("end").get<std::uint32_t>(),
                        parse_representation(b.at("repr")),
                        b.at("n_train_docs").get<std::uint32_t>()});
  s.train_fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
  return s;
}

inline json model_to_json(const TrainedModel& m) {
  json j;
  json hyper = json::object();
  for (auto& [k, v] : m.spec.hyper) hyper[k] = v;
  j["spec"] = json{{"algorithm", to_string(m.spec.algorithm)},
                   {"hyper", hyper},
                   {"seed", m.spec.seed}};
  j["classes"] = m.classes;
  j["space"] = space_to_json(m.space);

  json p;
  switch (m.spec.algorithm) {
    case Algorithm::MultinomialNB:
    case Algorithm::ComplementNB: {
      const auto& nb = std::get<NaiveBayesParams>(m.params);
      p = json{{"complement", nb.complement},
               {"log_prior", nb.log_prior},
               {"weight", nb.weight}};
      break;
    }
    case Algorithm::LinearSvmSgd:
    case Algorithm::PassiveAggressive:
    case Algorithm::Ridge: {
      const auto& lin = std::get<LinearParams>(m.params);
      p = json{{"weight", lin.weight}, {"bias", lin.bias}};
      break;
    }
    case Algorithm::Knn: {
      const auto& knn = std::get<KnnParams>(m.params);
      json xs = json::array();
      for (const auto& x : knn.train_x) xs.push_back(sparse_to_json(x));
      p = json{{"k", knn.k}, {"x", xs}, {"y", knn.train_y}};
      break;
    }
    case Algorithm::RandomForest: {
      const auto& rf = std::get<ForestParams>(m.params);
      json trees = json::array();
      for (const auto& tree : rf.trees) {
        json nodes = json::array();
        for (const auto& n : tree)
          nodes.push_back(json{{"f", n.feature},
                               {"t", n.threshold},
                               {"l", n.left},
                               {"r", n.right},
                               {"d", n.dist}});
        trees.push_back(nodes);
      }
      p = json{{"trees", trees}};
      break;
    }
  }
  j["params"] = p;
  return j;
}

inline TrainedModel model_from_json(const json& j) {
  TrainedModel m;
  const json& spec = j.at("spec");
  m.spec.algorithm = parse_algorithm(spec.at("algorithm"));
  for (auto it = spec.at("hyper").begin(); it != spec.at("hyper").end(); ++it)
    m.spec.hyper[it.key()] = it.value().get<double>();
  m.spec.seed = spec.at("seed").get<std::uint64_t>();
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.space = space_from_json(j.at("space"));

  const json& p = j.at("params");
  switch (m.spec.algorithm) {
    case Algorithm::MultinomialNB:
    case Algorithm::ComplementNB: {
      NaiveBayesParams nb;
      nb.complement = p.at("complement").get<bool>();
      nb.log_prior = p.at("log_prior").get<std::vector<double>>();
      nb.weight = p.at("weight").get<std::vector<std::vector<double>>>();
      m.params = std::move(nb);
      break;
    }
    case Algorithm::LinearSvmSgd:
    case Algorithm::PassiveAggressive:
    case Algorithm::Ridge: {
      LinearParams lin;
      lin.weight = p.at("weight").get<std::vector<std::vector<double>>>();
      lin.bias = p.at("bias").get<std::vector<double>>();
      m.params = std::move(lin);
      break;
    }
    case Algorithm::Knn: {
      KnnParams knn;
      knn.k = p.at("k").get<std::uint32_t>();
      for (const json& x : p.at("x")) knn.train_x.push_back(sparse_from_json(x));
      knn.train_y = p.at("y").get<std::vector<std::uint32_t>>();
      knn.train_norm.resize(knn.train_x.size());
      for (std::size_t i = 0; i < knn.train_x.size(); ++i)
        knn.train_norm[i] = knn.train_x[i].norm2();
      m.params = std::move(knn);
      break;
    }
    case Algorithm::RandomForest: {
      ForestParams rf;
      for (const json& tree : p.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const json& n : tree)
          nodes.push_back({n.at("f").get<std::int32_t>(), n.at("t").get<double>(),
                           n.at("l").get<std::uint32_t>(), n.at("r").get<std::uint32_t>(),
                           n.at("d").get<std::vector<double>>()});
        rf.trees.push_back(std::move(nodes));
      }
      m.params = std::move(rf);
      break;
    }
  }
  return m;
}

// Container layout: magic line, checksum line, one-line JSON payload.
inline void write_container(const std::string& path, const json& payload) {
  std::string body = payload.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(concat("cannot write ", path));
  out << kModelMagic << "\n" << to_hex(fnv1a64(body)) << "\n" << body << "\n";
}

inline json read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(concat("cannot open ", path));
  std::string magic, checksum, body;
  if (!std::getline(in, magic) || magic != kModelMagic)
    throw DataError(concat(path, ": not a ", kModelMagic, " container"));
  if (!std::getline(in, checksum)) throw DataError(concat(path, ": missing checksum"));
  if (!std::getline(in, body)) throw DataError(concat(path, ": missing payload"));
  if (to_hex(fnv1a64(body)) != checksum)
    throw DataError(concat(path, ": checksum mismatch, file corrupted"));
  json payload = json::parse(body, nullptr, false);
  if (payload.is_discarded()) throw DataError(concat(path, ": malformed payload"));
  return payload;
}

// A standalone trained model plus the preprocessing that feeds it.
struct ModelFile {
  std::string level;  // "post" | "user"
  Task task = Task::Age;
  FeatureConfig features;
  TrainedModel model;
  std::string config_hash;
  std::string config_text;  // full invocation config, for provenance
  std::string tool_version = kToolVersion;
};

inline void save_model_file(const std::string& path, const ModelFile& f) {
  json payload{{"format_version", 1},
               {"kind", "model"},
               {"level", f.level},
               {"task", to_string(f.task)},
               {"feature_config", feature_config_to_json(f.features)},
               {"model", model_to_json(f.model)},
               {"config_hash", f.config_hash},
               {"config", f.config_text},
               {"tool_version", f.tool_version}};
  write_container(path, payload);
}

inline ModelFile load_model_file(const std::string& path) {
  json payload = read_container(path);
  if (payload.value("kind", std::string()) != "model")
    throw DataError(concat(path, ": not a model file"));
  ModelFile f;
  f.level = payload.at("level").get<std::string>();
  f.task = parse_task(payload.at("task"));
  f.features = feature_config_from_json(payload.at("feature_config"));
  f.model = model_from_json(payload.at("model"));
  f.config_hash = payload.value("config_hash", std::string());
  f.config_text = payload.value("config", std::string());
  f.tool_version = payload.value("tool_version", std::string());
  return f;
}

}  // namespace styloprof
