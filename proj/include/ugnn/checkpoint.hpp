#pragma once

// Parameter checkpoints: a versioned JSON document holding tensor shapes and
// row-major float64 values.  Layout:
//   {
//     "format": "ugnn-checkpoint", "version": 1,
//     "architecture": "gcn" | "gat",
//     "seed": <unsigned>, "init_scheme": <string>,
//     "w0": {"rows": R, "cols": C, "data": [..]},  "w1": {...},
//     "a0": [..], "a1": [..]                        (gat only)
//   }

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

#include "ugnn/gnn.hpp"

namespace ugnn {

namespace checkpoint_detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != static_cast<std::size_t>(m.rows) * m.cols) {
    throw std::runtime_error("checkpoint: tensor size differs from shape");
  }
  return m;
}

}  // namespace checkpoint_detail

inline void save_checkpoint(const std::string& path, const ModelParams& params) {
  nlohmann::json j{
      {"format", "ugnn-checkpoint"},
      {"version", 1},
      {"architecture", architecture_name(params.architecture)},
      {"seed", params.seed},
      {"init_scheme", params.init_scheme},
      {"w0", checkpoint_detail::matrix_to_json(params.w0)},
      {"w1", checkpoint_detail::matrix_to_json(params.w1)},
  };
  if (params.architecture == Architecture::gat) {
    j["a0"] = params.a0;
    j["a1"] = params.a1;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "ugnn-checkpoint") {
    throw std::runtime_error("checkpoint: unrecognized format field");
  }
  if (j.value("version", 0) != 1) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  ModelParams p;
  const std::string arch = j.at("architecture").get<std::string>();
  if (arch == "gcn") {
    p.architecture = Architecture::gcn;
  } else if (arch == "gat") {
    p.architecture = Architecture::gat;
  } else {
    throw std::runtime_error("checkpoint: unknown architecture " + arch);
  }
  p.seed = j.value("seed", std::uint64_t{0});
  p.init_scheme = j.value("init_scheme", "glorot-uniform");
  p.w0 = checkpoint_detail::matrix_from_json(j.at("w0"));
  p.w1 = checkpoint_detail::matrix_from_json(j.at("w1"));
  if (p.architecture == Architecture::gat) {
    p.a0 = j.at("a0").get<std::vector<double>>();
    p.a1 = j.at("a1").get<std::vector<double>>();
  }
  return p;
}

}  // namespace ugnn
