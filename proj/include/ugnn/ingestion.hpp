#pragma once

// File-based dataset loading: delimiter-separated edge lists with named
// nodes and raw timestamps, equal-width time windowing, label files or
// labels derived from the next snapshot's strongest partner.  Loading is
// single-threaded; everything returned is immutable afterwards.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ugnn/graph.hpp"

namespace ugnn {

struct EdgeRecord {
  std::string source;
  std::string target;
  double time = 0.0;
  double weight = 1.0;
};

enum class LabelMode { static_node, node_time, derived_top_partner };

inline const char* label_mode_name(LabelMode m) {
  switch (m) {
    case LabelMode::static_node: return "static-node";
    case LabelMode::node_time: return "node-time";
    case LabelMode::derived_top_partner: return "derived-top-partner";
  }
  throw std::logic_error("label_mode_name: unknown mode");
}

inline LabelMode label_mode_from(const std::string& name) {
  if (name == "static-node") return LabelMode::static_node;
  if (name == "node-time") return LabelMode::node_time;
  if (name == "derived-top-partner") return LabelMode::derived_top_partner;
  throw std::invalid_argument("unknown label mode: " + name);
}

// One dataset on disk.  Exactly one of windows / window_width picks the
// time binning; paths are resolved before use.
struct DatasetManifest {
  std::string edges_path;
  std::string labels_path;  // unused in derived-top-partner mode
  int windows = 0;
  double window_width = 0.0;
  bool directed = false;
  bool weighted = true;
  LabelMode label_mode = LabelMode::static_node;
  int expected_nodes = 0;  // 0 disables the check; mismatch only warns

  void validate() const {
    if (edges_path.empty()) throw std::invalid_argument("manifest: edges path is empty");
    const bool by_count = windows > 0;
    const bool by_width = window_width > 0.0;
    if (windows < 0 || !(window_width >= 0.0) || by_count == by_width) {
      throw std::invalid_argument(
          "manifest: set exactly one of windows >= 1 or window_width > 0");
    }
    if (label_mode == LabelMode::derived_top_partner) {
      if (!directed || !weighted) {
        throw std::invalid_argument(
            "manifest: derived-top-partner labels need a directed weighted dataset");
      }
    } else if (labels_path.empty()) {
      throw std::invalid_argument("manifest: labels path is empty");
    }
    if (expected_nodes < 0) throw std::invalid_argument("manifest: expected_nodes < 0");
  }
};

namespace ingestion_detail {

inline std::string location(const std::string& path, int line) {
  return path + ":" + std::to_string(line) + ": ";
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(delim, start);
    std::string field = line.substr(start, end - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(std::move(field));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return fields;
}

inline double parse_number(const std::string& field, const std::string& path, int line,
                           const char* what) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v)) {
    throw std::invalid_argument(location(path, line) + "bad " + what + " value '" +
                                field + "'");
  }
  return v;
}

struct ParsedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // trimmed fields
  std::vector<int> line_numbers;
};

// Reads a delimiter-separated file whose header must match one of the
// expected field lists.  The delimiter is taken from the header line: tab
// if present, comma otherwise.
inline ParsedTable read_table(const std::string& path,
                              const std::vector<std::vector<std::string>>& accepted) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ParsedTable table;
  std::string line;
  int line_no = 0;
  char delim = ',';
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (table.header.empty()) {
      delim = line.find('\t') != std::string::npos ? '\t' : ',';
      table.header = split_fields(line, delim);
      bool ok = false;
      for (const auto& candidate : accepted) ok = ok || table.header == candidate;
      if (!ok) {
        std::string expect;
        for (const auto& candidate : accepted) {
          if (!expect.empty()) expect += " or ";
          for (std::size_t i = 0; i < candidate.size(); ++i) {
            expect += (i ? "," : "") + candidate[i];
          }
        }
        throw std::invalid_argument(location(path, line_no) + "expected header " + expect);
      }
      continue;
    }
    std::vector<std::string> fields = split_fields(line, delim);
    if (fields.size() != table.header.size()) {
      throw std::invalid_argument(location(path, line_no) + "expected " +
                                  std::to_string(table.header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw std::runtime_error(path + ": file is empty");
  return table;
}

}  // namespace ingestion_detail

inline std::vector<EdgeRecord> parse_edge_file(const std::string& path) {
  using namespace ingestion_detail;
  const ParsedTable table = read_table(
      path, {{"source", "target", "time"}, {"source", "target", "time", "weight"}});
  const bool has_weight = table.header.size() == 4;
  std::vector<EdgeRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::vector<std::string>& f = table.rows[r];
    const int line = table.line_numbers[r];
    EdgeRecord rec;
    rec.source = f[0];
    rec.target = f[1];
    if (rec.source.empty() || rec.target.empty()) {
      throw std::invalid_argument(location(path, line) + "empty node name");
    }
    rec.time = parse_number(f[2], path, line, "time");
    if (has_weight) {
      rec.weight = parse_number(f[3], path, line, "weight");
      if (!(rec.weight > 0.0)) {
        throw std::invalid_argument(location(path, line) + "weight must be positive");
      }
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw std::runtime_error(path + ": no edge records");
  return records;
}

// Equal-width partition of [t_min, t_max] into T windows; the top edge is
// closed, so t_max lands in window T - 1.
struct WindowRule {
  double t_min = 0.0;
  double t_max = 0.0;
  double width = 0.0;
  int T = 1;

  int window(double t) const {
    if (width <= 0.0) return 0;
    const int w = static_cast<int>(std::floor((t - t_min) / width));
    return std::clamp(w, 0, T - 1);
  }
};

inline WindowRule make_window_rule(const std::vector<EdgeRecord>& records,
                                   const DatasetManifest& manifest) {
  WindowRule rule;
  rule.t_min = records.front().time;
  rule.t_max = records.front().time;
  for (const EdgeRecord& rec : records) {
    rule.t_min = std::min(rule.t_min, rec.time);
    rule.t_max = std::max(rule.t_max, rec.time);
  }
  const double span = rule.t_max - rule.t_min;
  if (manifest.windows > 0) {
    rule.T = manifest.windows;
    rule.width = span / rule.T;
  } else {
    rule.width = manifest.window_width;
    rule.T = static_cast<int>(std::floor(span / rule.width)) + 1;
  }
  return rule;
}

// Labels derived from who node i deals with most in the following snapshot:
// label(i, t) = argmax_j weight(i -> j) at t + 1, smallest j on ties.  The
// final window and nodes with no outgoing edges stay unlabeled; classes are
// the realized partners, numbered by ascending node index.
inline LabelTable derive_top_partner_labels(const DynamicGraph& g,
                                            const std::vector<std::string>& names = {}) {
  if (!g.directed || !g.weighted) {
    throw std::invalid_argument("derive_top_partner_labels: needs a directed weighted graph");
  }
  if (g.T < 2) {
    throw std::invalid_argument("derive_top_partner_labels: needs at least two windows");
  }
  std::vector<int> partner(static_cast<std::size_t>(g.n) * (g.T - 1), -1);
  std::map<int, int> class_of;  // partner node -> class, keys ascending
  for (int t = 0; t + 1 < g.T; ++t) {
    for (int i = 0; i < g.n; ++i) {
      const ColumnView col = column_of(g, {i, t + 1});
      int best = -1;
      double best_weight = 0.0;
      for (std::size_t k = 0; k < col.rows.size(); ++k) {
        if (col.values[k] > best_weight) {
          best = col.rows[k];
          best_weight = col.values[k];
        }
      }
      if (best >= 0) {
        partner[static_cast<std::size_t>(t) * g.n + i] = best;
        class_of.emplace(best, 0);
      }
    }
  }
  int next = 0;
  for (auto& [node, cls] : class_of) cls = next++;

  LabelTable labels(g.n, g.T, next);
  for (const auto& [node, cls] : class_of) {
    labels.class_names.push_back(names.empty() ? "node-" + std::to_string(node)
                                               : names[node]);
    (void)cls;
  }
  for (int t = 0; t + 1 < g.T; ++t) {
    for (int i = 0; i < g.n; ++i) {
      const int p = partner[static_cast<std::size_t>(t) * g.n + i];
      if (p >= 0) labels.set({i, t}, class_of[p]);
    }
  }
  return labels;
}

struct LoadedDataset {
  Dataset data;
  std::vector<std::string> node_names;
  std::unordered_map<std::string, int> node_index;
  WindowRule window_rule;
  std::vector<std::string> warnings;
};

namespace ingestion_detail {

inline LabelTable read_label_file(const DatasetManifest& manifest, const LoadedDataset& out,
                                  int n, int T) {
  const bool timed = manifest.label_mode == LabelMode::node_time;
  const ParsedTable table =
      read_table(manifest.labels_path,
                 {timed ? std::vector<std::string>{"node", "time", "label"}
                        : std::vector<std::string>{"node", "label"}});
  std::vector<std::string> classes;
  for (const auto& row : table.rows) classes.push_back(row.back());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::unordered_map<std::string, int> class_index;
  for (std::size_t c = 0; c < classes.size(); ++c) class_index[classes[c]] = c;

  LabelTable labels(n, T, static_cast<int>(classes.size()));
  labels.class_names = classes;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.line_numbers[r];
    const auto node = out.node_index.find(row[0]);
    if (node == out.node_index.end()) {
      throw std::invalid_argument(location(manifest.labels_path, line) +
                                  "label references unknown node '" + row[0] + "'");
    }
    const int cls = class_index.at(row.back());
    if (timed) {
      const double t = parse_number(row[1], manifest.labels_path, line, "time");
      labels.set({node->second, out.window_rule.window(t)}, cls);
    } else {
      for (int t = 0; t < T; ++t) labels.set({node->second, t}, cls);
    }
  }
  return labels;
}

}  // namespace ingestion_detail

inline LoadedDataset load_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  const std::vector<EdgeRecord> records = parse_edge_file(manifest.edges_path);

  LoadedDataset out;
  for (const EdgeRecord& rec : records) {
    for (const std::string* name : {&rec.source, &rec.target}) {
      if (out.node_index.emplace(*name, static_cast<int>(out.node_names.size())).second) {
        out.node_names.push_back(*name);
      }
    }
  }
  const int n = static_cast<int>(out.node_names.size());
  out.window_rule = make_window_rule(records, manifest);
  const int T = out.window_rule.T;

  // Snapshot columns hold outgoing edges: entry (row j, col i) is the
  // weight of i -> j.  Duplicates within a window sum in file order (so
  // mirrored entries accumulate identically); undirected inputs get both
  // orientations, self-loops once.
  std::vector<std::map<std::pair<int, int>, double>> merged(T);
  for (const EdgeRecord& rec : records) {
    const int src = out.node_index.at(rec.source);
    const int dst = out.node_index.at(rec.target);
    const double w = manifest.weighted ? rec.weight : 1.0;
    const int t = out.window_rule.window(rec.time);
    merged[t][{dst, src}] += w;
    if (!manifest.directed && src != dst) merged[t][{src, dst}] += w;
  }
  std::vector<SparseMatrix> snapshots;
  snapshots.reserve(T);
  for (int t = 0; t < T; ++t) {
    std::vector<Triplet> triplets;
    triplets.reserve(merged[t].size());
    for (const auto& [cell, w] : merged[t]) triplets.push_back({cell.first, cell.second, w});
    snapshots.push_back(SparseMatrix::from_triplets(n, n, std::move(triplets)));
  }
  out.data.graph =
      DynamicGraph(std::move(snapshots), manifest.directed, manifest.weighted);

  switch (manifest.label_mode) {
    case LabelMode::derived_top_partner:
      out.data.labels = derive_top_partner_labels(out.data.graph, out.node_names);
      break;
    default:
      out.data.labels = ingestion_detail::read_label_file(manifest, out, n, T);
      break;
  }
  if (manifest.expected_nodes > 0 && manifest.expected_nodes != n) {
    out.warnings.push_back("expected " + std::to_string(manifest.expected_nodes) +
                           " nodes, loaded " + std::to_string(n));
  }
  out.data.validate();
  return out;
}

// Canonical serialization: one row per stored edge, timestamps are window
// indices, undirected edges written once (upper triangle by column).
// Reloading with the same window count reproduces the graph.
inline void save_edge_file(const DynamicGraph& g, const std::vector<std::string>& names,
                           const std::string& path) {
  if (static_cast<int>(names.size()) != g.n) {
    throw std::invalid_argument("save_edge_file: name count differs from graph");
  }
  for (const std::string& name : names) {
    if (name.find_first_of(",\t\n\r") != std::string::npos) {
      throw std::invalid_argument("save_edge_file: node name '" + name +
                                  "' contains a delimiter");
    }
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  file << "source,target,time,weight\n";
  char buffer[32];
  for (int t = 0; t < g.T; ++t) {
    const SparseMatrix& s = g.snapshots[t];
    for (int c = 0; c < g.n; ++c) {
      const auto rows = s.column_rows(c);
      const auto values = s.column_values(c);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (!g.directed && rows[k] > c) continue;
        std::snprintf(buffer, sizeof buffer, "%.17g", values[k]);
        file << names[c] << ',' << names[rows[k]] << ',' << t << ',' << buffer << '\n';
      }
    }
  }
  if (!file) throw std::runtime_error("write to " + path + " failed");
}

// Manifest files use the same JSON dialect as experiment configs.  Relative
// paths resolve against the manifest's own directory.
inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  DatasetManifest manifest;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    return (std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p)
        .string();
  };
  try {
    manifest.edges_path = resolve(doc.at("edges").get<std::string>());
    if (doc.contains("labels")) {
      manifest.labels_path = resolve(doc.at("labels").get<std::string>());
    }
    manifest.windows = doc.value("windows", 0);
    manifest.window_width = doc.value("window_width", 0.0);
    manifest.directed = doc.value("directed", false);
    manifest.weighted = doc.value("weighted", true);
    manifest.label_mode = label_mode_from(doc.at("label_mode").get<std::string>());
    manifest.expected_nodes = doc.value("expected_nodes", 0);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  manifest.validate();
  if (!std::filesystem::exists(manifest.edges_path)) {
    throw std::runtime_error(path + ": edges file not found: " + manifest.edges_path);
  }
  if (manifest.label_mode != LabelMode::derived_top_partner &&
      !std::filesystem::exists(manifest.labels_path)) {
    throw std::runtime_error(path + ": labels file not found: " + manifest.labels_path);
  }
  return manifest;
}

}  // namespace ugnn
