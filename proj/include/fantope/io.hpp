#pragma once

// Text serialization: numeric CSV with a header row, flat "key = value"
// blocks, instance directories and solver traces. Doubles are written with 17
// significant digits so files round-trip exactly.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fantope/datagen.hpp"
#include "fantope/solvers.hpp"

namespace fantope {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) throw IoError(context + ": cannot parse number '" + s + "'");
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  if (*end != '\0') throw IoError(context + ": trailing characters in '" + s + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("file not found: " + p.string());
  return in;
}

inline std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

/// Ordered flat key-value block, one "key = value" per line.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : items_) {
      if (k == key) {
        v = value;
        return;
      }
    }
    items_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  bool has(const std::string& key) const {
    for (const auto& [k, v] : items_) {
      if (k == key) return true;
    }
    return false;
  }

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : items_) {
      if (k == key) return v;
    }
    throw IoError("missing key '" + key + "'");
  }

  double get_double(const std::string& key) const { return parse_double(get(key), key); }
  long long get_int(const std::string& key) const { return std::stoll(get(key)); }

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : items_) out += k + " = " + v + "\n";
    return out;
  }

  static KeyValues parse(std::istream& in) {
    KeyValues kv;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("malformed key-value line '" + line + "'");
      kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
  }

  void write(const fs::path& p) const { open_output(p) << str(); }
  static KeyValues read(const fs::path& p) {
    std::ifstream in = open_input(p);
    return parse(in);
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

/// Header row `prefix1,...,prefixN`.
inline std::string numbered_header(const std::string& prefix, Index count) {
  std::string h;
  for (Index i = 0; i < count; ++i) {
    if (i) h += ',';
    h += prefix + std::to_string(i + 1);
  }
  return h;
}

/// Writes `rows` as CSV rows under a header.
inline void write_csv(std::ostream& out, const std::string& header, const Matrix& rows) {
  out << header << '\n';
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index j = 0; j < rows.cols(); ++j) {
      if (j) out << ',';
      out << format_double(rows(i, j));
    }
    out << '\n';
  }
}

struct CsvTable {
  std::vector<std::string> header;
  Matrix rows;
};

inline CsvTable read_csv(std::istream& in, const std::string& context) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(context + ": empty file");
  t.header = split(trim(line), ',');
  std::vector<std::vector<double>> data;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const std::string& cell : split(line, ',')) row.push_back(parse_double(cell, context));
    if (row.size() != t.header.size()) {
      throw IoError(context + ": row has " + std::to_string(row.size()) + " fields, header has " +
                    std::to_string(t.header.size()));
    }
    data.push_back(std::move(row));
  }
  t.rows.resize(static_cast<Index>(data.size()), static_cast<Index>(t.header.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data[i].size(); ++j) {
      t.rows(static_cast<Index>(i), static_cast<Index>(j)) = data[i][j];
    }
  }
  return t;
}

inline CsvTable read_csv(const fs::path& p) {
  std::ifstream in = open_input(p);
  return read_csv(in, p.string());
}

// SampleSet: one row per sample, header q_1..q_n.
inline void write_samples(const fs::path& p, const SampleSet& s) {
  std::ofstream out = open_output(p);
  write_csv(out, numbered_header("q_", s.n()), s.points().transpose());
}

inline SampleSet read_samples(const fs::path& p) {
  CsvTable t = read_csv(p);
  return SampleSet(t.rows.transpose());
}

// n x k frame, header u_1..u_k.
inline void write_frame(const fs::path& p, const OrthoFrame& f) {
  std::ofstream out = open_output(p);
  write_csv(out, numbered_header("u_", f.cols()), f.basis());
}

inline OrthoFrame read_frame(const fs::path& p) { return OrthoFrame(read_csv(p).rows); }

// Symmetric n x n matrix, header x_1..x_n.
inline void write_matrix(const fs::path& p, const SymMatrix& m) {
  std::ofstream out = open_output(p);
  write_csv(out, numbered_header("x_", m.dim()), m.matrix());
}

inline SymMatrix read_matrix(const fs::path& p) {
  CsvTable t = read_csv(p);
  if (t.rows.rows() != t.rows.cols()) throw IoError(p.string() + ": matrix is not square");
  return SymMatrix(t.rows);
}

inline KeyValues config_block(const ModelConfig& c) {
  KeyValues kv;
  kv.set("model", to_string(c.model));
  kv.set("n", c.n);
  kv.set("k", c.k);
  kv.set("m", c.m);
  kv.set("p", c.p);
  kv.set("seed", c.seed);
  return kv;
}

inline ModelConfig parse_config_block(const KeyValues& kv) {
  ModelConfig c;
  c.model = parse_model_kind(kv.get("model"));
  c.n = static_cast<int>(kv.get_int("n"));
  c.k = static_cast<int>(kv.get_int("k"));
  c.m = static_cast<int>(kv.get_int("m"));
  c.p = kv.get_double("p");
  c.seed = std::stoull(kv.get("seed"));
  return c;
}

/// Instance directory: config.txt, samples.csv, truth.csv.
inline void save_instance(const fs::path& dir, const Instance& inst) {
  fs::create_directories(dir);
  config_block(inst.config).write(dir / "config.txt");
  write_samples(dir / "samples.csv", *inst.data);
  write_frame(dir / "truth.csv", inst.truth.frame);
}

inline Instance load_instance(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("instance directory not found: " + dir.string());
  Instance inst;
  inst.config = parse_config_block(KeyValues::read(dir / "config.txt"));
  inst.data = std::make_shared<const SampleSet>(read_samples(dir / "samples.csv"));
  inst.truth = ProjectionMatrix{read_frame(dir / "truth.csv"), true};
  if (inst.data->n() != inst.config.n || inst.data->m() != inst.config.m ||
      inst.truth.dim() != inst.config.n || inst.truth.rank() != inst.config.k) {
    throw IoError(dir.string() + ": files do not match config.txt dimensions");
  }
  return inst;
}

inline constexpr const char* kTraceHeader = "iter,f,gap,rank_flag,dist_ref,step,fact_time_ns";

inline void write_trace(std::ostream& out, const SolveTrace& trace) {
  out << kTraceHeader << '\n';
  for (const IterationRecord& r : trace.records) {
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.gap) << ','
        << r.rank_flag << ',' << format_double(r.dist_ref) << ',' << format_double(r.step) << ','
        << r.fact_time_ns << '\n';
  }
}

inline void write_trace(const fs::path& p, const SolveTrace& trace) {
  std::ofstream out = open_output(p);
  write_trace(out, trace);
}

/// Parses the CSV columns back into records; the termination reason is not
/// part of the CSV and is left at its default.
inline SolveTrace read_trace(const fs::path& p) {
  CsvTable t = read_csv(p);
  if (t.header != split(kTraceHeader, ',')) throw IoError(p.string() + ": unexpected trace header");
  SolveTrace trace;
  for (Index i = 0; i < t.rows.rows(); ++i) {
    IterationRecord r;
    r.iter = static_cast<int>(t.rows(i, 0));
    r.objective = t.rows(i, 1);
    r.gap = t.rows(i, 2);
    r.rank_flag = static_cast<int>(t.rows(i, 3));
    r.dist_ref = t.rows(i, 4);
    r.step = t.rows(i, 5);
    r.fact_time_ns = static_cast<std::int64_t>(t.rows(i, 6));
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace fantope
