#include "fairsan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fairsan {

using ordered_json = nlohmann::ordered_json;

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string kind_name(ColumnKind k) {
  return k == ColumnKind::Numeric ? "numeric" : "categorical";
}

ColumnKind kind_from_name(const std::string& s) {
  if (s == "numeric") return ColumnKind::Numeric;
  if (s == "categorical") return ColumnKind::Categorical;
  throw DataError("unknown column kind: " + s);
}

std::string role_name(ColumnRole r) {
  switch (r) {
    case ColumnRole::Plain: return "plain";
    case ColumnRole::Sensitive: return "sensitive";
    case ColumnRole::Decision: return "decision";
  }
  throw DataError("unknown column role");
}

ColumnRole role_from_name(const std::string& s) {
  if (s == "plain") return ColumnRole::Plain;
  if (s == "sensitive") return ColumnRole::Sensitive;
  if (s == "decision") return ColumnRole::Decision;
  throw DataError("unknown column role: " + s);
}

// --- Schema -----------------------------------------------------------------

const ColumnSpec* Schema::find(const std::string& name) const {
  for (const ColumnSpec& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::size_t Schema::sensitive_index() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].role == ColumnRole::Sensitive) return i;
  }
  throw UsageError("schema has no sensitive column");
}

std::size_t Schema::decision_index() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].role == ColumnRole::Decision) return i;
  }
  throw UsageError("schema has no decision column");
}

bool Schema::is_log_column(const std::string& name) const {
  return std::find(log_columns.begin(), log_columns.end(), name) != log_columns.end();
}

void Schema::validate() const {
  int sensitive = 0, decision = 0;
  std::set<std::string> names;
  for (const ColumnSpec& c : columns) {
    if (!names.insert(c.name).second) throw DataError("duplicate column name: " + c.name);
    if (c.role == ColumnRole::Sensitive) ++sensitive;
    if (c.role == ColumnRole::Decision) ++decision;
  }
  if (sensitive != 1) throw UsageError("schema must mark exactly one sensitive column");
  if (decision != 1) throw UsageError("schema must mark exactly one decision column");
  for (const std::string& name : log_columns) {
    const ColumnSpec* c = find(name);
    if (c == nullptr) throw UsageError("log column not in schema: " + name);
    if (c->kind != ColumnKind::Numeric) {
      throw UsageError("log column must be numeric: " + name);
    }
  }
  if (categorical_threshold < 2) throw UsageError("categorical threshold must be >= 2");
}

std::string Schema::to_json_string() const {
  ordered_json j;
  j["columns"] = ordered_json::array();
  for (const ColumnSpec& c : columns) {
    j["columns"].push_back(
        {{"name", c.name}, {"kind", kind_name(c.kind)}, {"role", role_name(c.role)}});
  }
  j["log_columns"] = log_columns;
  j["categorical_threshold"] = categorical_threshold;
  return j.dump(2) + "\n";
}

Schema Schema::from_json_string(const std::string& text) {
  Schema schema;
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("schema json parse error: ") + e.what());
  }
  for (const auto& jc : j.at("columns")) {
    ColumnSpec c;
    c.name = jc.at("name").get<std::string>();
    c.kind = kind_from_name(jc.at("kind").get<std::string>());
    c.role = role_from_name(jc.at("role").get<std::string>());
    schema.columns.push_back(std::move(c));
  }
  if (j.contains("log_columns")) {
    schema.log_columns = j["log_columns"].get<std::vector<std::string>>();
  }
  if (j.contains("categorical_threshold")) {
    schema.categorical_threshold = j["categorical_threshold"].get<int>();
  }
  schema.validate();
  return schema;
}

void Schema::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write schema file: " + path.string());
  os << to_json_string();
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open schema file: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_string(ss.str());
}

// --- CSV --------------------------------------------------------------------

std::size_t Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("no such column: " + name);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delimiter, std::size_t lineno) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch == '"' && cell.empty()) {
      quoted = true;
    } else if (ch == delimiter) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  if (quoted) throw DataError("unterminated quote on line " + std::to_string(lineno));
  cells.push_back(trim(cell));
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string format_cell(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

Dataset read_csv(std::istream& in, char delimiter) {
  Dataset data;
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  data.header = split_line(line, delimiter, 1);
  std::size_t lineno = 1;
  std::size_t record_id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line, delimiter, lineno);
    if (cells.size() != data.header.size()) {
      throw DataError("csv: line " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(data.header.size()));
    }
    const bool has_empty =
        std::any_of(cells.begin(), cells.end(), [](const std::string& c) { return c.empty() || c == "?"; });
    if (!has_empty) {
      data.rows.push_back(std::move(cells));
      data.record_ids.push_back(record_id);
    }
    ++record_id;
  }
  return data;
}

Dataset read_csv(const std::filesystem::path& path, char delimiter) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open csv: " + path.string());
  return read_csv(is, delimiter);
}

namespace {

std::string csv_escape(const std::string& cell, char delimiter) {
  if (cell.find(delimiter) == std::string::npos && cell.find('"') == std::string::npos &&
      cell.find('\n') == std::string::npos) {
    return cell;
  }
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_csv(const Dataset& data, const std::filesystem::path& path, char delimiter) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write csv: " + path.string());
  for (std::size_t i = 0; i < data.header.size(); ++i) {
    if (i > 0) os << delimiter;
    os << csv_escape(data.header[i], delimiter);
  }
  os << '\n';
  for (const auto& row : data.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) os << delimiter;
      os << csv_escape(row[i], delimiter);
    }
    os << '\n';
  }
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    h = mix_seed(h, fnv1a(s));
  };
  for (const std::string& c : data.header) mix(c);
  for (const auto& row : data.rows) {
    for (const std::string& c : row) mix(c);
  }
  return h;
}

// --- schema inference ---------------------------------------------------------

Schema infer_schema(const Dataset& data, const SchemaOverrides& overrides) {
  if (overrides.sensitive.empty()) throw UsageError("sensitive column name is required");
  if (overrides.decision.empty()) throw UsageError("decision column name is required");
  Schema schema;
  schema.categorical_threshold = overrides.categorical_threshold;
  schema.log_columns = overrides.log_columns;

  bool saw_sensitive = false, saw_decision = false;
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    const std::string& name = data.header[c];
    ColumnSpec spec;
    spec.name = name;

    std::set<std::string> distinct;
    bool all_numeric = true;
    for (const auto& row : data.rows) {
      distinct.insert(row[c]);
      double v;
      if (all_numeric && !parse_double(row[c], v)) all_numeric = false;
    }
    const bool few_values =
        distinct.size() < static_cast<std::size_t>(schema.categorical_threshold);
    spec.kind = (all_numeric && !few_values) ? ColumnKind::Numeric : ColumnKind::Categorical;

    const auto& fn = overrides.force_numeric;
    const auto& fc = overrides.force_categorical;
    if (std::find(fn.begin(), fn.end(), name) != fn.end()) spec.kind = ColumnKind::Numeric;
    if (std::find(fc.begin(), fc.end(), name) != fc.end()) spec.kind = ColumnKind::Categorical;

    if (name == overrides.sensitive) {
      spec.role = ColumnRole::Sensitive;
      saw_sensitive = true;
    } else if (name == overrides.decision) {
      spec.role = ColumnRole::Decision;
      saw_decision = true;
    }
    if (spec.role != ColumnRole::Plain) {
      if (distinct.size() != 2) {
        throw DataError("unsupported cardinality: column '" + name + "' has " +
                        std::to_string(distinct.size()) +
                        " distinct values; sensitive/decision must be binary");
      }
      spec.kind = ColumnKind::Categorical;
    }
    schema.columns.push_back(std::move(spec));
  }
  if (!saw_sensitive) throw UsageError("sensitive column not found: " + overrides.sensitive);
  if (!saw_decision) throw UsageError("decision column not found: " + overrides.decision);
  schema.validate();
  return schema;
}

// --- encoding -----------------------------------------------------------------

namespace {

double log_forward(double x) {
  if (x <= -1.0) throw DataError("log transform undefined for value <= -1");
  return std::log1p(x);
}

}  // namespace

std::size_t EncodingMeta::s_column() const {
  for (const ColumnEncoding& c : columns) {
    if (c.spec.role == ColumnRole::Sensitive) return c.offset;
  }
  throw UsageError("encoding has no sensitive column");
}

std::size_t EncodingMeta::y_column() const {
  for (const ColumnEncoding& c : columns) {
    if (c.spec.role == ColumnRole::Decision) return c.offset;
  }
  throw UsageError("encoding has no decision column");
}

std::vector<std::string> EncodingMeta::encoded_names() const {
  std::vector<std::string> names(encoded_width);
  for (const ColumnEncoding& c : columns) {
    if (c.spec.kind == ColumnKind::Numeric || c.spec.role != ColumnRole::Plain) {
      names[c.offset] = c.spec.name;
    } else {
      for (std::size_t i = 0; i < c.categories.size(); ++i) {
        names[c.offset + i] = c.spec.name + "=" + c.categories[i];
      }
    }
  }
  return names;
}

EncodingMeta fit_encoding(const Dataset& data, const Schema& schema,
                          std::span<const std::size_t> stat_rows) {
  schema.validate();
  if (schema.columns.size() != data.n_cols()) {
    throw DataError("schema has " + std::to_string(schema.columns.size()) +
                    " columns but data has " + std::to_string(data.n_cols()));
  }
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    if (schema.columns[c].name != data.header[c]) {
      throw DataError("schema/data column mismatch at position " + std::to_string(c) + ": '" +
                      schema.columns[c].name + "' vs '" + data.header[c] + "'");
    }
  }
  EncodingMeta meta;
  std::size_t offset = 0;
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    ColumnEncoding enc;
    enc.spec = schema.columns[c];
    enc.offset = offset;
    if (enc.spec.kind == ColumnKind::Numeric) {
      enc.log_transform = schema.is_log_column(enc.spec.name);
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t r : stat_rows) {
        double v;
        if (!parse_double(data.rows[r][c], v)) {
          throw DataError("record " + std::to_string(data.record_ids[r]) +
                          ": cannot parse numeric value '" + data.rows[r][c] + "' in column '" +
                          enc.spec.name + "'");
        }
        if (enc.log_transform) v = log_forward(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (stat_rows.empty()) throw DataError("cannot fit encoding on an empty dataset");
      enc.min = lo;
      enc.max = hi;
      enc.width = 1;
    } else {
      // Category vocabularies come from the whole dataset so fold layouts agree.
      std::set<std::string> cats;
      for (const auto& row : data.rows) cats.insert(row[c]);
      enc.categories.assign(cats.begin(), cats.end());
      if (enc.spec.role != ColumnRole::Plain) {
        if (enc.categories.size() != 2) {
          throw DataError("unsupported cardinality: column '" + enc.spec.name + "' has " +
                          std::to_string(enc.categories.size()) +
                          " categories; sensitive/decision must be binary");
        }
        enc.width = 1;  // encoded as a single 0/1 value
      } else {
        enc.width = enc.categories.size();
      }
    }
    offset += enc.width;
    meta.columns.push_back(std::move(enc));
  }
  meta.encoded_width = offset;
  return meta;
}

EncodingMeta fit_encoding(const Dataset& data, const Schema& schema) {
  std::vector<std::size_t> all(data.n_rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return fit_encoding(data, schema, all);
}

EncodedMatrix apply_encoding(const Dataset& data, const Schema& schema, const EncodingMeta& meta) {
  if (meta.columns.size() != data.n_cols()) {
    throw DataError("encoding meta does not match data column count");
  }
  EncodedMatrix m;
  m.n_rows = data.n_rows();
  m.n_cols = meta.encoded_width;
  m.values.assign(m.n_rows * m.n_cols, 0.0);
  m.record_ids = data.record_ids;
  m.column_names = meta.encoded_names();
  m.s_col = static_cast<int>(meta.s_column());
  m.y_col = static_cast<int>(meta.y_column());
  (void)schema;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t c = 0; c < meta.columns.size(); ++c) {
      const ColumnEncoding& enc = meta.columns[c];
      const std::string& cell = data.rows[r][c];
      if (enc.spec.kind == ColumnKind::Numeric) {
        double v;
        if (!parse_double(cell, v)) {
          throw DataError("record " + std::to_string(data.record_ids[r]) +
                          ": cannot parse numeric value '" + cell + "' in column '" +
                          enc.spec.name + "'");
        }
        if (enc.log_transform) v = log_forward(v);
        double scaled = enc.max > enc.min ? (v - enc.min) / (enc.max - enc.min) : 0.0;
        m.at(r, enc.offset) = std::clamp(scaled, 0.0, 1.0);
      } else {
        const auto it = std::lower_bound(enc.categories.begin(), enc.categories.end(), cell);
        if (it == enc.categories.end() || *it != cell) {
          throw DataError("record " + std::to_string(data.record_ids[r]) +
                          ": unknown category '" + cell + "' in column '" + enc.spec.name + "'");
        }
        const std::size_t idx = static_cast<std::size_t>(it - enc.categories.begin());
        if (enc.spec.role != ColumnRole::Plain) {
          m.at(r, enc.offset) = static_cast<double>(idx);
        } else {
          m.at(r, enc.offset + idx) = 1.0;
        }
      }
    }
  }
  return m;
}

std::pair<EncodedMatrix, EncodingMeta> preprocess(const Dataset& data, const Schema& schema) {
  EncodingMeta meta = fit_encoding(data, schema);
  EncodedMatrix m = apply_encoding(data, schema, meta);
  return {std::move(m), std::move(meta)};
}

Dataset postprocess(const EncodedMatrix& encoded, const EncodingMeta& meta) {
  const bool with_s = encoded.n_cols == meta.encoded_width;
  if (!with_s && encoded.n_cols + 1 != meta.encoded_width) {
    throw DataError("postprocess: encoded width " + std::to_string(encoded.n_cols) +
                    " matches neither the full layout (" + std::to_string(meta.encoded_width) +
                    ") nor the layout without the sensitive column");
  }
  const std::size_t s_offset = meta.s_column();

  Dataset out;
  out.record_ids = encoded.record_ids;
  for (const ColumnEncoding& enc : meta.columns) {
    if (!with_s && enc.spec.role == ColumnRole::Sensitive) continue;
    out.header.push_back(enc.spec.name);
  }
  out.rows.assign(encoded.n_rows, {});
  for (auto& row : out.rows) row.reserve(out.header.size());

  for (std::size_t r = 0; r < encoded.n_rows; ++r) {
    for (const ColumnEncoding& enc : meta.columns) {
      if (!with_s && enc.spec.role == ColumnRole::Sensitive) continue;
      // Offsets shift left by one past the dropped sensitive column.
      std::size_t offset = enc.offset;
      if (!with_s && enc.offset > s_offset) offset -= 1;

      if (enc.spec.kind == ColumnKind::Numeric) {
        const double x = std::clamp(encoded.at(r, offset), 0.0, 1.0);
        double v = enc.max > enc.min ? enc.min + x * (enc.max - enc.min) : enc.min;
        if (enc.log_transform) v = std::expm1(v);
        out.rows[r].push_back(format_cell(v));
      } else if (enc.spec.role != ColumnRole::Plain) {
        const double x = encoded.at(r, offset);
        const std::size_t idx = x >= 0.5 ? 1 : 0;
        out.rows[r].push_back(enc.categories[idx]);
      } else {
        // argmax decode; ties go to the lowest category index
        std::size_t best = 0;
        double best_v = encoded.at(r, offset);
        for (std::size_t i = 1; i < enc.width; ++i) {
          const double v = encoded.at(r, offset + i);
          if (v > best_v) {
            best_v = v;
            best = i;
          }
        }
        out.rows[r].push_back(enc.categories[best]);
      }
    }
  }
  return out;
}

void write_encoded_csv(const EncodedMatrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write encoded csv: " + path.string());
  os << "record_id";
  for (const std::string& name : m.column_names) os << ',' << name;
  os << '\n';
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    os << (r < m.record_ids.size() ? m.record_ids[r] : r);
    for (std::size_t c = 0; c < m.n_cols; ++c) os << ',' << format_cell(m.at(r, c));
    os << '\n';
  }
}

// --- encoding meta json -------------------------------------------------------

std::string EncodingMeta::to_json_string() const {
  ordered_json j;
  j["encoded_width"] = encoded_width;
  j["columns"] = ordered_json::array();
  for (const ColumnEncoding& c : columns) {
    ordered_json jc;
    jc["name"] = c.spec.name;
    jc["kind"] = kind_name(c.spec.kind);
    jc["role"] = role_name(c.spec.role);
    jc["offset"] = c.offset;
    jc["width"] = c.width;
    if (c.spec.kind == ColumnKind::Numeric) {
      jc["min"] = c.min;
      jc["max"] = c.max;
      jc["log"] = c.log_transform;
    } else {
      jc["categories"] = c.categories;
    }
    j["columns"].push_back(std::move(jc));
  }
  return j.dump(2) + "\n";
}

EncodingMeta EncodingMeta::from_json_string(const std::string& text) {
  EncodingMeta meta;
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("encoding meta parse error: ") + e.what());
  }
  meta.encoded_width = j.at("encoded_width").get<std::size_t>();
  for (const auto& jc : j.at("columns")) {
    ColumnEncoding c;
    c.spec.name = jc.at("name").get<std::string>();
    c.spec.kind = kind_from_name(jc.at("kind").get<std::string>());
    c.spec.role = role_from_name(jc.at("role").get<std::string>());
    c.offset = jc.at("offset").get<std::size_t>();
    c.width = jc.at("width").get<std::size_t>();
    if (c.spec.kind == ColumnKind::Numeric) {
      c.min = jc.at("min").get<double>();
      c.max = jc.at("max").get<double>();
      c.log_transform = jc.at("log").get<bool>();
    } else {
      c.categories = jc.at("categories").get<std::vector<std::string>>();
    }
    meta.columns.push_back(std::move(c));
  }
  return meta;
}

void EncodingMeta::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write encoding meta: " + path.string());
  os << to_json_string();
}

EncodingMeta EncodingMeta::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open encoding meta: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_string(ss.str());
}

// --- folds ----------------------------------------------------------------

FoldAssignment split_folds(std::size_t n_records, int k, std::uint64_t seed) {
  if (k < 3) throw UsageError("split_folds: need k >= 3 (train/validation/test)");
  if (n_records < static_cast<std::size_t>(k)) {
    throw UsageError("split_folds: fewer records (" + std::to_string(n_records) +
                     ") than folds (" + std::to_string(k) + ")");
  }
  std::vector<std::size_t> order(n_records);
  for (std::size_t i = 0; i < n_records; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  FoldAssignment fa;
  fa.k = k;
  fa.blocks.assign(k, {});
  const std::size_t base = n_records / static_cast<std::size_t>(k);
  const std::size_t extra = n_records % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int b = 0; b < k; ++b) {
    const std::size_t size = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
    fa.blocks[b].assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  return fa;
}

std::vector<std::size_t> FoldAssignment::test_indices(int fold) const {
  if (fold < 0 || fold >= k) throw UsageError("fold index out of range");
  return blocks[fold];
}

std::vector<std::size_t> FoldAssignment::validation_indices(int fold) const {
  if (fold < 0 || fold >= k) throw UsageError("fold index out of range");
  return blocks[(fold + 1) % k];
}

std::vector<std::size_t> FoldAssignment::train_indices(int fold) const {
  if (fold < 0 || fold >= k) throw UsageError("fold index out of range");
  const int val = (fold + 1) % k;
  std::vector<std::size_t> out;
  for (int b = 0; b < k; ++b) {
    if (b == fold || b == val) continue;
    out.insert(out.end(), blocks[b].begin(), blocks[b].end());
  }
  return out;
}

// --- matrix helpers ---------------------------------------------------------

std::uint64_t EncodedMatrix::layout_hash() const {
  std::uint64_t h = fnv1a("layout");
  h = mix_seed(h, n_cols);
  for (const std::string& name : column_names) h = mix_seed(h, fnv1a(name));
  return h;
}

EncodedMatrix select_rows(const EncodedMatrix& m, std::span<const std::size_t> rows) {
  EncodedMatrix out;
  out.n_rows = rows.size();
  out.n_cols = m.n_cols;
  out.column_names = m.column_names;
  out.s_col = m.s_col;
  out.y_col = m.y_col;
  out.values.reserve(out.n_rows * out.n_cols);
  out.record_ids.reserve(out.n_rows);
  for (std::size_t r : rows) {
    if (r >= m.n_rows) throw UsageError("select_rows: row index out of range");
    const auto row = m.row(r);
    out.values.insert(out.values.end(), row.begin(), row.end());
    out.record_ids.push_back(r < m.record_ids.size() ? m.record_ids[r] : r);
  }
  return out;
}

EncodedMatrix drop_column(const EncodedMatrix& m, std::size_t col) {
  if (col >= m.n_cols) throw UsageError("drop_column: index out of range");
  EncodedMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols - 1;
  out.record_ids = m.record_ids;
  out.values.reserve(out.n_rows * out.n_cols);
  for (std::size_t c = 0; c < m.n_cols; ++c) {
    if (c == col) continue;
    out.column_names.push_back(m.column_names.empty() ? "" : m.column_names[c]);
  }
  auto adjust = [col](int idx) -> int {
    if (idx < 0 || static_cast<std::size_t>(idx) == col) return -1;
    return static_cast<std::size_t>(idx) > col ? idx - 1 : idx;
  };
  out.s_col = adjust(m.s_col);
  out.y_col = adjust(m.y_col);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t c = 0; c < m.n_cols; ++c) {
      if (c != col) out.values.push_back(m.at(r, c));
    }
  }
  return out;
}

EncodedMatrix select_columns(const EncodedMatrix& m, std::span<const std::size_t> cols) {
  EncodedMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = cols.size();
  out.record_ids = m.record_ids;
  for (std::size_t c : cols) {
    if (c >= m.n_cols) throw UsageError("select_columns: index out of range");
    out.column_names.push_back(m.column_names.empty() ? "" : m.column_names[c]);
  }
  out.values.reserve(out.n_rows * out.n_cols);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t c : cols) out.values.push_back(m.at(r, c));
  }
  return out;
}

std::vector<std::size_t> plain_columns(const EncodedMatrix& m) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < m.n_cols; ++c) {
    if (m.s_col >= 0 && c == static_cast<std::size_t>(m.s_col)) continue;
    if (m.y_col >= 0 && c == static_cast<std::size_t>(m.y_col)) continue;
    cols.push_back(c);
  }
  return cols;
}

std::vector<int> binary_column(const EncodedMatrix& m, std::size_t col) {
  if (col >= m.n_cols) throw UsageError("binary_column: index out of range");
  std::vector<int> out(m.n_rows);
  for (std::size_t r = 0; r < m.n_rows; ++r) out[r] = m.at(r, col) >= 0.5 ? 1 : 0;
  return out;
}

}  // namespace fairsan
