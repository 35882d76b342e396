#ifndef PRESTRAIN_IO_HPP_
#define PRESTRAIN_IO_HPP_

// Spec files (INI-style sections of key = value), field CSVs and JSON reports.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prestrain/errors.hpp"
#include "prestrain/expr.hpp"
#include "prestrain/metric.hpp"

namespace prestrain {

inline constexpr std::string_view kVersion = "0.1.0";

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, const std::string& where) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw SpecError(where + ": expected a number, got '" + std::string(text) + "'");
  return v;
}

inline std::vector<double> parse_list(std::string_view text, const std::string& where) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(parse_double(item, where));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::size_t parse_count(std::string_view text, const std::string& where) {
  const double v = parse_double(text, where);
  if (v < 1.0 || v != std::floor(v)) throw SpecError(where + ": expected a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Raw section -> key -> value map of a spec file.
using SpecDocument = std::map<std::string, std::map<std::string, std::string>>;

inline SpecDocument parse_document(std::string_view text) {
  SpecDocument doc;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw SpecError(where + ": unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (doc.contains(section)) throw SpecError(where + ": duplicate section [" + section + "]");
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw SpecError(where + ": expected key = value");
    if (section.empty()) throw SpecError(where + ": key outside of a section");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw SpecError(where + ": empty key");
    auto& entries = doc[section];
    if (entries.contains(key)) throw SpecError("[" + section + "] " + key + ": duplicate key");
    entries[key] = std::string(detail::trim(line.substr(eq + 1)));
  }
  return doc;
}

namespace detail {

class SectionReader {
 public:
  SectionReader(const SpecDocument& doc, std::string name) : name_(std::move(name)) {
    if (const auto it = doc.find(name_); it != doc.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }
  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

  const std::string* find(const std::string& key) {
    if (!entries_) return nullptr;
    const auto it = entries_->find(key);
    if (it == entries_->end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }
  const std::string& require(const std::string& key) {
    const std::string* v = find(key);
    if (!v) throw SpecError(where(key) + ": missing");
    return *v;
  }
  double number(const std::string& key, double fallback) {
    const std::string* v = find(key);
    return v ? parse_double(*v, where(key)) : fallback;
  }
  Expr expression(const std::string& key) {
    const std::string& src = require(key);
    try {
      return parse(src);
    } catch (const ParseError& e) {
      throw ParseError(where(key) + ": " + strip_offset(e.what()), e.offset());
    }
  }
  void reject_unknown() const {
    if (!entries_) return;
    for (const auto& [k, v] : *entries_)
      if (!used_.contains(k)) throw SpecError(where(k) + ": unknown key");
  }

 private:
  static std::string strip_offset(std::string msg) {
    const auto at = msg.rfind(" at offset ");
    return at == std::string::npos ? msg : msg.substr(0, at);
  }

  std::string name_;
  const std::map<std::string, std::string>* entries_ = nullptr;
  std::set<std::string> used_;
};

inline SymExprMatrix read_tensor(SectionReader& r, const std::string& prefix) {
  SymExprMatrix m;
  for (std::size_t s = 0; s < 6; ++s) m.entries[s] = r.expression(prefix + SymExprMatrix::kSuffixes[s]);
  return m;
}

}  // namespace detail

/// Builds a MetricSpec from spec-file text. Errors name the section and key.
inline MetricSpec parse_spec(std::string_view text) {
  const SpecDocument doc = parse_document(text);
  for (const auto& [name, entries] : doc)
    if (name != "metric" && name != "elastic" && name != "domain" && name != "grid" && name != "tolerances")
      throw SpecError("[" + name + "]: unknown section");

  MetricSpec spec;
  detail::SectionReader metric(doc, "metric");
  if (!metric.present()) throw SpecError("[metric]: missing section");
  const std::string& kind = metric.require("kind");
  if (kind == "non_oscillatory") {
    spec.kind = MetricKind::non_oscillatory;
    spec.g = detail::read_tensor(metric, "g");
  } else if (kind == "oscillatory") {
    spec.kind = MetricKind::oscillatory;
    spec.gbar = detail::read_tensor(metric, "gbar");
    spec.g1 = detail::read_tensor(metric, "g1_");
    spec.g2 = detail::read_tensor(metric, "g2_");
  } else {
    throw SpecError(metric.where("kind") + ": expected oscillatory or non_oscillatory, got '" + kind + "'");
  }
  metric.reject_unknown();

  detail::SectionReader elastic(doc, "elastic");
  spec.lame.mu = elastic.number("mu", spec.lame.mu);
  spec.lame.lambda = elastic.number("lambda", spec.lame.lambda);
  if (!(spec.lame.mu > 0.0)) throw SpecError(elastic.where("mu") + ": must be positive");
  if (!(spec.lame.lambda >= 0.0)) throw SpecError(elastic.where("lambda") + ": must be nonnegative");
  elastic.reject_unknown();

  detail::SectionReader domain(doc, "domain");
  const std::string* shape = domain.find("shape");
  if (!shape || *shape == "rect") {
    if (const std::string* b = domain.find("bounds")) {
      const auto v = detail::parse_list(*b, domain.where("bounds"));
      if (v.size() != 4) throw SpecError(domain.where("bounds") + ": expected a1, b1, a2, b2");
      try {
        spec.domain = Domain::rectangle(v[0], v[1], v[2], v[3]);
      } catch (const SpecError& e) {
        throw SpecError(domain.where("bounds") + ": " + e.what());
      }
    }
  } else if (*shape == "disk") {
    const auto c = detail::parse_list(domain.require("center"), domain.where("center"));
    if (c.size() != 2) throw SpecError(domain.where("center") + ": expected two coordinates");
    const double r = detail::parse_double(domain.require("radius"), domain.where("radius"));
    try {
      spec.domain = Domain::disk(Vec2(c[0], c[1]), r);
    } catch (const SpecError& e) {
      throw SpecError(domain.where("radius") + ": " + e.what());
    }
  } else {
    throw SpecError(domain.where("shape") + ": expected rect or disk, got '" + *shape + "'");
  }
  domain.reject_unknown();

  detail::SectionReader grid(doc, "grid");
  for (auto [key, slot] : {std::pair{"nx", &spec.grid.nx}, {"ny", &spec.grid.ny}, {"x3_nodes", &spec.grid.x3_nodes}})
    if (const std::string* v = grid.find(key)) *slot = detail::parse_count(*v, grid.where(key));
  if (spec.grid.nx < 3 || spec.grid.ny < 3) throw SpecError(grid.where("nx") + ": need at least 3 intervals");
  if (spec.grid.x3_nodes < 3) throw SpecError(grid.where("x3_nodes") + ": need at least 3 nodes");
  grid.reject_unknown();

  detail::SectionReader tol(doc, "tolerances");
  for (auto [key, slot] : {std::pair{"mean", &spec.tol.mean}, {"curv", &spec.tol.curv}, {"iso", &spec.tol.iso},
                           {"vk_iso", &spec.tol.vk_iso}, {"excess", &spec.tol.excess}, {"constr", &spec.tol.constr}}) {
    *slot = tol.number(key, *slot);
    if (!(*slot > 0.0)) throw SpecError(tol.where(key) + ": must be positive");
  }
  tol.reject_unknown();
  return spec;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// ---- CSV fields ----------------------------------------------------------------

/// Columns of a field CSV reordered onto a tensor grid (row-major, x1 fastest).
class FieldTable {
 public:
  FieldTable(Grid2D grid, std::map<std::string, std::vector<double>> columns)
      : grid_(std::move(grid)), columns_(std::move(columns)) {}

  const Grid2D& grid() const { return grid_; }
  bool has(const std::string& name) const { return columns_.contains(name); }
  const std::vector<double>& column(const std::string& name) const {
    const auto it = columns_.find(name);
    if (it == columns_.end()) throw SpecError("fields CSV: missing column '" + name + "'");
    return it->second;
  }
  std::vector<Vec3> vectors(const std::string& a, const std::string& b, const std::string& c) const {
    const auto &x = column(a), &y = column(b), &z = column(c);
    std::vector<Vec3> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = Vec3(x[k], y[k], z[k]);
    return out;
  }
  std::vector<Mat2> sym_tensors(const std::string& a, const std::string& b, const std::string& c) const {
    const auto &x = column(a), &y = column(b), &z = column(c);
    std::vector<Mat2> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] << x[k], y[k], y[k], z[k];
    return out;
  }

 private:
  Grid2D grid_;
  std::map<std::string, std::vector<double>> columns_;
};

/// Reads a CSV with a header row. The grid is inferred from the distinct x1/x2 values,
/// which must form a complete uniform tensor grid over the domain's bounding box.
inline FieldTable read_fields_csv(std::string_view text, const Domain& domain) {
  std::vector<std::vector<std::string_view>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(detail::trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  if (rows.size() < 2) throw SpecError("fields CSV: need a header and data rows");
  const auto& header = rows.front();
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (!index.emplace(std::string(header[c]), c).second)
      throw SpecError("fields CSV: duplicate column '" + std::string(header[c]) + "'");
  for (const char* need : {"x1", "x2"})
    if (!index.contains(need)) throw SpecError(std::string("fields CSV: missing column '") + need + "'");

  const std::size_t n = rows.size() - 1;
  std::vector<std::vector<double>> data(header.size(), std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& cells = rows[r + 1];
    const std::string where = "fields CSV row " + std::to_string(r + 2);
    if (cells.size() != header.size()) throw SpecError(where + ": expected " + std::to_string(header.size()) + " cells");
    for (std::size_t c = 0; c < cells.size(); ++c) data[c][r] = detail::parse_double(cells[c], where);
  }
  const auto& x1 = data[index["x1"]];
  const auto& x2 = data[index["x2"]];
  const double span1 = domain.x1_max - domain.x1_min, span2 = domain.x2_max - domain.x2_min;
  auto distinct = [](std::vector<double> v, double scale) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
      if (out.empty() || x - out.back() > 1e-9 * scale) out.push_back(x);
    return out;
  };
  const auto u1 = distinct(x1, span1), u2 = distinct(x2, span2);
  if (u1.size() < 4 || u2.size() < 4) throw SpecError("fields CSV: need at least 4 distinct x1 and x2 values");
  const Grid2D grid(domain, u1.size() - 1, u2.size() - 1);
  if (n != grid.size())
    throw SpecError("fields CSV: " + std::to_string(n) + " rows do not form the " + std::to_string(grid.cols()) + "x" +
                    std::to_string(grid.rows()) + " grid");
  std::vector<std::size_t> slot(n);
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const double fi = (x1[r] - domain.x1_min) / grid.dx();
    const double fj = (x2[r] - domain.x2_min) / grid.dy();
    const double ri = std::round(fi), rj = std::round(fj);
    if (std::abs(fi - ri) > 1e-6 || std::abs(fj - rj) > 1e-6 || ri < 0 || rj < 0 || ri > static_cast<double>(grid.nx()) ||
        rj > static_cast<double>(grid.ny()))
      throw SpecError("fields CSV row " + std::to_string(r + 2) + ": point is not on the domain's uniform grid");
    const std::size_t k = grid.index(static_cast<std::size_t>(ri), static_cast<std::size_t>(rj));
    if (seen[k]) throw SpecError("fields CSV row " + std::to_string(r + 2) + ": duplicate grid point");
    seen[k] = true;
    slot[r] = k;
  }
  std::map<std::string, std::vector<double>> columns;
  for (const auto& [name, c] : index) {
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) col[slot[r]] = data[c][r];
    columns.emplace(name, std::move(col));
  }
  return FieldTable(grid, std::move(columns));
}

/// Writes named per-node columns for every grid node (row-major, x1 fastest).
inline std::string write_fields_csv(const Grid2D& grid, const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
  std::ostringstream os;
  os.precision(17);
  os << "x1,x2";
  for (const auto& [name, v] : cols) os << ',' << name;
  os << '\n';
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec2 p = grid.point(k);
    os << p.x() << ',' << p.y();
    for (const auto& [name, v] : cols) os << ',' << v[k];
    os << '\n';
  }
  return os.str();
}

// ---- JSON reports ----------------------------------------------------------------

using Json = nlohmann::json;

inline Json tolerances_json(const Tolerances& t) {
  return Json{{"mean", t.mean}, {"curv", t.curv}, {"iso", t.iso}, {"vk_iso", t.vk_iso}, {"excess", t.excess}, {"constr", t.constr}};
}

inline Json provenance(const std::string& command, std::string_view spec_text, const MetricSpec* spec) {
  Json p{{"command", command}, {"version", std::string(kVersion)}};
  if (!spec_text.empty()) p["spec_hash"] = fnv1a_hex(spec_text);
  if (spec) {
    p["grid"] = Json{{"nx", spec->grid.nx}, {"ny", spec->grid.ny}, {"x3_nodes", spec->grid.x3_nodes}};
    p["tolerances"] = tolerances_json(spec->tol);
    p["lame"] = Json{{"mu", spec->lame.mu}, {"lambda", spec->lame.lambda}};
  }
  return p;
}

/// Finite doubles as numbers, NaN/inf as null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace prestrain

#endif  // PRESTRAIN_IO_HPP_
