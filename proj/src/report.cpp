#include "fraclap/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "fraclap/errors.hpp"

namespace fraclap {

namespace fs = std::filesystem;

void Table::add(std::vector<double> row) {
  if (row.size() != columns.size()) throw IncompatibilityError("table: row width does not match columns");
  rows.push_back(std::move(row));
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw IncompatibilityError("table: no column '" + std::string(name) + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto k = line.find(',', start);
    out.push_back(line.substr(start, k == std::string_view::npos ? k : k - start));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

double parse_number(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
    cell.remove_suffix(1);
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
    throw IncompatibilityError("csv: non-numeric cell '" + std::string(cell) + "'");
  return v;
}

}  // namespace

Table parse_csv(std::string_view text) {
  Table t;
  bool header = true;
  std::size_t start = 0;
  while (start < text.size()) {
    auto k = text.find('\n', start);
    if (k == std::string_view::npos) k = text.size();
    auto line = text.substr(start, k - start);
    start = k + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (header) {
      for (auto c : cells) t.columns.emplace_back(c);
      header = false;
      continue;
    }
    if (cells.size() != t.columns.size()) throw IncompatibilityError("csv: ragged row");
    std::vector<double> row;
    for (auto c : cells) row.push_back(parse_number(c));
    t.rows.push_back(std::move(row));
  }
  if (header) throw IncompatibilityError("csv: missing header");
  return t;
}

std::string digest(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json to_json(const Metadata& m) {
  return {{"schema", kReportSchema},          {"experiment", m.experiment},
          {"version", m.version},            {"config_digest", m.config_digest},
          {"manifold_digest", m.manifold_digest}, {"quadrature_digest", m.quadrature_digest},
          {"s", m.s}};
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IncompatibilityError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Table field_table(const Field& u) {
  Table t{{"node", "x", "y", "z", "value"}, {}};
  const auto& nodes = u.manifold().nodes();
  for (std::size_t p = 0; p < u.size(); ++p)
    t.add({static_cast<double>(p), nodes[p][0], nodes[p][1], nodes[p][2], u[p]});
  return t;
}

Field field_from_table(const SpectralManifold& m, const Table& t) {
  const auto col = t.column("value");
  if (t.rows.size() != m.node_count())
    throw IncompatibilityError("field csv: " + std::to_string(t.rows.size()) + " rows for " +
                               std::to_string(m.node_count()) + " nodes");
  std::vector<double> v;
  for (const auto& r : t.rows) v.push_back(r[col]);
  return Field(m, std::move(v));
}

double relative_deviation(double a, double b) {
  if (a == b || (std::isnan(a) && std::isnan(b))) return 0.0;
  const double s = std::max(std::abs(a), std::abs(b));
  if (!std::isfinite(s) || std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::infinity();
  return std::abs(a - b) / s;
}

void compare_table(const std::string& file, const Table& report, const Table& golden,
                   const std::map<std::string, double>& tolerances, GoldenDiff& diff) {
  if (report.columns != golden.columns) throw IncompatibilityError(file + ": columns differ from golden");
  if (report.rows.size() != golden.rows.size())
    throw IncompatibilityError(file + ": row count differs from golden");
  for (std::size_t c = 0; c < golden.columns.size(); ++c) {
    const auto& name = golden.columns[c];
    const auto tol = tolerances.find(name);
    if (tol == tolerances.end())
      throw IncompatibilityError(file + ": tolerance manifest has no entry for column '" + name + "'");
    double worst = 0.0;
    for (std::size_t r = 0; r < golden.rows.size(); ++r) {
      const double dev = relative_deviation(report.rows[r][c], golden.rows[r][c]);
      worst = std::max(worst, dev);
      if (dev > tol->second)
        diff.breaches.push_back({file, name, r, report.rows[r][c], golden.rows[r][c], dev, tol->second});
    }
    diff.max_deviation[file][name] = worst;
  }
}

GoldenDiff compare_golden(const fs::path& report_dir, const fs::path& golden_dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(golden_dir / "tolerances.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibilityError(std::string("tolerance manifest: ") + e.what());
  }
  if (manifest.value("schema", "") != kReportSchema)
    throw IncompatibilityError("tolerance manifest: schema mismatch");
  if (!manifest.contains("files") || !manifest["files"].is_object())
    throw IncompatibilityError("tolerance manifest: missing files block");
  GoldenDiff diff;
  for (const auto& [file, cols] : manifest["files"].items()) {
    std::map<std::string, double> tol;
    for (const auto& [c, v] : cols.items()) {
      if (!v.is_number()) throw IncompatibilityError("tolerance manifest: non-numeric tolerance for " + c);
      tol[c] = v.get<double>();
    }
    compare_table(file, parse_csv(read_file(report_dir / file)), parse_csv(read_file(golden_dir / file)),
                  tol, diff);
  }
  return diff;
}

}  // namespace fraclap
