#include "qij/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <string>

namespace qij {

namespace {

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current += c;
    } else if (c == ',' && !quoted) {
      cells.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  cells.push_back(trim(current));
  return cells;
}

std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<long long> parse_integer(const std::string& text) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

}  // namespace

ColumnSpec ColumnSpec::parse(const std::string& text) {
  const std::string t = trim(text);
  if (t.size() > 5 && t.rfind("log(", 0) == 0 && t.back() == ')') {
    return {trim(t.substr(4, t.size() - 5)), true};
  }
  if (t.empty()) throw InvalidArgument("empty column reference");
  return {t, false};
}

std::string ColumnSpec::label() const { return log ? "log(" + column + ")" : column; }

RegressionData parse_csv(std::istream& in, const Formula& formula) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_row(line);
      break;
    }
  }
  if (header.empty()) throw InputError("input file is empty");

  auto column_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<ColumnSpec> numeric{formula.response};
  numeric.insert(numeric.end(), formula.covariates.begin(), formula.covariates.end());
  std::vector<std::size_t> numeric_idx;
  for (const auto& spec : numeric) numeric_idx.push_back(column_index(spec.column));
  std::optional<std::size_t> cluster_idx;
  if (formula.cluster) cluster_idx = column_index(*formula.cluster);

  std::vector<std::vector<double>> values(numeric.size());
  std::vector<std::string> cluster_raw;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size()) {
      throw InputError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      const std::string& cell = cells[numeric_idx[k]];
      std::optional<double> v = parse_number(cell);
      if (!v) {
        throw InputError("row " + std::to_string(row) + ", column '" + numeric[k].column +
                         "': '" + cell + "' is not numeric");
      }
      if (numeric[k].log) {
        if (!(*v > 0.0)) {
          throw InputError("row " + std::to_string(row) + ", column '" + numeric[k].column +
                           "': log of non-positive value");
        }
        *v = std::log(*v);
      }
      values[k].push_back(*v);
    }
    if (cluster_idx) cluster_raw.push_back(cells[*cluster_idx]);
  }
  const std::size_t n = values.front().size();
  if (n == 0) throw InputError("input file has no data rows");

  RegressionData data;
  const std::size_t offset = formula.intercept ? 1 : 0;
  const std::size_t p = formula.covariates.size() + offset;
  if (p == 0) throw InvalidArgument("model has no columns (no covariates and no intercept)");
  data.y = Eigen::Map<const Eigen::VectorXd>(values[0].data(), static_cast<Eigen::Index>(n));
  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  if (formula.intercept) {
    data.X.col(0).setOnes();
    data.coefficient_names.emplace_back("intercept");
  }
  for (std::size_t k = 0; k < formula.covariates.size(); ++k) {
    data.X.col(static_cast<Eigen::Index>(k + offset)) =
        Eigen::Map<const Eigen::VectorXd>(values[k + 1].data(), static_cast<Eigen::Index>(n));
    data.coefficient_names.push_back(formula.covariates[k].label());
  }

  if (cluster_idx) {
    std::vector<long long> ints;
    bool all_int = true;
    for (const auto& raw : cluster_raw) {
      auto v = parse_integer(raw);
      if (!v) {
        all_int = false;
        break;
      }
      ints.push_back(*v);
    }
    if (!all_int) {
      std::map<std::string, long long> codes;
      for (const auto& raw : cluster_raw) codes.emplace(raw, 0);
      long long next = 0;
      for (auto& [_, code] : codes) code = next++;
      ints.clear();
      for (const auto& raw : cluster_raw) ints.push_back(codes.at(raw));
    }
    data.cluster = densify_labels(ints);
  }
  return data;
}

RegressionData ingest_csv(const std::filesystem::path& path, const Formula& formula) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("cannot open input file '" + path.string() + "'");
  return parse_csv(in, formula);
}

}  // namespace qij
