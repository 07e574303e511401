#pragma once

#include "qij/data.hpp"
#include "qij/error.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qij {

/// A column reference, optionally natural-log transformed: "x" or "log(x)".
struct ColumnSpec {
  std::string column;
  bool log = false;

  static ColumnSpec parse(const std::string& text);
  std::string label() const;
};

struct Formula {
  ColumnSpec response;
  std::vector<ColumnSpec> covariates;
  std::optional<std::string> cluster;
  bool intercept = true;
};

class FileNotFound : public InputError {
 public:
  using InputError::InputError;
};

/// Reads a comma-separated file with a header row. Numbers are parsed
/// without regard to the C locale. An intercept column is prepended unless
/// the formula suppresses it; cluster labels are relabeled densely.
RegressionData ingest_csv(const std::filesystem::path& path, const Formula& formula);
RegressionData parse_csv(std::istream& in, const Formula& formula);

enum class ExitCode : int {
  ok = 0,
  usage = 2,
  missing_file = 3,
  bad_input = 4,
  computation = 5,
  output = 6,
};

/// Entry point shared by the `qij` executable and the tests. `args` excludes
/// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qij
