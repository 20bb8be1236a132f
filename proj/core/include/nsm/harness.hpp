#pragma once

// Runs one scenario and writes its artifacts: a delimited table whose header
// names every column's unit, a YAML summary, and manifest.yaml with the
// configuration snapshot, constants, versions, seed and wall-clock.

#include <filesystem>
#include <string>
#include <vector>

#include "nsm/config.hpp"
#include "nsm/errors.hpp"

namespace nsm {

std::string version();

/// Column-oriented table; cells are formatted at insertion so output is
/// byte-stable. A column header reads "name [unit]".
class Table {
 public:
  struct Column {
    std::string name;
    std::string unit;  // "dimensionless" for pure numbers
  };

  explicit Table(std::vector<Column> columns);

  class Row {
   public:
    Row& operator<<(double v);
    Row& operator<<(std::uint64_t v);
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }

   private:
    friend class Table;
    explicit Row(std::vector<std::string>& cells) : cells_(&cells) {}
    std::vector<std::string>* cells_;
  };

  Row row();
  std::size_t rows() const { return cells_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  std::string render(char delimiter = ',') const;

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<std::string>> cells_;
};

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

struct ExecutionResult {
  ExitCode code = ExitCode::success;
  std::string message;  // error text when code != success
  std::filesystem::path directory;
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::string> warnings;

  bool ok() const { return code == ExitCode::success; }
};

/// Dispatches to the owning module and writes the artifacts into
/// config.output.dir. Never throws: errors come back as exit codes, and any
/// files written by a failed run are removed.
ExecutionResult execute(const ScenarioConfig& config);

}  // namespace nsm
