#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace posphase {

// Round-trippable, locale-independent rendering used by every CSV writer.
std::string format_real(double value);

// Plain comma-separated table; fields never contain commas or quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; IoError if absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
// IoError on a missing file or a row whose width differs from the header.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace posphase
