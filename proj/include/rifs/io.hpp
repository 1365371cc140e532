#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rifs {

// Shortest decimal form that reads back to the same double.
std::string fmt(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name, -1 when absent.
  int column(const std::string& name) const;
};

CsvTable read_csv(std::istream& is);
double parse_double(const std::string& s);
long long parse_int(const std::string& s);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);
std::string sha256_hex(const std::string& data);

}  // namespace rifs
