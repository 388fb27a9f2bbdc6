#pragma once

// Plain-text outputs: CSV tables, field dumps with a header sidecar, and key=value manifests.

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "nullctrl/discretization.hpp"

namespace nullctrl {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  void end_row();

 private:
  std::ofstream os_;
  bool first_ = true;
};

/// Writes `<base>.csv` with rows i,j,value and `<base>.hdr` with nx, ny, hx, hy, kind.
void write_field(const std::filesystem::path& base, const Array2& a, double hx, double hy,
                 const std::string& kind);

using Manifest = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const std::filesystem::path& path, const Manifest& entries);

}  // namespace nullctrl
