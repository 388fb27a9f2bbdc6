#include "nullctrl/io.hpp"

#include <charconv>
#include <cmath>

#include "nullctrl/errors.hpp"

namespace nullctrl {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // no "-0"
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  return os;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : os_(open_output(path)) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (!first_) os_ << ',';
  os_ << v;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

void write_field(const std::filesystem::path& base, const Array2& a, double hx, double hy,
                 const std::string& kind) {
  std::filesystem::path csv = base;
  csv += ".csv";
  std::filesystem::path hdr = base;
  hdr += ".hdr";
  CsvWriter w(csv, {"i", "j", "value"});
  for (int j = 0; j < a.ny(); ++j) {
    for (int i = 0; i < a.nx(); ++i) {
      w.cell(i).cell(j).cell(a(i, j));
      w.end_row();
    }
  }
  write_manifest(hdr, {{"nx", std::to_string(a.nx())},
                       {"ny", std::to_string(a.ny())},
                       {"hx", format_number(hx)},
                       {"hy", format_number(hy)},
                       {"kind", kind}});
}

void write_manifest(const std::filesystem::path& path, const Manifest& entries) {
  auto os = open_output(path);
  for (const auto& [k, v] : entries) os << k << '=' << v << '\n';
}

}  // namespace nullctrl
