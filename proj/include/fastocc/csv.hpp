#ifndef FASTOCC_CSV_HPP
#define FASTOCC_CSV_HPP

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fastocc/data_model.hpp"
#include "fastocc/error.hpp"

namespace fastocc {

namespace csv {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one line; double-quoted fields may contain the delimiter.
inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(trim(field));
  return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

// Shortest text that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace csv

inline constexpr const char* kColSite = "site";
inline constexpr const char* kColEasting = "easting";
inline constexpr const char* kColNorthing = "northing";
inline constexpr const char* kColYear = "year";
inline constexpr const char* kColJulianDay = "julian_day";
inline constexpr const char* kColDetected = "detected";
inline constexpr const char* kColListLength = "list_length";

// Parses visit records from delimited text with a mandatory header row.
inline std::vector<VisitRecord> read_visits(std::istream& in, const DataOptions& options,
                                            const std::string& source = "<input>") {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidInput, source + ": empty file");
  const auto header = csv::split(line, options.delimiter);
  auto find_col = [&](const std::string& name, bool required) -> int {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return static_cast<int>(c);
    }
    if (required) throw Error(ErrorKind::InvalidInput, source + ": missing column '" + name + "'");
    return -1;
  };
  const int c_site = find_col(kColSite, true);
  const int c_e = find_col(kColEasting, true);
  const int c_n = find_col(kColNorthing, true);
  const int c_year = find_col(kColYear, true);
  const int c_jd = find_col(kColJulianDay, true);
  const int c_det = find_col(kColDetected, true);
  const int c_ll = find_col(kColListLength, options.list_length);
  std::vector<int> c_occ;
  std::vector<int> c_detx;
  for (const auto& name : options.occupancy_covariates) c_occ.push_back(find_col(name, true));
  for (const auto& name : options.detection_covariates) c_detx.push_back(find_col(name, true));

  std::vector<VisitRecord> out;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line, options.delimiter);
    auto fail = [&](const std::string& msg) -> Error {
      return Error(ErrorKind::InvalidInput, source + ": row " + std::to_string(row) + ": " + msg);
    };
    if (f.size() != header.size()) {
      throw fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    auto real = [&](int c, const char* name) {
      const auto v = csv::parse_number<double>(f[static_cast<std::size_t>(c)]);
      if (!v || !std::isfinite(*v)) throw fail(std::string("bad value for '") + name + "'");
      return *v;
    };
    auto integer = [&](int c, const char* name) {
      const auto v = csv::parse_number<int>(f[static_cast<std::size_t>(c)]);
      if (!v) throw fail(std::string("bad value for '") + name + "'");
      return *v;
    };

    VisitRecord r;
    r.site_id = f[static_cast<std::size_t>(c_site)];
    if (r.site_id.empty()) throw fail("missing site");
    r.easting = real(c_e, kColEasting);
    r.northing = real(c_n, kColNorthing);
    r.year = integer(c_year, kColYear);
    r.julian_day = integer(c_jd, kColJulianDay);
    if (r.julian_day < 1 || r.julian_day > 366) throw fail("julian_day outside 1..366");
    r.detected = integer(c_det, kColDetected);
    if (r.detected != 0 && r.detected != 1) throw fail("detected must be 0 or 1");
    if (c_ll >= 0) {
      r.list_length = integer(c_ll, kColListLength);
      if (r.list_length < 1) throw fail("list_length must be >= 1");
    }
    for (std::size_t e = 0; e < c_occ.size(); ++e) {
      r.occupancy_extra.push_back(real(c_occ[e], options.occupancy_covariates[e].c_str()));
    }
    for (std::size_t e = 0; e < c_detx.size(); ++e) {
      r.detection_extra.push_back(real(c_detx[e], options.detection_covariates[e].c_str()));
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline Dataset ingest(const std::string& path, const DataOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open input file '" + path + "'");
  return build_dataset(read_visits(in, options, path), options);
}

inline void write_visits(std::ostream& out, const std::vector<VisitRecord>& records,
                         const std::vector<std::string>& occupancy_names = {},
                         const std::vector<std::string>& detection_names = {}, char delim = ',') {
  out << kColSite << delim << kColEasting << delim << kColNorthing << delim << kColYear << delim
      << kColJulianDay << delim << kColDetected << delim << kColListLength;
  for (const auto& n : occupancy_names) out << delim << n;
  for (const auto& n : detection_names) out << delim << n;
  out << '\n';
  for (const auto& r : records) {
    out << r.site_id << delim << csv::format_double(r.easting) << delim << csv::format_double(r.northing)
        << delim << r.year << delim << r.julian_day << delim << r.detected << delim << r.list_length;
    for (double v : r.occupancy_extra) out << delim << csv::format_double(v);
    for (double v : r.detection_extra) out << delim << csv::format_double(v);
    out << '\n';
  }
}

inline void write_visits_file(const std::string& path, const std::vector<VisitRecord>& records,
                              const std::vector<std::string>& occupancy_names = {},
                              const std::vector<std::string>& detection_names = {}, char delim = ',') {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  write_visits(out, records, occupancy_names, detection_names, delim);
}

}  // namespace fastocc

#endif  // FASTOCC_CSV_HPP
