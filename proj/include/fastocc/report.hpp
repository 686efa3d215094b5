#ifndef FASTOCC_REPORT_HPP
#define FASTOCC_REPORT_HPP

// Delimited-text outputs of a fitted chain and readers for the files that
// later commands (gof, summary) consume.

#include <Eigen/Core>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "fastocc/csv.hpp"
#include "fastocc/data_model.hpp"
#include "fastocc/error.hpp"
#include "fastocc/gp_kernel.hpp"
#include "fastocc/posterior.hpp"

namespace fastocc {

namespace fs = std::filesystem;

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

inline std::string fmt(double v) { return csv::format_double(v); }

// label,median,lower,upper per column of a draws matrix
inline void write_interval_table(const fs::path& path, const std::string& label_name,
                                 const std::vector<std::string>& labels, const Eigen::MatrixXd& draws,
                                 double level = 0.95) {
  auto out = open_output(path);
  out << label_name << ",median,lower,upper\n";
  if (draws.rows() == 0) return;
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    const Summary s = summarize(column(draws, c), {level});
    out << labels[static_cast<std::size_t>(c)] << ',' << fmt(s.median) << ',' << fmt(s.intervals[0].lower) << ','
        << fmt(s.intervals[0].upper) << '\n';
  }
}

inline std::vector<std::string> year_labels(const std::vector<int>& years) {
  std::vector<std::string> out;
  for (int y : years) out.push_back(std::to_string(y));
  return out;
}

inline void write_occupancy_index(const fs::path& dir, const ChainOutput& chain) {
  write_interval_table(dir / "occupancy_index.csv", "year", year_labels(chain.years), chain.index);
}

inline void write_detection_trend(const fs::path& dir, const ChainOutput& chain) {
  write_interval_table(dir / "detection_trend.csv", "year", year_labels(chain.years), chain.detection_trend);
}

inline void write_detection_season(const fs::path& dir, const ChainOutput& chain) {
  std::vector<std::string> days;
  for (int d : chain.season_days) days.push_back(std::to_string(d));
  write_interval_table(dir / "detection_season.csv", "julian_day", days, chain.season);
}

// site_probs_<year>.csv: posterior median and sd of psi at every site.
inline void write_site_map(const fs::path& dir, const Dataset& ds, const ChainOutput& chain, int year_index) {
  const OccupancySurface surface(ds, chain.site_cell);
  const Eigen::MatrixXd psi = surface.psi_draws(chain, year_index);
  auto out = open_output(dir / ("site_probs_" + std::to_string(ds.years[static_cast<std::size_t>(year_index)]) + ".csv"));
  out << "site,easting,northing,median,sd\n";
  if (psi.rows() == 0) return;
  for (int s = 0; s < ds.num_sites(); ++s) {
    const Summary sm = summarize(column(psi, s), {});
    out << ds.site_ids[static_cast<std::size_t>(s)] << ',' << fmt(ds.sites.coords(s, 0)) << ','
        << fmt(ds.sites.coords(s, 1)) << ',' << fmt(sm.median) << ',' << fmt(sm.sd) << '\n';
  }
}

// Wide trace: draw index then one column per component.
inline void write_trace(const fs::path& path, const std::vector<std::string>& names, const Eigen::MatrixXd& draws,
                        long burnin, long thin) {
  auto out = open_output(path);
  out << "iteration";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index d = 0; d < draws.rows(); ++d) {
    out << burnin + (d + 1) * thin;
    for (Eigen::Index c = 0; c < draws.cols(); ++c) out << ',' << fmt(draws(d, c));
    out << '\n';
  }
}

inline std::vector<std::string> numbered(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

// trace_<param>.csv for every scalar, plus the vector-valued blocks.
inline std::vector<std::string> write_traces(const fs::path& dir, const ChainOutput& chain) {
  std::vector<std::string> files;
  const long burnin = chain.meta.burnin;
  const long thin = chain.meta.thin;
  for (std::size_t c = 0; c < chain.scalar_names.size(); ++c) {
    const std::string name = "trace_" + chain.scalar_names[c] + ".csv";
    write_trace(dir / name, {chain.scalar_names[c]}, chain.scalars.col(static_cast<Eigen::Index>(c)), burnin, thin);
    files.push_back(name);
  }
  std::vector<std::string> years;
  for (int y : chain.years) years.push_back(std::to_string(y));
  auto block = [&](const std::string& param, const std::vector<std::string>& names, const Eigen::MatrixXd& m) {
    if (m.cols() == 0) return;
    const std::string name = "trace_" + param + ".csv";
    write_trace(dir / name, names, m, burnin, thin);
    files.push_back(name);
  };
  block("b", years, chain.b);
  block("u", years, chain.u);
  block("beta_psi", chain.occupancy_names, chain.beta_psi);
  block("beta_p", chain.detection_names, chain.beta_p);
  block("index", years, chain.index);
  return files;
}

inline void write_gof_table(const fs::path& path, const std::string& label_name, const std::vector<std::string>& labels,
                            const GofReport& rep) {
  auto out = open_output(path);
  out << label_name << ",observed,median,lower95,upper95,lower99,upper99,class\n";
  for (const auto& e : rep.entries) {
    out << labels[static_cast<std::size_t>(e.id)] << ',' << fmt(e.observed) << ',' << fmt(e.median) << ','
        << fmt(e.lower95) << ',' << fmt(e.upper95) << ',' << fmt(e.lower99) << ',' << fmt(e.upper99) << ','
        << to_string(e.cls) << '\n';
  }
}

inline void write_int_matrix(const fs::path& path, const std::vector<std::string>& header, const Eigen::MatrixXi& m) {
  auto out = open_output(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
}

// Region labels are the SoD cell centres.
inline std::vector<std::string> region_labels(const Dataset& ds, double grid_step) {
  const SodGrid grid = build_sod_grid(ds.sites, grid_step);
  std::vector<std::string> out;
  for (int m = 0; m < grid.num_centers(); ++m) {
    out.push_back(fmt(grid.centers.coords(m, 0)) + " " + fmt(grid.centers.coords(m, 1)));
  }
  return out;
}

// Replicate statistics and observed totals, sufficient to rerun the
// goodness-of-fit report without the dataset.
inline void write_gof_draws(const fs::path& dir, const ChainOutput& chain, const std::vector<std::string>& regions) {
  write_int_matrix(dir / "gof_draws_year.csv", year_labels(chain.years), chain.gof_year);
  write_int_matrix(dir / "gof_draws_region.csv", regions, chain.gof_region);
  auto out = open_output(dir / "gof_observed.csv");
  out << "kind,label,observed\n";
  for (Eigen::Index t = 0; t < chain.observed_year.size(); ++t) {
    out << "year," << chain.years[static_cast<std::size_t>(t)] << ',' << chain.observed_year(t) << '\n';
  }
  for (Eigen::Index r = 0; r < chain.observed_region.size(); ++r) {
    out << "region," << regions[static_cast<std::size_t>(r)] << ',' << chain.observed_region(r) << '\n';
  }
}

inline void write_gof_reports(const fs::path& dir, const std::vector<std::string>& year_names,
                              const std::vector<std::string>& regions, const Eigen::MatrixXi& year_draws,
                              const Eigen::VectorXi& year_obs, const Eigen::MatrixXi& region_draws,
                              const Eigen::VectorXi& region_obs) {
  write_gof_table(dir / "gof_year.csv", "year", year_names, gof_report(year_draws, year_obs));
  write_gof_table(dir / "gof_region.csv", "region", regions, gof_report(region_draws, region_obs));
}

// ---- readers ---------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidInput, path.string() + ": empty file");
  t.header = csv::split(line, ',');
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (csv::trim(line).empty()) continue;
    auto f = csv::split(line, ',');
    if (f.size() != t.header.size()) {
      throw Error(ErrorKind::InvalidInput, path.string() + ": row " + std::to_string(row) + ": wrong field count");
    }
    t.rows.push_back(std::move(f));
  }
  return t;
}

inline Eigen::MatrixXi read_int_matrix(const fs::path& path, std::vector<std::string>* header = nullptr) {
  const Table t = read_table(path);
  Eigen::MatrixXi m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const auto v = csv::parse_number<int>(t.rows[r][c]);
      if (!v) throw Error(ErrorKind::InvalidInput, path.string() + ": non-integer entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
    }
  }
  if (header) *header = t.header;
  return m;
}

inline Eigen::MatrixXd read_double_columns(const Table& t, std::size_t first_col, const fs::path& path) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size() - first_col));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = first_col; c < t.header.size(); ++c) {
      const auto v = csv::parse_number<double>(t.rows[r][c]);
      if (!v) throw Error(ErrorKind::InvalidInput, path.string() + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - first_col)) = *v;
    }
  }
  return m;
}

// Reruns the goodness-of-fit classification from a chain directory.
inline void gof_from_directory(const fs::path& chain_dir, const fs::path& out_dir) {
  std::vector<std::string> years;
  std::vector<std::string> regions;
  const Eigen::MatrixXi year_draws = read_int_matrix(chain_dir / "gof_draws_year.csv", &years);
  const Eigen::MatrixXi region_draws = read_int_matrix(chain_dir / "gof_draws_region.csv", &regions);
  const Table obs = read_table(chain_dir / "gof_observed.csv");
  std::vector<int> yo;
  std::vector<int> ro;
  for (const auto& row : obs.rows) {
    const auto v = csv::parse_number<int>(row[2]);
    if (!v) throw Error(ErrorKind::InvalidInput, "gof_observed.csv: non-integer total");
    (row[0] == "year" ? yo : ro).push_back(*v);
  }
  const Eigen::VectorXi year_obs = Eigen::Map<Eigen::VectorXi>(yo.data(), static_cast<Eigen::Index>(yo.size()));
  const Eigen::VectorXi region_obs = Eigen::Map<Eigen::VectorXi>(ro.data(), static_cast<Eigen::Index>(ro.size()));
  write_gof_reports(out_dir, years, regions, year_draws, year_obs, region_draws, region_obs);
}

// summary.csv over every trace file of a chain directory.
inline void summary_from_directory(const fs::path& chain_dir, const fs::path& out_path, const std::vector<double>& levels) {
  std::vector<fs::path> traces;
  if (!fs::is_directory(chain_dir)) throw Error(ErrorKind::Io, "chain directory '" + chain_dir.string() + "' not found");
  for (const auto& e : fs::directory_iterator(chain_dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("trace_", 0) == 0 && e.path().extension() == ".csv") traces.push_back(e.path());
  }
  if (traces.empty()) throw Error(ErrorKind::InvalidInput, "no trace_*.csv files in '" + chain_dir.string() + "'");
  std::sort(traces.begin(), traces.end());
  auto out = open_output(out_path);
  out << "parameter,median,mean,sd,ess";
  for (double l : levels) {
    std::ostringstream pct;
    pct << std::setprecision(6) << 100.0 * l;
    out << ",lower" << pct.str() << ",upper" << pct.str();
  }
  out << '\n';
  for (const auto& path : traces) {
    const Table t = read_table(path);
    if (t.rows.empty()) throw Error(ErrorKind::InvalidInput, path.string() + ": no draws");
    const Eigen::MatrixXd m = read_double_columns(t, 1, path);
    const std::string stem = path.stem().string().substr(6);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const std::string col = t.header[static_cast<std::size_t>(c) + 1];
      const std::string label = m.cols() == 1 && col == stem ? stem : stem + "[" + col + "]";
      const Summary s = summarize(column(m, c), levels);
      out << label << ',' << fmt(s.median) << ',' << fmt(s.mean) << ',' << fmt(s.sd) << ',' << fmt(s.ess);
      for (const auto& iv : s.intervals) out << ',' << fmt(iv.lower) << ',' << fmt(iv.upper);
      out << '\n';
    }
  }
}

}  // namespace fastocc

#endif  // FASTOCC_REPORT_HPP
