#ifndef FASTOCC_DATA_MODEL_HPP
#define FASTOCC_DATA_MODEL_HPP

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fastocc/error.hpp"
#include "fastocc/gp_kernel.hpp"

namespace fastocc {

// One row of the visit-level input: a single list submitted for a site on a day.
struct VisitRecord {
  std::string site_id;
  double easting = 0.0;
  double northing = 0.0;
  int year = 0;
  int julian_day = 1;
  int detected = 0;
  int list_length = 0;  // 0 when the input carries no list length
  std::vector<double> occupancy_extra;
  std::vector<double> detection_extra;
};

struct DataOptions {
  double radius_km = 50.0;
  bool filter_months = false;
  bool interactions = true;
  bool list_length = true;  // relative list length as a detection covariate
  int julian_powers = 3;
  std::vector<std::string> occupancy_covariates;
  std::vector<std::string> detection_covariates;
  char delimiter = ',';
};

struct ColumnScale {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;

  double apply(double x) const { return (x - mean) / sd; }
};

struct Dataset {
  std::vector<VisitRecord> records;  // after filtering, in input order

  // observations (N)
  std::vector<int> y;
  std::vector<int> unit_of_obs;  // k_i, 0-based
  std::vector<double> relative_list_length;
  Eigen::MatrixXd detection_x;  // N x p_det, standardised
  std::vector<ColumnScale> detection_scales;

  // sampling units (J)
  std::vector<int> unit_site;
  std::vector<int> unit_year;
  Eigen::MatrixXd occupancy_x;  // J x p_occ, standardised
  std::vector<ColumnScale> occupancy_scales;

  // observations grouped by unit (CSR)
  std::vector<int> unit_obs_offset;
  std::vector<int> unit_obs;

  // sites (S) and years (Y)
  std::vector<std::string> site_ids;
  SupportPoints sites;
  std::vector<int> years;

  // scales used to rebuild occupancy covariates for any (site, year) pair
  ColumnScale year_scale;
  ColumnScale easting_scale;
  ColumnScale northing_scale;
  Eigen::MatrixXd site_occupancy_extra;  // S x n_extra, standardised

  bool interactions = false;
  std::vector<std::string> warnings;

  int num_obs() const { return static_cast<int>(y.size()); }
  int num_units() const { return static_cast<int>(unit_site.size()); }
  int num_sites() const { return static_cast<int>(site_ids.size()); }
  int num_years() const { return static_cast<int>(years.size()); }
  int obs_year(int i) const { return unit_year[static_cast<std::size_t>(unit_of_obs[static_cast<std::size_t>(i)])]; }
};

// Standardise to zero mean and unit (population) standard deviation.
inline std::vector<double> standardize(const std::vector<double>& raw, ColumnScale& scale) {
  const double n = static_cast<double>(raw.size());
  if (raw.empty()) throw Error(ErrorKind::InvalidInput, "column '" + scale.name + "' is empty");
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : raw) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    throw Error(ErrorKind::InvalidInput, "constant column '" + scale.name + "' cannot be standardised");
  }
  scale.mean = mean;
  scale.sd = sd;
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean) / sd;
  return out;
}

// list_length / max list length over all visits at sites within `radius` of the
// visit's site (the site itself included). Sites are bucketed on a grid of cell
// size `radius` so only the 3x3 neighbouring buckets are scanned.
inline std::vector<double> relative_list_length(const SupportPoints& sites,
                                                const std::vector<int>& obs_site,
                                                const std::vector<int>& list_length,
                                                double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidParameter, "radius must be positive");
  const Eigen::Index n_sites = sites.size();
  std::vector<int> site_max(static_cast<std::size_t>(n_sites), 0);
  for (std::size_t i = 0; i < obs_site.size(); ++i) {
    if (list_length[i] < 1) {
      throw Error(ErrorKind::InvalidInput, "list length must be >= 1 (visit " + std::to_string(i + 1) + ")");
    }
    auto& m = site_max[static_cast<std::size_t>(obs_site[i])];
    m = std::max(m, list_length[i]);
  }

  std::map<std::pair<long, long>, std::vector<int>> buckets;
  const double x0 = sites.coords.col(0).minCoeff();
  const double y0 = sites.coords.col(1).minCoeff();
  auto bucket_of = [&](Eigen::Index s) {
    return std::make_pair(static_cast<long>(std::floor((sites.coords(s, 0) - x0) / radius)),
                          static_cast<long>(std::floor((sites.coords(s, 1) - y0) / radius)));
  };
  for (Eigen::Index s = 0; s < n_sites; ++s) {
    if (site_max[static_cast<std::size_t>(s)] > 0) buckets[bucket_of(s)].push_back(static_cast<int>(s));
  }

  const double r2 = radius * radius;
  std::vector<int> neighbourhood_max(static_cast<std::size_t>(n_sites), 0);
  for (Eigen::Index s = 0; s < n_sites; ++s) {
    if (site_max[static_cast<std::size_t>(s)] == 0) continue;
    const auto [bx, by] = bucket_of(s);
    int best = 0;
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        const auto it = buckets.find({bx + dx, by + dy});
        if (it == buckets.end()) continue;
        for (int other : it->second) {
          if ((sites.coords.row(s) - sites.coords.row(other)).squaredNorm() <= r2) {
            best = std::max(best, site_max[static_cast<std::size_t>(other)]);
          }
        }
      }
    }
    neighbourhood_max[static_cast<std::size_t>(s)] = best;
  }

  std::vector<double> out(obs_site.size());
  for (std::size_t i = 0; i < obs_site.size(); ++i) {
    out[i] = static_cast<double>(list_length[i]) /
             static_cast<double>(neighbourhood_max[static_cast<std::size_t>(obs_site[i])]);
  }
  return out;
}

inline int month_of(int year, int julian_day) {
  using namespace std::chrono;
  const sys_days d = sys_days{std::chrono::year{year} / January / 1} + days{julian_day - 1};
  return static_cast<int>(static_cast<unsigned>(year_month_day{d}.month()));
}

// Keeps only visits in calendar months in which the focal species was detected
// at least once (in any year).
inline std::vector<VisitRecord> filter_detection_months(std::vector<VisitRecord> records) {
  std::set<int> months;
  for (const auto& r : records) {
    if (r.detected == 1) months.insert(month_of(r.year, r.julian_day));
  }
  std::erase_if(records, [&](const VisitRecord& r) { return !months.contains(month_of(r.year, r.julian_day)); });
  return records;
}

namespace detail {

inline void put_column(Eigen::MatrixXd& m, Eigen::Index col, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), col) = v[i];
}

}  // namespace detail

// Detection covariates: [relative list length, jd, jd^2, jd^3, extras...], each
// column standardised after construction (powers are of the raw day).
inline void build_detection_design(Dataset& ds, const DataOptions& options) {
  const std::size_t n = ds.records.size();
  std::vector<std::vector<double>> cols;
  ds.detection_scales.clear();

  if (options.list_length) {
    ColumnScale sc{"relative_list_length"};
    cols.push_back(standardize(ds.relative_list_length, sc));
    ds.detection_scales.push_back(sc);
  }
  for (int power = 1; power <= options.julian_powers; ++power) {
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = std::pow(static_cast<double>(ds.records[i].julian_day), power);
    ColumnScale sc{power == 1 ? std::string("julian_day") : "julian_day^" + std::to_string(power)};
    cols.push_back(standardize(raw, sc));
    ds.detection_scales.push_back(sc);
  }
  for (std::size_t e = 0; e < options.detection_covariates.size(); ++e) {
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = ds.records[i].detection_extra.at(e);
    ColumnScale sc{options.detection_covariates[e]};
    cols.push_back(standardize(raw, sc));
    ds.detection_scales.push_back(sc);
  }

  ds.detection_x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) detail::put_column(ds.detection_x, static_cast<Eigen::Index>(c), cols[c]);
}

// Occupancy covariates: standardised (year x easting), (year x northing) products
// of standardised main effects, followed by user covariates. Main effects of
// year and location are left to the random effects.
inline void build_occupancy_design(Dataset& ds, const DataOptions& options) {
  const std::size_t J = ds.unit_site.size();
  std::vector<std::vector<double>> cols;
  ds.occupancy_scales.clear();
  ds.interactions = options.interactions;

  if (options.interactions) {
    std::vector<double> yr(J);
    std::vector<double> ea(J);
    std::vector<double> no(J);
    for (std::size_t j = 0; j < J; ++j) {
      const auto s = static_cast<Eigen::Index>(ds.unit_site[j]);
      yr[j] = ds.years[static_cast<std::size_t>(ds.unit_year[j])];
      ea[j] = ds.sites.coords(s, 0);
      no[j] = ds.sites.coords(s, 1);
    }
    ds.year_scale = ColumnScale{"year"};
    ds.easting_scale = ColumnScale{"easting"};
    ds.northing_scale = ColumnScale{"northing"};
    const auto ys = standardize(yr, ds.year_scale);
    const auto es = standardize(ea, ds.easting_scale);
    const auto ns = standardize(no, ds.northing_scale);
    std::vector<double> ye(J);
    std::vector<double> yn(J);
    for (std::size_t j = 0; j < J; ++j) {
      ye[j] = ys[j] * es[j];
      yn[j] = ys[j] * ns[j];
    }
    ColumnScale sc_e{"year:easting"};
    ColumnScale sc_n{"year:northing"};
    cols.push_back(standardize(ye, sc_e));
    cols.push_back(standardize(yn, sc_n));
    ds.occupancy_scales.push_back(sc_e);
    ds.occupancy_scales.push_back(sc_n);
  }

  // user covariates are taken from the first visit of each unit
  std::vector<int> first_obs(J, -1);
  for (std::size_t i = 0; i < ds.unit_of_obs.size(); ++i) {
    auto& f = first_obs[static_cast<std::size_t>(ds.unit_of_obs[i])];
    if (f < 0) f = static_cast<int>(i);
  }
  const auto n_extra = options.occupancy_covariates.size();
  ds.site_occupancy_extra = Eigen::MatrixXd::Zero(ds.num_sites(), static_cast<Eigen::Index>(n_extra));
  for (std::size_t e = 0; e < n_extra; ++e) {
    std::vector<double> raw(J);
    for (std::size_t j = 0; j < J; ++j) {
      raw[j] = ds.records[static_cast<std::size_t>(first_obs[j])].occupancy_extra.at(e);
    }
    ColumnScale sc{options.occupancy_covariates[e]};
    const auto col = standardize(raw, sc);
    std::vector<bool> seen(static_cast<std::size_t>(ds.num_sites()), false);
    for (std::size_t j = 0; j < J; ++j) {
      const auto s = static_cast<std::size_t>(ds.unit_site[j]);
      if (!seen[s]) {
        ds.site_occupancy_extra(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(e)) = col[j];
        seen[s] = true;
      }
    }
    cols.push_back(col);
    ds.occupancy_scales.push_back(sc);
  }

  ds.occupancy_x.resize(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) detail::put_column(ds.occupancy_x, static_cast<Eigen::Index>(c), cols[c]);
}

// Occupancy covariate row for an arbitrary (site, year) pair, including pairs
// that are not sampling units.
inline Eigen::VectorXd occupancy_row(const Dataset& ds, int site, int year_index) {
  const auto p = ds.occupancy_x.cols();
  Eigen::VectorXd row(p);
  Eigen::Index c = 0;
  if (ds.interactions) {
    const double ys = ds.year_scale.apply(ds.years[static_cast<std::size_t>(year_index)]);
    const double es = ds.easting_scale.apply(ds.sites.coords(site, 0));
    const double ns = ds.northing_scale.apply(ds.sites.coords(site, 1));
    row(c) = ds.occupancy_scales[0].apply(ys * es);
    row(c + 1) = ds.occupancy_scales[1].apply(ys * ns);
    c += 2;
  }
  for (Eigen::Index e = 0; c < p; ++c, ++e) row(c) = ds.site_occupancy_extra(site, e);
  return row;
}

// Throws unless every foreign key is in range and the unit table is consistent.
inline void validate(const Dataset& ds) {
  const int J = ds.num_units();
  const int S = ds.num_sites();
  const int Y = ds.num_years();
  if (static_cast<int>(ds.unit_of_obs.size()) != ds.num_obs()) {
    throw Error(ErrorKind::InvalidInput, "validate: observation arrays disagree in length");
  }
  for (int k : ds.unit_of_obs) {
    if (k < 0 || k >= J) throw Error(ErrorKind::InvalidInput, "validate: unit index out of range");
  }
  std::set<std::pair<int, int>> pairs;
  for (int j = 0; j < J; ++j) {
    const int s = ds.unit_site[static_cast<std::size_t>(j)];
    const int t = ds.unit_year[static_cast<std::size_t>(j)];
    if (s < 0 || s >= S) throw Error(ErrorKind::InvalidInput, "validate: site index out of range");
    if (t < 0 || t >= Y) throw Error(ErrorKind::InvalidInput, "validate: year index out of range");
    if (!pairs.insert({s, t}).second) throw Error(ErrorKind::InvalidInput, "validate: duplicate sampling unit");
  }
  for (int v : ds.y) {
    if (v != 0 && v != 1) throw Error(ErrorKind::InvalidInput, "validate: detections must be 0/1");
  }
  if (ds.sites.size() != S) throw Error(ErrorKind::InvalidInput, "validate: site table size mismatch");
  if (ds.detection_x.rows() != ds.num_obs() || ds.occupancy_x.rows() != J) {
    throw Error(ErrorKind::InvalidInput, "validate: design matrix row count mismatch");
  }
}

// Derives sites, years and sampling units from visit records and builds both
// design matrices. Sites and units are indexed in order of first appearance,
// years in ascending order.
inline Dataset build_dataset(std::vector<VisitRecord> records, const DataOptions& options) {
  if (options.filter_months) records = filter_detection_months(std::move(records));
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "no observations");

  Dataset ds;
  ds.records = std::move(records);
  const auto& recs = ds.records;

  bool any_detection = false;
  std::unordered_map<std::string, int> site_index;
  std::vector<double> xs;
  std::vector<double> ys;
  std::set<int> year_set;
  for (const auto& r : recs) {
    if (r.detected != 0 && r.detected != 1) throw Error(ErrorKind::InvalidInput, "detected must be 0 or 1");
    if (!std::isfinite(r.easting) || !std::isfinite(r.northing)) {
      throw Error(ErrorKind::InvalidInput, "non-finite coordinates for site '" + r.site_id + "'");
    }
    any_detection = any_detection || r.detected == 1;
    auto [it, inserted] = site_index.emplace(r.site_id, static_cast<int>(ds.site_ids.size()));
    if (inserted) {
      ds.site_ids.push_back(r.site_id);
      xs.push_back(r.easting);
      ys.push_back(r.northing);
    } else if (std::abs(xs[static_cast<std::size_t>(it->second)] - r.easting) > 1e-9 ||
               std::abs(ys[static_cast<std::size_t>(it->second)] - r.northing) > 1e-9) {
      ds.warnings.push_back("site '" + r.site_id + "' has inconsistent coordinates; first kept");
    }
    year_set.insert(r.year);
  }
  if (!any_detection) throw Error(ErrorKind::InvalidInput, "no detections of the focal species");

  Eigen::MatrixXd coords(static_cast<Eigen::Index>(xs.size()), 2);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    coords(static_cast<Eigen::Index>(s), 0) = xs[s];
    coords(static_cast<Eigen::Index>(s), 1) = ys[s];
  }
  ds.sites = SupportPoints(std::move(coords));
  ds.years.assign(year_set.begin(), year_set.end());
  std::map<int, int> year_index;
  for (std::size_t t = 0; t < ds.years.size(); ++t) year_index[ds.years[t]] = static_cast<int>(t);

  std::map<std::pair<int, int>, int> unit_index;
  std::set<std::tuple<std::string, int, int, int>> seen_rows;
  std::size_t repeats = 0;
  std::string first_repeat;
  std::vector<int> obs_site(recs.size());
  std::vector<int> list_lengths(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const int s = site_index.at(r.site_id);
    const int t = year_index.at(r.year);
    auto [it, inserted] = unit_index.emplace(std::make_pair(s, t), static_cast<int>(ds.unit_site.size()));
    if (inserted) {
      ds.unit_site.push_back(s);
      ds.unit_year.push_back(t);
    }
    ds.unit_of_obs.push_back(it->second);
    ds.y.push_back(r.detected);
    obs_site[i] = s;
    list_lengths[i] = r.list_length;
    if (!seen_rows.emplace(r.site_id, r.year, r.julian_day, r.detected).second) {
      if (repeats++ == 0) {
        first_repeat = "site '" + r.site_id + "', year " + std::to_string(r.year) + ", day " +
                       std::to_string(r.julian_day);
      }
    }
  }
  if (repeats > 0) {
    ds.warnings.push_back(std::to_string(repeats) + " repeated (site, year, day, detected) rows, first at " +
                          first_repeat);
  }

  const auto J = ds.unit_site.size();
  ds.unit_obs_offset.assign(J + 1, 0);
  for (int k : ds.unit_of_obs) ++ds.unit_obs_offset[static_cast<std::size_t>(k) + 1];
  for (std::size_t j = 0; j < J; ++j) ds.unit_obs_offset[j + 1] += ds.unit_obs_offset[j];
  ds.unit_obs.resize(ds.unit_of_obs.size());
  {
    auto cursor = ds.unit_obs_offset;
    for (std::size_t i = 0; i < ds.unit_of_obs.size(); ++i) {
      ds.unit_obs[static_cast<std::size_t>(cursor[static_cast<std::size_t>(ds.unit_of_obs[i])]++)] = static_cast<int>(i);
    }
  }

  if (options.list_length) {
    ds.relative_list_length = relative_list_length(ds.sites, obs_site, list_lengths, options.radius_km);
  }
  build_detection_design(ds, options);
  build_occupancy_design(ds, options);
  validate(ds);
  return ds;
}

}  // namespace fastocc

#endif  // FASTOCC_DATA_MODEL_HPP
