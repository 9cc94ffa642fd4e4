#include "abundance/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "abundance/errors.hpp"
#include "abundance/trend.hpp"

namespace abundance::io {

namespace {

using nlohmann::json;

constexpr int kChainFormatVersion = 1;

[[noreturn]] void fail_at(const std::string& source, long line, const std::string& msg) {
  throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> lines;
  std::string source;

  int column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

Table read_table(std::istream& in, const std::string& source) {
  Table t;
  t.source = source;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (t.header.empty()) {
      std::set<std::string> seen;
      for (const auto& f : fields) {
        if (f.empty()) fail_at(source, n, "empty column name");
        if (!seen.insert(f).second) fail_at(source, n, "duplicate column '" + f + "'");
      }
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      fail_at(source, n, "expected " + std::to_string(t.header.size()) + " fields, found " +
                             std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.lines.push_back(n);
  }
  if (in.bad()) throw ValidationError(source + ": read error");
  if (t.header.empty()) throw ValidationError(source + ": empty file");
  return t;
}

std::int64_t parse_int(const std::string& s, const Table& t, std::size_t row, const std::string& col) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    fail_at(t.source, t.lines[row], "column '" + col + "': expected an integer, got '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const std::string& source, long line, const std::string& col) {
  double v = 0.0;
  const char* b = s.data();
  if (!s.empty() && s[0] == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    fail_at(source, line, "column '" + col + "': expected a finite number, got '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const Table& t, std::size_t row, const std::string& col) {
  return parse_real(s, t.source, t.lines[row], col);
}

// Shared layout of the CR and CPUE tables: keys, a value and an optional
// effort column, plus x_/z_ covariates.
struct Layout {
  int year = -1, day = -1, cls = -1;
  std::vector<int> value_cols;
  std::vector<int> x_cols, z_cols;
  std::vector<std::string> x_names, z_names;
};

Layout layout(const Table& t, const std::vector<std::string>& values) {
  Layout l;
  auto need = [&](const std::string& name) {
    const int c = t.column(name);
    if (c < 0) throw ValidationError(t.source + ": missing column '" + name + "'");
    return c;
  };
  l.year = need("year");
  l.day = need("day");
  l.cls = need("size_class");
  for (const auto& v : values) l.value_cols.push_back(need(v));
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& h = t.header[c];
    const int ci = static_cast<int>(c);
    if (ci == l.year || ci == l.day || ci == l.cls ||
        std::find(l.value_cols.begin(), l.value_cols.end(), ci) != l.value_cols.end())
      continue;
    if (h.rfind("x_", 0) == 0 && h.size() > 2) {
      l.x_cols.push_back(ci);
      l.x_names.push_back(h.substr(2));
    } else if (h.rfind("z_", 0) == 0 && h.size() > 2) {
      l.z_cols.push_back(ci);
      l.z_names.push_back(h.substr(2));
    } else {
      throw ValidationError(t.source + ": unknown column '" + h + "'");
    }
  }
  return l;
}

struct Grid {
  std::vector<std::int64_t> years;
  std::vector<std::vector<std::int64_t>> days;  // per year, sorted labels
  std::vector<std::int64_t> classes;
  // (t, k, j) -> row index
  std::vector<std::vector<std::vector<std::size_t>>> row;
};

Grid grid(const Table& t, const Layout& l) {
  if (t.rows.empty()) throw ValidationError(t.source + ": no data rows");
  std::map<std::int64_t, std::set<std::int64_t>> ydays;
  std::set<std::int64_t> classes;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto y = parse_int(t.rows[r][l.year], t, r, "year");
    const auto d = parse_int(t.rows[r][l.day], t, r, "day");
    const auto c = parse_int(t.rows[r][l.cls], t, r, "size_class");
    if (d < 1) fail_at(t.source, t.lines[r], "day must be >= 1");
    if (c < 1) fail_at(t.source, t.lines[r], "size_class must be >= 1");
    ydays[y].insert(d);
    classes.insert(c);
  }
  Grid g;
  for (const auto& [y, ds] : ydays) {
    g.years.push_back(y);
    g.days.emplace_back(ds.begin(), ds.end());
  }
  g.classes.assign(classes.begin(), classes.end());
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  const std::size_t J = g.classes.size();
  g.row.resize(g.years.size());
  for (std::size_t ti = 0; ti < g.years.size(); ++ti)
    g.row[ti].assign(g.days[ti].size(), std::vector<std::size_t>(J, kUnset));
  auto index = [](const std::vector<std::int64_t>& v, std::int64_t x) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ti = index(g.years, parse_int(t.rows[r][l.year], t, r, "year"));
    const auto ki = index(g.days[ti], parse_int(t.rows[r][l.day], t, r, "day"));
    const auto ji = index(g.classes, parse_int(t.rows[r][l.cls], t, r, "size_class"));
    auto& slot = g.row[ti][ki][ji];
    if (slot != kUnset)
      fail_at(t.source, t.lines[r], "duplicate row for year " + t.rows[r][l.year] + ", day " + t.rows[r][l.day] +
                                        ", size_class " + t.rows[r][l.cls]);
    slot = r;
  }
  for (std::size_t ti = 0; ti < g.years.size(); ++ti)
    for (std::size_t ki = 0; ki < g.days[ti].size(); ++ki)
      for (std::size_t ji = 0; ji < J; ++ji)
        if (g.row[ti][ki][ji] == kUnset)
          throw ValidationError(t.source + ": missing row for year " + std::to_string(g.years[ti]) + ", day " +
                                std::to_string(g.days[ti][ki]) + ", size_class " + std::to_string(g.classes[ji]));
  return g;
}

// Covariates, checked to be shared by classes (x) and constant within a year (z).
void covariates(const Table& t, const Layout& l, const Grid& g, std::vector<Eigen::MatrixXd>& x,
                Eigen::MatrixXd& z) {
  const auto qx = static_cast<Eigen::Index>(l.x_cols.size());
  const auto qz = static_cast<Eigen::Index>(l.z_cols.size());
  z.resize(static_cast<Eigen::Index>(g.years.size()), qz + 1);
  x.clear();
  for (std::size_t ti = 0; ti < g.years.size(); ++ti) {
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(g.days[ti].size()), qx + 1);
    const auto T = static_cast<Eigen::Index>(ti);
    z(T, 0) = 1.0;
    bool z_set = false;
    for (std::size_t ki = 0; ki < g.days[ti].size(); ++ki) {
      const auto K = static_cast<Eigen::Index>(ki);
      xt(K, 0) = 1.0;
      for (std::size_t ji = 0; ji < g.classes.size(); ++ji) {
        const std::size_t r = g.row[ti][ki][ji];
        for (Eigen::Index c = 0; c < qx; ++c) {
          const auto& name = t.header[static_cast<std::size_t>(l.x_cols[static_cast<std::size_t>(c)])];
          const double v = parse_real(t.rows[r][static_cast<std::size_t>(l.x_cols[static_cast<std::size_t>(c)])], t, r, name);
          if (ji == 0) {
            xt(K, c + 1) = v;
          } else if (v != xt(K, c + 1)) {
            fail_at(t.source, t.lines[r], "column '" + name + "' differs between size classes on the same day");
          }
        }
        for (Eigen::Index c = 0; c < qz; ++c) {
          const auto& name = t.header[static_cast<std::size_t>(l.z_cols[static_cast<std::size_t>(c)])];
          const double v = parse_real(t.rows[r][static_cast<std::size_t>(l.z_cols[static_cast<std::size_t>(c)])], t, r, name);
          if (!z_set) {
            z(T, c + 1) = v;
          } else if (v != z(T, c + 1)) {
            fail_at(t.source, t.lines[r], "column '" + name + "' is not constant within year " +
                                              std::to_string(g.years[ti]));
          }
        }
        z_set = true;
      }
    }
    x.push_back(std::move(xt));
  }
}

std::vector<int> int_years(const Grid& g, const std::string& source) {
  std::vector<int> out;
  for (auto y : g.years) {
    if (y < -1000000 || y > 1000000) throw ValidationError(source + ": year " + std::to_string(y) + " out of range");
    out.push_back(static_cast<int>(y));
  }
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

void write_covariate_header(std::ostream& out, const std::vector<std::string>& xn,
                            const std::vector<std::string>& zn) {
  for (const auto& n : xn) out << ",x_" << n;
  for (const auto& n : zn) out << ",z_" << n;
  out << '\n';
}

void write_covariates(std::ostream& out, const Eigen::MatrixXd& x, Eigen::Index k, const Eigen::MatrixXd& z,
                      Eigen::Index t) {
  for (Eigen::Index c = 1; c < x.cols(); ++c) out << ',' << format_double(x(k, c));
  for (Eigen::Index c = 1; c < z.cols(); ++c) out << ',' << format_double(z(t, c));
  out << '\n';
}

std::string update_name(AbundanceUpdate u) {
  return u == AbundanceUpdate::Collapsed ? "collapsed" : "random-walk";
}

AbundanceUpdate parse_update(const std::string& s) {
  if (s == "collapsed") return AbundanceUpdate::Collapsed;
  if (s == "random-walk") return AbundanceUpdate::RandomWalk;
  throw ValidationError("abundance_update must be 'collapsed' or 'random-walk', got '" + s + "'");
}

json config_json(const McmcConfig& c) {
  return json{{"iterations", c.iterations},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"seed", c.seed},
              {"adapt", c.adapt},
              {"target_univariate", c.target_univariate},
              {"target_block", c.target_block},
              {"inner_sweeps", c.inner_sweeps},
              {"abundance_update", update_name(c.abundance_update)}};
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError(where + ": unknown key '" + k + "'");
}

McmcConfig config_from_json(const json& j, McmcConfig c, const std::string& where) {
  check_keys(j, {"iterations", "burn_in", "thin", "seed", "adapt", "target_univariate", "target_block",
                 "inner_sweeps", "abundance_update"},
             where);
  if (j.contains("iterations")) c.iterations = j.at("iterations").get<long>();
  if (j.contains("burn_in")) c.burn_in = j.at("burn_in").get<long>();
  if (j.contains("thin")) c.thin = j.at("thin").get<long>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("adapt")) c.adapt = j.at("adapt").get<bool>();
  if (j.contains("target_univariate")) c.target_univariate = j.at("target_univariate").get<double>();
  if (j.contains("target_block")) c.target_block = j.at("target_block").get<double>();
  if (j.contains("inner_sweeps")) c.inner_sweeps = j.at("inner_sweeps").get<int>();
  if (j.contains("abundance_update")) c.abundance_update = parse_update(j.at("abundance_update").get<std::string>());
  return c;
}

Priors priors_from_json(const json& j, const std::string& where) {
  check_keys(j, {"beta_sd", "beta_mean", "coef_sd", "coef_mean", "ig_shape", "ig_rate", "iw_scale", "iw_dof"},
             where);
  Priors p;
  if (j.contains("beta_sd")) p.beta_sd = j.at("beta_sd").get<double>();
  if (j.contains("beta_mean")) p.beta_mean = j.at("beta_mean").get<std::vector<double>>();
  if (j.contains("coef_sd")) p.coef_sd = j.at("coef_sd").get<double>();
  if (j.contains("coef_mean")) p.coef_mean = j.at("coef_mean").get<std::vector<double>>();
  if (j.contains("ig_shape")) p.ig_shape = j.at("ig_shape").get<double>();
  if (j.contains("ig_rate")) p.ig_rate = j.at("ig_rate").get<double>();
  if (j.contains("iw_scale")) p.iw_scale = j.at("iw_scale").get<double>();
  if (j.contains("iw_dof")) p.iw_dof = j.at("iw_dof").get<double>();
  if (!(p.beta_sd > 0.0) || !(p.coef_sd > 0.0) || !(p.ig_shape > 0.0) || !(p.ig_rate > 0.0) ||
      !(p.iw_scale > 0.0) || p.iw_dof < 0.0)
    throw ValidationError(where + ": prior scales must be positive");
  return p;
}

std::string csv_safe(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CRDataset parse_cr_csv(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source);
  const Layout l = layout(t, {"catch", "recaptures"});
  const Grid g = grid(t, l);
  CRDataset d;
  d.years = int_years(g, source);
  d.n_classes = static_cast<int>(g.classes.size());
  d.x_names = l.x_names;
  d.z_names = l.z_names;
  covariates(t, l, g, d.x, d.z);
  for (std::size_t ti = 0; ti < g.years.size(); ++ti) {
    d.days.push_back(static_cast<int>(g.days[ti].size()));
    std::vector<std::vector<std::int64_t>> n(g.classes.size()), m(g.classes.size());
    for (std::size_t ji = 0; ji < g.classes.size(); ++ji)
      for (std::size_t ki = 0; ki < g.days[ti].size(); ++ki) {
        const std::size_t r = g.row[ti][ki][ji];
        const auto nv = parse_int(t.rows[r][static_cast<std::size_t>(l.value_cols[0])], t, r, "catch");
        const auto mv = parse_int(t.rows[r][static_cast<std::size_t>(l.value_cols[1])], t, r, "recaptures");
        if (nv < 0 || mv < 0) fail_at(source, t.lines[r], "counts must be non-negative");
        n[ji].push_back(nv);
        m[ji].push_back(mv);
      }
    d.catches.push_back(std::move(n));
    d.recaptures.push_back(std::move(m));
  }
  try {
    validate(d);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return d;
}

CRDataset ingest_cr_csv(const fs::path& path) {
  auto in = open_in(path);
  return parse_cr_csv(in, path.string());
}

CPUEDataset parse_cpue_csv(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source);
  const Layout l = layout(t, {"count", "effort_hours"});
  const Grid g = grid(t, l);
  CPUEDataset d;
  d.years = int_years(g, source);
  d.n_classes = static_cast<int>(g.classes.size());
  d.x_names = l.x_names;
  d.z_names = l.z_names;
  covariates(t, l, g, d.x, d.z);
  for (std::size_t ti = 0; ti < g.years.size(); ++ti) {
    d.days.push_back(static_cast<int>(g.days[ti].size()));
    std::vector<std::vector<std::int64_t>> y(g.classes.size());
    std::vector<double> effort;
    for (std::size_t ki = 0; ki < g.days[ti].size(); ++ki)
      for (std::size_t ji = 0; ji < g.classes.size(); ++ji) {
        const std::size_t r = g.row[ti][ki][ji];
        const auto yv = parse_int(t.rows[r][static_cast<std::size_t>(l.value_cols[0])], t, r, "count");
        const double e = parse_real(t.rows[r][static_cast<std::size_t>(l.value_cols[1])], t, r, "effort_hours");
        if (yv < 0) fail_at(source, t.lines[r], "count must be non-negative");
        if (!(e > 0.0)) fail_at(source, t.lines[r], "effort_hours must be positive");
        if (ji == 0) {
          effort.push_back(e);
        } else if (e != effort.back()) {
          fail_at(source, t.lines[r], "effort_hours differs between size classes on the same day");
        }
        y[ji].push_back(yv);
      }
    d.counts.push_back(std::move(y));
    d.effort.push_back(std::move(effort));
  }
  try {
    validate(d);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return d;
}

CPUEDataset ingest_cpue_csv(const fs::path& path) {
  auto in = open_in(path);
  return parse_cpue_csv(in, path.string());
}

std::map<std::string, CPUEDataset> ingest_cpue_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::map<std::string, CPUEDataset> out;
  for (const auto& f : files) out.emplace(f.stem().string(), ingest_cpue_csv(f));
  if (out.empty()) throw ValidationError(dir.string() + ": no .csv files");
  return out;
}

void write_cr_csv(std::ostream& out, const CRDataset& d) {
  out << "year,day,size_class,catch,recaptures";
  write_covariate_header(out, d.x_names, d.z_names);
  for (std::size_t t = 0; t < d.n_years(); ++t)
    for (int k = 0; k < d.days[t]; ++k)
      for (int j = 0; j < d.n_classes; ++j) {
        out << d.years[t] << ',' << k + 1 << ',' << j + 1 << ',' << d.catches[t][j][k] << ','
            << d.recaptures[t][j][k];
        write_covariates(out, d.x[t], k, d.z, static_cast<Eigen::Index>(t));
      }
}

void write_cpue_csv(std::ostream& out, const CPUEDataset& d) {
  out << "year,day,size_class,count,effort_hours";
  write_covariate_header(out, d.x_names, d.z_names);
  for (std::size_t t = 0; t < d.n_years(); ++t)
    for (int k = 0; k < d.days[t]; ++k)
      for (int j = 0; j < d.n_classes; ++j) {
        out << d.years[t] << ',' << k + 1 << ',' << j + 1 << ',' << d.counts[t][j][k] << ','
            << format_double(d.effort[t][k]);
        write_covariates(out, d.x[t], k, d.z, static_cast<Eigen::Index>(t));
      }
}

std::vector<double> relative_temperature(const std::vector<std::string>& dates,
                                         const std::vector<double>& temps) {
  if (dates.empty()) throw ValidationError("relative_temperature: no observations");
  if (dates.size() != temps.size())
    throw ValidationError("relative_temperature: dates and temperatures differ in length");
  std::vector<int> key(dates.size());
  for (std::size_t i = 0; i < dates.size(); ++i) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(dates[i].c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3 ||
        !std::chrono::year_month_day(std::chrono::year(y), std::chrono::month(m), std::chrono::day(d)).ok())
      throw ValidationError("relative_temperature: bad date '" + dates[i] + "'");
    if (!std::isfinite(temps[i])) throw ValidationError("relative_temperature: non-finite temperature");
    key[i] = static_cast<int>(m * 100 + d);
  }
  std::map<int, std::pair<double, int>> acc;
  for (std::size_t i = 0; i < key.size(); ++i) {
    acc[key[i]].first += temps[i];
    acc[key[i]].second += 1;
  }
  std::vector<double> out(key.size());
  for (std::size_t i = 0; i < key.size(); ++i) {
    const auto& [sum, n] = acc[key[i]];
    out[i] = temps[i] - sum / n;
  }
  return out;
}

void write_chains(std::ostream& out, const PosteriorChains& c) {
  json h;
  h["format"] = "abundance-chains";
  h["version"] = kChainFormatVersion;
  h["model"] = c.model;
  h["dataset_hash"] = c.dataset_hash;
  h["config"] = config_json(c.config);
  if (c.moments) {
    h["moments"] = json{{"names", c.moments->names}, {"mean", c.moments->mean}, {"sd", c.moments->sd}};
  } else {
    h["moments"] = nullptr;
  }
  h["acceptance"] = c.acceptance;
  h["numeric_meta"] = c.numeric_meta;
  h["text_meta"] = c.text_meta;
  json shapes = json::object();
  for (const auto& [name, p] : c.params) shapes[name] = p.shape;
  h["shapes"] = shapes;
  h["iterations"] = c.iterations;
  out << "# " << h.dump() << '\n';
  out << "iteration,parameter,index,value\n";
  for (std::size_t s = 0; s < c.iterations.size(); ++s)
    for (const auto& [name, p] : c.params)
      for (Eigen::Index i = 0; i < p.draws.cols(); ++i)
        out << c.iterations[s] << ',' << name << ',' << i << ','
            << format_double(p.draws(static_cast<Eigen::Index>(s), i)) << '\n';
}

PosteriorChains read_chains(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    fail_at(source, 1, "missing chain file header");
  PosteriorChains c;
  try {
    const json h = json::parse(line.substr(2));
    if (h.at("format").get<std::string>() != "abundance-chains") fail_at(source, 1, "not a chain file");
    const int version = h.at("version").get<int>();
    if (version != kChainFormatVersion)
      fail_at(source, 1, "unsupported chain format version " + std::to_string(version));
    c.model = h.at("model").get<std::string>();
    c.dataset_hash = h.at("dataset_hash").get<std::string>();
    c.config = config_from_json(h.at("config"), McmcConfig{}, source + ": config");
    if (!h.at("moments").is_null()) {
      const auto& m = h.at("moments");
      Standardization s;
      s.names = m.at("names").get<std::vector<std::string>>();
      s.mean = m.at("mean").get<std::vector<double>>();
      s.sd = m.at("sd").get<std::vector<double>>();
      if (s.names.size() != s.mean.size() || s.sd.size() != s.mean.size())
        fail_at(source, 1, "moments have inconsistent lengths");
      c.moments = std::move(s);
    }
    c.acceptance = h.at("acceptance").get<std::map<std::string, double>>();
    c.numeric_meta = h.at("numeric_meta").get<std::map<std::string, std::vector<double>>>();
    c.text_meta = h.at("text_meta").get<std::map<std::string, std::string>>();
    c.iterations = h.at("iterations").get<std::vector<long>>();
    const auto n = static_cast<long>(c.iterations.size());
    for (const auto& [name, shape] : h.at("shapes").items()) {
      auto dims = shape.get<std::vector<std::size_t>>();
      std::size_t size = 1;
      for (auto d : dims) size *= d;
      ParamBlock p;
      p.shape = std::move(dims);
      p.draws = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(size), std::nan(""));
      c.params.emplace(name, std::move(p));
    }
  } catch (const json::exception& e) {
    fail_at(source, 1, std::string("bad header: ") + e.what());
  }

  std::unordered_map<long, Eigen::Index> row_of;
  for (std::size_t s = 0; s < c.iterations.size(); ++s)
    if (!row_of.emplace(c.iterations[s], static_cast<Eigen::Index>(s)).second)
      fail_at(source, 1, "duplicate iteration in header");
  std::size_t expected = 0;
  for (const auto& [name, p] : c.params) expected += static_cast<std::size_t>(p.draws.size());

  long n = 1;
  if (!std::getline(in, line) || trim(line) != "iteration,parameter,index,value")
    fail_at(source, 2, "missing column line");
  ++n;
  std::size_t filled = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (f.size() != 4) fail_at(source, n, "expected 4 fields");
    long it = 0;
    std::size_t idx = 0;
    auto r1 = std::from_chars(f[0].data(), f[0].data() + f[0].size(), it);
    auto r2 = std::from_chars(f[2].data(), f[2].data() + f[2].size(), idx);
    if (f[0].empty() || r1.ec != std::errc() || r1.ptr != f[0].data() + f[0].size() || f[2].empty() ||
        r2.ec != std::errc() || r2.ptr != f[2].data() + f[2].size())
      fail_at(source, n, "bad iteration or index");
    auto rit = row_of.find(it);
    if (rit == row_of.end()) fail_at(source, n, "iteration " + f[0] + " not listed in header");
    auto pit = c.params.find(f[1]);
    if (pit == c.params.end()) fail_at(source, n, "unknown parameter '" + f[1] + "'");
    auto& draws = pit->second.draws;
    if (idx >= static_cast<std::size_t>(draws.cols())) fail_at(source, n, "index out of range");
    double& cell = draws(rit->second, static_cast<Eigen::Index>(idx));
    if (!std::isnan(cell)) fail_at(source, n, "duplicate value");
    cell = parse_real(f[3], source, n, "value");
    ++filled;
  }
  if (filled != expected)
    throw ValidationError(source + ": expected " + std::to_string(expected) + " values, found " +
                          std::to_string(filled));
  return c;
}

void save_chains(const fs::path& path, const PosteriorChains& chains) {
  atomic_write(path, [&](std::ostream& o) { write_chains(o, chains); });
}

PosteriorChains load_chains(const fs::path& path) {
  auto in = open_in(path);
  return read_chains(in, path.string());
}

void write_summary_csv(std::ostream& out, const PosteriorChains& c) {
  out << "kind,parameter,index,mean,lower,upper\n";
  std::vector<double> col;
  for (const auto& [name, p] : c.params)
    for (Eigen::Index i = 0; i < p.draws.cols(); ++i) {
      col.assign(p.draws.col(i).data(), p.draws.col(i).data() + p.draws.rows());
      const double mean = stats::mean(col);
      const auto ci = trend::interval(col, 0.95);
      out << "draws," << name << ',' << i << ',' << format_double(mean) << ',' << format_double(ci.lo) << ','
          << format_double(ci.hi) << '\n';
    }
  for (const auto& [name, rate] : c.acceptance)
    out << "acceptance," << name << ",0," << format_double(rate) << ",,\n";
}

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw ValidationError("cannot write " + tmp.string());
    try {
      body(o);
    } catch (...) {
      o.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
    o.flush();
    if (!o) {
      o.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ValidationError("write failed: " + path.string());
    }
  }
  fs::rename(tmp, path);
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  RunConfig rc;
  try {
    const json j = json::parse(text);
    check_keys(j, {"data", "cr_chains", "out", "seed", "mcmc", "priors", "transfer", "sim"}, source);
    if (j.contains("data")) rc.data = j.at("data").get<std::string>();
    if (j.contains("cr_chains")) rc.cr_chains = j.at("cr_chains").get<std::string>();
    if (j.contains("out")) rc.out = j.at("out").get<std::string>();
    if (j.contains("seed")) rc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mcmc")) {
      const auto& m = j.at("mcmc");
      if (m.is_object() && m.contains("seed")) throw ValidationError(source + ": mcmc: use the top-level seed");
      rc.mcmc = config_from_json(m, rc.mcmc, source + ": mcmc");
      try {
        rc.mcmc.validate();
      } catch (const ValidationError& e) {
        throw ValidationError(source + ": mcmc: " + e.what());
      }
    }
    if (j.contains("priors")) rc.priors = priors_from_json(j.at("priors"), source + ": priors");
    if (j.contains("transfer")) {
      const auto& t = j.at("transfer");
      check_keys(t, {"coefficient_map"}, source + ": transfer");
      if (t.contains("coefficient_map")) rc.coefficient_map = t.at("coefficient_map").get<std::string>();
    }
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      check_keys(s, {"scenario", "preset", "replicates", "days"}, source + ": sim");
      if (s.contains("scenario")) rc.sim.scenario = s.at("scenario").get<std::string>();
      if (s.contains("preset")) rc.sim.preset = s.at("preset").get<std::string>();
      if (s.contains("replicates")) rc.sim.replicates = s.at("replicates").get<int>();
      if (s.contains("days")) rc.sim.days = s.at("days").get<int>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

void write_replicate_csv(std::ostream& out, const sim::ReplicateResult& r, int n_classes) {
  out << "replicate,status,size_class,naive_mad,transfer_mad,naive_n_coverage,transfer_n_coverage,"
         "naive_u_covered,transfer_u_covered,truth_u,error\n";
  if (r.failed) {
    for (int j = 0; j < n_classes; ++j)
      out << r.replicate << ",failed," << j + 1 << ",,,,,,,," << csv_safe(r.error) << '\n';
    return;
  }
  for (std::size_t j = 0; j < r.classes.size(); ++j) {
    const auto& c = r.classes[j];
    out << r.replicate << ",ok," << j + 1 << ',' << format_double(c.naive_mad) << ','
        << format_double(c.transfer_mad) << ',' << format_double(c.naive_n_coverage) << ','
        << format_double(c.transfer_n_coverage) << ',' << (c.naive_u_covered ? 1 : 0) << ','
        << (c.transfer_u_covered ? 1 : 0) << ',' << format_double(c.truth_u) << ",\n";
  }
}

void write_scenario_summary_csv(std::ostream& out, const std::vector<sim::ScenarioSummary>& rows) {
  if (rows.empty()) throw ValidationError("no scenario rows to write");
  const std::size_t J = rows.front().classes.size();
  out << "scenario";
  for (std::size_t j = 1; j <= J; ++j) out << ",sigma2_" << j;
  for (const char* metric : {"mad", "n_coverage", "u_coverage"})
    for (std::size_t j = 1; j <= J; ++j) out << ',' << metric << "_naive_" << j << ',' << metric << "_transfer_" << j;
  out << ",completed,failed\n";
  for (const auto& s : rows) {
    if (s.classes.size() != J) throw ValidationError("scenario rows differ in class count");
    out << sim::to_string(s.id);
    for (double v : s.sigma2) out << ',' << format_double(v);
    for (const auto& c : s.classes) out << ',' << format_double(c.naive_mad) << ',' << format_double(c.transfer_mad);
    for (const auto& c : s.classes)
      out << ',' << format_double(c.naive_n_coverage) << ',' << format_double(c.transfer_n_coverage);
    for (const auto& c : s.classes)
      out << ',' << format_double(c.naive_u_coverage) << ',' << format_double(c.transfer_u_coverage);
    out << ',' << s.completed << ',' << s.failed << '\n';
  }
}

void write_truth_csv(std::ostream& out, const std::vector<int>& years, const Eigen::MatrixXd& truth) {
  if (static_cast<Eigen::Index>(years.size()) != truth.rows())
    throw ValidationError("truth table: years do not match rows");
  out << "year,size_class,N\n";
  for (Eigen::Index t = 0; t < truth.rows(); ++t)
    for (Eigen::Index j = 0; j < truth.cols(); ++j)
      out << years[static_cast<std::size_t>(t)] << ',' << j + 1 << ',' << format_double(truth(t, j)) << '\n';
}

Eigen::MatrixXd read_truth_csv(const fs::path& path, std::vector<int>* years_out) {
  auto in = open_in(path);
  const Table t = read_table(in, path.string());
  const int cy = t.column("year"), cj = t.column("size_class"), cn = t.column("N");
  if (cy < 0 || cj < 0 || cn < 0 || t.header.size() != 3)
    throw ValidationError(path.string() + ": expected columns year,size_class,N");
  std::map<std::int64_t, std::map<std::int64_t, double>> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto y = parse_int(t.rows[r][static_cast<std::size_t>(cy)], t, r, "year");
    const auto j = parse_int(t.rows[r][static_cast<std::size_t>(cj)], t, r, "size_class");
    if (!cells[y].emplace(j, parse_real(t.rows[r][static_cast<std::size_t>(cn)], t, r, "N")).second)
      fail_at(t.source, t.lines[r], "duplicate row");
  }
  if (cells.empty()) throw ValidationError(path.string() + ": no rows");
  const std::size_t J = cells.begin()->second.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(J));
  std::vector<int> years;
  Eigen::Index t_idx = 0;
  for (const auto& [y, row] : cells) {
    if (row.size() != J) throw ValidationError(path.string() + ": year " + std::to_string(y) + " is incomplete");
    Eigen::Index j_idx = 0;
    for (const auto& [j, v] : row) out(t_idx, j_idx++) = v;
    years.push_back(static_cast<int>(y));
    ++t_idx;
  }
  if (years_out) *years_out = std::move(years);
  return out;
}

}  // namespace abundance::io
