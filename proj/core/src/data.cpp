#include "abundance/data.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "abundance/errors.hpp"

namespace abundance {

namespace {

std::string cell(const std::vector<int>& years, std::size_t t, int j, int k) {
  std::ostringstream os;
  os << "(year " << years[t] << ", class " << j + 1 << ", day " << k + 1 << ")";
  return os.str();
}

template <typename Data>
void validate_layout(const Data& d, const char* what) {
  const std::size_t T = d.years.size();
  if (T == 0) throw ValidationError(std::string(what) + ": no years");
  if (d.n_classes <= 0) throw ValidationError(std::string(what) + ": no size classes");
  if (d.days.size() != T || d.x.size() != T || static_cast<std::size_t>(d.z.rows()) != T)
    throw ValidationError(std::string(what) + ": per-year arrays have inconsistent lengths");
  for (std::size_t t = 1; t < T; ++t)
    if (d.years[t] <= d.years[t - 1])
      throw ValidationError(std::string(what) + ": years must be strictly increasing");
  const Eigen::Index qx = d.x.front().cols();
  if (qx < 1) throw ValidationError(std::string(what) + ": missing detection intercept");
  if (d.z.cols() < 1) throw ValidationError(std::string(what) + ": missing year intercept");
  if (!d.z.allFinite()) throw ValidationError(std::string(what) + ": non-finite year covariate");
  for (std::size_t t = 0; t < T; ++t) {
    if (d.days[t] < 1)
      throw ValidationError(std::string(what) + ": year " + std::to_string(d.years[t]) + " has no sampling days");
    if (d.x[t].rows() != d.days[t] || d.x[t].cols() != qx)
      throw ValidationError(std::string(what) + ": detection covariates have inconsistent dimensions in year " +
                            std::to_string(d.years[t]));
    if (!d.x[t].allFinite())
      throw ValidationError(std::string(what) + ": non-finite detection covariate in year " +
                            std::to_string(d.years[t]));
  }
}

class Fnv1a {
 public:
  void add(const std::string& s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 0x100000001B3ULL;
    }
  }
  void add(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    add(std::string(buf));
  }
  void add(std::int64_t v) { add(std::to_string(v) + ";"); }
  std::string hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

template <typename Data>
void hash_common(Fnv1a& h, const Data& d) {
  for (int y : d.years) h.add(static_cast<std::int64_t>(y));
  h.add(static_cast<std::int64_t>(d.n_classes));
  for (int k : d.days) h.add(static_cast<std::int64_t>(k));
  for (const auto& x : d.x)
    for (Eigen::Index i = 0; i < x.size(); ++i) h.add(x.data()[i]);
  for (Eigen::Index i = 0; i < d.z.size(); ++i) h.add(d.z.data()[i]);
  for (const auto& n : d.x_names) h.add(n);
  for (const auto& n : d.z_names) h.add(n);
}

}  // namespace

std::int64_t CRDataset::distinct(std::size_t t, int j) const {
  std::int64_t u = 0;
  for (int k = 0; k < days[t]; ++k) u += catches[t][j][k] - recaptures[t][j][k];
  return u;
}

std::int64_t CRDataset::marked_pool(std::size_t t, int j, int k) const {
  std::int64_t m = 0;
  for (int l = 0; l < k; ++l) m += catches[t][j][l] - recaptures[t][j][l];
  return m;
}

std::size_t CRDataset::n_cells() const {
  std::size_t n = 0;
  for (int d : days) n += static_cast<std::size_t>(d) * static_cast<std::size_t>(n_classes);
  return n;
}

void validate(const CRDataset& d) {
  validate_layout(d, "CR dataset");
  const std::size_t T = d.years.size();
  if (d.catches.size() != T || d.recaptures.size() != T)
    throw ValidationError("CR dataset: count arrays have inconsistent lengths");
  for (std::size_t t = 0; t < T; ++t) {
    if (static_cast<int>(d.catches[t].size()) != d.n_classes ||
        static_cast<int>(d.recaptures[t].size()) != d.n_classes)
      throw ValidationError("CR dataset: class dimension mismatch in year " + std::to_string(d.years[t]));
    for (int j = 0; j < d.n_classes; ++j) {
      if (static_cast<int>(d.catches[t][j].size()) != d.days[t] ||
          static_cast<int>(d.recaptures[t][j].size()) != d.days[t])
        throw ValidationError("CR dataset: day dimension mismatch in year " + std::to_string(d.years[t]));
      std::int64_t pool = 0;
      for (int k = 0; k < d.days[t]; ++k) {
        const auto n = d.catches[t][j][k];
        const auto m = d.recaptures[t][j][k];
        if (n < 0 || m < 0) throw ValidationError("CR dataset: negative count at " + cell(d.years, t, j, k));
        if (m > n)
          throw ValidationError("CR dataset: recaptures exceed catch at " + cell(d.years, t, j, k));
        if (k == 0 && m != 0)
          throw ValidationError("CR dataset: recaptures on the first day at " + cell(d.years, t, j, k));
        if (m > pool)
          throw ValidationError("CR dataset: recaptures exceed marked pool at " + cell(d.years, t, j, k));
        pool += n - m;
      }
    }
  }
}

void validate(const CPUEDataset& d) {
  validate_layout(d, "CPUE dataset");
  const std::size_t T = d.years.size();
  if (d.counts.size() != T || d.effort.size() != T)
    throw ValidationError("CPUE dataset: count arrays have inconsistent lengths");
  for (std::size_t t = 0; t < T; ++t) {
    if (static_cast<int>(d.effort[t].size()) != d.days[t])
      throw ValidationError("CPUE dataset: effort dimension mismatch in year " + std::to_string(d.years[t]));
    for (int k = 0; k < d.days[t]; ++k)
      if (!(d.effort[t][k] > 0.0) || !std::isfinite(d.effort[t][k]))
        throw ValidationError("CPUE dataset: non-positive effort at " + cell(d.years, t, 0, k));
    if (static_cast<int>(d.counts[t].size()) != d.n_classes)
      throw ValidationError("CPUE dataset: class dimension mismatch in year " + std::to_string(d.years[t]));
    for (int j = 0; j < d.n_classes; ++j) {
      if (static_cast<int>(d.counts[t][j].size()) != d.days[t])
        throw ValidationError("CPUE dataset: day dimension mismatch in year " + std::to_string(d.years[t]));
      for (int k = 0; k < d.days[t]; ++k)
        if (d.counts[t][j][k] < 0) throw ValidationError("CPUE dataset: negative count at " + cell(d.years, t, j, k));
    }
  }
}

Standardization compute_moments(const std::vector<Eigen::MatrixXd>& x,
                                const std::vector<std::string>& names) {
  Standardization s;
  if (x.empty()) return s;
  const Eigen::Index q = x.front().cols();
  s.names = names;
  s.names.resize(static_cast<std::size_t>(q - 1));
  for (Eigen::Index c = 1; c < q; ++c) {
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (const auto& m : x)
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        sum += m(r, c);
        ++n;
      }
    const double mu = sum / static_cast<double>(n);
    for (const auto& m : x)
      for (Eigen::Index r = 0; r < m.rows(); ++r) sum2 += (m(r, c) - mu) * (m(r, c) - mu);
    double sd = n > 1 ? std::sqrt(sum2 / static_cast<double>(n - 1)) : 0.0;
    if (!(sd > 1e-12)) sd = 1.0;
    s.mean.push_back(mu);
    s.sd.push_back(sd);
  }
  return s;
}

void apply_moments(std::vector<Eigen::MatrixXd>& x, const Standardization& m) {
  for (auto& mat : x) {
    if (static_cast<std::size_t>(mat.cols()) != m.size() + 1)
      throw ValidationError("standardization moments do not match the covariate columns");
    for (std::size_t c = 0; c < m.size(); ++c) {
      const auto col = static_cast<Eigen::Index>(c + 1);
      mat.col(col) = (mat.col(col).array() - m.mean[c]) / m.sd[c];
    }
  }
}

std::string dataset_hash(const CRDataset& d) {
  Fnv1a h;
  h.add(std::string("cr;"));
  hash_common(h, d);
  for (const auto& year : d.catches)
    for (const auto& cls : year)
      for (auto v : cls) h.add(v);
  for (const auto& year : d.recaptures)
    for (const auto& cls : year)
      for (auto v : cls) h.add(v);
  return h.hex();
}

std::string dataset_hash(const CPUEDataset& d) {
  Fnv1a h;
  h.add(std::string("cpue;"));
  hash_common(h, d);
  for (const auto& year : d.counts)
    for (const auto& cls : year)
      for (auto v : cls) h.add(v);
  for (const auto& year : d.effort)
    for (double e : year) h.add(e);
  return h.hex();
}

}  // namespace abundance
