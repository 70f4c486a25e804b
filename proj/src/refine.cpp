#include "xltm/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xltm {
namespace {

constexpr std::string_view kModule = "refine";

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

using ColMatrix = Eigen::MatrixXd;

ColMatrix orthonormal_basis(const ColMatrix& Y) {
  Eigen::HouseholderQR<ColMatrix> qr(Y);
  return qr.householderQ() * ColMatrix::Identity(Y.rows(), Y.cols());
}

struct LanguageGroups {
  std::vector<std::string> languages;
  std::vector<int> group;  // 0 or 1 per row
  std::size_t n[2] = {0, 0};
};

LanguageGroups group_rows(const std::vector<std::string>& labels, std::size_t rows) {
  if (labels.size() != rows)
    fail(std::to_string(labels.size()) + " language labels for " + std::to_string(rows) + " rows");
  LanguageGroups g;
  g.languages = labels;
  std::sort(g.languages.begin(), g.languages.end());
  g.languages.erase(std::unique(g.languages.begin(), g.languages.end()), g.languages.end());
  if (g.languages.size() != 2)
    fail("t-test needs exactly 2 languages, found " + std::to_string(g.languages.size()));
  g.group.reserve(rows);
  for (const auto& l : labels) {
    const int k = l == g.languages[0] ? 0 : 1;
    g.group.push_back(k);
    ++g.n[k];
  }
  for (int k = 0; k < 2; ++k)
    if (g.n[k] < 2)
      fail("language '" + g.languages[static_cast<std::size_t>(k)] + "' has " +
           std::to_string(g.n[k]) + " rows; the t-test needs at least 2");
  return g;
}

}  // namespace

SvdResult truncated_svd(const Matrix& E, std::size_t r, std::uint64_t seed, const SvdOptions& options) {
  const auto m = static_cast<std::size_t>(E.rows());
  const auto d = static_cast<std::size_t>(E.cols());
  if (m == 0) fail("cannot decompose an empty matrix");
  const std::size_t full = std::min(m, d);
  if (r < 1 || r > full)
    fail("r=" + std::to_string(r) + " out of range [1, " + std::to_string(full) + "]");
  if (!E.allFinite()) fail("matrix has non-finite entries");

  const auto k = static_cast<Eigen::Index>(std::min(r + options.oversampling, full));
  ColMatrix omega(static_cast<Eigen::Index>(d), k);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < omega.rows(); ++i)
    for (Eigen::Index j = 0; j < k; ++j) omega(i, j) = rng.normal();

  ColMatrix Q = orthonormal_basis(E * omega);
  for (std::size_t it = 0; it < options.power_iterations; ++it) {
    const ColMatrix Z = orthonormal_basis(E.transpose() * Q);
    Q = orthonormal_basis(E * Z);
  }

  const ColMatrix B = Q.transpose() * E;
  Eigen::BDCSVD<ColMatrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const auto rr = static_cast<Eigen::Index>(r);
  ColMatrix U = Q * svd.matrixU().leftCols(rr);
  ColMatrix V = svd.matrixV().leftCols(rr);
  for (Eigen::Index j = 0; j < rr; ++j) {
    Eigen::Index pivot = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      if (std::abs(V(i, j)) > best) {
        best = std::abs(V(i, j));
        pivot = i;
      }
    }
    if (V(pivot, j) < 0.0) {
      V.col(j) *= -1.0;
      U.col(j) *= -1.0;
    }
  }

  SvdResult out;
  out.U = U;
  out.S = svd.singularValues().head(rr);
  out.Vt = V.transpose();
  out.rank = r;
  return out;
}

LddReport ldd_t_statistics(const Matrix& X, const std::vector<std::string>& labels) {
  const auto rows = static_cast<std::size_t>(X.rows());
  const auto cols = static_cast<std::size_t>(X.cols());
  const LanguageGroups g = group_rows(labels, rows);

  std::vector<double> sum[2] = {std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
  for (std::size_t i = 0; i < rows; ++i) {
    auto& s = sum[g.group[i]];
    for (std::size_t j = 0; j < cols; ++j) s[j] += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  std::vector<double> mean[2] = {std::vector<double>(cols), std::vector<double>(cols)};
  for (int k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < cols; ++j) mean[k][j] = sum[k][j] / static_cast<double>(g.n[k]);

  std::vector<double> ss[2] = {std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
  for (std::size_t i = 0; i < rows; ++i) {
    const int k = g.group[i];
    for (std::size_t j = 0; j < cols; ++j) {
      const double dev = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - mean[k][j];
      ss[k][j] += dev * dev;
    }
  }

  LddReport report;
  report.languages = g.languages;
  report.dims.reserve(cols);
  const double n1 = static_cast<double>(g.n[0]);
  const double n2 = static_cast<double>(g.n[1]);
  for (std::size_t j = 0; j < cols; ++j) {
    const double v1 = ss[0][j] / (n1 - 1.0);
    const double v2 = ss[1][j] / (n2 - 1.0);
    DimensionStat s;
    s.dim = j;
    s.mean_l1 = mean[0][j];
    s.mean_l2 = mean[1][j];
    s.t = (s.mean_l1 - s.mean_l2) / std::sqrt(v1 / n1 + v2 / n2 + kWelchEpsilon);
    s.abs_t = std::abs(s.t);
    report.dims.push_back(s);
  }
  report.sorted_dims.resize(cols);
  std::iota(report.sorted_dims.begin(), report.sorted_dims.end(), std::size_t{0});
  std::stable_sort(report.sorted_dims.begin(), report.sorted_dims.end(),
                   [&](std::size_t a, std::size_t b) { return report.dims[a].abs_t > report.dims[b].abs_t; });
  return report;
}

std::string to_string(RefineMethod method) {
  switch (method) {
    case RefineMethod::oe: return "oe";
    case RefineMethod::svd: return "svd";
    case RefineMethod::usvd: return "usvd";
    case RefineMethod::svdlr: return "svdlr";
  }
  return "unknown";
}

RefineMethod parse_refine_method(const std::string& name) {
  if (name == "oe") return RefineMethod::oe;
  if (name == "svd") return RefineMethod::svd;
  if (name == "usvd" || name == "u-svd") return RefineMethod::usvd;
  if (name == "svdlr" || name == "svd-lr") return RefineMethod::svdlr;
  fail("unknown refinement method '" + name + "' (expected oe, svd, usvd or svdlr)");
}

RefinedEmbeddings refine(const EmbeddingMatrix& E, RefineMethod method, std::size_t r,
                         const std::vector<std::string>& labels, std::uint64_t seed,
                         const RefineOptions& options) {
  RefinedEmbeddings out;
  out.ids = E.ids;
  out.method = method;
  out.r_requested = r;

  if (method == RefineMethod::oe) {
    out.data = E.data;
    return out;
  }
  if (method == RefineMethod::svdlr) {
    if (options.svdlr_remove < 1) fail("svdlr must remove at least one dimension");
    if (r < options.svdlr_remove + 1)
      fail("svdlr needs r >= " + std::to_string(options.svdlr_remove + 1) + ", got r=" + std::to_string(r));
    // Validate labels before paying for the decomposition.
    group_rows(labels, E.rows());
  }

  SvdResult svd = truncated_svd(E.data, r, seed, options.svd);
  out.singular_values = svd.S;
  if (method == RefineMethod::usvd) {
    out.data = svd.U;
    return out;
  }

  Matrix scaled = svd.U * svd.S.asDiagonal();
  if (method == RefineMethod::svd) {
    out.data = std::move(scaled);
    return out;
  }

  const LddReport ldd = ldd_t_statistics(scaled, labels);
  std::vector<bool> drop(r, false);
  for (std::size_t i = 0; i < options.svdlr_remove; ++i) {
    const std::size_t dim = ldd.sorted_dims[i];
    drop[dim] = true;
    out.removed_dims.push_back(dim);
    out.removed_t.push_back(ldd.dims[dim].t);
  }
  out.data.resize(scaled.rows(), static_cast<Eigen::Index>(r - options.svdlr_remove));
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < r; ++j)
    if (!drop[j]) out.data.col(col++) = scaled.col(static_cast<Eigen::Index>(j));
  return out;
}

HistogramData export_dimension_histograms(const Matrix& X, const std::vector<std::string>& labels,
                                          std::size_t top_n, std::size_t bins) {
  if (top_n < 1) fail("top_n must be >= 1");
  if (bins < 2) fail("bins must be >= 2");
  const LddReport ldd = ldd_t_statistics(X, labels);
  const std::size_t top = std::min(top_n, ldd.sorted_dims.size());

  HistogramData data;
  for (std::size_t rank = 0; rank < top; ++rank) {
    const std::size_t dim = ldd.sorted_dims[rank];
    const auto column = X.col(static_cast<Eigen::Index>(dim));
    double lo = column.minCoeff();
    double hi = column.maxCoeff();
    if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(lo)))) {
      const double widen = std::max(1e-9, 1e-9 * std::abs(lo));
      lo -= widen;
      hi += widen;
    }

    DimensionHistogram h;
    h.dim = dim;
    h.t = ldd.dims[dim].t;
    h.bin_edges.resize(bins + 1);
    for (std::size_t b = 0; b < bins; ++b)
      h.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    h.bin_edges[bins] = hi;
    for (const auto& lang : ldd.languages) h.counts[lang].assign(bins, 0);

    for (Eigen::Index i = 0; i < column.size(); ++i) {
      const double pos = (column(i) - lo) / (hi - lo) * static_cast<double>(bins);
      auto b = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(bins - 1)));
      ++h.counts[labels[static_cast<std::size_t>(i)]][b];
    }
    data.dims.push_back(std::move(h));
  }
  return data;
}

nlohmann::json to_json(const HistogramData& data) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& h : data.dims) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [lang, c] : h.counts) counts[lang] = c;
    dims.push_back({{"dim", h.dim}, {"t", h.t}, {"bin_edges", h.bin_edges}, {"counts", counts}});
  }
  return {{"dims", dims}};
}

nlohmann::json to_json(const LddReport& report) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& s : report.dims)
    dims.push_back({{"dim", s.dim}, {"t", s.t}, {"abs_t", s.abs_t}, {"mean_l1", s.mean_l1}, {"mean_l2", s.mean_l2}});
  return {{"languages", report.languages}, {"dims", dims}, {"sorted_dims", report.sorted_dims}};
}

}  // namespace xltm
