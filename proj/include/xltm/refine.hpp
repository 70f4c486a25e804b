#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xltm/common.hpp"
#include "xltm/corpus_io.hpp"

namespace xltm {

/// Rank-r factorization E ~ U diag(S) Vt.
struct SvdResult {
  Matrix U;    ///< m x r, orthonormal columns
  Vector S;    ///< r singular values, non-increasing
  Matrix Vt;   ///< r x d, orthonormal rows
  std::size_t rank = 0;
};

struct SvdOptions {
  std::size_t oversampling = 10;
  std::size_t power_iterations = 4;
};

/// Seeded randomized truncated SVD (Gaussian test matrix, QR-orthonormalized
/// power iterations). Signs are fixed so the largest-magnitude entry of each
/// right singular vector is positive.
SvdResult truncated_svd(const Matrix& E, std::size_t r, std::uint64_t seed,
                        const SvdOptions& options = {});

struct DimensionStat {
  std::size_t dim = 0;
  double t = 0.0;  ///< Welch t of language[0] against language[1]
  double abs_t = 0.0;
  double mean_l1 = 0.0;
  double mean_l2 = 0.0;
};

struct LddReport {
  std::vector<std::string> languages;  ///< the two codes, sorted
  std::vector<DimensionStat> dims;     ///< one per column, in column order
  std::vector<std::size_t> sorted_dims;  ///< by |t| descending, lower index first on ties
};

/// Added under the square root of the Welch denominator.
inline constexpr double kWelchEpsilon = 1e-12;

/// Per-column Welch two-sample t-test between the two language groups.
/// Requires exactly two distinct labels with at least two rows each.
LddReport ldd_t_statistics(const Matrix& X, const std::vector<std::string>& labels);

enum class RefineMethod { oe, svd, usvd, svdlr };

std::string to_string(RefineMethod method);
RefineMethod parse_refine_method(const std::string& name);

struct RefineOptions {
  SvdOptions svd;
  /// Columns removed by svdlr, highest |t| first.
  std::size_t svdlr_remove = 1;
};

struct RefinedEmbeddings {
  std::vector<std::string> ids;
  Matrix data;
  RefineMethod method = RefineMethod::oe;
  std::size_t r_requested = 0;
  /// Columns of U*Sigma deleted by svdlr (first entry is the max-|t| column).
  std::vector<std::size_t> removed_dims;
  std::vector<double> removed_t;
  std::optional<Vector> singular_values;

  std::optional<std::size_t> removed_dim() const {
    if (removed_dims.empty()) return std::nullopt;
    return removed_dims.front();
  }
};

/// oe: E unchanged. svd: U*Sigma. usvd: U. svdlr: U*Sigma minus the column
/// with the largest language |t|.
RefinedEmbeddings refine(const EmbeddingMatrix& E, RefineMethod method, std::size_t r,
                         const std::vector<std::string>& labels, std::uint64_t seed,
                         const RefineOptions& options = {});

struct DimensionHistogram {
  std::size_t dim = 0;
  double t = 0.0;
  std::vector<double> bin_edges;  ///< bins + 1 edges shared by both languages
  std::map<std::string, std::vector<std::size_t>> counts;
};

struct HistogramData {
  std::vector<DimensionHistogram> dims;
};

/// Per-language histograms of the top_n dimensions by |t|.
HistogramData export_dimension_histograms(const Matrix& X, const std::vector<std::string>& labels,
                                          std::size_t top_n, std::size_t bins);

nlohmann::json to_json(const HistogramData& data);
nlohmann::json to_json(const LddReport& report);

}  // namespace xltm
