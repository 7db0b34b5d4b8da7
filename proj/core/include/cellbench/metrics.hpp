#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellbench {

struct CorrelationResult {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson correlation. Throws UndefinedCorrelation when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rho with average-rank ties. Two-sided p: exact permutation for n <= 10,
/// Student t with n-2 degrees of freedom above. Throws Domain on length mismatch, n < 2 or NaN;
/// UndefinedCorrelation on a constant series.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b, O(n log n). Same errors as spearman.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// |a n b| / sqrt(|a| |b|) over the unique symbols of each list; 0 when either is empty.
double set_cosine(std::span<const std::string> a, std::span<const std::string> b);
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

/// Percentage of the unique generated genes that are markers. Throws Domain for an empty list.
double marker_overlap_pct(std::span<const std::string> generated, std::span<const std::string> markers);

/// Cosine of two real vectors; 0 when either has zero norm.
double vector_cosine(std::span<const double> x, std::span<const double> y);

/// Lowercased whitespace tokens.
std::vector<std::string> lexical_tokens(std::string_view text);

/// Sentence BLEU in [0,100]: clipped n-gram precisions for orders 1..max_n, geometric mean,
/// brevity penalty, no smoothing. Throws Domain unless 1 <= max_n <= 4.
double bleu(std::string_view candidate, std::string_view reference, int max_n);

enum class RougeMode { R1, R2, RL };

/// ROUGE F1 in [0,1].
double rouge(std::string_view candidate, std::string_view reference, RougeMode mode);

}  // namespace cellbench
