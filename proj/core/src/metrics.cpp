#include "cellbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "cellbench/error.hpp"

namespace cellbench {

namespace {

constexpr std::size_t kExactPermutationLimit = 10;

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorKind::Domain, "series lengths differ (" + std::to_string(x.size()) + " vs " +
                                       std::to_string(y.size()) + ")");
  if (x.size() < 2) throw Error(ErrorKind::Domain, "need at least two paired values");
  const auto bad = [](double v) { return !std::isfinite(v); };
  if (std::any_of(x.begin(), x.end(), bad) || std::any_of(y.begin(), y.end(), bad))
    throw Error(ErrorKind::Domain, "series contain non-finite values");
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

double exact_permutation_p(std::span<const double> rx, std::vector<double> ry, double observed) {
  // Pearson on ranks reduces to comparing sum(rx * ry) since the marginals are fixed.
  const double n = static_cast<double>(rx.size());
  const double mean_x = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double mean_y = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxx += (rx[i] - mean_x) * (rx[i] - mean_x);
    syy += (ry[i] - mean_y) * (ry[i] - mean_y);
  }
  const double scale = std::sqrt(sxx * syy);
  const double threshold = std::abs(observed) - 1e-12;

  std::sort(ry.begin(), ry.end());
  std::size_t total = 0;
  std::size_t extreme = 0;
  do {
    double sxy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) sxy += (rx[i] - mean_x) * (ry[i] - mean_y);
    if (std::abs(sxy / scale) >= threshold) ++extreme;
    ++total;
  } while (std::next_permutation(ry.begin(), ry.end()));
  // Tied ranks make next_permutation visit distinct arrangements only; every arrangement has
  // the same multiplicity, so the ratio is unaffected.
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double t_approximation_p(double rho, std::size_t n) {
  const double df = static_cast<double>(n - 2);
  const double r2 = std::min(rho * rho, 1.0);
  if (r2 >= 1.0) return std::numeric_limits<double>::min();
  const double t = std::abs(rho) * std::sqrt(df / (1.0 - r2));
  boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

// Counts inversions in v while merge-sorting it.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return swaps;
}

// Sum over runs of equal values of len*(len-1)/2, for a sorted range.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
  std::uint64_t total = 0;
  while (first != last) {
    auto run_end = std::find_if(first, last, [&](const auto& e) { return !eq(*first, e); });
    const auto len = static_cast<std::uint64_t>(std::distance(first, run_end));
    total += len * (len - 1) / 2;
    first = run_end;
  }
  return total;
}

std::set<std::string> unique_set(std::span<const std::string> v) { return {v.begin(), v.end()}; }

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& e : a) n += b.count(e);
  return n;
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) throw Error(ErrorKind::UndefinedCorrelation, "constant series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) throw Error(ErrorKind::UndefinedCorrelation, "constant series");
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  CorrelationResult r;
  r.n = x.size();
  r.rho = pearson(rx, ry);
  r.p = r.n <= kExactPermutationLimit ? exact_permutation_p(rx, ry, r.rho) : t_approximation_p(r.rho, r.n);
  return r;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) throw Error(ErrorKind::UndefinedCorrelation, "constant series");
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {x[i], y[i]};
  std::sort(pts.begin(), pts.end());

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const auto n1 = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
  const auto n3 = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a == b; });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = pts[i].second;
  std::vector<double> buf(n);
  const auto swaps = merge_count(ys, buf, 0, n);
  const auto n2 = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  const double numerator = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                           static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
  const double denominator = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

double set_cosine(std::span<const std::string> a, std::span<const std::string> b) {
  const auto sa = unique_set(a);
  const auto sb = unique_set(b);
  if (sa.empty() || sb.empty()) return 0.0;
  return static_cast<double>(intersection_size(sa, sb)) /
         std::sqrt(static_cast<double>(sa.size()) * static_cast<double>(sb.size()));
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  const auto sa = unique_set(a);
  const auto sb = unique_set(b);
  if (sa.empty() && sb.empty()) return 0.0;
  const auto common = intersection_size(sa, sb);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

double marker_overlap_pct(std::span<const std::string> generated, std::span<const std::string> markers) {
  const auto unique = unique_set(generated);
  if (unique.empty()) throw Error(ErrorKind::Domain, "generated gene list is empty");
  return 100.0 * static_cast<double>(intersection_size(unique, unique_set(markers))) /
         static_cast<double>(unique.size());
}

double vector_cosine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Domain, "vector lengths differ");
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return dot / std::sqrt(nx * ny);
}

}  // namespace cellbench
