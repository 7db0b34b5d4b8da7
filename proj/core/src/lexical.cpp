#include <algorithm>
#include <cmath>
#include <map>

#include "cellbench/error.hpp"
#include "cellbench/metrics.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

namespace {

using Ngrams = std::map<std::vector<std::string>, std::size_t>;

Ngrams count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  Ngrams counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t total(const Ngrams& grams) {
  std::size_t sum = 0;
  for (const auto& [_, c] : grams) sum += c;
  return sum;
}

std::size_t clipped_overlap(const Ngrams& candidate, const Ngrams& reference) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : candidate) {
    const auto it = reference.find(gram);
    if (it != reference.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

double f1(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::string> lexical_tokens(std::string_view s) { return text::split_whitespace(text::to_lower(s)); }

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  if (max_n < 1 || max_n > 4) throw Error(ErrorKind::Domain, "BLEU order must be in [1,4]");
  const auto cand = lexical_tokens(candidate);
  const auto ref = lexical_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cg = count_ngrams(cand, static_cast<std::size_t>(n));
    const auto rg = count_ngrams(ref, static_cast<std::size_t>(n));
    // An order absent from both texts carries no evidence either way.
    if (cg.empty() && rg.empty()) continue;
    const auto overlap = clipped_overlap(cg, rg);
    if (overlap == 0) return 0.0;
    log_sum += std::log(static_cast<double>(overlap) / static_cast<double>(total(cg)));
    ++orders;
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * brevity * std::exp(log_sum / orders);
}

double rouge(std::string_view candidate, std::string_view reference, RougeMode mode) {
  const auto cand = lexical_tokens(candidate);
  const auto ref = lexical_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  if (mode == RougeMode::RL) {
    const auto lcs = static_cast<double>(lcs_length(cand, ref));
    return f1(lcs / static_cast<double>(cand.size()), lcs / static_cast<double>(ref.size()));
  }
  const std::size_t n = mode == RougeMode::R1 ? 1 : 2;
  const auto cg = count_ngrams(cand, n);
  const auto rg = count_ngrams(ref, n);
  if (cg.empty() && rg.empty()) return cand == ref ? 1.0 : 0.0;
  if (cg.empty() || rg.empty()) return 0.0;
  const auto overlap = static_cast<double>(clipped_overlap(cg, rg));
  return f1(overlap / static_cast<double>(total(cg)), overlap / static_cast<double>(total(rg)));
}

}  // namespace cellbench
