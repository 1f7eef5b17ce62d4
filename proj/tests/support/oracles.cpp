#include "support/oracles.hpp"

#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oracle {

Rat::Rat(long long n, long long d) : num(n), den(d) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rat Rat::operator+(const Rat& o) const { return Rat(num * o.den + o.num * den, den * o.den); }
Rat Rat::operator-(const Rat& o) const { return Rat(num * o.den - o.num * den, den * o.den); }
Rat Rat::operator*(const Rat& o) const { return Rat(num * o.num, den * o.den); }
Rat Rat::operator/(const Rat& o) const {
  if (o.num == 0) throw std::invalid_argument("division by zero");
  return Rat(num * o.den, den * o.num);
}

std::optional<Rat> rational_ap(const std::vector<bool>& ranked_relevance) {
  long long hits = 0;
  Rat sum(0);
  for (size_t k = 0; k < ranked_relevance.size(); ++k) {
    if (!ranked_relevance[k]) continue;
    ++hits;
    sum = sum + Rat(hits, static_cast<long long>(k) + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / Rat(hits);
}

namespace {

void enumerate_patterns(int n, int r, std::vector<bool>& pattern, int pos,
                        Rat& total, long long& count) {
  int placed = 0;
  for (int i = 0; i < pos; ++i) placed += pattern[i] ? 1 : 0;
  if (placed > r || (pos - placed) > (n - r)) return;
  if (pos == n) {
    auto ap = rational_ap(pattern);
    assert(ap.has_value());
    total = total + *ap;
    ++count;
    return;
  }
  pattern[pos] = true;
  enumerate_patterns(n, r, pattern, pos + 1, total, count);
  pattern[pos] = false;
  enumerate_patterns(n, r, pattern, pos + 1, total, count);
}

}  // namespace

Rat expected_ap_enumerated(int n, int r) {
  if (r < 1 || r > n) throw std::invalid_argument("need 1 <= r <= n");
  std::vector<bool> pattern(n, false);
  Rat total(0);
  long long count = 0;
  enumerate_patterns(n, r, pattern, 0, total, count);
  return total / Rat(count);
}

double expected_ap_closed_form(int n, int r) {
  double hn = 0;
  for (int k = 1; k <= n; ++k) hn += 1.0 / k;
  double first = hn / n;
  if (n == 1) return first;
  return first + (r - 1) * (n - hn) / (static_cast<double>(n) * (n - 1));
}

double naive_cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double naive_set_similarity(const std::vector<std::vector<float>>& a,
                            const std::vector<std::vector<float>>& b) {
  if (a.empty() || b.empty()) return -2.0;
  double best = -2.0;
  for (const auto& u : a) {
    for (const auto& v : b) {
      best = std::max(best, naive_cosine(u, v));
    }
  }
  return best;
}

std::vector<int> reference_ranking(const std::vector<double>& scores,
                                   const std::vector<std::int64_t>& tie_keys) {
  assert(scores.size() == tie_keys.size());
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    auto better = [&](int x, int y) {
      if (scores[x] != scores[y]) return scores[x] > scores[y];
      return tie_keys[x] < tie_keys[y];
    };
    size_t at = 0;
    while (at < order.size() && better(order[at], i)) ++at;
    order.insert(order.begin() + at, i);
  }
  return order;
}

std::vector<double> reference_frame_times(double duration_s, double fps,
                                          int max_frames) {
  long double n_exact = std::ceil(static_cast<long double>(duration_s) *
                                  static_cast<long double>(fps));
  long long n = static_cast<long long>(n_exact);
  if (n > max_frames) n = max_frames;
  if (n < 1) n = 1;
  std::vector<double> out;
  for (long long k = 0; k < n; ++k) {
    out.push_back(static_cast<double>(static_cast<long double>(k) /
                                      static_cast<long double>(fps)));
  }
  return out;
}

std::vector<int> reference_subsample(int n, int m) {
  if (m >= n) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<int> out;
  if (m <= 0) return out;
  if (m == 1) return {0};
  for (int i = 0; i < m; ++i) {
    out.push_back(static_cast<int>(
        std::llround(static_cast<double>(i) * (n - 1) / (m - 1))));
  }
  return out;
}

double reference_uniform01(std::uint64_t raw_draw) {
  return static_cast<double>(raw_draw >> 11) * 0x1.0p-53;
}

}  // namespace oracle
