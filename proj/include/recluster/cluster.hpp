#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "recluster/bignum.hpp"
#include "recluster/errors.hpp"

namespace recluster {

/// Two-level nested clustering: every unit belongs to one fine cluster and
/// every fine cluster to one gross cluster. Indices are dense and 0-based
/// after normalization; the original labels are kept for reporting.
/// Immutable once built, so it can be shared across parallel workers.
struct ClusterStructure {
  std::int32_t n = 0;      // units
  std::int32_t f_bar = 0;  // fine clusters
  std::int32_t g_bar = 0;  // gross clusters

  std::vector<std::int32_t> unit_to_fine;   // length n
  std::vector<std::int32_t> fine_to_gross;  // length f_bar
  std::vector<std::int32_t> n_f;            // units per fine cluster
  std::vector<std::int32_t> n_g;            // fine clusters per gross cluster

  // Membership lists in unit/fine index order.
  std::vector<std::vector<std::int32_t>> fine_units;
  std::vector<std::vector<std::int32_t>> gross_fines;

  std::vector<std::string> fine_labels;
  std::vector<std::string> gross_labels;
};

namespace detail {

inline void rebuild_counts(ClusterStructure& s) {
  s.n = static_cast<std::int32_t>(s.unit_to_fine.size());
  s.f_bar = static_cast<std::int32_t>(s.fine_to_gross.size());
  s.g_bar = s.fine_to_gross.empty()
                ? 0
                : 1 + *std::max_element(s.fine_to_gross.begin(), s.fine_to_gross.end());

  s.n_f.assign(static_cast<std::size_t>(s.f_bar), 0);
  s.fine_units.assign(static_cast<std::size_t>(s.f_bar), {});
  for (std::int32_t i = 0; i < s.n; ++i) {
    std::int32_t f = s.unit_to_fine[static_cast<std::size_t>(i)];
    if (f < 0 || f >= s.f_bar)
      throw DataError("unit " + std::to_string(i) + " mapped to unknown fine cluster");
    ++s.n_f[static_cast<std::size_t>(f)];
    s.fine_units[static_cast<std::size_t>(f)].push_back(i);
  }

  s.n_g.assign(static_cast<std::size_t>(s.g_bar), 0);
  s.gross_fines.assign(static_cast<std::size_t>(s.g_bar), {});
  for (std::int32_t f = 0; f < s.f_bar; ++f) {
    std::int32_t g = s.fine_to_gross[static_cast<std::size_t>(f)];
    if (g < 0 || g >= s.g_bar)
      throw DataError("fine cluster " + std::to_string(f) + " mapped to unknown gross cluster");
    ++s.n_g[static_cast<std::size_t>(g)];
    s.gross_fines[static_cast<std::size_t>(g)].push_back(f);
  }
}

}  // namespace detail

/// Checks every structural invariant and fails fast on the first violation.
inline void validate(const ClusterStructure& s) {
  if (s.n <= 0) throw DataError("empty structure");
  if (static_cast<std::size_t>(s.n) != s.unit_to_fine.size())
    throw DataError("unit count inconsistent with unit_to_fine");
  if (static_cast<std::size_t>(s.f_bar) != s.fine_to_gross.size())
    throw DataError("fine count inconsistent with fine_to_gross");
  for (std::int32_t i = 0; i < s.n; ++i) {
    std::int32_t f = s.unit_to_fine[static_cast<std::size_t>(i)];
    if (f < 0 || f >= s.f_bar)
      throw DataError("unit " + std::to_string(i) + " mapped to unknown fine cluster");
  }
  for (std::int32_t f = 0; f < s.f_bar; ++f) {
    std::int32_t g = s.fine_to_gross[static_cast<std::size_t>(f)];
    if (g < 0 || g >= s.g_bar)
      throw DataError("fine cluster " + std::to_string(f) + " mapped to unknown gross cluster");
  }
  for (std::int32_t f = 0; f < s.f_bar; ++f) {
    if (s.n_f[static_cast<std::size_t>(f)] <= 0)
      throw DataError("empty cluster: fine cluster " + std::to_string(f) +
                      (s.fine_labels.empty() ? "" : " (" + s.fine_labels[static_cast<std::size_t>(f)] + ")"));
  }
  for (std::int32_t g = 0; g < s.g_bar; ++g) {
    if (s.n_g[static_cast<std::size_t>(g)] <= 0)
      throw DataError("empty cluster: gross cluster " + std::to_string(g) +
                      (s.gross_labels.empty() ? "" : " (" + s.gross_labels[static_cast<std::size_t>(g)] + ")"));
  }
  if (std::accumulate(s.n_f.begin(), s.n_f.end(), std::int64_t{0}) != s.n)
    throw DataError("fine cluster sizes do not sum to n");
  if (std::accumulate(s.n_g.begin(), s.n_g.end(), std::int64_t{0}) != s.f_bar)
    throw DataError("gross cluster sizes do not sum to f_bar");
}

/// Builds a structure from per-unit fine labels and per-fine gross labels,
/// normalizing arbitrary string labels to dense indices by first appearance.
inline ClusterStructure make_structure(const std::vector<std::string>& unit_fine_labels,
                                       const std::vector<std::string>& unit_gross_labels) {
  if (unit_fine_labels.size() != unit_gross_labels.size())
    throw DataError("fine/gross label vectors differ in length");
  if (unit_fine_labels.empty()) throw DataError("empty structure");

  ClusterStructure s;
  std::unordered_map<std::string, std::int32_t> fine_ids;
  std::unordered_map<std::string, std::int32_t> gross_ids;
  s.unit_to_fine.reserve(unit_fine_labels.size());

  for (std::size_t i = 0; i < unit_fine_labels.size(); ++i) {
    const std::string& fl = unit_fine_labels[i];
    const std::string& gl = unit_gross_labels[i];
    auto [fit, fnew] = fine_ids.try_emplace(fl, static_cast<std::int32_t>(fine_ids.size()));
    if (fnew) {
      s.fine_labels.push_back(fl);
      auto [git, gnew] = gross_ids.try_emplace(gl, static_cast<std::int32_t>(gross_ids.size()));
      if (gnew) s.gross_labels.push_back(gl);
      s.fine_to_gross.push_back(git->second);
    } else {
      auto git = gross_ids.find(gl);
      std::int32_t expected = s.fine_to_gross[static_cast<std::size_t>(fit->second)];
      if (git == gross_ids.end() || git->second != expected)
        throw DataError("nesting violation: fine cluster '" + fl +
                        "' appears under two gross clusters");
    }
    s.unit_to_fine.push_back(fit->second);
  }
  detail::rebuild_counts(s);
  validate(s);
  return s;
}

/// Same, from integer labels (tests and generated data).
inline ClusterStructure make_structure(const std::vector<std::int32_t>& unit_fine,
                                       const std::vector<std::int32_t>& fine_gross) {
  ClusterStructure s;
  std::unordered_map<std::int32_t, std::int32_t> fine_ids;
  std::unordered_map<std::int32_t, std::int32_t> gross_ids;
  for (std::int32_t raw : fine_gross) {
    auto [it, isnew] = gross_ids.try_emplace(raw, static_cast<std::int32_t>(gross_ids.size()));
    if (isnew) s.gross_labels.push_back(std::to_string(raw));
  }
  for (std::size_t f = 0; f < fine_gross.size(); ++f) {
    s.fine_to_gross.push_back(gross_ids.at(fine_gross[f]));
    s.fine_labels.push_back(std::to_string(static_cast<std::int32_t>(f) + 1));
  }
  for (std::int32_t raw : unit_fine) {
    std::int32_t f = raw - 1;  // 1-based labels in, dense 0-based out
    if (f < 0 || f >= static_cast<std::int32_t>(fine_gross.size()))
      throw DataError("unknown fine cluster label " + std::to_string(raw));
    s.unit_to_fine.push_back(f);
  }
  detail::rebuild_counts(s);
  validate(s);
  return s;
}

/// One fine cluster per unit: reduces the two-level setup to one level.
inline ClusterStructure singleton_fine_structure(const std::vector<std::int32_t>& unit_gross) {
  std::vector<std::int32_t> unit_fine(unit_gross.size());
  std::iota(unit_fine.begin(), unit_fine.end(), 1);
  return make_structure(unit_fine, unit_gross);
}

/// Balanced structure: g_bar gross clusters x n_g fine clusters x n_gf units.
inline ClusterStructure balanced_structure(std::int32_t g_bar, std::int32_t n_g,
                                           std::int32_t n_gf) {
  std::vector<std::int32_t> fine_gross;
  std::vector<std::int32_t> unit_fine;
  for (std::int32_t g = 0; g < g_bar; ++g)
    for (std::int32_t f = 0; f < n_g; ++f) {
      fine_gross.push_back(g + 1);
      std::int32_t fine_label = static_cast<std::int32_t>(fine_gross.size());
      for (std::int32_t i = 0; i < n_gf; ++i) unit_fine.push_back(fine_label);
    }
  return make_structure(unit_fine, fine_gross);
}

// ---------------------------------------------------------------------------
// Partition counting
// ---------------------------------------------------------------------------

/// Exact value of f_bar! / (g_bar! * prod n_g!), kept as a reduced fraction
/// because the division by g_bar! is not integral for unequal group sizes.
struct PartitionCount {
  BigUint numerator;
  BigUint denominator;  // 1 whenever the formula is integral

  bool integral() const { return denominator == BigUint::one(); }

  std::string to_string() const {
    if (integral()) return numerator.to_string();
    return numerator.to_string() + "/" + denominator.to_string();
  }

  double to_double() const {
    double num = numerator.to_double();
    double den = denominator.to_double();
    if (std::isinf(num) || std::isinf(den))
      return std::exp2(numerator.log2_approx() - denominator.log2_approx());
    return num / den;
  }
};

namespace detail {

inline std::vector<std::int32_t> primes_up_to(std::int32_t m) {
  std::vector<bool> sieve(static_cast<std::size_t>(std::max(m + 1, 2)), true);
  std::vector<std::int32_t> primes;
  for (std::int32_t p = 2; p <= m; ++p) {
    if (!sieve[static_cast<std::size_t>(p)]) continue;
    primes.push_back(p);
    for (std::int64_t q = static_cast<std::int64_t>(p) * p; q <= m; q += p)
      sieve[static_cast<std::size_t>(q)] = false;
  }
  return primes;
}

inline std::int64_t factorial_prime_exponent(std::int64_t m, std::int64_t p) {
  std::int64_t e = 0;
  while (m > 0) {
    m /= p;
    e += m;
  }
  return e;
}

/// f_bar! divided by the factorial of every entry of `denominators`,
/// via prime exponents so the fraction comes out reduced.
inline PartitionCount factorial_ratio(std::int32_t f_bar,
                                      const std::vector<std::int64_t>& denominators) {
  PartitionCount out{BigUint::one(), BigUint::one()};
  for (std::int32_t p : primes_up_to(std::max(f_bar, 2))) {
    std::int64_t e = factorial_prime_exponent(f_bar, p);
    for (std::int64_t d : denominators) e -= factorial_prime_exponent(d, p);
    if (e > 0)
      out.numerator.mul_pow(static_cast<std::uint32_t>(p), static_cast<int>(e));
    else if (e < 0)
      out.denominator.mul_pow(static_cast<std::uint32_t>(p), static_cast<int>(-e));
  }
  return out;
}

}  // namespace detail

/// Number of ways to divide the fine clusters into gross clusters of the
/// given composition: f_bar! / (g_bar! * prod n_g!).
inline PartitionCount count_partitions(const ClusterStructure& s) {
  std::vector<std::int64_t> dens;
  dens.push_back(s.g_bar);
  for (std::int32_t ng : s.n_g) dens.push_back(ng);
  return detail::factorial_ratio(s.f_bar, dens);
}

/// Number of distinct regroupings reachable by permuting fine clusters, i.e.
/// the support size of the reclustering distribution. Divides the multinomial
/// by the factorial of each group-size multiplicity instead of by g_bar!, so
/// it stays exact when gross clusters differ in size. Equals the printed
/// formula whenever n_g is constant.
inline BigUint distinct_regroupings(const ClusterStructure& s) {
  std::map<std::int32_t, std::int64_t> multiplicity;
  std::vector<std::int64_t> dens;
  for (std::int32_t ng : s.n_g) {
    dens.push_back(ng);
    ++multiplicity[ng];
  }
  for (const auto& [size, count] : multiplicity) dens.push_back(count);
  PartitionCount pc = detail::factorial_ratio(s.f_bar, dens);
  if (!pc.integral()) throw std::logic_error("distinct regrouping count must be integral");
  return pc.numerator;
}

enum class Sided { two_sided, one_sided };

struct Feasibility {
  bool feasible = false;
  PartitionCount r_star;
  double required = 0.0;  // 2/alpha two-sided, 1/alpha one-sided
};

/// A level-alpha test needs at least 2/alpha (one-sided: 1/alpha) distinct
/// reclustering values; warns when the structure cannot supply them.
inline Feasibility feasibility(const ClusterStructure& s, double alpha,
                               Sided sided = Sided::two_sided) {
  if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must be in (0, 1)");
  Feasibility out;
  out.r_star = count_partitions(s);
  out.required = (sided == Sided::two_sided ? 2.0 : 1.0) / alpha;
  double num_log2 = out.r_star.numerator.log2_approx();
  double den_log2 = out.r_star.denominator.log2_approx();
  if (num_log2 - den_log2 > 64.0) {
    out.feasible = true;
  } else {
    out.feasible = out.r_star.to_double() >= out.required;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive regrouping enumeration
// ---------------------------------------------------------------------------

/// Visits every distinct regrouping exactly once (distinct_regroupings of
/// them, observed composition preserved). The visited map assigns each block
/// to a gross label of matching capacity, lowest label first, which pins a
/// unique representative per regrouping. Returns false if `max_count` was
/// exceeded and the walk stopped early.
inline bool enumerate_regroupings(
    const ClusterStructure& s,
    const std::function<void(const std::vector<std::int32_t>&)>& visit,
    std::uint64_t max_count = 0) {
  // Gross labels bucketed by capacity; blocks of a given size fill the
  // lowest unused label of that size.
  std::map<std::int32_t, std::vector<std::int32_t>> labels_by_size;
  for (std::int32_t g = s.g_bar; g-- > 0;)
    labels_by_size[s.n_g[static_cast<std::size_t>(g)]].push_back(g);

  std::vector<std::int32_t> assignment(static_cast<std::size_t>(s.f_bar), -1);
  std::map<std::int32_t, std::size_t> used_of_size;
  std::vector<std::int32_t> unassigned(static_cast<std::size_t>(s.f_bar));
  std::iota(unassigned.begin(), unassigned.end(), 0);
  std::uint64_t count = 0;
  bool truncated = false;

  std::vector<std::int32_t> members;
  std::function<bool()> recurse = [&]() -> bool {
    if (unassigned.empty()) {
      if (max_count != 0 && count >= max_count) {
        truncated = true;
        return false;
      }
      ++count;
      visit(assignment);
      return true;
    }
    std::int32_t leader = unassigned.front();
    for (auto& [size, labels] : labels_by_size) {
      std::size_t& used = used_of_size[size];
      if (used >= labels.size()) continue;
      std::int32_t label = labels[labels.size() - 1 - used];
      ++used;
      // Choose size-1 companions for the leader among the rest.
      std::vector<std::int32_t> rest(unassigned.begin() + 1, unassigned.end());
      std::int32_t k = size - 1;
      std::vector<std::size_t> idx(static_cast<std::size_t>(k));
      std::iota(idx.begin(), idx.end(), 0);
      bool keep_going = true;
      for (;;) {
        members.assign(1, leader);
        for (std::size_t j = 0; j < idx.size(); ++j) members.push_back(rest[idx[j]]);
        for (std::int32_t f : members) assignment[static_cast<std::size_t>(f)] = label;
        std::vector<std::int32_t> next_unassigned;
        for (std::int32_t f : unassigned)
          if (assignment[static_cast<std::size_t>(f)] == -1) next_unassigned.push_back(f);
        std::swap(unassigned, next_unassigned);
        keep_going = recurse();
        std::swap(unassigned, next_unassigned);
        for (std::int32_t f : members) assignment[static_cast<std::size_t>(f)] = -1;
        if (!keep_going) break;
        // Next k-combination of `rest` in lexicographic order.
        if (k == 0) break;
        std::int32_t pos = k - 1;
        while (pos >= 0 &&
               idx[static_cast<std::size_t>(pos)] ==
                   rest.size() - static_cast<std::size_t>(k - pos))
          --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (std::size_t j = static_cast<std::size_t>(pos) + 1; j < idx.size(); ++j)
          idx[j] = idx[j - 1] + 1;
      }
      --used;
      if (!keep_going) return false;
    }
    return true;
  };
  recurse();
  return !truncated;
}

}  // namespace recluster
