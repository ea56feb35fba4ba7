#include "udseq/construct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "udseq/errors.hpp"
#include "udseq/parallel.hpp"

namespace udseq {

namespace {

struct QuotaEntry {
  int point;
  Weight weight;
};

std::vector<QuotaEntry> quota_atoms(const DiscreteMeasure& target, int n) {
  if (n < 1) throw RangeError("quota length must be at least 1");
  if (!target.is_probability())
    throw MassError("quota sequence requires a probability target");
  std::vector<QuotaEntry> atoms;
  for (const auto& a : target.atoms())
    if (!a.weight.is_zero()) atoms.push_back({a.point, a.weight});
  if (atoms.empty()) throw DomainError("quota target has empty support");
  return atoms;
}

// Largest-remainder totals for n * weight_i, ties to the lowest index.
std::vector<std::int64_t> quota_totals(const std::vector<QuotaEntry>& atoms, int n) {
  const int k = static_cast<int>(atoms.size());
  std::vector<std::int64_t> total(k);
  std::vector<Weight> remainder(k);
  std::int64_t assigned = 0;
  for (int i = 0; i < k; ++i) {
    total[i] = atoms[i].weight.floor_scaled(n);
    remainder[i] = n * atoms[i].weight - Weight::integer(total[i]);
    assigned += total[i];
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[b] < remainder[a];  // descending remainder, stable on ties
  });
  const std::int64_t leftover = n - assigned;
  for (std::int64_t e = 0; e < leftover; ++e)
    ++total[order[static_cast<std::size_t>(e)]];
  return total;
}

}  // namespace

DiscreteMeasure quota_measure(const DiscreteMeasure& target, int n) {
  const auto atoms = quota_atoms(target, n);
  const auto total = quota_totals(atoms, n);
  std::vector<Atom> out;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (total[i] > 0) out.push_back({atoms[i].point, Weight::ratio(total[i], n)});
  return DiscreteMeasure::probability(target.space(), std::move(out));
}

PointSequence quota_sequence(const DiscreteMeasure& target, int n) {
  const auto atoms = quota_atoms(target, n);
  const auto total = quota_totals(atoms, n);
  const int k = static_cast<int>(atoms.size());

  // Interleave by largest current deficit among unexhausted atoms.
  std::vector<std::int64_t> count(k, 0);
  std::vector<int> ids;
  ids.reserve(n);
  for (int m = 1; m <= n; ++m) {
    int pick = -1;
    Weight best;
    for (int i = 0; i < k; ++i) {
      if (count[i] >= total[i]) continue;
      const Weight deficit = m * atoms[i].weight - Weight::integer(count[i]);
      if (pick < 0 || best < deficit) {
        pick = i;
        best = deficit;
      }
    }
    if (pick < 0) throw Error("quota interleaving ran out of atoms");
    ++count[pick];
    ids.push_back(atoms[pick].point);
  }
  return PointSequence(target.space(), std::move(ids));
}

namespace {

// Workspace for repeated candidate evaluations against a fixed target.
// Reuses the incumbent's dual pair to lower-bound candidates before the
// exact solve; a candidate whose bound cannot beat the best exact value
// is skipped.
struct GreedyEvaluator {
  const DiscreteMeasure& target;
  const MetricSpace& space;
  std::vector<int> tpts;
  std::vector<double> tw;
  std::vector<double> beta;  // aligned with tpts; empty before first solve
  bool have_beta = false;

  explicit GreedyEvaluator(const DiscreteMeasure& t)
      : target(t), space(*t.space()) {
    for (const auto& a : t.atoms()) {
      if (a.weight.is_zero()) continue;
      tpts.push_back(a.point);
      tw.push_back(a.weight.value());
    }
  }

  double exact(const std::vector<std::int64_t>& counts, int extra, int n_next,
               std::vector<double>* beta_out) const {
    std::vector<Atom> atoms;
    for (int p = 0; p < static_cast<int>(counts.size()); ++p) {
      const std::int64_t c = counts[p] + (p == extra ? 1 : 0);
      if (c > 0) atoms.push_back({p, Weight::ratio(c, n_next)});
    }
    auto emp = DiscreteMeasure::probability(target.space(), std::move(atoms));
    const KrResult r = kr_distance(emp, target);
    if (beta_out) {
      beta_out->assign(tpts.size(), 0.0);
      for (std::size_t j = 0; j < r.target_points.size(); ++j) {
        const auto it =
            std::lower_bound(tpts.begin(), tpts.end(), r.target_points[j]);
        (*beta_out)[static_cast<std::size_t>(it - tpts.begin())] = r.beta[j];
      }
    }
    return r.value;
  }

  // Weak-duality bound from the incumbent beta via its cost transform.
  std::vector<double> lower_bounds(const std::vector<std::int64_t>& counts,
                                   const std::vector<int>& pool, int n_next) const {
    std::vector<double> lb(pool.size(),
                           -std::numeric_limits<double>::infinity());
    if (!have_beta) return lb;
    const int T = static_cast<int>(tpts.size());
    auto alpha_bar = [&](int x) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < T; ++j)
        best = std::min(best, truncated_cost(space, x, tpts[j]) - beta[j]);
      return best;
    };
    double base = 0.0;
    for (int j = 0; j < T; ++j) base += tw[j] * beta[j];
    double count_part = 0.0;
    for (int p = 0; p < static_cast<int>(counts.size()); ++p)
      if (counts[p] > 0) count_part += static_cast<double>(counts[p]) * alpha_bar(p);
    for (std::size_t c = 0; c < pool.size(); ++c)
      lb[c] = (count_part + alpha_bar(pool[c])) / n_next + base;
    return lb;
  }
};

constexpr double kPruneMargin = 1e-12;

}  // namespace

PointSequence greedy_extend(const DiscreteMeasure& target,
                            const PointSequence& prefix, int steps) {
  if (steps < 0) throw RangeError("greedy step count must be nonnegative");
  if (!same_space(target.space(), prefix.space()))
    throw SpaceMismatchError("prefix and target live on different spaces");
  const std::vector<int> pool = target.support();
  if (pool.empty()) throw DomainError("greedy target has empty support");
  if (!target.is_probability())
    throw MassError("greedy extension requires a probability target");

  std::vector<int> ids = prefix.ids();
  std::vector<std::int64_t> counts(target.space()->size(), 0);
  for (int id : ids) ++counts[id];

  GreedyEvaluator eval(target);
  for (int step = 0; step < steps; ++step) {
    const int n_next = static_cast<int>(ids.size()) + 1;
    const auto lb = eval.lower_bounds(counts, pool, n_next);

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lb[a] < lb[b]; });

    double best_val = std::numeric_limits<double>::infinity();
    int best_point = -1;
    std::vector<double> best_beta;
    for (std::size_t oi : order) {
      if (lb[oi] >= best_val + kPruneMargin) break;  // others only larger
      const int c = pool[oi];
      std::vector<double> cand_beta;
      const double val = eval.exact(counts, c, n_next, &cand_beta);
      if (val < best_val || (val == best_val && c < best_point)) {
        best_val = val;
        best_point = c;
        best_beta = std::move(cand_beta);
      }
    }
    ids.push_back(best_point);
    ++counts[best_point];
    eval.beta = std::move(best_beta);
    eval.have_beta = true;
  }
  return PointSequence(target.space(), std::move(ids));
}

PointSequence measures_to_sequence(const std::vector<DiscreteMeasure>& approx,
                                   const std::vector<int>& block_lengths) {
  if (approx.size() != block_lengths.size())
    throw ShapeError("approximator and block-length lists differ in length");
  if (approx.empty()) throw ShapeError("at least one approximating measure required");
  for (std::size_t k = 0; k < block_lengths.size(); ++k) {
    if (block_lengths[k] < 1) throw RangeError("block lengths must be positive");
    if (k > 0 && block_lengths[k] < block_lengths[k - 1])
      throw RangeError("block lengths must be non-decreasing");
  }
  const SpacePtr& space = approx.front().space();
  std::vector<int> ids;
  for (std::size_t k = 0; k < approx.size(); ++k) {
    if (!same_space(approx[k].space(), space))
      throw SpaceMismatchError("approximating measures live on different spaces");
    const PointSequence block = quota_sequence(approx[k], block_lengths[k]);
    ids.insert(ids.end(), block.ids().begin(), block.ids().end());
  }
  return PointSequence(space, std::move(ids));
}

std::vector<int> default_block_lengths(int count) {
  if (count < 1) throw RangeError("block count must be positive");
  std::vector<int> out;
  out.reserve(count);
  std::int64_t sum = 0;
  for (int k = 1; k <= count; ++k) {
    const std::int64_t b = k == 1 ? 1 : k * sum;
    if (b > std::numeric_limits<int>::max())
      throw RangeError("block growth overflows at index " + std::to_string(k));
    out.push_back(static_cast<int>(b));
    sum += b;
  }
  return out;
}

UdCertificate verify_ud(const DiscreteMeasure& target, const PointSequence& seq,
                        std::vector<int> checkpoints, double tolerance) {
  if (checkpoints.empty()) throw RangeError("at least one checkpoint required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || checkpoints[i] > seq.length())
      throw RangeError("checkpoint " + std::to_string(checkpoints[i]) +
                       " outside the sequence length " + std::to_string(seq.length()));
    if (i > 0 && checkpoints[i] < checkpoints[i - 1])
      throw RangeError("checkpoints must be sorted ascending");
  }

  std::vector<double> distances(checkpoints.size(), 0.0);
  parallel_for(static_cast<int>(checkpoints.size()), [&](int i) {
    distances[i] = kr_distance(empirical(seq, checkpoints[i]), target).value;
  });

  std::size_t imax = 0;
  for (std::size_t i = 1; i < distances.size(); ++i)
    if (distances[i] > distances[imax]) imax = i;
  bool monotone = true;
  for (std::size_t i = imax; i + 1 < distances.size(); ++i)
    if (distances[i + 1] > distances[i]) monotone = false;

  UdCertificate cert{target, seq, 0, {}, {}, 0.0, false};
  cert.horizon = checkpoints.back();
  cert.checkpoints = std::move(checkpoints);
  cert.tolerance = tolerance;
  cert.pass = monotone && distances.back() <= tolerance;
  cert.distances = std::move(distances);
  return cert;
}

}  // namespace udseq
