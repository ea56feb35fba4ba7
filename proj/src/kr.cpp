#include "udseq/kr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "udseq/detail/simplex.hpp"
#include "udseq/errors.hpp"

namespace udseq {

namespace {

constexpr double kResidualCut = 5e-12;   // unshippable float residue
constexpr double kFlowFloor = 1e-15;     // back arcs below this are absent

struct Instance {
  const MetricSpace* space = nullptr;
  std::vector<int> src, snk;      // point ids with positive weight
  std::vector<double> a, b;       // supplies / demands
  std::vector<double> cost;       // S*T row-major, truncated
  int S() const { return static_cast<int>(src.size()); }
  int T() const { return static_cast<int>(snk.size()); }
  double c(int i, int j) const { return cost[static_cast<std::size_t>(i) * snk.size() + j]; }
};

Instance make_instance(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  Instance ins;
  ins.space = p.space().get();
  for (const auto& atom : p.atoms())
    if (!atom.weight.is_zero()) {
      ins.src.push_back(atom.point);
      ins.a.push_back(atom.weight.value());
    }
  for (const auto& atom : q.atoms())
    if (!atom.weight.is_zero()) {
      ins.snk.push_back(atom.point);
      ins.b.push_back(atom.weight.value());
    }
  ins.cost.resize(static_cast<std::size_t>(ins.S()) * ins.T());
  for (int i = 0; i < ins.S(); ++i)
    for (int j = 0; j < ins.T(); ++j)
      ins.cost[static_cast<std::size_t>(i) * ins.T() + j] =
          truncated_cost(*ins.space, ins.src[i], ins.snk[j]);
  return ins;
}

struct FlowOut {
  std::vector<double> flow;  // S*T row-major
  std::vector<double> pot;   // node potentials, sources then sinks
};

// Successive shortest paths with potentials; dense Dijkstra. Node layout:
// 0..S-1 sources, S..S+T-1 sinks.
FlowOut solve_ssp(const Instance& ins) {
  const int S = ins.S(), T = ins.T(), V = S + T;
  FlowOut out;
  out.flow.assign(static_cast<std::size_t>(S) * T, 0.0);
  out.pot.assign(V, 0.0);
  std::vector<double> surplus = ins.a, deficit = ins.b;

  auto flow_at = [&](int i, int j) -> double& {
    return out.flow[static_cast<std::size_t>(i) * T + j];
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(V);
  std::vector<char> done(V);
  std::vector<int> parent(V);  // predecessor node; -1 for roots

  const int max_augment = 64 + 16 * V;
  for (int round = 0;; ++round) {
    int start = -1;
    for (int i = 0; i < S; ++i)
      if (surplus[i] > kResidualCut) {
        start = i;
        break;
      }
    if (start < 0) break;
    bool any_deficit = false;
    for (int j = 0; j < T; ++j)
      if (deficit[j] > kResidualCut) any_deficit = true;
    if (!any_deficit) break;
    if (round >= max_augment)
      throw Error("transport solver exceeded its augmentation budget");

    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), 0);
    std::fill(parent.begin(), parent.end(), -1);
    dist[start] = 0.0;
    int stop = -1;
    for (int it = 0; it < V; ++it) {
      int u = -1;
      double best = inf;
      for (int v = 0; v < V; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u < 0) break;
      done[u] = 1;
      if (u >= S && deficit[u - S] > kResidualCut) {
        stop = u;
        break;
      }
      if (u < S) {
        for (int j = 0; j < T; ++j) {
          const double rc =
              std::max(0.0, ins.c(u, j) + out.pot[u] - out.pot[S + j]);
          const double nd = dist[u] + rc;
          if (nd < dist[S + j]) {
            dist[S + j] = nd;
            parent[S + j] = u;
          }
        }
      } else {
        const int j = u - S;
        for (int i = 0; i < S; ++i) {
          if (flow_at(i, j) <= kFlowFloor) continue;
          const double rc =
              std::max(0.0, -ins.c(i, j) + out.pot[u] - out.pot[i]);
          const double nd = dist[u] + rc;
          if (nd < dist[i]) {
            dist[i] = nd;
            parent[i] = u;
          }
        }
      }
    }
    if (stop < 0) throw Error("transport solver: no reachable deficit");

    const double reach = dist[stop];
    for (int v = 0; v < V; ++v)
      out.pot[v] += std::min(dist[v], reach);

    double delta = std::min(surplus[start], deficit[stop - S]);
    for (int v = stop; parent[v] >= 0; v = parent[v]) {
      if (v < S) delta = std::min(delta, flow_at(v, parent[v] - S));
    }
    for (int v = stop; parent[v] >= 0; v = parent[v]) {
      const int u = parent[v];
      if (v >= S)
        flow_at(u, v - S) += delta;  // forward arc source->sink
      else
        flow_at(v, u - S) -= delta;  // residual arc sink->source
    }
    surplus[start] -= delta;
    deficit[stop - S] -= delta;
  }
  return out;
}

void check_inputs(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (!same_space(p, q))
    throw SpaceMismatchError("measures live on different spaces");
  p.space()->require_valid();
  if (!p.is_probability() || !q.is_probability())
    throw MassError("transport distance requires probability measures");
}

}  // namespace

double TransportPlan::marginal_gap() const {
  std::map<int, double> row, col;
  for (const auto& f : flows) {
    row[f.from] += f.mass;
    col[f.to] += f.mass;
  }
  double gap = 0.0;
  for (const auto& a : source.atoms())
    gap = std::max(gap, std::abs(a.weight.value() - row[a.point]));
  for (const auto& a : target.atoms())
    gap = std::max(gap, std::abs(a.weight.value() - col[a.point]));
  return gap;
}

KrResult kr_distance(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  check_inputs(p, q);
  KrResult res;
  res.plan.source = p;
  res.plan.target = q;
  if (p.equal_measure(q)) {
    res.source_points = p.support();
    res.target_points = q.support();
    res.alpha.assign(res.source_points.size(), 0.0);
    res.beta.assign(res.target_points.size(), 0.0);
    return res;  // value 0, empty plan
  }

  const Instance ins = make_instance(p, q);
  const FlowOut fo = solve_ssp(ins);

  double cost = 0.0;
  for (int i = 0; i < ins.S(); ++i) {
    for (int j = 0; j < ins.T(); ++j) {
      const double f = fo.flow[static_cast<std::size_t>(i) * ins.T() + j];
      if (f > kFlowFloor) {
        res.plan.flows.push_back({ins.src[i], ins.snk[j], f});
        cost += f * ins.c(i, j);
      }
    }
  }
  res.plan.cost = cost;
  res.value = cost;
  res.source_points = ins.src;
  res.target_points = ins.snk;
  res.alpha.resize(ins.S());
  res.beta.resize(ins.T());
  for (int i = 0; i < ins.S(); ++i) res.alpha[i] = -fo.pot[i];
  for (int j = 0; j < ins.T(); ++j) res.beta[j] = fo.pot[ins.S() + j];
  return res;
}

double DualPotential::value_at(int point) const {
  auto it = std::lower_bound(points.begin(), points.end(), point);
  if (it == points.end() || *it != point)
    throw DomainError("potential is undefined at point " + std::to_string(point));
  return values[static_cast<std::size_t>(it - points.begin())];
}

double DualPotential::feasibility_gap() const {
  double gap = 0.0;
  const int n = static_cast<int>(points.size());
  for (int i = 0; i < n; ++i) {
    gap = std::max(gap, std::abs(values[i]) - 1.0);
    for (int j = i + 1; j < n; ++j) {
      const double d = space->dist(points[i], points[j]);
      gap = std::max(gap, std::abs(values[i] - values[j]) - d);
    }
  }
  return std::max(gap, 0.0);
}

KrDualResult kr_dual(const DiscreteMeasure& p, const DiscreteMeasure& q,
                     int size_cap) {
  check_inputs(p, q);

  std::vector<int> pts = p.support();
  for (int s : q.support()) pts.push_back(s);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const int n = static_cast<int>(pts.size());
  if (n > size_cap)
    throw CapacityError("dual support of " + std::to_string(n) +
                        " points exceeds the cap of " + std::to_string(size_cap) +
                        "; use kr_distance instead");

  std::vector<double> w(n);
  for (int k = 0; k < n; ++k)
    w[k] = p.weight_at(pts[k]).value() - q.weight_at(pts[k]).value();

  // Variables x = f + 1 in [0, 2]. Pair constraints x_k - x_l <= c(k,l)
  // are skipped when the box already implies them (c >= 2) or when a
  // strictly shorter two-leg path implies them.
  const auto& space = *p.space();
  std::vector<std::vector<double>> cmat(n, std::vector<double>(n, 0.0));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      if (k != l) cmat[k][l] = truncated_cost(space, pts[k], pts[l]);

  detail::SimplexProblem lp;
  lp.num_vars = n;
  lp.objective = w;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      if (k == l) continue;
      const double c = cmat[k][l];
      if (c >= kKrCostCeiling) continue;
      bool implied = false;
      for (int m = 0; m < n && !implied; ++m) {
        if (m == k || m == l) continue;
        if (cmat[k][m] + cmat[m][l] < c) implied = true;
      }
      if (implied) continue;
      std::vector<double> row(n, 0.0);
      row[k] = 1.0;
      row[l] = -1.0;
      lp.rows.push_back(std::move(row));
      lp.rhs.push_back(c);
    }
  }
  for (int k = 0; k < n; ++k) {
    std::vector<double> row(n, 0.0);
    row[k] = 1.0;
    lp.rows.push_back(std::move(row));
    lp.rhs.push_back(2.0);
  }

  const auto sol = detail::simplex_max(lp);
  KrDualResult out;
  out.potential.space = p.space();
  out.potential.points = pts;
  out.potential.values.resize(n);
  double value = 0.0;
  for (int k = 0; k < n; ++k) {
    out.potential.values[k] = std::clamp(sol.x[k] - 1.0, -1.0, 1.0);
    value += w[k] * out.potential.values[k];
  }
  out.value = value;
  return out;
}

namespace {

// Exact atom list rebalanced to total mass one.
std::vector<std::pair<int, Rational>> exact_unit_atoms(const DiscreteMeasure& m) {
  Rational total(0);
  std::vector<std::pair<int, Rational>> out;
  for (const auto& a : m.atoms()) {
    if (a.weight.is_zero()) continue;
    Rational r = a.weight.rationalized();
    out.emplace_back(a.point, r);
    total += r;
  }
  for (auto& [p, r] : out) r /= total;
  return out;
}

template <class Num>
struct PeelState {
  std::vector<Num> balance;  // +supply at sources, -demand at sinks
};

// Determines the unique flow supported on `mask` by leaf peeling;
// returns false when the arc set is cyclic or the flow is infeasible.
template <class Num>
bool peel_cost(const std::vector<Num>& init_balance, int S, int T,
               unsigned mask, const std::vector<double>& cost, double* out_cost) {
  std::vector<Num> bal = init_balance;
  std::vector<int> deg(S + T, 0);
  for (int e = 0; e < S * T; ++e) {
    if (mask & (1u << e)) {
      ++deg[e / T];
      ++deg[S + e % T];
    }
  }
  unsigned remaining = mask;
  double acc = 0.0;
  while (remaining) {
    int pick = -1;
    for (int e = 0; e < S * T; ++e) {
      if (!(remaining & (1u << e))) continue;
      if (deg[e / T] == 1 || deg[S + e % T] == 1) {
        pick = e;
        break;
      }
    }
    if (pick < 0) return false;  // cycle
    const int i = pick / T, j = pick % T;
    const Num flow = deg[i] == 1 ? bal[i] : -bal[S + j];
    if (flow < 0) return false;
    bal[i] -= flow;
    bal[S + j] += flow;
    acc += static_cast<double>(flow) * cost[static_cast<std::size_t>(i) * T + j];
    remaining &= ~(1u << pick);
    --deg[i];
    --deg[S + j];
  }
  for (const Num& v : bal)
    if (v != 0) return false;
  *out_cost = acc;
  return true;
}

template <>
bool peel_cost<Rational>(const std::vector<Rational>& init_balance, int S, int T,
                         unsigned mask, const std::vector<double>& cost,
                         double* out_cost) {
  std::vector<Rational> bal = init_balance;
  std::vector<int> deg(S + T, 0);
  for (int e = 0; e < S * T; ++e) {
    if (mask & (1u << e)) {
      ++deg[e / T];
      ++deg[S + e % T];
    }
  }
  unsigned remaining = mask;
  double acc = 0.0;
  while (remaining) {
    int pick = -1;
    for (int e = 0; e < S * T; ++e) {
      if (!(remaining & (1u << e))) continue;
      if (deg[e / T] == 1 || deg[S + e % T] == 1) {
        pick = e;
        break;
      }
    }
    if (pick < 0) return false;
    const int i = pick / T, j = pick % T;
    const Rational flow = deg[i] == 1 ? bal[i] : Rational(-bal[S + j]);
    if (flow < 0) return false;
    bal[i] -= flow;
    bal[S + j] += flow;
    acc += flow.convert_to<double>() * cost[static_cast<std::size_t>(i) * T + j];
    remaining &= ~(1u << pick);
    --deg[i];
    --deg[S + j];
  }
  for (const Rational& v : bal)
    if (v != 0) return false;
  *out_cost = acc;
  return true;
}

}  // namespace

double kr_oracle(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  check_inputs(p, q);

  const auto pa = exact_unit_atoms(p);
  const auto qa = exact_unit_atoms(q);
  const int S = static_cast<int>(pa.size());
  const int T = static_cast<int>(qa.size());
  if (S + T > 8)
    throw CapacityError("oracle supports at most 8 combined atoms, got " +
                        std::to_string(S + T));

  const auto& space = *p.space();
  std::vector<double> cost(static_cast<std::size_t>(S) * T);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < T; ++j)
      cost[static_cast<std::size_t>(i) * T + j] =
          truncated_cost(space, pa[i].first, qa[j].first);

  // Common denominator; fall back to rational peeling when it overflows.
  BigInt lcm(1);
  for (const auto& [pt, r] : pa) lcm = boost::multiprecision::lcm(lcm, denominator(r));
  for (const auto& [pt, r] : qa) lcm = boost::multiprecision::lcm(lcm, denominator(r));
  const bool small = lcm <= BigInt(1) << 40;

  std::vector<std::int64_t> ibal;
  std::vector<Rational> rbal;
  if (small) {
    ibal.assign(S + T, 0);
    for (int i = 0; i < S; ++i)
      ibal[i] = ((numerator(pa[i].second) * lcm) / denominator(pa[i].second))
                    .convert_to<std::int64_t>();
    for (int j = 0; j < T; ++j)
      ibal[S + j] = -((numerator(qa[j].second) * lcm) / denominator(qa[j].second))
                         .convert_to<std::int64_t>();
  } else {
    rbal.assign(S + T, Rational(0));
    for (int i = 0; i < S; ++i) rbal[i] = pa[i].second;
    for (int j = 0; j < T; ++j) rbal[S + j] = -qa[j].second;
  }

  const int arcs = S * T;
  const int max_arcs_used = S + T - 1;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << arcs); ++mask) {
    if (__builtin_popcount(mask) > max_arcs_used) continue;
    double c = 0.0;
    const bool ok = small ? peel_cost<std::int64_t>(ibal, S, T, mask, cost, &c)
                          : peel_cost<Rational>(rbal, S, T, mask, cost, &c);
    if (ok) best = std::min(best, c);
  }
  if (!std::isfinite(best)) throw Error("oracle found no feasible plan");
  return small ? best / lcm.convert_to<double>() : best;
}

}  // namespace udseq
