#include "udseq/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "udseq/construct.hpp"
#include "udseq/errors.hpp"
#include "udseq/io.hpp"
#include "udseq/kr.hpp"

namespace udseq::selftest {

SpacePtr random_space(Rng& rng, int n, double lo, double hi,
                      const std::string& label) {
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d[i][j] = d[j][i] = rng.uniform(lo, hi);
  // Shortest-path closure turns any symmetric nonnegative draw into a metric.
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return MetricSpace::from_matrix(label, {}, std::move(d));
}

DiscreteMeasure random_probability(Rng& rng, const SpacePtr& space, int max_atoms) {
  const int n = space->size();
  const int k = static_cast<int>(rng.uniform_int(1, std::min(max_atoms, n)));
  std::vector<int> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = i;
  for (int i = 0; i < k; ++i) {
    const int j = static_cast<int>(rng.uniform_int(i, n - 1));
    std::swap(pts[i], pts[j]);
  }
  std::vector<std::int64_t> raw(k);
  std::int64_t total = 0;
  for (int i = 0; i < k; ++i) {
    raw[i] = rng.uniform_int(1, 9);
    total += raw[i];
  }
  std::vector<Atom> atoms;
  for (int i = 0; i < k; ++i)
    atoms.push_back({pts[i], Weight::ratio(raw[i], total)});
  return DiscreteMeasure::probability(space, std::move(atoms));
}

TestFunction random_lipschitz(Rng& rng, const SpacePtr& space) {
  const int n = space->size();
  std::vector<double> g(n);
  for (double& v : g) v = rng.uniform(-1.0, 1.0);
  std::vector<double> f(n);
  for (int x = 0; x < n; ++x) {
    double best = g[x];
    for (int z = 0; z < n; ++z) best = std::min(best, g[z] + space->dist(x, z));
    f[x] = std::clamp(best, -1.0, 1.0);
  }
  return TestFunction(space, std::move(f));
}

PointMap random_contraction(Rng& rng, const SpacePtr& from) {
  const int n = from->size();
  std::vector<int> raw(n);
  for (int x = 0; x < n; ++x) raw[x] = static_cast<int>(rng.uniform_int(0, n - 1));
  std::map<int, int> relabel;
  std::vector<int> image(n);
  for (int x = 0; x < n; ++x) {
    auto [it, fresh] = relabel.emplace(raw[x], static_cast<int>(relabel.size()));
    image[x] = it->second;
    (void)fresh;
  }
  const int m = static_cast<int>(relabel.size());
  const double big = 1e9;
  std::vector<std::vector<double>> d(m, std::vector<double>(m, big));
  for (int i = 0; i < m; ++i) d[i][i] = 0.0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      d[image[x]][image[y]] = std::min(d[image[x]][image[y]], from->dist(x, y));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  SpacePtr to = MetricSpace::from_matrix(from->label() + "/q", {}, std::move(d));
  return PointMap(from, to, std::move(image), 1.0);
}

namespace {

struct SuiteAccumulator {
  double worst = 0.0;
  void observe(double v) { worst = std::max(worst, v); }
};

SelftestRow kr_agreement_suite(Rng& rng, bool dual) {
  SuiteAccumulator acc;
  const int cases = 120;
  for (int c = 0; c < cases; ++c) {
    const int n = static_cast<int>(rng.uniform_int(2, 8));
    const SpacePtr space = random_space(rng, n, 0.05, 5.0, "fuzz");
    DiscreteMeasure p = random_probability(rng, space, 4);
    DiscreteMeasure q = random_probability(rng, space, 8 - p.support_size());
    const double primal = kr_distance(p, q).value;
    const double other = dual ? kr_dual(p, q).value : kr_oracle(p, q);
    acc.observe(std::abs(primal - other));
  }
  return {dual ? "kr_dual_agreement" : "kr_oracle_agreement", cases, acc.worst,
          1e-7, acc.worst <= 1e-7};
}

SelftestRow metric_axiom_suite(Rng& rng) {
  SuiteAccumulator acc;
  const int cases = 120;
  for (int c = 0; c < cases; ++c) {
    const int n = static_cast<int>(rng.uniform_int(3, 10));
    const SpacePtr space = random_space(rng, n, 0.05, 5.0, "fuzz");
    const DiscreteMeasure a = random_probability(rng, space, 10);
    const DiscreteMeasure b = random_probability(rng, space, 10);
    const DiscreteMeasure m = random_probability(rng, space, 10);
    const double dab = kr_distance(a, b).value;
    const double dba = kr_distance(b, a).value;
    const double dam = kr_distance(a, m).value;
    const double dmb = kr_distance(m, b).value;
    acc.observe(std::abs(dab - dba));
    acc.observe(dab - dam - dmb);
    acc.observe(kr_distance(a, a).value);
  }
  return {"kr_metric_axioms", cases, acc.worst, 1e-9, acc.worst <= 1e-9};
}

SelftestRow sandwich_suite(Rng& rng) {
  SuiteAccumulator acc;
  const int cases = 60;
  for (int c = 0; c < cases; ++c) {
    const int n = static_cast<int>(rng.uniform_int(2, 10));
    const SpacePtr space = random_space(rng, n, 0.05, 5.0, "fuzz");
    const DiscreteMeasure p = random_probability(rng, space, 6);
    const DiscreteMeasure q = random_probability(rng, space, 6);
    const KrResult res = kr_distance(p, q);
    const TestFunction f = random_lipschitz(rng, space);
    acc.observe(integrate(p, f) - integrate(q, f) - res.value);
    // The independent coupling is a feasible plan, so it upper-bounds.
    double product_cost = 0.0;
    for (const auto& pa : p.atoms())
      for (const auto& qa : q.atoms())
        product_cost += pa.weight.value() * qa.weight.value() *
                        truncated_cost(*space, pa.point, qa.point);
    acc.observe(res.value - product_cost);
  }
  return {"duality_sandwich", cases, acc.worst, 1e-9, acc.worst <= 1e-9};
}

SelftestRow quota_prefix_suite(Rng& rng) {
  SuiteAccumulator acc;
  const int cases = 60;
  for (int c = 0; c < cases; ++c) {
    const SpacePtr space = random_space(rng, 8, 0.05, 5.0, "fuzz");
    const DiscreteMeasure t = random_probability(rng, space, 6);
    const int n = static_cast<int>(rng.uniform_int(1, 120));
    const PointSequence seq = quota_sequence(t, n);
    std::map<int, std::int64_t> counts;
    for (int m = 1; m <= n; ++m) {
      ++counts[seq.ids()[static_cast<std::size_t>(m - 1)]];
      for (const auto& a : t.atoms())
        acc.observe(std::abs(static_cast<double>(counts[a.point]) -
                             m * a.weight.value()));
    }
  }
  return {"quota_prefix_proportionality", cases, acc.worst, 1.0, acc.worst < 1.0};
}

SelftestRow quota_exact_suite(Rng& rng) {
  SuiteAccumulator acc;
  const int cases = 40;
  for (int c = 0; c < cases; ++c) {
    const SpacePtr space = random_space(rng, 8, 0.05, 5.0, "fuzz");
    const DiscreteMeasure t = random_probability(rng, space, 6);
    // Every weight is a multiple of 1/den at n = den, so counts hit
    // n * w exactly and the distance must be exactly zero.
    std::int64_t den = 1;
    bool small = true;
    for (const auto& a : t.atoms()) {
      den = std::lcm(den, denominator(a.weight.rat()).convert_to<std::int64_t>());
      if (den > 5000) {
        small = false;
        break;
      }
    }
    if (!small) continue;
    const int n = static_cast<int>(den);
    acc.observe(kr_distance(empirical(quota_sequence(t, n), n), t).value);
  }
  return {"quota_exact_match", cases, acc.worst, 0.0, acc.worst == 0.0};
}

SelftestRow greedy_step_suite(Rng& rng) {
  SuiteAccumulator acc;
  const int cases = 12;
  for (int c = 0; c < cases; ++c) {
    const SpacePtr space = random_space(rng, 8, 0.05, 3.0, "fuzz");
    const DiscreteMeasure t = random_probability(rng, space, 8);
    PointSequence seq(space, {});
    double prev = -1.0;
    for (int step = 0; step < 24; ++step) {
      seq = greedy_extend(t, seq, 1);
      const double d = kr_distance(empirical(seq, seq.length()), t).value;
      if (prev >= 0.0) acc.observe(d - prev - 2.0 / seq.length());
      prev = d;
    }
  }
  return {"greedy_step_bound", cases, acc.worst, 1e-9, acc.worst <= 1e-9};
}

SelftestRow pushforward_suite(Rng& rng) {
  SuiteAccumulator acc;
  const int cases = 60;
  for (int c = 0; c < cases; ++c) {
    const int n = static_cast<int>(rng.uniform_int(2, 6));
    const SpacePtr space = random_space(rng, n, 0.05, 5.0, "fuzz");
    const PointMap map = random_contraction(rng, space);
    const DiscreteMeasure p = random_probability(rng, space, 6);
    const DiscreteMeasure q = random_probability(rng, space, 6);
    const double before = kr_distance(p, q).value;
    const double after =
        kr_distance(pushforward(p, map).normalized(), pushforward(q, map).normalized())
            .value;
    acc.observe(after - before);
  }
  return {"pushforward_contraction", cases, acc.worst, 1e-9, acc.worst <= 1e-9};
}

SelftestRow roundtrip_suite(Rng& rng) {
  SuiteAccumulator acc;
  const int cases = 30;
  for (int c = 0; c < cases; ++c) {
    const SpacePtr space = random_space(rng, 6, 0.05, 5.0, "fuzz");
    DiscreteMeasure m = random_probability(rng, space, 6);
    if (c % 2 == 1) {
      // Exercise the float path as well.
      std::vector<Atom> atoms;
      for (const auto& a : m.atoms())
        atoms.push_back({a.point, Weight::from_double(a.weight.value())});
      m = DiscreteMeasure::nonnegative(space, std::move(atoms));
    }
    const io::json j = io::measure_to_json(m, true);
    const io::json reparsed = io::json::parse(j.dump());
    const DiscreteMeasure back = io::measure_from_json(reparsed, "roundtrip", nullptr);
    bool same = back.atoms().size() == m.atoms().size();
    if (same) {
      for (std::size_t i = 0; i < m.atoms().size(); ++i) {
        const auto& x = m.atoms()[i];
        const auto& y = back.atoms()[i];
        if (x.point != y.point || x.weight.exact() != y.weight.exact() ||
            !(x.weight == y.weight))
          same = false;
      }
    }
    acc.observe(same ? 0.0 : 1.0);
  }
  return {"serialization_roundtrip", cases, acc.worst, 0.0, acc.worst == 0.0};
}

}  // namespace

SelftestReport run_selftest(std::uint64_t seed) {
  SelftestReport rep;
  rep.seed = seed;
  Rng rng(seed);
  rep.rows.push_back(kr_agreement_suite(rng, false));
  rep.rows.push_back(kr_agreement_suite(rng, true));
  rep.rows.push_back(metric_axiom_suite(rng));
  rep.rows.push_back(sandwich_suite(rng));
  rep.rows.push_back(quota_prefix_suite(rng));
  rep.rows.push_back(quota_exact_suite(rng));
  rep.rows.push_back(greedy_step_suite(rng));
  rep.rows.push_back(pushforward_suite(rng));
  rep.rows.push_back(roundtrip_suite(rng));
  rep.pass = true;
  for (const auto& r : rep.rows) rep.pass = rep.pass && r.pass;
  return rep;
}

std::string selftest_text(const SelftestReport& rep) {
  std::ostringstream os;
  os << "selftest seed=" << rep.seed << "\n";
  for (const auto& r : rep.rows) {
    os << (r.pass ? "PASS" : "FAIL") << " " << r.suite << " cases=" << r.cases
       << " worst=" << io::fmt_fixed(r.worst) << " limit=" << io::fmt_fixed(r.limit)
       << "\n";
  }
  os << (rep.pass ? "selftest passed" : "selftest FAILED") << "\n";
  return os.str();
}

}  // namespace udseq::selftest
