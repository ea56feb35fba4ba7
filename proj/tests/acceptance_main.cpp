// Acceptance suite: runs every contract criterion at its stated
// tolerance and prints one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "udseq/construct.hpp"
#include "udseq/errors.hpp"
#include "udseq/glue.hpp"
#include "udseq/io.hpp"
#include "udseq/kr.hpp"
#include "udseq/measure.hpp"
#include "udseq/product.hpp"
#include "udseq/rng.hpp"
#include "udseq/selftest.hpp"

using namespace udseq;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::string cli_path = "./udseq";

Criterion c1_oracle_equivalence() {
  Rng rng(1001);
  double worst_oracle = 0.0, worst_dual = 0.0;
  for (int c = 0; c < 500; ++c) {
    const int n = static_cast<int>(rng.uniform_int(2, 8));
    auto s = selftest::random_space(rng, n, 0.05, 5.0, "c1");
    auto p = selftest::random_probability(rng, s, 4);
    auto q = selftest::random_probability(rng, s, 8 - p.support_size());
    const double primal = kr_distance(p, q).value;
    worst_oracle = std::max(worst_oracle, std::abs(primal - kr_oracle(p, q)));
    worst_dual = std::max(worst_dual, std::abs(primal - kr_dual(p, q).value));
  }
  std::ostringstream os;
  os << "cases=500 worst_oracle_gap=" << worst_oracle
     << " worst_dual_gap=" << worst_dual;
  return {1, "kr-oracle-equivalence", worst_oracle <= 1e-7 && worst_dual <= 1e-7,
          os.str()};
}

Criterion c2_metric_axioms() {
  Rng rng(1002);
  double worst = 0.0;
  for (int c = 0; c < 500; ++c) {
    const int n = static_cast<int>(rng.uniform_int(3, 10));
    auto s = selftest::random_space(rng, n, 0.05, 5.0, "c2");
    auto a = selftest::random_probability(rng, s, 10);
    auto b = selftest::random_probability(rng, s, 10);
    auto m = selftest::random_probability(rng, s, 10);
    const double ab = kr_distance(a, b).value;
    worst = std::max(worst, kr_distance(a, a).value);
    worst = std::max(worst, std::abs(ab - kr_distance(b, a).value));
    worst = std::max(worst,
                     ab - kr_distance(a, m).value - kr_distance(m, b).value);
  }
  std::ostringstream os;
  os << "cases=500 worst_violation=" << worst;
  return {2, "kr-metric-axioms", worst <= 1e-9, os.str()};
}

Criterion c3_truncation() {
  double worst = 0.0, worst_witness = 0.0;
  for (double d : {0.1, 1.0, 2.0, 3.0, 10.0}) {
    auto s = MetricSpace::from_matrix("c3", {"a", "b"}, {{0.0, d}, {d, 0.0}});
    auto da = DiscreteMeasure::dirac(s, 0);
    auto db = DiscreteMeasure::dirac(s, 1);
    const double expect = std::min(d, 2.0);
    worst = std::max(worst, std::abs(kr_distance(da, db).value - expect));
    const auto dual = kr_dual(da, db);
    worst = std::max(worst, std::abs(dual.value - expect));
    worst_witness = std::max(worst_witness, dual.potential.feasibility_gap());
  }
  std::ostringstream os;
  os << "worst_value_gap=" << worst << " worst_witness_gap=" << worst_witness;
  return {3, "truncation-behavior", worst <= 1e-9 && worst_witness <= 1e-9,
          os.str()};
}

Criterion c4_quota_proportionality() {
  Rng rng(1004);
  bool ok = true;
  double worst_dev = 0.0;
  int exact_checks = 0;
  for (int c = 0; c < 200; ++c) {
    auto s = selftest::random_space(rng, 8, 0.05, 5.0, "c4");
    auto t = selftest::random_probability(rng, s, 6);
    const int n = static_cast<int>(rng.uniform_int(1, 200));
    auto seq = quota_sequence(t, n);
    std::map<int, std::int64_t> counts;
    for (int m = 1; m <= n; ++m) {
      ++counts[seq.ids()[static_cast<std::size_t>(m - 1)]];
      for (const auto& a : t.atoms()) {
        const double dev =
            std::abs(static_cast<double>(counts[a.point]) - m * a.weight.value());
        worst_dev = std::max(worst_dev, dev);
        ok = ok && dev < 1.0;
      }
    }
    // n * w_i all integral at the common denominator: exact zero required.
    std::int64_t den = 1;
    for (const auto& a : t.atoms())
      den = std::lcm(den, denominator(a.weight.rat()).convert_to<std::int64_t>());
    if (den <= 400) {
      const int dn = static_cast<int>(den);
      const double z =
          kr_distance(empirical(quota_sequence(t, dn), dn), t).value;
      ok = ok && z == 0.0;
      ++exact_checks;
    }
  }
  std::ostringstream os;
  os << "cases=200 worst_prefix_deviation=" << worst_dev
     << " exact_zero_checks=" << exact_checks;
  return {4, "quota-proportionality", ok, os.str()};
}

Criterion c5_greedy_grid() {
  std::vector<std::vector<double>> coords;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      coords.push_back({i / 9.0, j / 9.0});
  auto grid = MetricSpace::euclidean("grid10", std::move(coords));
  std::vector<Atom> atoms;
  for (int i = 0; i < 100; ++i) atoms.push_back({i, Weight::ratio(1, 100)});
  auto uniform = DiscreteMeasure::probability(grid, std::move(atoms));

  auto seq = greedy_extend(uniform, PointSequence(grid, {}), 500);
  auto cert = verify_ud(uniform, seq, {50, 100, 200, 500}, 0.05);
  std::ostringstream os;
  os << "distances=";
  for (std::size_t i = 0; i < cert.distances.size(); ++i)
    os << (i ? "," : "") << io::fmt_fixed(cert.distances[i]);
  return {5, "greedy-grid-construction", cert.pass, os.str()};
}

// 30-point space in three pieces with exact rational masses 3/5, 8/25, 2/25.
PieceDecomposition three_piece_decomp(int horizon) {
  std::vector<std::vector<double>> coords;
  for (int i = 0; i < 30; ++i)
    coords.push_back({0.31 * (i % 6), 0.27 * (i / 6)});
  auto s = MetricSpace::euclidean("c6", std::move(coords));
  std::vector<Atom> atoms;
  const std::int64_t per_a[] = {9, 9, 9, 9, 9, 10, 10, 10};        // 75
  for (int i = 0; i < 8; ++i) atoms.push_back({i, Weight::ratio(per_a[i], 125)});
  for (int i = 8; i < 18; ++i) atoms.push_back({i, Weight::ratio(4, 125)});  // 40
  for (int i = 18; i < 28; ++i) atoms.push_back({i, Weight::ratio(1, 125)}); // 10
  auto target = DiscreteMeasure::probability(s, std::move(atoms));
  std::vector<int> p1, p2, p3;
  for (int i = 0; i < 8; ++i) p1.push_back(i);
  for (int i = 0; i < 18; ++i) p2.push_back(i);
  for (int i = 0; i < 30; ++i) p3.push_back(i);
  return PieceDecomposition::with_quota_defaults(s, target, {p1, p2, p3}, horizon);
}

Criterion c6_glue_identities() {
  const int horizon = 200;
  auto d = three_piece_decomp(horizon);
  bool ok = true;
  for (int n = 1; n <= horizon; ++n) {
    DiscreteMeasure sum = DiscreteMeasure::zero(d.space());
    for (int j = 1; j <= std::min(n, d.piece_count()); ++j)
      sum = sum.plus(d.approximator(j, n));
    ok = ok && sum.mass().exact() &&
         sum.mass() == d.chain_mass(std::min(n, d.piece_count()));
    ok = ok && glue(d, n).mass().rat() == 1;
  }
  double worst_ratio = 0.0;
  for (double eps : {0.25, 0.1}) {
    for (int center : {0, 10, 25}) {
      auto f = TestFunction::distance_cone(d.space(), center);
      auto rep = glue_convergence_check(d, f, eps);
      ok = ok && rep.pass && rep.achieved <= 4.0 * eps;
      worst_ratio = std::max(worst_ratio, rep.achieved / (4.0 * eps));
    }
  }
  std::ostringstream os;
  os << "chain_identity=exact worst_4eps_ratio=" << worst_ratio;
  return {6, "glue-identities", ok, os.str()};
}

Criterion c7_tightness() {
  const int horizon = 200;
  auto d = three_piece_decomp(horizon);
  std::vector<DiscreteMeasure> measures;
  for (int n = 1; n <= horizon; ++n) measures.push_back(glue(d, n));
  bool ok = true;
  double worst_ratio = 0.0;
  auto cert = tightness_certificate(measures, d, {0.25, 0.1});
  for (const auto& e : cert.entries) {
    // Independent recomputation of the escape supremum.
    std::vector<char> mask(static_cast<std::size_t>(d.space()->size()), 0);
    for (int p : e.compact_set) mask[static_cast<std::size_t>(p)] = 1;
    Weight sup;
    for (const auto& m : measures) {
      Weight esc;
      for (const auto& a : m.atoms())
        if (!mask[static_cast<std::size_t>(a.point)]) esc += a.weight;
      if (sup < esc) sup = esc;
    }
    ok = ok && sup == e.bound && e.bound.value() <= 3.0 * e.eps;
    worst_ratio = std::max(worst_ratio, e.bound.value() / (3.0 * e.eps));
  }

  // Escaping enumeration: every finite set misses almost all of it.
  bool no_cert_seen = false;
  double escape_bound = 0.0;
  {
    std::vector<std::vector<double>> coords;
    for (int i = 0; i < 40; ++i) coords.push_back({static_cast<double>(i)});
    auto s = MetricSpace::euclidean("enum", std::move(coords));
    auto dd = PieceDecomposition::with_quota_defaults(
        s, DiscreteMeasure::dirac(s, 0), {{0}, {0, 1}}, 8);
    std::vector<DiscreteMeasure> escaping;
    for (int n = 0; n < s->size(); ++n)
      escaping.push_back(DiscreteMeasure::dirac(s, n));
    try {
      tightness_certificate(escaping, dd, {0.1});
    } catch (const NoCertificateError& e) {
      no_cert_seen = true;
      escape_bound = e.best_bound();
    }
  }
  ok = ok && no_cert_seen && escape_bound == 1.0;
  std::ostringstream os;
  os << "worst_3eps_ratio=" << worst_ratio
     << " escape_refused=" << (no_cert_seen ? "yes" : "no");
  return {7, "tightness-certificates", ok, os.str()};
}

Criterion c8_product_pipeline() {
  auto X = MetricSpace::euclidean("X", {{0.0}, {1.0}, {2.0}, {3.0}});
  auto Y = MetricSpace::euclidean("Y", {{0.0}, {0.5}, {1.0}, {1.5}});
  auto marginal = DiscreteMeasure::probability(X, {{0, Weight::ratio(2, 5)},
                                                   {1, Weight::ratio(1, 5)},
                                                   {2, Weight::ratio(1, 5)},
                                                   {3, Weight::ratio(1, 5)}});
  auto lambda0 = DiscreteMeasure::probability(
      Y, {{0, Weight::ratio(1, 2)}, {1, Weight::ratio(1, 2)}});
  auto lambda1 = DiscreteMeasure::probability(
      Y, {{2, Weight::ratio(1, 2)}, {3, Weight::ratio(1, 2)}});
  auto kernel = Kernel::with_pieces_from(X, Y, {lambda0, lambda0, lambda1, lambda1},
                                         marginal);
  ProductPipelineOptions opts;
  opts.levels = 8;
  opts.eps = 0.25;
  auto result = run_product_pipeline(marginal, kernel, opts);

  bool ok = result.report.pass;
  for (const auto& row : result.rows) {
    ok = ok && row.leakage <= std::ldexp(1.0, -row.level);
    ok = ok && row.kernel_gap <= std::ldexp(1.0, 1 - row.level);
  }
  for (std::size_t i = 0; i < result.levels.size(); ++i) {
    const auto& lv = result.levels[i];
    const auto projected = project_to_x(lv.measure).scaled(lv.raw_mass);
    ok = ok && projected.equal_measure(result.marginal_sums[i]);
  }
  std::ostringstream os;
  os << "levels=" << result.levels.size()
     << " worst_6eps_error=" << result.report.worst_error
     << " bound=" << result.report.bound;
  return {8, "product-pipeline", ok, os.str()};
}

Criterion c9_pushforward_contraction() {
  Rng rng(1009);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const int n = static_cast<int>(rng.uniform_int(2, 6));
    auto s = selftest::random_space(rng, n, 0.05, 5.0, "c9");
    auto map = selftest::random_contraction(rng, s);
    auto p = selftest::random_probability(rng, s, 6);
    auto q = selftest::random_probability(rng, s, 6);
    const double before = kr_distance(p, q).value;
    const double after = kr_distance(pushforward(p, map).normalized(),
                                     pushforward(q, map).normalized())
                             .value;
    worst = std::max(worst, after - before);
  }
  std::ostringstream os;
  os << "cases=200 worst_expansion=" << worst;
  return {9, "pushforward-contraction", worst <= 1e-9, os.str()};
}

std::string run_command(const std::string& cmd, int* exit_code) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    *exit_code = -1;
    return out;
  }
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
  *exit_code = pclose(pipe);
  return out;
}

std::string slurp(const std::string& path) {
  FILE* f = fopen(path.c_str(), "rb");
  if (!f) return "<missing>";
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, got);
  fclose(f);
  return out;
}

Criterion c10_determinism() {
  int rc1 = 0, rc2 = 0;
  const std::string base = cli_path + " selftest --seed 42";
  const std::string out1 =
      run_command(base + " --report st1.csv --summary st1.json 2>&1", &rc1);
  const std::string out2 =
      run_command(base + " --report st2.csv --summary st2.json 2>&1", &rc2);
  const bool same_stdout = out1 == out2 && !out1.empty();
  const bool same_files =
      slurp("st1.csv") == slurp("st2.csv") && slurp("st1.json") == slurp("st2.json");
  const bool passed = rc1 == 0 && rc2 == 0;
  std::ostringstream os;
  os << "stdout_identical=" << (same_stdout ? "yes" : "no")
     << " reports_identical=" << (same_files ? "yes" : "no")
     << " exit=" << rc1;
  return {10, "selftest-determinism", same_stdout && same_files && passed, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) cli_path = argv[1];

  using Fn = Criterion (*)();
  const Fn criteria[] = {c1_oracle_equivalence, c2_metric_axioms,
                         c3_truncation,         c4_quota_proportionality,
                         c5_greedy_grid,        c6_glue_identities,
                         c7_tightness,          c8_product_pipeline,
                         c9_pushforward_contraction, c10_determinism};

  bool all = true;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Criterion c;
    try {
      c = criteria[i]();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
      c.id = static_cast<int>(i) + 1;
      c.name = "criterion";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d. %-26s %s (%.1fs)\n", c.pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), c.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && c.pass;
  }
  std::printf("%s\n", all ? "acceptance: all criteria passed"
                          : "acceptance: FAILURES present");
  return all ? 0 : 1;
}
