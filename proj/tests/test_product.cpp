#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "udseq/errors.hpp"
#include "udseq/kr.hpp"
#include "udseq/product.hpp"
#include "udseq/rng.hpp"
#include "udseq/selftest.hpp"

using namespace udseq;

namespace {

SpacePtr line(int n, double step, const std::string& label) {
  std::vector<std::vector<double>> coords;
  for (int i = 0; i < n; ++i) coords.push_back({i * step});
  return MetricSpace::euclidean(label, std::move(coords));
}

// Two-valued kernel on a 4-point domain: left half sees lambda0, right
// half sees lambda1.
struct Demo {
  SpacePtr X, Y;
  DiscreteMeasure marginal;
  KernelPtr kernel;
};

Demo make_demo() {
  Demo d;
  d.X = line(4, 1.0, "X");
  d.Y = line(4, 0.5, "Y");
  d.marginal = DiscreteMeasure::probability(d.X, {{0, Weight::ratio(2, 5)},
                                                  {1, Weight::ratio(1, 5)},
                                                  {2, Weight::ratio(1, 5)},
                                                  {3, Weight::ratio(1, 5)}});
  auto lambda0 = DiscreteMeasure::probability(
      d.Y, {{0, Weight::ratio(1, 2)}, {1, Weight::ratio(1, 2)}});
  auto lambda1 = DiscreteMeasure::probability(
      d.Y, {{2, Weight::ratio(1, 2)}, {3, Weight::ratio(1, 2)}});
  d.kernel = Kernel::with_pieces_from(
      d.X, d.Y, {lambda0, lambda0, lambda1, lambda1}, d.marginal);
  return d;
}

}  // namespace

TEST_CASE("piece chains satisfy the strict mass schedule") {
  auto d = make_demo();
  d.kernel->check_mass_schedule(d.marginal);
  for (int n = 1; n <= d.kernel->piece_count(); ++n) {
    const Weight got =
        d.marginal.mass_inside(point_mask(*d.X, d.kernel->piece(n)));
    CHECK(Weight::integer(1) - Weight::pow2(n) < got);
  }
  CHECK(d.kernel->piece(d.kernel->piece_count()).size() == 4);
}

TEST_CASE("extend_kernel anchors by nearest piece point") {
  auto d = make_demo();
  auto xi1 = extend_kernel(d.kernel, 1);
  const auto& K1 = d.kernel->piece(1);
  for (int z : K1) CHECK(xi1.anchor(z) == z);  // coincides on the piece
  for (int x = 0; x < d.X->size(); ++x) {
    double best = 1e300;
    for (int z : K1) best = std::min(best, d.X->dist(x, z));
    CHECK(d.X->dist(x, xi1.anchor(x)) == doctest::Approx(best));
  }

  // Single-anchor piece maps everything to that anchor's value.
  auto k1 = Kernel::create(d.X, d.Y,
                           {d.kernel->at(0), d.kernel->at(1), d.kernel->at(2),
                            d.kernel->at(3)},
                           {{1}});
  auto xi = extend_kernel(k1, 1);
  for (int x = 0; x < d.X->size(); ++x)
    CHECK(xi.at(x).equal_measure(d.kernel->at(1)));
}

TEST_CASE("build_partition separates distant kernel values") {
  auto d = make_demo();
  auto xi = extend_kernel(d.kernel, d.kernel->piece_count());
  for (int n = 2; n <= 6; ++n) {
    auto part = build_partition(xi, n);
    CHECK(part.cells.size() == 2);  // two kernel values, far apart
    CHECK(part.cell_diameter_sup < std::ldexp(1.0, -n));
    CHECK(part.representative_gap_sup <= std::ldexp(1.0, 1 - n));
    // every point covered exactly once
    std::vector<int> seen(d.X->size(), 0);
    for (const auto& cell : part.cells)
      for (int x : cell) ++seen[x];
    for (int x = 0; x < d.X->size(); ++x) CHECK(seen[x] == 1);
  }
}

TEST_CASE("constant kernels collapse to one cell with zero gap") {
  auto X = line(3, 1.0, "X");
  auto Y = line(2, 1.0, "Y");
  auto lambda = DiscreteMeasure::probability(
      Y, {{0, Weight::ratio(1, 2)}, {1, Weight::ratio(1, 2)}});
  auto nu = DiscreteMeasure::probability(X, {{0, Weight::ratio(1, 3)},
                                             {1, Weight::ratio(1, 3)},
                                             {2, Weight::ratio(1, 3)}});
  auto k = Kernel::with_pieces_from(X, Y, {lambda, lambda, lambda}, nu);
  auto part = build_partition(extend_kernel(k, 1), 3);
  CHECK(part.cells.size() == 1);
  CHECK(part.cell_diameter_sup == 0.0);
  CHECK(part.representatives[0].equal_measure(lambda));
}

TEST_CASE("schedule: supported approximators have zero leakage") {
  auto d = make_demo();
  std::vector<std::vector<int>> pieces;
  for (int i = 1; i <= d.kernel->piece_count(); ++i)
    pieces.push_back(d.kernel->piece(i));
  PieceDecomposition::Options relaxed;
  relaxed.require_support_in_piece = false;
  auto marg = PieceDecomposition::with_quota_defaults(d.X, d.marginal, pieces, 12,
                                                      relaxed);
  for (int n = 2; n <= 6; ++n) {
    auto entry = select_schedule(marg, n, default_dilation_radius(*d.X));
    CHECK(entry.m_n == n);
    CHECK(entry.leakage == Weight());
    for (std::size_t i = 0; i + 1 < entry.neighborhoods.size(); ++i) {
      // U_{n,i} nested upward
      for (int pt : entry.neighborhoods[i]) {
        bool found = false;
        for (int q : entry.neighborhoods[i + 1]) found = found || q == pt;
        CHECK(found);
      }
    }
  }
}

TEST_CASE("schedule walks out leakage that decays as 2^-k") {
  auto X = line(2, 3.0, "X");
  auto target = DiscreteMeasure::dirac(X, 0);
  // Approximators put 2^-k of their mass outside the piece {0}.
  std::vector<DiscreteMeasure> sched;
  const int horizon = 12;
  for (int k = 1; k <= horizon; ++k) {
    sched.push_back(DiscreteMeasure::nonnegative(
        X, {{0, Weight::integer(1) - Weight::pow2(k)}, {1, Weight::pow2(k)}}));
  }
  PieceDecomposition::Options relaxed;
  relaxed.require_support_in_piece = false;
  auto marg = PieceDecomposition::with_approximators(X, target, {{0}, {0, 1}},
                                                     {sched, std::vector<DiscreteMeasure>(
                                                                 horizon,
                                                                 DiscreteMeasure::zero(X))},
                                                     relaxed);
  // Level n needs leakage <= 2^-n; the k-th approximator leaks 2^-k, so
  // m_n = n exactly.
  for (int n = 2; n <= 6; ++n) {
    auto entry = select_schedule(marg, n, 1.0);
    CHECK(entry.m_n == n);
    CHECK(entry.leakage == Weight::pow2(n));
  }
}

TEST_CASE("permanent leakage raises a horizon error") {
  auto X = line(2, 3.0, "X");
  auto target = DiscreteMeasure::dirac(X, 0);
  std::vector<DiscreteMeasure> stuck(
      8, DiscreteMeasure::nonnegative(X, {{0, Weight::ratio(1, 2)},
                                          {1, Weight::ratio(1, 2)}}));
  PieceDecomposition::Options relaxed;
  relaxed.require_support_in_piece = false;
  auto marg = PieceDecomposition::with_approximators(
      X, target, {{0}, {0, 1}},
      {stuck, std::vector<DiscreteMeasure>(8, DiscreteMeasure::zero(X))}, relaxed);
  try {
    select_schedule(marg, 3, 1.0);
    FAIL("expected HorizonError");
  } catch (const HorizonError& e) {
    CHECK(e.achieved() == doctest::Approx(0.5));
  }
}

TEST_CASE("product_measure: dirac marginal and independence") {
  auto d = make_demo();
  auto prod = MetricSpace::product_of(d.X, d.Y);
  auto xi = extend_kernel(d.kernel, d.kernel->piece_count());
  auto part = build_partition(xi, 4);

  auto delta = DiscreteMeasure::dirac(d.X, 0);
  auto m = product_measure(delta, part, prod);
  CHECK(m.mass().rat() == 1);
  CHECK(project_to_x(m).equal_measure(delta));
  CHECK(project_to_y(m).equal_measure(part.representatives[part.cell_index[0]]));

  // Constant kernel: the product is marginal (x) representative.
  auto lambda = DiscreteMeasure::probability(
      d.Y, {{0, Weight::ratio(1, 2)}, {1, Weight::ratio(1, 2)}});
  auto kc = Kernel::with_pieces_from(d.X, d.Y, {lambda, lambda, lambda, lambda},
                                     d.marginal);
  auto pc = build_partition(extend_kernel(kc, 1), 4);
  auto mc = product_measure(d.marginal, pc, prod);
  for (const auto& a : d.marginal.atoms())
    for (const auto& b : lambda.atoms())
      CHECK(mc.weight_at(prod->pair_index(a.point, b.point)) ==
            a.weight * b.weight);

  // Sub-probability marginals keep their mass.
  auto partial = DiscreteMeasure::nonnegative(d.X, {{0, Weight::ratio(9, 10)}});
  CHECK(product_measure(partial, part, prod).mass() == Weight::ratio(9, 10));
}

TEST_CASE("projection of the product equals the marginal exactly") {
  auto d = make_demo();
  auto prod = MetricSpace::product_of(d.X, d.Y);
  auto part = build_partition(extend_kernel(d.kernel, d.kernel->piece_count()), 5);
  auto m = product_measure(d.marginal, part, prod);
  CHECK(project_to_x(m).equal_measure(d.marginal));
}

TEST_CASE("full pipeline meets every displayed bound") {
  auto d = make_demo();
  ProductPipelineOptions opts;
  opts.levels = 8;
  opts.eps = 0.25;
  auto result = run_product_pipeline(d.marginal, d.kernel, opts);

  CHECK(result.report.pass);
  CHECK(result.report.worst_error <= 6.0 * opts.eps + 1e-12);
  CHECK(result.worst_trimming_margin <= 0.0);
  for (const auto& row : result.rows) {
    CHECK(row.leakage <= std::ldexp(1.0, -row.level) + 1e-15);
    CHECK(row.kernel_gap <= std::ldexp(1.0, 1 - row.level) + 1e-12);
    if (row.level >= result.report.start_level)
      CHECK(row.marginal_error <= 3.0 * opts.eps + 1e-12);
  }
  for (std::size_t i = 0; i < result.levels.size(); ++i) {
    // X-projection equals the scheduled marginal sum, atom for atom.
    const auto& lv = result.levels[i];
    CHECK(lv.measure.mass().rat() == 1);
    CHECK(lv.raw_mass.exact());
  }

  // 2x2 variant from the worked example: bound 6 * 0.25 = 1.5.
  auto X2 = line(2, 1.0, "X2");
  auto Y2 = line(2, 1.0, "Y2");
  auto nu2 = DiscreteMeasure::probability(
      X2, {{0, Weight::ratio(1, 2)}, {1, Weight::ratio(1, 2)}});
  auto k2 = Kernel::with_pieces_from(
      X2, Y2,
      {DiscreteMeasure::dirac(Y2, 0),
       DiscreteMeasure::probability(
           Y2, {{0, Weight::ratio(1, 4)}, {1, Weight::ratio(3, 4)}})},
      nu2);
  ProductPipelineOptions o2;
  o2.levels = 6;
  o2.eps = 0.25;
  auto r2 = run_product_pipeline(nu2, k2, o2);
  CHECK(r2.report.pass);
  CHECK(r2.report.worst_error <= 1.5);
  // Exhaustive recomputation over the product atoms for the last level.
  const auto fns = default_product_test_family(r2.product_space);
  double direct = 0.0;
  for (const auto& f : fns)
    direct = std::max(direct, std::abs(f.integrate_product(r2.levels.back().measure) -
                                       f.integrate_product(r2.joint)));
  CHECK(direct == doctest::Approx(r2.report.level_errors.back().second));
}

TEST_CASE("verify_product_convergence: exact levels and error paths") {
  auto X = line(2, 1.0, "X");
  auto Y = line(2, 1.0, "Y");
  auto prod = MetricSpace::product_of(X, Y);
  auto lambda = DiscreteMeasure::probability(
      Y, {{0, Weight::ratio(1, 2)}, {1, Weight::ratio(1, 2)}});
  auto nu = DiscreteMeasure::probability(
      X, {{0, Weight::ratio(1, 2)}, {1, Weight::ratio(1, 2)}});
  // Independent joint nu (x) lambda, handed in as its own approximation.
  std::vector<Atom> atoms;
  for (const auto& a : nu.atoms())
    for (const auto& b : lambda.atoms())
      atoms.push_back({prod->pair_index(a.point, b.point), a.weight * b.weight});
  auto joint = DiscreteMeasure::probability(prod, atoms);
  std::vector<ProductLevel> levels;
  levels.push_back({4, joint, Weight::integer(1)});
  auto fns = default_product_test_family(prod);
  auto rep = verify_product_convergence(joint, levels, fns, 0.25);
  CHECK(rep.pass);
  CHECK(rep.worst_error == 0.0);
  CHECK(rep.start_level == 4);

  // Level too coarse for the requested eps: 2^(1-n) never reaches it.
  std::vector<ProductLevel> coarse;
  coarse.push_back({1, joint, Weight::integer(1)});
  CHECK_THROWS_AS(verify_product_convergence(joint, coarse, fns, 0.25),
                  HorizonError);

  // Targets must be probability measures on a product space.
  CHECK_THROWS_AS(verify_product_convergence(nu, levels, fns, 0.25), InputError);
}

TEST_CASE("factored test functions see exactly the marginal error") {
  auto d = make_demo();
  ProductPipelineOptions opts;
  opts.levels = 5;
  opts.eps = 0.25;
  auto result = run_product_pipeline(d.marginal, d.kernel, opts);
  const auto& lv = result.levels.back();
  // phi == 1 collapses the product integral to the X marginal.
  std::vector<double> psi(d.X->size());
  for (int i = 0; i < d.X->size(); ++i)
    psi[i] = std::clamp(1.0 - d.X->dist(i, 0), -1.0, 1.0);
  ProductTestFunction f(result.product_space, psi,
                        std::vector<double>(d.Y->size(), 1.0));
  const double product_side = f.integrate_product(lv.measure);
  const double marginal_side = f.integrate_marginal(project_to_x(lv.measure));
  CHECK(product_side == doctest::Approx(marginal_side));
}

TEST_CASE("pushforward merges collisions and contracts") {
  Rng rng(41);
  auto s = selftest::random_space(rng, 3, 0.2, 2.0, "fuzz");
  auto m = DiscreteMeasure::probability(s, {{0, Weight::ratio(1, 3)},
                                            {1, Weight::ratio(1, 3)},
                                            {2, Weight::ratio(1, 3)}});
  // Identity.
  PointMap ident(s, s, {0, 1, 2}, 1.0);
  CHECK(pushforward(m, ident).equal_measure(m));
  // Constant map: everything lands on one atom.
  auto one = MetricSpace::from_matrix("pt", {}, {{0.0}});
  PointMap constant(s, one, {0, 0, 0}, 0.0);
  auto image = pushforward(m, constant);
  CHECK(image.weight_at(0) == Weight::integer(1));

  // Contraction witnessed through the oracle on a 3-point instance.
  for (int c = 0; c < 30; ++c) {
    auto from = selftest::random_space(rng, 3, 0.2, 3.0, "fuzz");
    auto map = selftest::random_contraction(rng, from);
    auto p = selftest::random_probability(rng, from, 3);
    auto q = selftest::random_probability(rng, from, 3);
    const double before = kr_oracle(p, q);
    const double after = kr_oracle(pushforward(p, map).normalized(),
                                   pushforward(q, map).normalized());
    CHECK(after <= before + 1e-9);
  }

  // Undefined image points raise a domain error.
  PointMap partial(s, s, {0, -1, 2}, 1.0);
  CHECK_THROWS_AS(pushforward(m, partial), DomainError);
}
