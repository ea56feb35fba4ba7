#include "udseq/product.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "udseq/construct.hpp"
#include "udseq/errors.hpp"

namespace udseq {

namespace {
constexpr double kFloatTol = 1e-12;
constexpr int kModulusScanCap = 64;
constexpr int kRepresentativeCap = 1 << 22;
}  // namespace

KernelPtr Kernel::create(SpacePtr domain, SpacePtr codomain,
                         std::vector<DiscreteMeasure> map,
                         std::vector<std::vector<int>> pieces) {
  if (!domain || !codomain) throw ShapeError("kernel requires both spaces");
  if (static_cast<int>(map.size()) != domain->size())
    throw ShapeError("kernel map must cover every domain point");
  for (const auto& m : map) {
    if (!same_space(m.space(), codomain))
      throw SpaceMismatchError("kernel value lives outside the codomain");
    if (!m.is_probability())
      throw MassError("kernel values must be probability measures");
  }
  if (pieces.empty()) throw ShapeError("kernel requires at least one piece");
  auto k = std::shared_ptr<Kernel>(new Kernel());
  k->domain_ = std::move(domain);
  k->codomain_ = std::move(codomain);
  k->map_ = std::move(map);
  k->pieces_ = std::move(pieces);
  for (auto& p : k->pieces_) {
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    for (int pt : p)
      if (pt < 0 || pt >= k->domain_->size())
        throw RangeError("piece point out of range");
    if (p.empty()) throw DegenerateError("kernel piece is empty");
  }
  for (std::size_t i = 1; i < k->pieces_.size(); ++i) {
    if (!std::includes(k->pieces_[i].begin(), k->pieces_[i].end(),
                       k->pieces_[i - 1].begin(), k->pieces_[i - 1].end()))
      throw InputError("kernel pieces are not an increasing chain");
  }
  k->moduli_.reserve(k->pieces_.size());
  for (const auto& p : k->pieces_) {
    if (static_cast<int>(p.size()) > kModulusScanCap) {
      k->moduli_.push_back(-1.0);
      continue;
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      for (std::size_t b = a + 1; b < p.size(); ++b) {
        const double dx = k->domain_->dist(p[a], p[b]);
        if (dx <= 0.0) continue;
        const double dv = kr_distance(k->map_[p[a]], k->map_[p[b]]).value;
        worst = std::max(worst, dv / dx);
      }
    }
    k->moduli_.push_back(worst);
  }
  return k;
}

KernelPtr Kernel::with_pieces_from(SpacePtr domain, SpacePtr codomain,
                                   std::vector<DiscreteMeasure> map,
                                   const DiscreteMeasure& marginal) {
  if (!marginal.is_probability())
    throw MassError("piece chain requires a probability marginal");
  if (!same_space(marginal.space(), domain))
    throw SpaceMismatchError("marginal lives outside the kernel domain");

  // Points by descending marginal mass, ties to the lowest index.
  std::vector<int> order = marginal.support();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return marginal.weight_at(b) < marginal.weight_at(a);
  });
  std::vector<std::vector<int>> pieces;
  std::vector<int> prefix;
  std::size_t used = 0;
  Weight mass;
  for (int n = 1; n <= 64; ++n) {
    const Weight need = Weight::integer(1) - Weight::pow2(n);
    while (!(need < mass) && used < order.size()) {
      prefix.push_back(order[used]);
      mass += marginal.weight_at(order[used]);
      ++used;
    }
    if (!(need < mass))
      throw InputError("marginal mass cannot satisfy the piece schedule");
    pieces.push_back(prefix);
    if (used == order.size()) break;  // full support reached, chain is constant
  }
  return create(std::move(domain), std::move(codomain), std::move(map),
                std::move(pieces));
}

const DiscreteMeasure& Kernel::at(int x) const {
  if (x < 0 || x >= domain_->size())
    throw RangeError("kernel point out of range");
  return map_[static_cast<std::size_t>(x)];
}

const std::vector<int>& Kernel::piece(int n) const {
  if (n < 1) throw RangeError("piece index must be positive");
  return pieces_[static_cast<std::size_t>(std::min(n, piece_count()) - 1)];
}

double Kernel::continuity_modulus(int n) const {
  if (n < 1) throw RangeError("piece index must be positive");
  return moduli_[static_cast<std::size_t>(std::min(n, piece_count()) - 1)];
}

void Kernel::check_mass_schedule(const DiscreteMeasure& marginal) const {
  if (!same_space(marginal.space(), domain_))
    throw SpaceMismatchError("marginal lives outside the kernel domain");
  for (int n = 1; n <= piece_count(); ++n) {
    const Weight got = marginal.mass_inside(point_mask(*domain_, piece(n)));
    const Weight need = Weight::integer(1) - Weight::pow2(n);
    if (!(need < got))
      throw InputError("piece " + std::to_string(n) + " carries mass " +
                       got.to_string() + ", needs more than " + need.to_string());
  }
}

ExtendedKernel extend_kernel(const KernelPtr& kernel, int n) {
  if (!kernel) throw ShapeError("extend_kernel requires a kernel");
  if (n < 1) throw RangeError("extension level must be positive");
  const auto& K = kernel->piece(n);
  if (K.empty()) throw DegenerateError("cannot extend from an empty piece");

  const auto& X = *kernel->domain();
  ExtendedKernel out;
  out.base = kernel;
  out.level = n;
  out.anchors.resize(X.size());
  std::vector<char> in_piece(X.size(), 0);
  for (int z : K) in_piece[z] = 1;
  for (int x = 0; x < X.size(); ++x) {
    if (in_piece[x]) {
      out.anchors[x] = x;  // coincide with the base on K_n
      continue;
    }
    int best = K.front();
    double bd = X.dist(x, best);
    for (int z : K) {
      const double d = X.dist(x, z);
      if (d < bd) {
        bd = d;
        best = z;
      }
    }
    out.anchors[x] = best;
  }
  return out;
}

KernelPartition build_partition(const ExtendedKernel& xi, int n) {
  if (n < 1) throw RangeError("partition level must be positive");
  const auto& X = *xi.base->domain();
  const double open_radius = std::ldexp(1.0, -n - 1);  // 2^-(n+1)
  const double rep_radius = std::ldexp(1.0, -n);       // 2^-n

  KernelPartition part;
  part.level = n;
  part.cell_index.assign(X.size(), -1);

  // Distances between kernel values depend only on the anchors.
  std::map<std::pair<int, int>, double> cache;
  auto value_dist = [&](int xa, int xb) {
    int a = xi.anchor(xa), b = xi.anchor(xb);
    if (a == b) return 0.0;
    if (a > b) std::swap(a, b);
    auto it = cache.find({a, b});
    if (it != cache.end()) return it->second;
    const double d = kr_distance(xi.base->at(a), xi.base->at(b)).value;
    cache.emplace(std::make_pair(a, b), d);
    return d;
  };

  for (int x = 0; x < X.size(); ++x) {
    int best_cell = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < part.centers.size(); ++c) {
      const double d = value_dist(x, part.centers[c]);
      if (d < best_d) {
        best_d = d;
        best_cell = static_cast<int>(c);
      }
    }
    if (best_cell < 0 || best_d >= open_radius) {
      part.centers.push_back(x);
      part.cells.push_back({x});
      part.cell_index[x] = static_cast<int>(part.centers.size()) - 1;
    } else {
      part.cells[static_cast<std::size_t>(best_cell)].push_back(x);
      part.cell_index[x] = best_cell;
    }
  }

  // Smallest quota discretization of each center within 2^-n.
  for (int center : part.centers) {
    const DiscreteMeasure& value = xi.at(center);
    bool placed = false;
    for (int L = 1; L <= kRepresentativeCap; ++L) {
      auto rep = quota_measure(value, L);
      if (kr_distance(rep, value).value <= rep_radius) {
        part.representatives.push_back(std::move(rep));
        placed = true;
        break;
      }
    }
    if (!placed)
      throw CapacityError("no representative within radius at level " +
                          std::to_string(n));
  }

  double diam = 0.0;
  for (const auto& cell : part.cells)
    for (std::size_t a = 0; a < cell.size(); ++a)
      for (std::size_t b = a + 1; b < cell.size(); ++b)
        diam = std::max(diam, value_dist(cell[a], cell[b]));
  part.cell_diameter_sup = diam;

  double gap = 0.0;
  std::map<std::pair<int, int>, double> rep_cache;  // (anchor, cell) -> d
  for (int x = 0; x < X.size(); ++x) {
    const int c = part.cell_index[x];
    const auto key = std::make_pair(xi.anchor(x), c);
    auto it = rep_cache.find(key);
    double d;
    if (it != rep_cache.end()) {
      d = it->second;
    } else {
      d = kr_distance(xi.at(x), part.representatives[static_cast<std::size_t>(c)])
              .value;
      rep_cache.emplace(key, d);
    }
    gap = std::max(gap, d);
  }
  part.representative_gap_sup = gap;
  return part;
}

double default_dilation_radius(const MetricSpace& space) {
  const double m = space.min_positive_distance();
  return m > 0.0 ? m / 2.0 : 1.0;
}

ScheduleEntry select_schedule(const PieceDecomposition& marg, int n,
                              double dilation_r) {
  if (n < 1) throw RangeError("schedule level must be positive");
  if (dilation_r <= 0.0) throw RangeError("dilation radius must be positive");
  const auto& X = *marg.space();

  ScheduleEntry entry;
  entry.level = n;

  // U_{n,i} = r-dilation of K_i, suffix-intersected so U_{n,i} c U_{n,i+1}.
  std::vector<std::vector<char>> U;
  for (int i = 1; i <= n - 1; ++i) {
    const auto& K = marg.piece(i);
    std::vector<char> mask(X.size(), 0);
    for (int x = 0; x < X.size(); ++x) {
      for (int z : K) {
        if (X.dist(x, z) <= dilation_r) {
          mask[x] = 1;
          break;
        }
      }
    }
    U.push_back(std::move(mask));
  }
  for (int i = static_cast<int>(U.size()) - 2; i >= 0; --i)
    for (int x = 0; x < X.size(); ++x)
      U[static_cast<std::size_t>(i)][x] =
          U[static_cast<std::size_t>(i)][x] && U[static_cast<std::size_t>(i + 1)][x];

  const Weight cap = Weight::pow2(n);
  Weight best_leak;
  bool have_best = false;
  for (int m = n; m <= marg.horizon(); ++m) {
    Weight leak;
    for (int i = 1; i <= n - 1; ++i)
      leak += marg.approximator(i, m).mass_outside(U[static_cast<std::size_t>(i - 1)]);
    if (!have_best || leak < best_leak) {
      best_leak = leak;
      have_best = true;
    }
    if (leak <= cap) {
      entry.m_n = m;
      entry.leakage = leak;
      for (const auto& mask : U) {
        std::vector<int> ids;
        for (int x = 0; x < X.size(); ++x)
          if (mask[x]) ids.push_back(x);
        entry.neighborhoods.push_back(std::move(ids));
      }
      return entry;
    }
  }
  throw HorizonError("no schedule index within horizon " +
                         std::to_string(marg.horizon()) + " meets the 2^-" +
                         std::to_string(n) + " leakage bound; best achieved " +
                         (have_best ? best_leak.to_string() : std::string("none")),
                     have_best ? best_leak.value()
                               : std::numeric_limits<double>::infinity());
}

DiscreteMeasure product_measure(const DiscreteMeasure& nu,
                                const KernelPartition& partition,
                                const SpacePtr& product_space) {
  if (!product_space || !product_space->is_product())
    throw InputError("product_measure requires a product space");
  if (!same_space(nu.space(), product_space->factor_x()))
    throw InputError("marginal approximation lives outside the X factor");
  for (const auto& rep : partition.representatives)
    if (!same_space(rep.space(), product_space->factor_y()))
      throw InputError("representative lives outside the Y factor");

  std::vector<Atom> atoms;
  for (const auto& a : nu.atoms()) {
    if (a.weight.is_zero()) continue;
    if (a.point >= static_cast<int>(partition.cell_index.size()) ||
        partition.cell_index[a.point] < 0)
      throw CoverageError("partition does not cover support point " +
                          std::to_string(a.point));
    const auto& rep =
        partition.representatives[static_cast<std::size_t>(
            partition.cell_index[a.point])];
    for (const auto& b : rep.atoms()) {
      if (b.weight.is_zero()) continue;
      atoms.push_back(
          {product_space->pair_index(a.point, b.point), a.weight * b.weight});
    }
  }
  return DiscreteMeasure::nonnegative(product_space, std::move(atoms));
}

namespace {

DiscreteMeasure project(const DiscreteMeasure& m, bool first_factor) {
  const auto& ps = m.space();
  if (!ps->is_product())
    throw InputError("projection requires a measure on a product space");
  std::map<int, Weight> acc;
  for (const auto& a : m.atoms()) {
    auto [ix, iy] = ps->pair_of(a.point);
    acc.emplace(first_factor ? ix : iy, Weight()).first->second += a.weight;
  }
  std::vector<Atom> atoms;
  atoms.reserve(acc.size());
  for (auto& [p, w] : acc) atoms.push_back({p, w});
  return DiscreteMeasure::nonnegative(first_factor ? ps->factor_x() : ps->factor_y(),
                                      std::move(atoms));
}

}  // namespace

DiscreteMeasure project_to_x(const DiscreteMeasure& on_product) {
  return project(on_product, true);
}

DiscreteMeasure project_to_y(const DiscreteMeasure& on_product) {
  return project(on_product, false);
}

ProductConvergenceReport verify_product_convergence(
    const DiscreteMeasure& joint_target, const std::vector<ProductLevel>& levels,
    const std::vector<ProductTestFunction>& test_functions, double eps) {
  if (eps <= 0.0) throw RangeError("eps must be positive");
  if (!joint_target.space()->is_product() || !joint_target.is_probability())
    throw InputError("joint target must be a probability measure on a product space");
  if (levels.empty()) throw ShapeError("no constructed levels to verify");
  if (test_functions.empty()) throw ShapeError("no test functions supplied");
  for (const auto& lv : levels)
    if (!same_space(lv.measure.space(), joint_target.space()))
      throw InputError("level measure lives outside the target's product space");

  ProductConvergenceReport rep;
  rep.eps = eps;
  rep.bound = 6.0 * eps;

  int start = -1;
  for (const auto& lv : levels) {
    const double quantization = std::ldexp(1.0, 1 - lv.level);  // 2^(1-n)
    const double missing = 1.0 - lv.raw_mass.value();
    if (quantization <= eps && missing <= eps) {
      start = lv.level;
      break;
    }
  }
  if (start < 0)
    throw HorizonError("no materialized level reaches the 2^(1-n) <= eps regime",
                       std::numeric_limits<double>::infinity());
  rep.start_level = start;

  std::vector<double> targets(test_functions.size());
  for (std::size_t i = 0; i < test_functions.size(); ++i)
    targets[i] = test_functions[i].integrate_product(joint_target);

  double worst = 0.0;
  for (const auto& lv : levels) {
    double lvl_err = 0.0;
    for (std::size_t i = 0; i < test_functions.size(); ++i) {
      const double got = test_functions[i].integrate_product(lv.measure);
      lvl_err = std::max(lvl_err, std::abs(got - targets[i]));
    }
    rep.level_errors.emplace_back(lv.level, lvl_err);
    if (lv.level >= start) worst = std::max(worst, lvl_err);
  }
  rep.worst_error = worst;
  rep.worst_ratio = worst / rep.bound;
  rep.pass = worst <= rep.bound + kFloatTol;
  return rep;
}

PointMap::PointMap(SpacePtr from, SpacePtr to, std::vector<int> image,
                   double lipschitz)
    : from_(std::move(from)), to_(std::move(to)), image_(std::move(image)),
      lipschitz_(lipschitz) {
  if (!from_ || !to_) throw ShapeError("point map requires both spaces");
  if (static_cast<int>(image_.size()) != from_->size())
    throw ShapeError("point map image must cover the source space");
  for (int v : image_)
    if (v < -1 || v >= to_->size()) throw RangeError("image point out of range");
  if (!(lipschitz_ >= 0.0)) throw RangeError("Lipschitz constant must be nonnegative");
  for (int p = 0; p < from_->size(); ++p) {
    if (image_[p] < 0) continue;
    for (int q = p + 1; q < from_->size(); ++q) {
      if (image_[q] < 0) continue;
      const double lhs = to_->dist(image_[p], image_[q]);
      if (lhs > lipschitz_ * from_->dist(p, q) + 1e-9)
        throw InputError("map violates its recorded Lipschitz constant between " +
                         std::to_string(p) + " and " + std::to_string(q));
    }
  }
}

int PointMap::at(int p) const {
  if (p < 0 || p >= from_->size()) throw RangeError("point out of range");
  const int v = image_[static_cast<std::size_t>(p)];
  if (v < 0)
    throw DomainError("map undefined at point " + std::to_string(p));
  return v;
}

DiscreteMeasure pushforward(const DiscreteMeasure& m, const PointMap& map) {
  if (!same_space(m.space(), map.from()))
    throw SpaceMismatchError("measure lives outside the map's source space");
  std::map<int, Weight> acc;
  for (const auto& a : m.atoms())
    acc.emplace(map.at(a.point), Weight()).first->second += a.weight;
  std::vector<Atom> atoms;
  atoms.reserve(acc.size());
  for (auto& [p, w] : acc) atoms.push_back({p, w});
  return DiscreteMeasure::nonnegative(map.to(), std::move(atoms));
}

ProductPipelineResult run_product_pipeline(const DiscreteMeasure& marginal,
                                           const KernelPtr& kernel,
                                           const ProductPipelineOptions& options) {
  if (!kernel) throw ShapeError("pipeline requires a kernel");
  if (options.levels < 2) throw RangeError("pipeline needs at least level 2");
  if (options.eps <= 0.0) throw RangeError("eps must be positive");
  if (!same_space(marginal.space(), kernel->domain()))
    throw SpaceMismatchError("marginal lives outside the kernel domain");
  if (!marginal.is_probability())
    throw MassError("pipeline requires a probability marginal");
  kernel->check_mass_schedule(marginal);

  ProductPipelineResult out;
  out.product_space = MetricSpace::product_of(kernel->domain(), kernel->codomain());

  // Exact joint target from the marginal and the kernel.
  {
    std::vector<Atom> atoms;
    for (const auto& a : marginal.atoms()) {
      if (a.weight.is_zero()) continue;
      for (const auto& b : kernel->at(a.point).atoms()) {
        if (b.weight.is_zero()) continue;
        atoms.push_back({out.product_space->pair_index(a.point, b.point),
                         a.weight * b.weight});
      }
    }
    out.joint = DiscreteMeasure::probability(out.product_space, std::move(atoms));
  }

  std::vector<std::vector<int>> pieces;
  for (int i = 1; i <= kernel->piece_count(); ++i) pieces.push_back(kernel->piece(i));
  const int horizon = options.marginal_horizon > 0 ? options.marginal_horizon
                                                   : options.levels + 8;
  PieceDecomposition::Options relaxed;
  relaxed.require_support_in_piece = false;
  const PieceDecomposition marg = PieceDecomposition::with_quota_defaults(
      marginal.space(), marginal, pieces, std::max(horizon, options.levels), relaxed);

  const double r = options.dilation > 0.0 ? options.dilation
                                          : default_dilation_radius(*marginal.space());

  auto test_functions = default_product_test_family(out.product_space);
  test_functions.insert(test_functions.end(), options.extra_test_functions.begin(),
                        options.extra_test_functions.end());

  double worst_trim = -std::numeric_limits<double>::infinity();
  for (int n = 2; n <= options.levels; ++n) {
    const ExtendedKernel xi = extend_kernel(kernel, n);
    KernelPartition part = build_partition(xi, n);
    ScheduleEntry sched = select_schedule(marg, n, r);

    DiscreteMeasure nu_n = DiscreteMeasure::zero(marginal.space());
    for (int l = 1; l <= n - 1; ++l)
      nu_n = nu_n.plus(marg.approximator(l, sched.m_n));
    // Trimming: dropping pieces above m leaves variation at most 2^-m.
    for (int m = 1; m < n; ++m) {
      const Weight tail = marg.chain_mass(n - 1) - marg.chain_mass(m);
      worst_trim = std::max(worst_trim,
                            (tail - Weight::pow2(m)).value());
    }

    const DiscreteMeasure mu_raw = product_measure(nu_n, part, out.product_space);

    ProductLevelRow row;
    row.level = n;
    row.m_n = sched.m_n;
    row.leakage = sched.leakage.value();
    row.kernel_gap = part.representative_gap_sup;
    for (const auto& f : test_functions) {
      const double err = std::abs(f.integrate_marginal(nu_n) -
                                  f.integrate_marginal(marginal));
      row.marginal_error = std::max(row.marginal_error, err);
    }

    ProductLevel lv;
    lv.level = n;
    lv.raw_mass = mu_raw.mass();
    lv.measure = mu_raw.normalized();
    out.levels.push_back(std::move(lv));
    out.marginal_sums.push_back(std::move(nu_n));
    out.schedule.push_back(std::move(sched));
    out.partitions.push_back(std::move(part));
    out.rows.push_back(row);
  }
  out.worst_trimming_margin = worst_trim;

  out.report =
      verify_product_convergence(out.joint, out.levels, test_functions, options.eps);
  for (std::size_t i = 0; i < out.rows.size(); ++i)
    out.rows[i].product_error = out.report.level_errors[i].second;
  return out;
}

}  // namespace udseq
