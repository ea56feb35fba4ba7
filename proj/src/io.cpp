#include "udseq/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace udseq::io {

namespace {

[[noreturn]] void fail(const std::string& file, std::vector<SchemaViolation> v) {
  throw SchemaError(file, std::move(v));
}

void require_or_fail(bool ok, const std::string& file, const std::string& path,
                     const std::string& message) {
  if (!ok) fail(file, {{path, message}});
}

Rational rational_from_string(const std::string& s, bool* ok) {
  *ok = false;
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      BigInt num(s);
      *ok = true;
      return Rational(num);
    }
    BigInt num(s.substr(0, slash));
    BigInt den(s.substr(slash + 1));
    if (den == 0) return Rational(0);
    *ok = true;
    return Rational(num, den);
  } catch (const std::exception&) {
    return Rational(0);
  }
}

}  // namespace

json weight_to_json(const Weight& w) {
  if (w.exact()) return json(w.to_string());
  return json(w.value());
}

Weight weight_from_json(const json& j, const std::string& path,
                        std::vector<SchemaViolation>& violations) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!std::isfinite(v) || v < 0.0) {
      violations.push_back({path, "weight must be a finite nonnegative number"});
      return Weight();
    }
    return Weight::from_double(v);
  }
  if (j.is_string()) {
    bool ok = false;
    Rational r = rational_from_string(j.get<std::string>(), &ok);
    if (!ok || r < 0) {
      violations.push_back({path, "weight string must be a nonnegative \"p/q\""});
      return Weight();
    }
    return Weight(r);
  }
  violations.push_back({path, "weight must be a number or a \"p/q\" string"});
  return Weight();
}

json space_to_json(const MetricSpace& space) {
  ordered_json j;
  j["label"] = space.label();
  if (space.has_coords() && !space.is_product()) {
    j["coords"] = space.coords();
    j["metric"] = "euclidean";
    return j;
  }
  std::vector<std::string> names;
  names.reserve(space.size());
  for (int i = 0; i < space.size(); ++i) names.push_back(space.point_name(i));
  j["points"] = names;
  j["dist"] = space.materialize_matrix();
  return j;
}

SpacePtr space_from_json(const json& j, const std::string& file) {
  std::vector<SchemaViolation> v;
  require_or_fail(j.is_object(), file, "$", "space must be an object");
  const std::string label = j.value("label", std::string("space"));
  if (j.contains("coords")) {
    require_or_fail(j.value("metric", "") == std::string("euclidean"), file,
                    "metric", "coordinate spaces require metric:\"euclidean\"");
    std::vector<std::vector<double>> coords;
    try {
      coords = j.at("coords").get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
      fail(file, {{"coords", "must be an array of real vectors"}});
    }
    return MetricSpace::euclidean(label, std::move(coords));
  }
  require_or_fail(j.contains("dist"), file, "dist",
                  "space needs either coords or a dist matrix");
  std::vector<std::vector<double>> dist;
  try {
    dist = j.at("dist").get<std::vector<std::vector<double>>>();
  } catch (const json::exception&) {
    fail(file, {{"dist", "must be a square matrix of reals"}});
  }
  std::vector<std::string> names;
  if (j.contains("points")) {
    try {
      names = j.at("points").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      fail(file, {{"points", "must be an array of strings"}});
    }
    for (std::size_t a = 0; a < names.size(); ++a)
      for (std::size_t b = a + 1; b < names.size(); ++b)
        if (names[a] == names[b])
          fail(file, {{"points[" + std::to_string(b) + "]",
                       "duplicate point identifier '" + names[a] + "'"}});
  }
  try {
    return MetricSpace::from_matrix(label, std::move(names), std::move(dist));
  } catch (const ShapeError& e) {
    fail(file, {{"dist", e.what()}});
  }
}

namespace {

SpacePtr resolve_space(const json& j, const std::string& file, SpacePtr context) {
  if (!j.contains("space")) {
    require_or_fail(context != nullptr, file, "space",
                    "no space embedded and none supplied");
    return context;
  }
  const json& js = j.at("space");
  if (js.is_string()) {
    require_or_fail(context != nullptr, file, "space",
                    "space is a label reference but no space was supplied");
    require_or_fail(js.get<std::string>() == context->label(), file, "space",
                    "space label '" + js.get<std::string>() +
                        "' does not match the supplied space '" +
                        context->label() + "'");
    return context;
  }
  SpacePtr parsed = space_from_json(js, file);
  if (context) {
    require_or_fail(parsed->same_as(*context), file, "space",
                    "embedded space differs from the supplied one");
    return context;
  }
  return parsed;
}

std::vector<Atom> atoms_from_json(const json& j, const std::string& file,
                                  const MetricSpace& space) {
  std::vector<SchemaViolation> violations;
  std::vector<Atom> atoms;
  if (!j.is_array()) fail(file, {{"atoms", "must be an array of [index, weight]"}});
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string base = "atoms[" + std::to_string(i) + "]";
    const json& e = j[i];
    if (!e.is_array() || e.size() != 2) {
      violations.push_back({base, "must be [index, weight]"});
      continue;
    }
    if (!e[0].is_number_integer()) {
      violations.push_back({base + "[0]", "point index must be an integer"});
      continue;
    }
    const int pt = e[0].get<int>();
    if (pt < 0 || pt >= space.size()) {
      violations.push_back({base + "[0]", "point index out of range"});
      continue;
    }
    const Weight w = weight_from_json(e[1], base + "[1]", violations);
    atoms.push_back({pt, w});
  }
  if (!violations.empty()) fail(file, std::move(violations));
  return atoms;
}

}  // namespace

json measure_to_json(const DiscreteMeasure& m, bool embed_space) {
  ordered_json j;
  if (embed_space)
    j["space"] = space_to_json(*m.space());
  else
    j["space"] = m.space()->label();
  ordered_json atoms = ordered_json::array();
  for (const auto& a : m.atoms())
    atoms.push_back(ordered_json::array({a.point, weight_to_json(a.weight)}));
  j["atoms"] = atoms;
  return j;
}

DiscreteMeasure measure_from_json(const json& j, const std::string& file,
                                  SpacePtr context) {
  require_or_fail(j.is_object(), file, "$", "measure must be an object");
  SpacePtr space = resolve_space(j, file, std::move(context));
  require_or_fail(j.contains("atoms"), file, "atoms", "measure needs atoms");
  auto atoms = atoms_from_json(j.at("atoms"), file, *space);
  try {
    return DiscreteMeasure::nonnegative(space, std::move(atoms));
  } catch (const Error& e) {
    fail(file, {{"atoms", e.what()}});
  }
}

json sequence_to_json(const PointSequence& s, bool embed_space) {
  ordered_json j;
  if (embed_space)
    j["space"] = space_to_json(*s.space());
  else
    j["space"] = s.space()->label();
  j["ids"] = s.ids();
  return j;
}

PointSequence sequence_from_json(const json& j, const std::string& file,
                                 SpacePtr context) {
  require_or_fail(j.is_object(), file, "$", "sequence must be an object");
  SpacePtr space = resolve_space(j, file, std::move(context));
  require_or_fail(j.contains("ids") && j.at("ids").is_array(), file, "ids",
                  "sequence needs an ids array");
  std::vector<int> ids;
  try {
    ids = j.at("ids").get<std::vector<int>>();
  } catch (const json::exception&) {
    fail(file, {{"ids", "must be an array of integers"}});
  }
  try {
    return PointSequence(space, std::move(ids));
  } catch (const Error& e) {
    fail(file, {{"ids", e.what()}});
  }
}

json plan_to_json(const TransportPlan& plan) {
  ordered_json j;
  j["cost"] = plan.cost;
  ordered_json flows = ordered_json::array();
  for (const auto& f : plan.flows)
    flows.push_back(ordered_json::array({f.from, f.to, f.mass}));
  j["flows"] = flows;
  return j;
}

json decomposition_to_json(const PieceDecomposition& d) {
  ordered_json j;
  j["space"] = space_to_json(*d.space());
  j["target"] = measure_to_json(d.target());
  ordered_json pieces = ordered_json::array();
  for (int l = 1; l <= d.piece_count(); ++l) pieces.push_back(d.piece(l));
  j["pieces"] = pieces;
  ordered_json approx = ordered_json::array();
  for (int l = 1; l <= d.piece_count(); ++l) {
    ordered_json sched = ordered_json::array();
    for (int k = 1; k <= d.horizon(); ++k)
      sched.push_back(measure_to_json(d.approximator(l, k)));
    approx.push_back(sched);
  }
  j["approximators"] = approx;
  return j;
}

PieceDecomposition decomposition_from_json(const json& j, const std::string& file) {
  require_or_fail(j.is_object(), file, "$", "decomposition must be an object");
  require_or_fail(j.contains("space"), file, "space", "decomposition needs a space");
  SpacePtr space = space_from_json(j.at("space"), file);
  require_or_fail(j.contains("target"), file, "target",
                  "decomposition needs a target measure");
  DiscreteMeasure target = measure_from_json(j.at("target"), file, space);
  require_or_fail(j.contains("pieces") && j.at("pieces").is_array(), file, "pieces",
                  "decomposition needs a pieces array");
  std::vector<std::vector<int>> pieces;
  try {
    pieces = j.at("pieces").get<std::vector<std::vector<int>>>();
  } catch (const json::exception&) {
    fail(file, {{"pieces", "must be an array of index arrays"}});
  }
  try {
    if (j.contains("approximators")) {
      const json& ja = j.at("approximators");
      require_or_fail(ja.is_array(), file, "approximators",
                      "must be a per-piece array of measure arrays");
      std::vector<std::vector<DiscreteMeasure>> approx;
      for (std::size_t l = 0; l < ja.size(); ++l) {
        std::vector<DiscreteMeasure> sched;
        for (std::size_t k = 0; k < ja[l].size(); ++k)
          sched.push_back(measure_from_json(ja[l][k], file, space));
        approx.push_back(std::move(sched));
      }
      return PieceDecomposition::with_approximators(space, std::move(target),
                                                    std::move(pieces),
                                                    std::move(approx));
    }
    const int horizon = j.value("horizon", 32);
    return PieceDecomposition::with_quota_defaults(space, std::move(target),
                                                   std::move(pieces), horizon);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    fail(file, {{"$", e.what()}});
  }
}

KernelPtr kernel_from_json(const json& j, const std::string& file) {
  require_or_fail(j.is_object(), file, "$", "kernel must be an object");
  require_or_fail(j.contains("domain") && j.contains("codomain"), file, "$",
                  "kernel needs domain and codomain spaces");
  SpacePtr domain = space_from_json(j.at("domain"), file);
  SpacePtr codomain = space_from_json(j.at("codomain"), file);
  require_or_fail(j.contains("map") && j.at("map").is_array(), file, "map",
                  "kernel needs a map array");
  std::vector<DiscreteMeasure> map(
      static_cast<std::size_t>(domain->size()),
      DiscreteMeasure::zero(codomain));
  std::vector<char> seen(static_cast<std::size_t>(domain->size()), 0);
  const json& jm = j.at("map");
  for (std::size_t i = 0; i < jm.size(); ++i) {
    const std::string base = "map[" + std::to_string(i) + "]";
    require_or_fail(jm[i].is_array() && jm[i].size() == 2, file, base,
                    "must be [x-index, measure]");
    require_or_fail(jm[i][0].is_number_integer(), file, base + "[0]",
                    "x-index must be an integer");
    const int x = jm[i][0].get<int>();
    require_or_fail(x >= 0 && x < domain->size(), file, base + "[0]",
                    "x-index out of range");
    require_or_fail(!seen[static_cast<std::size_t>(x)], file, base + "[0]",
                    "duplicate x-index");
    seen[static_cast<std::size_t>(x)] = 1;
    map[static_cast<std::size_t>(x)] =
        measure_from_json(jm[i][1], file, codomain);
  }
  for (int x = 0; x < domain->size(); ++x)
    require_or_fail(seen[static_cast<std::size_t>(x)], file, "map",
                    "kernel undefined at x-index " + std::to_string(x));
  require_or_fail(j.contains("pieces") && j.at("pieces").is_array(), file,
                  "pieces", "kernel needs a pieces array");
  std::vector<std::vector<int>> pieces;
  try {
    pieces = j.at("pieces").get<std::vector<std::vector<int>>>();
  } catch (const json::exception&) {
    fail(file, {{"pieces", "must be an array of index arrays"}});
  }
  try {
    return Kernel::create(domain, codomain, std::move(map), std::move(pieces));
  } catch (const Error& e) {
    fail(file, {{"$", e.what()}});
  }
}

json tightness_to_json(const TightnessCertificate& cert, int horizon) {
  ordered_json j;
  j["measures"] = cert.measure_count;
  j["horizon"] = horizon;
  ordered_json entries = ordered_json::array();
  for (const auto& e : cert.entries) {
    ordered_json je;
    je["eps"] = e.eps;
    je["compact_set"] = e.compact_set;
    je["bound"] = weight_to_json(e.bound);
    je["limit"] = e.limit;
    entries.push_back(je);
  }
  j["entries"] = entries;
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

void save_json_file(const json& j, const std::string& path) {
  write_text_file(path, j.dump(2) + "\n");
}

SpacePtr load_space(const std::string& path) {
  return space_from_json(load_json_file(path), path);
}

DiscreteMeasure load_measure(const std::string& path, SpacePtr context) {
  return measure_from_json(load_json_file(path), path, std::move(context));
}

PointSequence load_sequence(const std::string& path, SpacePtr context) {
  return sequence_from_json(load_json_file(path), path, std::move(context));
}

PieceDecomposition load_decomposition(const std::string& path) {
  return decomposition_from_json(load_json_file(path), path);
}

KernelPtr load_kernel(const std::string& path) {
  return kernel_from_json(load_json_file(path), path);
}

std::string fmt_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12f", v);
  return buf;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ",";
    line += cells[i];
  }
  line += "\n";
  return line;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace udseq::io
