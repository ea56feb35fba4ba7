// Command-line front end: batch constructions and certificate reports.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "udseq/construct.hpp"
#include "udseq/errors.hpp"
#include "udseq/glue.hpp"
#include "udseq/io.hpp"
#include "udseq/kr.hpp"
#include "udseq/measure.hpp"
#include "udseq/product.hpp"
#include "udseq/selftest.hpp"

namespace {

using udseq::io::fmt_fixed;
using udseq::io::ordered_json;

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw udseq::InputError(std::string(what) + ": bad integer '" + item + "'");
    }
  }
  if (out.empty()) throw udseq::InputError(std::string(what) + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw udseq::InputError(std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) throw udseq::InputError(std::string(what) + ": empty list");
  return out;
}

udseq::SpacePtr maybe_space(const std::string& path) {
  if (path.empty()) return nullptr;
  return udseq::io::load_space(path);
}

int run_kr(const std::string& space_path, const std::string& mu_path,
           const std::string& nu_path, bool dual, const std::string& plan_path) {
  auto space = maybe_space(space_path);
  const auto mu = udseq::io::load_measure(mu_path, space);
  const auto nu = udseq::io::load_measure(nu_path, mu.space());
  if (dual) {
    const auto res = udseq::kr_dual(mu, nu);
    std::printf("%s\n", fmt_fixed(res.value).c_str());
    return 0;
  }
  const auto res = udseq::kr_distance(mu, nu);
  std::printf("%s\n", fmt_fixed(res.value).c_str());
  if (!plan_path.empty())
    udseq::io::save_json_file(udseq::io::plan_to_json(res.plan), plan_path);
  return 0;
}

int run_gen(const std::string& method, const std::string& space_path,
            const std::string& target_path, int n, const std::string& out_path) {
  auto space = maybe_space(space_path);
  const auto target = udseq::io::load_measure(target_path, space);
  if (n < 1) throw udseq::RangeError("--n must be positive");

  udseq::PointSequence seq(target.space(), {});
  if (method == "greedy") {
    seq = udseq::greedy_extend(target, seq, n);
  } else if (method == "quota") {
    seq = udseq::quota_sequence(target, n);
  } else if (method == "blocks") {
    // Quota approximations of increasing resolution under the default
    // block growth; trimmed to the requested length.
    std::vector<int> blocks;
    std::vector<udseq::DiscreteMeasure> approx;
    long long covered = 0;
    for (int k = 1; covered < n; ++k) {
      blocks = udseq::default_block_lengths(k);
      covered = 0;
      for (int b : blocks) covered += b;
    }
    for (std::size_t k = 1; k <= blocks.size(); ++k)
      approx.push_back(udseq::quota_measure(target, static_cast<int>(k)));
    const auto full = udseq::measures_to_sequence(approx, blocks);
    std::vector<int> ids(full.ids().begin(), full.ids().begin() + n);
    seq = udseq::PointSequence(target.space(), std::move(ids));
  } else {
    throw udseq::InputError("unknown method '" + method + "'");
  }
  udseq::io::save_json_file(udseq::io::sequence_to_json(seq, space_path.empty()),
                            out_path);
  return 0;
}

int run_verify(const std::string& space_path, const std::string& target_path,
               const std::string& seq_path, const std::string& checkpoints_csv,
               double tol, const std::string& report_path,
               const std::string& summary_path) {
  auto space = maybe_space(space_path);
  const auto target = udseq::io::load_measure(target_path, space);
  const auto seq = udseq::io::load_sequence(seq_path, target.space());
  const auto checkpoints = parse_int_list(checkpoints_csv, "--checkpoints");
  const auto cert = udseq::verify_ud(target, seq, checkpoints, tol);

  std::string csv = udseq::io::csv_line({"n", "kr_distance"});
  for (std::size_t i = 0; i < cert.checkpoints.size(); ++i)
    csv += udseq::io::csv_line(
        {std::to_string(cert.checkpoints[i]), fmt_fixed(cert.distances[i])});
  if (!report_path.empty()) udseq::io::write_text_file(report_path, csv);

  ordered_json summary;
  summary["command"] = "verify";
  summary["tolerance"] = tol;
  summary["horizon"] = cert.horizon;
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < cert.checkpoints.size(); ++i) {
    ordered_json row;
    row["n"] = cert.checkpoints[i];
    row["kr_distance"] = cert.distances[i];
    rows.push_back(row);
  }
  summary["checkpoints"] = rows;
  summary["verdict"] = cert.pass ? "pass" : "fail";
  if (!summary_path.empty()) udseq::io::save_json_file(summary, summary_path);

  for (std::size_t i = 0; i < cert.checkpoints.size(); ++i)
    std::printf("n=%d kr_distance=%s\n", cert.checkpoints[i],
                fmt_fixed(cert.distances[i]).c_str());
  std::printf("verdict %s\n", cert.pass ? "pass" : "fail");
  return cert.pass ? 0 : 1;
}

int run_glue(const std::string& decomp_path, int n, const std::string& out_path,
             double check_eps, const std::string& summary_path) {
  const auto decomp = udseq::io::load_decomposition(decomp_path);
  const auto nu = udseq::glue(decomp, n);
  udseq::io::save_json_file(udseq::io::measure_to_json(nu, true), out_path);
  std::printf("glued %d piece(s), mass %s\n", std::min(n, decomp.piece_count()),
              nu.mass().to_string().c_str());
  if (check_eps <= 0.0) return 0;

  // Convergence check over cones at every point plus the constant 1.
  std::vector<udseq::TestFunction> family;
  family.push_back(udseq::TestFunction::constant(decomp.space(), 1.0));
  for (int c = 0; c < decomp.space()->size(); ++c)
    family.push_back(udseq::TestFunction::distance_cone(decomp.space(), c));
  double worst = 0.0;
  int worst_n1 = 0, worst_m = 0;
  bool pass = true;
  for (const auto& f : family) {
    const auto rep = udseq::glue_convergence_check(decomp, f, check_eps);
    if (rep.achieved >= worst) {
      worst = rep.achieved;
      worst_n1 = rep.n1;
      worst_m = rep.m;
    }
    pass = pass && rep.pass;
  }
  ordered_json summary;
  summary["command"] = "glue";
  summary["eps"] = check_eps;
  ordered_json criteria = ordered_json::array();
  ordered_json c;
  c["name"] = "glue_weak_convergence";
  c["bound"] = 4.0 * check_eps;
  c["achieved"] = worst;
  c["n1"] = worst_n1;
  c["m"] = worst_m;
  c["pass"] = pass;
  criteria.push_back(c);
  summary["criteria"] = criteria;
  summary["verdict"] = pass ? "pass" : "fail";
  if (!summary_path.empty()) udseq::io::save_json_file(summary, summary_path);
  std::printf("glue_weak_convergence achieved=%s bound=%s\n",
              fmt_fixed(worst).c_str(), fmt_fixed(4.0 * check_eps).c_str());
  std::printf("verdict %s\n", pass ? "pass" : "fail");
  return pass ? 0 : 1;
}

int run_tight(const std::string& decomp_path, const std::string& eps_csv,
              int horizon, const std::string& cert_path) {
  const auto decomp = udseq::io::load_decomposition(decomp_path);
  if (horizon < 1 || horizon > decomp.horizon())
    throw udseq::RangeError("--horizon outside the materialized range 1.." +
                            std::to_string(decomp.horizon()));
  const auto eps_list = parse_double_list(eps_csv, "--eps");
  std::vector<udseq::DiscreteMeasure> measures;
  for (int k = 1; k <= horizon; ++k) measures.push_back(udseq::glue(decomp, k));
  const auto cert = udseq::tightness_certificate(measures, decomp, eps_list);
  if (!cert_path.empty())
    udseq::io::save_json_file(udseq::io::tightness_to_json(cert, horizon), cert_path);
  for (const auto& e : cert.entries)
    std::printf("eps=%s bound=%s limit=%s\n", fmt_fixed(e.eps).c_str(),
                fmt_fixed(e.bound.value()).c_str(), fmt_fixed(e.limit).c_str());
  return 0;
}

int run_product(const std::string& marginal_path, const std::string& kernel_path,
                int levels, double eps, const std::string& out_path,
                const std::string& report_path, const std::string& summary_path) {
  const auto kernel = udseq::io::load_kernel(kernel_path);
  const auto marginal = udseq::io::load_measure(marginal_path, kernel->domain());

  udseq::ProductPipelineOptions opts;
  opts.levels = levels;
  opts.eps = eps;
  const auto result = udseq::run_product_pipeline(marginal, kernel, opts);

  std::string csv = udseq::io::csv_line(
      {"level", "m_n", "leakage", "sup_kernel_gap", "marginal_err", "product_err"});
  for (const auto& row : result.rows)
    csv += udseq::io::csv_line({std::to_string(row.level), std::to_string(row.m_n),
                                fmt_fixed(row.leakage), fmt_fixed(row.kernel_gap),
                                fmt_fixed(row.marginal_error),
                                fmt_fixed(row.product_error)});
  if (!report_path.empty()) udseq::io::write_text_file(report_path, csv);

  if (!out_path.empty())
    udseq::io::save_json_file(
        udseq::io::measure_to_json(result.levels.back().measure, true), out_path);

  ordered_json summary;
  summary["command"] = "product";
  summary["eps"] = eps;
  summary["levels"] = levels;
  ordered_json criteria = ordered_json::array();
  {
    ordered_json c;
    c["name"] = "product_weak_convergence";
    c["bound"] = result.report.bound;  // 6 * eps
    c["achieved"] = result.report.worst_error;
    c["start_level"] = result.report.start_level;
    c["pass"] = result.report.pass;
    criteria.push_back(c);
  }
  {
    double worst_leak = 0.0, worst_gap = 0.0;
    bool leak_ok = true, gap_ok = true;
    for (const auto& row : result.rows) {
      worst_leak = std::max(worst_leak, row.leakage);
      worst_gap = std::max(worst_gap, row.kernel_gap);
      leak_ok = leak_ok && row.leakage <= std::ldexp(1.0, -row.level) + 1e-15;
      gap_ok = gap_ok && row.kernel_gap <= std::ldexp(1.0, 1 - row.level) + 1e-12;
    }
    ordered_json c;
    c["name"] = "schedule_leakage";
    c["achieved"] = worst_leak;
    c["pass"] = leak_ok;
    criteria.push_back(c);
    ordered_json g;
    g["name"] = "kernel_quantization_gap";
    g["achieved"] = worst_gap;
    g["pass"] = gap_ok;
    criteria.push_back(g);
  }
  summary["criteria"] = criteria;
  summary["verdict"] = result.report.pass ? "pass" : "fail";
  if (!summary_path.empty()) udseq::io::save_json_file(summary, summary_path);

  std::printf("levels=%zu start_level=%d worst_error=%s bound=%s\n",
              result.levels.size(), result.report.start_level,
              fmt_fixed(result.report.worst_error).c_str(),
              fmt_fixed(result.report.bound).c_str());
  std::printf("verdict %s\n", result.report.pass ? "pass" : "fail");
  return result.report.pass ? 0 : 1;
}

int run_selftest(std::uint64_t seed, const std::string& report_path,
                 const std::string& summary_path) {
  const auto rep = udseq::selftest::run_selftest(seed);
  std::fputs(udseq::selftest::selftest_text(rep).c_str(), stdout);

  if (!report_path.empty()) {
    std::string csv = udseq::io::csv_line({"suite", "cases", "worst", "limit", "pass"});
    for (const auto& r : rep.rows)
      csv += udseq::io::csv_line({r.suite, std::to_string(r.cases), fmt_fixed(r.worst),
                                  fmt_fixed(r.limit), r.pass ? "1" : "0"});
    udseq::io::write_text_file(report_path, csv);
  }
  if (!summary_path.empty()) {
    ordered_json summary;
    summary["command"] = "selftest";
    summary["seed"] = rep.seed;
    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.rows) {
      ordered_json row;
      row["suite"] = r.suite;
      row["cases"] = r.cases;
      row["worst"] = r.worst;
      row["limit"] = r.limit;
      row["pass"] = r.pass;
      rows.push_back(row);
    }
    summary["suites"] = rows;
    summary["verdict"] = rep.pass ? "pass" : "fail";
    udseq::io::save_json_file(summary, summary_path);
  }
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniformly distributed sequences for discrete measures"};
  app.require_subcommand(1);

  std::string space_path, mu_path, nu_path, plan_path;
  bool dual = false;
  auto* kr = app.add_subcommand("kr", "transport distance between two measures");
  kr->add_option("--space", space_path, "metric space JSON");
  kr->add_option("--mu", mu_path, "first measure JSON")->required();
  kr->add_option("--nu", nu_path, "second measure JSON")->required();
  kr->add_flag("--dual", dual, "solve the potential LP instead of the flow");
  kr->add_option("--plan", plan_path, "write the optimal plan JSON here");

  std::string gen_method, gen_space, gen_target, gen_out;
  int gen_n = 0;
  auto* gen = app.add_subcommand("gen", "generate a sequence for a target measure");
  gen->add_option("--method", gen_method, "greedy|quota|blocks")->required();
  gen->add_option("--space", gen_space, "metric space JSON");
  gen->add_option("--target", gen_target, "target measure JSON")->required();
  gen->add_option("--n", gen_n, "sequence length")->required();
  gen->add_option("--out", gen_out, "output sequence JSON")->required();

  std::string v_space, v_target, v_seq, v_checkpoints, v_report, v_summary;
  double v_tol = 0.0;
  auto* verify = app.add_subcommand("verify", "certify a sequence against a target");
  verify->add_option("--space", v_space, "metric space JSON");
  verify->add_option("--target", v_target, "target measure JSON")->required();
  verify->add_option("--seq", v_seq, "sequence JSON")->required();
  verify->add_option("--checkpoints", v_checkpoints, "comma-separated horizons")
      ->required();
  verify->add_option("--tol", v_tol, "final-checkpoint tolerance")->required();
  verify->add_option("--report", v_report, "CSV report path");
  verify->add_option("--summary", v_summary, "JSON summary path");

  std::string g_decomp, g_out, g_summary;
  int g_n = 0;
  double g_check_eps = 0.0;
  auto* glue_cmd = app.add_subcommand("glue", "combine piecewise approximators");
  glue_cmd->add_option("--decomp", g_decomp, "decomposition JSON")->required();
  glue_cmd->add_option("--n", g_n, "glue index")->required();
  glue_cmd->add_option("--out", g_out, "output measure JSON")->required();
  glue_cmd->add_option("--check-eps", g_check_eps,
                       "also run the weak-convergence check at this eps");
  glue_cmd->add_option("--summary", g_summary, "JSON summary path");

  std::string t_decomp, t_eps, t_cert;
  int t_horizon = 0;
  auto* tight = app.add_subcommand("tight", "uniform tightness certificate");
  tight->add_option("--decomp", t_decomp, "decomposition JSON")->required();
  tight->add_option("--eps", t_eps, "comma-separated eps list")->required();
  tight->add_option("--horizon", t_horizon, "number of glued measures")->required();
  tight->add_option("--cert", t_cert, "certificate JSON path");

  std::string p_marginal, p_kernel, p_out, p_report, p_summary;
  int p_levels = 6;
  double p_eps = 0.25;
  auto* product = app.add_subcommand("product", "product construction from a kernel");
  product->add_option("--marginal", p_marginal, "marginal measure JSON")->required();
  product->add_option("--kernel", p_kernel, "kernel JSON")->required();
  product->add_option("--levels", p_levels, "highest construction level");
  product->add_option("--eps", p_eps, "convergence tolerance unit");
  product->add_option("--out", p_out, "final level measure JSON");
  product->add_option("--report", p_report, "CSV report path");
  product->add_option("--summary", p_summary, "JSON summary path");

  std::uint64_t s_seed = 42;
  std::string s_report, s_summary;
  auto* selftest = app.add_subcommand("selftest", "seeded invariant suites");
  selftest->add_option("--seed", s_seed, "fuzz seed");
  selftest->add_option("--report", s_report, "CSV report path");
  selftest->add_option("--summary", s_summary, "JSON summary path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*kr) return run_kr(space_path, mu_path, nu_path, dual, plan_path);
    if (*gen) return run_gen(gen_method, gen_space, gen_target, gen_n, gen_out);
    if (*verify)
      return run_verify(v_space, v_target, v_seq, v_checkpoints, v_tol, v_report,
                        v_summary);
    if (*glue_cmd) return run_glue(g_decomp, g_n, g_out, g_check_eps, g_summary);
    if (*tight) return run_tight(t_decomp, t_eps, t_horizon, t_cert);
    if (*product)
      return run_product(p_marginal, p_kernel, p_levels, p_eps, p_out, p_report,
                         p_summary);
    if (*selftest) return run_selftest(s_seed, s_report, s_summary);
  } catch (const udseq::NoCertificateError& e) {
    std::fprintf(stderr, "no certificate: %s\n", e.what());
    return 1;
  } catch (const udseq::CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return 3;
  } catch (const udseq::HorizonError& e) {
    std::fprintf(stderr, "horizon error: %s\n", e.what());
    return 3;
  } catch (const udseq::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
