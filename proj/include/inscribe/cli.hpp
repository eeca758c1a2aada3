#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "inscribe/core.hpp"
#include "inscribe/error.hpp"
#include "inscribe/families.hpp"
#include "inscribe/io.hpp"
#include "inscribe/pipeline.hpp"
#include "inscribe/sdp.hpp"

namespace inscribe::cli {

enum ExitCode : int { kInscribed = 0, kUsage = 1, kUndetermined = 2 };

struct SolverFlags {
  double rho = SolverOptions{}.rho;
  double sdp_tol = 1e-7;
  int sdp_max_iter = SolverOptions{}.max_iter;
  double rank_tol = 1e-6;
  double eps_zero = kEpsZero;
  int ap_max_iter = 5000;

  void attach(CLI::App& app) {
    app.add_option("--rho", rho, "ADMM penalty parameter")->check(CLI::PositiveNumber);
    app.add_option("--sdp-tol", sdp_tol, "SDP residual tolerance")->check(CLI::PositiveNumber);
    app.add_option("--sdp-max-iter", sdp_max_iter, "SDP iteration cap")->check(CLI::NonNegativeNumber);
    app.add_option("--rank-tol", rank_tol, "relative singular value cut for numeric rank")->check(CLI::PositiveNumber);
    app.add_option("--eps-zero", eps_zero, "zero-slack threshold used when facets are enumerated")->check(CLI::PositiveNumber);
    app.add_option("--ap-max-iter", ap_max_iter, "AP/SAP iteration cap")->check(CLI::NonNegativeNumber);
  }

  PipelineOptions pipeline() const {
    PipelineOptions o;
    o.sdp.rho = rho;
    o.sdp.tol = sdp_tol;
    o.sdp.max_iter = sdp_max_iter;
    o.rank_tol = rank_tol;
    o.ap_max_iter = ap_max_iter;
    return o;
  }
};

// ---------------------------------------------------------------------------
// check

inline int cmd_check(const std::string& path, const SolverFlags& flags, std::ostream& out) {
  const PolytopeFile file = read_polytope_json(path);
  const FacetIncidence inc = file.facets ? *file.facets : facet_enumeration(file.polytope, flags.eps_zero);
  validate_incidence(inc, file.polytope.dim);
  const PipelineReport rep = run_procedure(inc, file.polytope.dim, flags.pipeline());
  out << report_to_json(rep).dump(2) << "\n";
  return rep.inscribed ? kInscribed : kUndetermined;
}

// ---------------------------------------------------------------------------
// gen

inline std::string gen_file_name(int n, int d, int index) {
  return std::to_string(n) + "_" + std::to_string(d) + "_" + std::to_string(index) + ".json";
}

inline int cmd_gen(int n, int d, int count, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  if (n < d + 1) throw Error(ErrorCode::InvalidArgument, "gen: need n >= d+1");
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "gen: count must be non-negative");
  std::filesystem::create_directories(out_dir);
  for (int k = 0; k < count; ++k) {
    const RandomPolytope rp = random_inscribed(n, d, seed + static_cast<std::uint64_t>(k));
    const auto file = std::filesystem::path(out_dir) / gen_file_name(n, d, k);
    std::ofstream f(file, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "gen: cannot write " + file.string());
    f << polytope_to_json(rp.polytope, &rp.incidence).dump(2) << "\n";
    out << file.string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// family

inline json family_report(const FamilyCertificate& cert, std::optional<SolverFlags> solve) {
  const DualCertificate dual = cert.certificate();
  const PrimalPoint point = family_primal_point(cert);
  json doc;
  doc["kind"] = std::string(to_string(cert.spec.kind));
  doc["param"] = cert.spec.param;
  doc["dim"] = cert.dim();
  doc["n"] = cert.incidence.n();
  doc["m"] = cert.incidence.m();
  doc["lambda_bar"] = cert.lambda_bar;
  doc["u_bar"] = cert.u_bar;
  doc["w_bar"] = cert.w_bar;
  doc["lambda_max_closed_form"] = cert.lambda_max_closed_form;
  doc["lambda_max_numeric"] = family_lambda_max_numeric(cert);
  doc["primal_objective"] = primal_objective(point, cert.weights());
  doc["dual_objective"] = dual_objective(dual, cert.incidence);
  doc["gap"] = duality_gap(point, dual, cert.incidence);
  doc["feasibility_margin"] = dual_feasibility_margin(dual, cert.incidence);
  doc["dual_feasible"] = check_dual_feasible(dual, cert.incidence);
  if (solve) {
    const PipelineOptions po = solve->pipeline();
    const SdpSolution sol = solve_sdp(SdpInstance{cert.incidence, cert.weights(), cert.dim()}, po.sdp);
    const Vector ev = sym_eig(sol.x.data).values;
    const double ratio = ev.size() > cert.dim() + 1 ? std::abs(ev(cert.dim() + 1)) / ev(0) : 0.0;
    const PointCheck chk = check_point(sol.x, cert.incidence, cert.dim(), po);
    doc["solve"] = {{"converged", sol.converged},
                    {"iterations", sol.iterations},
                    {"objective", sol.objective},
                    {"rank", chk.rank},
                    {"eig_ratio", ratio},
                    {"rank_ok", ratio <= solve->rank_tol},
                    {"inscribed", chk.inscribed}};
  }
  return doc;
}

inline int cmd_family(const std::string& kind, int param, std::optional<SolverFlags> solve, std::ostream& out) {
  const auto k = parse_family_kind(kind);
  if (!k) throw Error(ErrorCode::InvalidParam, "unknown family '" + kind + "' (ngon, simplex, cube, cross_polytope)");
  const FamilyCertificate cert = build_family(FamilySpec{*k, param});
  const json doc = family_report(cert, solve);
  out << doc.dump(2) << "\n";
  if (solve && !(doc["solve"]["converged"].get<bool>() && doc["solve"]["rank_ok"].get<bool>())) return kUndetermined;
  return 0;
}

// ---------------------------------------------------------------------------
// bench

inline const std::vector<std::string>& bench_methods() {
  static const std::vector<std::string> all = {method::kSdpConst, method::kSapConst, method::kSdpHeur, method::kSapHeur,
                                               method::kSdpStar,  method::kSapStar,  method::kApStar};
  return all;
}

/// Canonical label for a method name; accepts ASCII spellings such as
/// "SDP-lc", "SAP-lh", "AP-l*" or "AP-lstar".
inline std::optional<std::string> canonical_method(std::string name) {
  for (const auto& m : bench_methods())
    if (name == m) return m;
  for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto dash = name.find('-');
  if (dash == std::string::npos) return std::nullopt;
  const std::string head = name.substr(0, dash), tail = name.substr(dash + 1);
  std::string suffix;
  if (tail == "lc" || tail == "lambdac" || tail == "lambda_c") suffix = "λc";
  else if (tail == "lh" || tail == "lambdah" || tail == "lambda_h") suffix = "λh";
  else if (tail == "l*" || tail == "lstar" || tail == "lambda*" || tail == "lambdastar" || tail == "lambda_star") suffix = "λ*";
  else return std::nullopt;
  std::string prefix;
  if (head == "sdp") prefix = "SDP-";
  else if (head == "sap") prefix = "SAP-";
  else if (head == "ap") prefix = "AP-";
  else return std::nullopt;
  const std::string label = prefix + suffix;
  for (const auto& m : bench_methods())
    if (label == m) return m;
  return std::nullopt;
}

struct BenchSet {
  int n = 0;
  int d = 0;
  int count = 0;
  std::uint64_t seed = 0;
};

/// "n,d,count,seed"
inline BenchSet parse_bench_set(const std::string& text) {
  std::vector<long long> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bench set '" + text + "': expected n,d,count,seed");
    }
  }
  if (parts.size() != 4 || parts[0] < 1 || parts[1] < 2 || parts[2] < 0 || parts[3] < 0 || parts[0] < parts[1] + 1)
    throw Error(ErrorCode::InvalidArgument, "bench set '" + text + "': expected n,d,count,seed with n >= d+1 >= 3");
  return {static_cast<int>(parts[0]), static_cast<int>(parts[1]), static_cast<int>(parts[2]), static_cast<std::uint64_t>(parts[3])};
}

struct BenchRow {
  std::string method;
  int n = 0;
  int d = 0;
  int solved = 0;
  int total = 0;
  double avg_time_s = 0.0;
  double max_time_s = 0.0;
};

struct BenchOutcome {
  std::string method;
  int n = 0;
  int d = 0;
  int index = 0;
  std::uint64_t seed = 0;
  bool inscribed = false;
  bool capped = false;
  int iterations = 0;
  double time_s = 0.0;

  bool solved() const { return inscribed && !capped; }
};

/// Runs the requested methods on one random instance. SAP/AP start from the
/// SDP solution of the same weights and their times include that solve.
inline std::vector<BenchOutcome> bench_instance(const BenchSet& set, int index, const std::vector<std::string>& methods,
                                                const PipelineOptions& opts) {
  const std::uint64_t seed = set.seed + static_cast<std::uint64_t>(index);
  const RandomPolytope rp = random_inscribed(set.n, set.d, seed);
  const int d = set.d;
  std::map<std::string, PipelineReport> sdp;
  auto sdp_for = [&](const std::string& family) -> const PipelineReport& {
    auto it = sdp.find(family);
    if (it != sdp.end()) return it->second;
    PipelineReport r;
    if (family == "c") r = sdp_constant_lambda(rp.incidence, d, opts);
    else if (family == "h") r = tune_lambda_heuristic(rp.incidence, d, opts);
    else r = sdp_lambda_star(rp.polytope, rp.incidence, opts).report;
    return sdp.emplace(family, std::move(r)).first->second;
  };
  std::vector<BenchOutcome> out;
  for (const auto& m : methods) {
    const std::string family = m.ends_with("λc") ? "c" : m.ends_with("λh") ? "h" : "*";
    const PipelineReport& base = sdp_for(family);
    PipelineReport r;
    if (m.starts_with("SDP")) {
      r = base;
    } else {
      r = m.starts_with("SAP") ? simplified_ap(base.final_x, rp.incidence, d, opts)
                               : alternating_projection(base.final_x, rp.incidence, d, opts);
      r.wall_time_s += base.wall_time_s;
    }
    out.push_back({m, set.n, set.d, index, seed, r.inscribed, r.capped, r.iterations, r.wall_time_s});
  }
  return out;
}

inline unsigned bench_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("INSCRIBE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) hw = std::min(hw, static_cast<unsigned>(v));
  }
  return hw;
}

/// Outcomes in (set, instance, method) order regardless of the pool size.
inline std::vector<BenchOutcome> run_bench(const std::vector<BenchSet>& sets, const std::vector<std::string>& methods,
                                           const PipelineOptions& opts, unsigned threads) {
  std::vector<std::pair<std::size_t, int>> jobs;
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (int k = 0; k < sets[s].count; ++k) jobs.emplace_back(s, k);
  std::vector<std::vector<BenchOutcome>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        results[j] = bench_instance(sets[jobs[j].first], jobs[j].second, methods, opts);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<BenchOutcome> flat;
  for (auto& r : results) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

inline std::vector<BenchRow> summarize(const std::vector<BenchSet>& sets, const std::vector<std::string>& methods,
                                       const std::vector<BenchOutcome>& outcomes) {
  std::vector<BenchRow> rows;
  for (const auto& set : sets)
    for (const auto& m : methods) {
      BenchRow row{m, set.n, set.d};
      double sum = 0.0;
      for (const auto& o : outcomes)
        if (o.method == m && o.n == set.n && o.d == set.d && o.seed >= set.seed &&
            o.seed < set.seed + static_cast<std::uint64_t>(set.count)) {
          ++row.total;
          row.solved += o.solved() ? 1 : 0;
          sum += o.time_s;
          row.max_time_s = std::max(row.max_time_s, o.time_s);
        }
      row.avg_time_s = row.total ? sum / row.total : 0.0;
      rows.push_back(row);
    }
  return rows;
}

inline std::string csv_number(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(6) << std::fixed << v;
  return s.str();
}

inline void write_summary_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "method,n,d,solved,total,avg_time_s,max_time_s\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.n << ',' << r.d << ',' << r.solved << ',' << r.total << ',' << csv_number(r.avg_time_s) << ','
        << csv_number(r.max_time_s) << '\n';
}

inline void write_detail_csv(std::ostream& out, const std::vector<BenchOutcome>& outcomes) {
  out << "method,n,d,index,seed,inscribed,capped,solved,iterations,time_s\n";
  for (const auto& o : outcomes)
    out << o.method << ',' << o.n << ',' << o.d << ',' << o.index << ',' << o.seed << ',' << (o.inscribed ? 1 : 0) << ','
        << (o.capped ? 1 : 0) << ',' << (o.solved() ? 1 : 0) << ',' << o.iterations << ',' << csv_number(o.time_s) << '\n';
}

inline std::string detail_path_for(const std::string& summary) {
  std::filesystem::path p(summary);
  return (p.parent_path() / (p.stem().string() + "_detail.csv")).string();
}

inline int cmd_bench(const std::vector<std::string>& set_texts, std::vector<std::string> method_names,
                     const std::string& out_path, std::string detail_path, const SolverFlags& flags, std::ostream& log) {
  std::erase_if(method_names, [](const std::string& s) { return s.empty(); });
  if (method_names.empty()) throw Error(ErrorCode::InvalidArgument, "bench: empty methods list");
  if (set_texts.empty()) throw Error(ErrorCode::InvalidArgument, "bench: no instance set given");
  std::vector<std::string> methods;
  for (const auto& name : method_names) {
    const auto m = canonical_method(name);
    if (!m) throw Error(ErrorCode::InvalidArgument, "bench: unknown method '" + name + "'");
    if (std::find(methods.begin(), methods.end(), *m) == methods.end()) methods.push_back(*m);
  }
  std::vector<BenchSet> sets;
  for (const auto& t : set_texts) sets.push_back(parse_bench_set(t));
  if (detail_path.empty()) detail_path = detail_path_for(out_path);

  const auto outcomes = run_bench(sets, methods, flags.pipeline(), bench_threads());
  const auto rows = summarize(sets, methods, outcomes);
  std::ofstream sum(out_path, std::ios::binary), det(detail_path, std::ios::binary);
  if (!sum) throw Error(ErrorCode::InvalidArgument, "bench: cannot write " + out_path);
  if (!det) throw Error(ErrorCode::InvalidArgument, "bench: cannot write " + detail_path);
  write_summary_csv(sum, rows);
  write_detail_csv(det, outcomes);
  write_summary_csv(log, rows);
  return 0;
}

// ---------------------------------------------------------------------------
// entry point

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"inscribability of polytopes via slack matrices and SDP", "inscribe"};
  app.require_subcommand(1);

  SolverFlags check_flags;
  std::string check_input;
  auto* check = app.add_subcommand("check", "run the three-step procedure on a polytope JSON file");
  check->add_option("input", check_input, "polytope JSON")->required();
  check_flags.attach(*check);

  int gen_n = 0, gen_d = 0, gen_count = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_dir = ".";
  auto* gen = app.add_subcommand("gen", "write random inscribed polytopes");
  gen->add_option("-n,--n", gen_n, "vertices")->required()->check(CLI::PositiveNumber);
  gen->add_option("-d,--d", gen_d, "dimension")->required()->check(CLI::Range(2, 64));
  gen->add_option("-c,--count", gen_count, "number of files")->check(CLI::NonNegativeNumber);
  gen->add_option("-s,--seed", gen_seed, "base seed; file k uses seed + k");
  gen->add_option("-o,--out", gen_dir, "output directory");

  SolverFlags fam_flags;
  std::string fam_kind;
  int fam_param = 0;
  bool fam_solve = false;
  auto* family = app.add_subcommand("family", "emit the closed-form dual certificate of a regular family member");
  family->add_option("kind", fam_kind, "ngon | simplex | cube | cross_polytope")->required();
  family->add_option("param", fam_param, "n for ngon, d otherwise")->required();
  family->add_flag("--solve", fam_solve, "also solve the SDP with the certified weights and check the rank");
  fam_flags.attach(*family);

  SolverFlags bench_flags;
  std::vector<std::string> bench_sets, bench_method_names;
  std::string bench_out = "bench.csv", bench_detail;
  auto* bench = app.add_subcommand("bench", "success counts and runtimes on random instance sets");
  bench->add_option("--set", bench_sets, "n,d,count,seed (repeatable)")->required();
  bench->add_option("--methods", bench_method_names, "comma separated method labels")->delimiter(',');
  bench->add_option("-o,--out", bench_out, "summary CSV");
  bench->add_option("--detail", bench_detail, "per-instance CSV (default: <out>_detail.csv)");
  bench_flags.attach(*bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*check) return cmd_check(check_input, check_flags, out);
    if (*gen) return cmd_gen(gen_n, gen_d, gen_count, gen_seed, gen_dir, out);
    if (*family) return cmd_family(fam_kind, fam_param, fam_solve ? std::optional<SolverFlags>(fam_flags) : std::nullopt, out);
    if (*bench) return cmd_bench(bench_sets, bench_method_names, bench_out, bench_detail, bench_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace inscribe::cli
