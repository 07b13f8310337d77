#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "blockric/blockric.hpp"

namespace {

using namespace blockric;

struct CommonArgs {
  std::string input_path;
  std::string out_path;  // empty: stdout
  double tol_eig = 0.0, tol_rank = 0.0, tol_residual = 0.0;
  bool has_tol_eig = false, has_tol_rank = false, has_tol_residual = false;
};

struct ScanArgs {
  std::string grid_spec;    // "min:max:points"
  std::string ladder_spec;  // "hi:lo:ratio"
  std::string plot_path;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("input", args.input_path, "problem file (JSON)")->required();
  sub->add_option("--tol-eig", args.tol_eig, "eigenvalue clustering tolerance (relative)")
      ->each([&](const std::string&) { args.has_tol_eig = true; });
  sub->add_option("--tol-rank", args.tol_rank, "numerical rank tolerance (relative)")
      ->each([&](const std::string&) { args.has_tol_rank = true; });
  sub->add_option("--tol-residual", args.tol_residual, "verification residual tolerance (relative)")
      ->each([&](const std::string&) { args.has_tol_residual = true; });
  sub->add_option("--out", args.out_path, "write the report here instead of stdout");
}

std::vector<double> parse_colon_triple(const std::string& text, const char* what) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    const std::string piece = text.substr(start, colon == std::string::npos ? colon : colon - start);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw InvalidInput(std::string(what) + ": malformed component '" + piece + "'");
    }
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3) throw InvalidInput(std::string(what) + ": expected three colon-separated values");
  return parts;
}

Problem load_problem(const CommonArgs& args, std::string& raw_bytes) {
  raw_bytes = read_file(args.input_path);
  Problem p = parse_problem(raw_bytes);
  if (args.has_tol_eig) p.tolerances.eig_cluster_tol = args.tol_eig;
  if (args.has_tol_rank) p.tolerances.rank_rtol = args.tol_rank;
  if (args.has_tol_residual) p.tolerances.residual_tol = args.tol_residual;
  p.tolerances.validate();
  return p;
}

Json tolerances_json(const ToleranceProfile& tol) {
  return Json{{"eig_cluster_tol", tol.eig_cluster_tol},
              {"rank_rtol", tol.rank_rtol},
              {"residual_tol", tol.residual_tol}};
}

Json hypothesis_json(const HypothesisReport& rep) {
  return Json{{"hermitian_ok", rep.hermitian_ok},
              {"cyclic_ok", rep.cyclic_ok},
              {"krylov_rank", rep.krylov_rank},
              {"d0", rep.d0},
              {"n", rep.n}};
}

Json base_report(const char* command, const CommonArgs& args, const std::string& raw_bytes,
                 const Problem& p) {
  Json report;
  report["tool"] = Json{{"name", kToolName}, {"version", kToolVersion}};
  report["command"] = command;
  report["input"] = Json{{"path", args.input_path},
                         {"digest", content_digest(raw_bytes)},
                         {"d0", p.a0.rows()},
                         {"n", p.a1.rows()}};
  report["tolerances"] = tolerances_json(p.tolerances);
  return report;
}

void emit(const Json& report, const CommonArgs& args) {
  const std::string text = report.dump(2) + "\n";
  if (args.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open output file: " + args.out_path);
  out << text;
}

Json witness_json(const Witness& w) {
  Json j;
  j["case"] = to_string(w.tag);
  j["in_k_pp"] = w.in_k_pp;
  j["y"] = matrix_to_json(w.y);
  if (w.x) j["x"] = matrix_to_json(*w.x);
  return j;
}

Json classification_json(const std::vector<EigenvalueClassification>& classified) {
  Json arr = Json::array();
  for (const auto& cls : classified) {
    Json witnesses = Json::array();
    for (const auto& w : cls.witnesses) witnesses.push_back(witness_json(w));
    const bool in_spec_a0 = !cls.witnesses.empty() && cls.witnesses.front().tag != CaseTag::I;
    arr.push_back(Json{{"lambda", cls.lambda},
                       {"multiplicity", cls.multiplicity},
                       {"in_spec_a0", in_spec_a0},
                       {"witnesses", std::move(witnesses)}});
  }
  return arr;
}

Json excluded_json(const std::vector<EigenvalueClassification>& classified) {
  Json arr = Json::array();
  for (const auto& cls : classified)
    for (const auto& w : cls.witnesses)
      if (w.tag == CaseTag::III) {
        Json entry{{"lambda", cls.lambda}, {"y", matrix_to_json(w.y)}};
        if (w.x) entry["x"] = matrix_to_json(*w.x);
        entry["excluded_from_k_pp"] = true;
        arr.push_back(std::move(entry));
      }
  return arr;
}

Json atoms_json(const AtomTable& table) {
  Json entries = Json::array();
  for (const auto& atom : table.entries)
    entries.push_back(Json{{"lambda", atom.lambda}, {"mass", atom.mass}});
  return Json{{"entries", std::move(entries)}, {"total_mass", table.total_mass()}};
}

BlockOperator restrict_to_k0(const BlockOperator& op, const Matrix& basis,
                             const ToleranceProfile& tol) {
  const Matrix q_adj = basis.adjoint();
  Matrix a0r = q_adj * (op.a0() * basis);
  const Matrix sym = (a0r + a0r.adjoint()) * Complex(0.5, 0.0);
  return BlockOperator(sym, op.a1(), q_adj * op.v(), tol);
}

int run_check(const CommonArgs& args) {
  std::string raw;
  const Problem p = load_problem(args, raw);
  const BlockOperator op = p.make_operator();
  const HypothesisReport rep = check_hypothesis(op, p.tolerances);
  Json report = base_report("check", args, raw, p);
  report["hypothesis"] = hypothesis_json(rep);
  report["result"] = rep.cyclic_ok ? "hypothesis_holds" : "hypothesis_fails";
  emit(report, args);
  return rep.cyclic_ok ? 0 : 2;
}

int run_classify(const CommonArgs& args) {
  std::string raw;
  const Problem p = load_problem(args, raw);
  const BlockOperator op = p.make_operator();
  const HypothesisReport rep = check_hypothesis(op, p.tolerances);
  Json report = base_report("classify", args, raw, p);
  report["hypothesis"] = hypothesis_json(rep);
  if (rep.krylov_rank == 0) {
    report["result"] = "hypothesis_fails";
    emit(report, args);
    return 2;
  }
  const bool restricted = !rep.cyclic_ok;
  report["k0_restricted"] = restricted;
  std::vector<EigenvalueClassification> classified;
  if (restricted) {
    const BlockOperator reduced = restrict_to_k0(op, rep.krylov_basis, p.tolerances);
    classified = classify_all(reduced, p.tolerances);
    for (auto& cls : classified)
      for (auto& w : cls.witnesses)
        if (w.x) w.x = rep.krylov_basis * (*w.x);  // back to ambient coordinates
  } else {
    classified = classify_all(op, p.tolerances);
  }
  report["result"] = "classified";
  report["classification"] = classification_json(classified);
  Json kpp = Json::array();
  for (const auto& pair : k_pp_members(classified))
    kpp.push_back(Json{{"lambda", pair.lambda}, {"y", matrix_to_json(pair.y)}});
  report["k_pp"] = std::move(kpp);
  report["case_iii_excluded"] = excluded_json(classified);
  report["atoms"] = atoms_json(atom_table(op, p.tolerances));
  emit(report, args);
  return 0;
}

std::vector<double> default_grid(const BlockOperator& op, const ToleranceProfile& tol) {
  const HermitianEigen eig = hermitian_eig(assemble_full(op));
  const double lo = eig.eigenvalues.front();
  const double hi = eig.eigenvalues.back();
  const double margin = 0.05 * (hi - lo) + 0.1;
  std::vector<double> grid = GridSpec{lo - margin, hi + margin, 241}.materialize();
  // Atoms only register when a grid point sits essentially on top of them, so
  // seed the grid with the eigenvalue cluster locations.
  const double radius = cluster_radius(eig, tol);
  for (const auto& cluster : cluster_eigenvalues(eig.eigenvalues, radius))
    grid.push_back(cluster.value);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

int run_scan(const CommonArgs& args, const ScanArgs& scan_args) {
  std::string raw;
  const Problem p = load_problem(args, raw);
  const BlockOperator op = p.make_operator();

  std::vector<double> grid;
  bool grid_seeded = false;
  if (!scan_args.grid_spec.empty()) {
    const auto parts = parse_colon_triple(scan_args.grid_spec, "--grid");
    if (!(parts[2] > 0.0) || parts[2] != std::floor(parts[2]))
      throw InvalidInput("--grid: point count must be a positive integer");
    grid = GridSpec{parts[0], parts[1], static_cast<std::size_t>(parts[2])}.materialize();
  } else if (p.grid) {
    grid = p.grid->materialize();
  } else {
    grid = default_grid(op, p.tolerances);
    grid_seeded = true;
  }

  std::vector<double> ladder;
  if (!scan_args.ladder_spec.empty()) {
    const auto parts = parse_colon_triple(scan_args.ladder_spec, "--eps-ladder");
    ladder = LadderSpec{parts[0], parts[1], parts[2]}.materialize();
  } else if (p.ladder) {
    ladder = p.ladder->materialize();
  } else {
    ladder = LadderSpec{}.materialize();
  }

  const ScanReport scan = boundary_scan(op, grid, ladder, p.tolerances);

  Json report = base_report("scan", args, raw, p);
  report["hypothesis"] = hypothesis_json(check_hypothesis(op, p.tolerances));
  Json section;
  section["grid"] = scan.grid;
  section["grid_seeded_with_eigenvalues"] = grid_seeded;
  section["eps_ladder"] = scan.eps_ladder;
  section["trace_im"] = scan.trace_im;
  Json singular = Json::array();
  for (const auto& flag : scan.flagged_singular)
    singular.push_back(Json{{"grid_index", flag.grid_index}, {"lambda", flag.lambda}});
  Json atoms = Json::array();
  for (const auto& flag : scan.flagged_atoms)
    atoms.push_back(Json{{"grid_index", flag.grid_index},
                         {"lambda", flag.lambda},
                         {"estimated_mass", flag.estimated_mass}});
  // Singular points that are not atoms would be singular continuous support;
  // for finite-dimensional operators this list must come out empty.
  Json sc = Json::array();
  for (const auto& flag : scan.flagged_singular) {
    bool is_atom = false;
    for (const auto& atom : scan.flagged_atoms)
      if (atom.grid_index == flag.grid_index) is_atom = true;
    if (!is_atom) sc.push_back(flag.lambda);
  }
  section["flagged_singular"] = std::move(singular);
  section["flagged_atoms"] = std::move(atoms);
  section["sc_candidates"] = std::move(sc);
  section["sc_expected_empty"] = true;
  report["scan"] = std::move(section);

  std::string plot_path = scan_args.plot_path;
  if (plot_path.empty()) plot_path = args.out_path.empty() ? "scan.tsv" : args.out_path + ".tsv";
  std::ofstream plot(plot_path, std::ios::binary);
  if (!plot) throw InvalidInput("cannot open plot file: " + plot_path);
  plot << "lambda\teps\ttrace_im_m\n";
  char line[128];
  for (std::size_t g = 0; g < scan.grid.size(); ++g)
    for (std::size_t e = 0; e < scan.eps_ladder.size(); ++e) {
      std::snprintf(line, sizeof line, "%.17g\t%.17g\t%.17g\n", scan.grid[g],
                    scan.eps_ladder[e], scan.trace_im[g][e]);
      plot << line;
    }
  report["plot_file"] = plot_path;
  emit(report, args);
  return 0;
}

Json lambda_set_json(const LambdaSet& set) {
  Json arr = Json::array();
  for (const auto& pair : set.pairs)
    arr.push_back(Json{{"lambda", pair.lambda}, {"y", matrix_to_json(pair.y)}});
  return arr;
}

int run_solve(const CommonArgs& args, bool all_oracle) {
  std::string raw;
  const Problem p = load_problem(args, raw);
  const BlockOperator op = p.make_operator();
  Json report = base_report("solve", args, raw, p);
  report["hypothesis"] = hypothesis_json(check_hypothesis(op, p.tolerances));

  const ExistenceResult result = solve_existence(op, p.tolerances);
  int exit_code = 0;
  if (const auto* sol = std::get_if<RiccatiSolution>(&result)) {
    report["result"] = "solution";
    Json j;
    j["x"] = matrix_to_json(sol->x);
    j["residual"] = sol->residual;
    j["graph_defect"] = sol->graph_defect;
    j["bounded"] = sol->bounded;
    j["k0_restricted"] = sol->k0_restricted;
    if (sol->lambda_set) j["lambda_set"] = lambda_set_json(*sol->lambda_set);
    report["solution"] = std::move(j);
  } else {
    const auto& no = std::get<NoCertificate>(result);
    report["result"] = "no_certificate";
    Json j;
    j["reason"] = no.reason;
    j["witnesses_needed"] = no.witnesses_needed;
    j["witnesses_found"] = no.witnesses_found;
    j["pool_size"] = no.pool_size;
    j["k0_restricted"] = no.k0_restricted;
    j["classification"] = classification_json(no.classifications);
    report["no_certificate"] = std::move(j);
    exit_code = 3;
  }

  if (all_oracle) {
    Json oracle;
    try {
      const auto solutions = oracle_graph_solutions(op, p.tolerances);
      Json arr = Json::array();
      for (const auto& sol : solutions)
        arr.push_back(Json{{"subset", sol.subset},
                           {"x", matrix_to_json(sol.x)},
                           {"residual", sol.residual}});
      oracle["count"] = solutions.size();
      oracle["solutions"] = std::move(arr);
    } catch (const Error& e) {
      oracle["skipped"] = e.what();
    }
    report["oracle"] = std::move(oracle);
  }
  emit(report, args);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral analysis of self-adjoint 2x2 block operator matrices"};
  app.require_subcommand(1);

  CommonArgs check_args, classify_args, scan_args_common, solve_args;
  ScanArgs scan_args;
  bool all_oracle = false;

  add_common(app.add_subcommand("check", "verify the standing assumptions"), check_args);
  add_common(app.add_subcommand("classify", "classify eigenvalues and tabulate atoms"),
             classify_args);
  CLI::App* scan_cmd =
      app.add_subcommand("scan", "boundary scan of the trace of the Herglotz matrix");
  add_common(scan_cmd, scan_args_common);
  scan_cmd->add_option("--grid", scan_args.grid_spec, "min:max:points");
  scan_cmd->add_option("--eps-ladder", scan_args.ladder_spec, "hi:lo:ratio");
  scan_cmd->add_option("--plot-out", scan_args.plot_path, "plot data path (default: <out>.tsv)");
  CLI::App* solve_cmd = app.add_subcommand("solve", "construct and verify a Riccati solution");
  add_common(solve_cmd, solve_args);
  solve_cmd->add_flag("--all-oracle", all_oracle,
                      "also enumerate every graph solution (small dimensions only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("check")) return run_check(check_args);
    if (app.got_subcommand("classify")) return run_classify(classify_args);
    if (app.got_subcommand("scan")) return run_scan(scan_args_common, scan_args);
    return run_solve(solve_args, all_oracle);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
