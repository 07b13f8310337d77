#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>
#include <unistd.h>

#include "test_support.hpp"

using namespace blockric;
using namespace testsupport;

namespace {

std::string fixture(const char* name) {
  return std::string(BLOCKRIC_FIXTURE_DIR) + "/" + name;
}

// Scratch outputs go to the system temp dir so the binary can run from any cwd.
std::string scratch(const char* name) {
  return (std::filesystem::temp_directory_path() /
          ("blockric_cli_" + std::to_string(::getpid()) + "_" + name))
      .string();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BLOCKRIC_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

Json load_json(const std::string& path) { return Json::parse(read_file(path)); }

}  // namespace

TEST_CASE("problem files parse into operators") {
  const Problem p = parse_problem(read_file(fixture("mixed_4x4.json")));
  const BlockOperator op = p.make_operator();
  CHECK(op.d0() == 2);
  CHECK(op.n() == 2);
  CHECK(matrix_close(assemble_full(op), assemble_full(mixed_op()), 0.0));

  CHECK_THROWS_AS(parse_problem("{ not json"), ParseError);
  CHECK_THROWS_AS(parse_problem("{\"a0\": [[1]], \"a1\": [[1]]}"), ParseError);
  CHECK_THROWS_AS(parse_problem("{\"a0\": [[1],[1, 2]], \"a1\": [[1]], \"v\": [[1]]}"),
                  ParseError);
  CHECK_THROWS_AS(parse_problem("{\"a0\": [[[1, 2, 3]]], \"a1\": [[1]], \"v\": [[1]]}"),
                  ParseError);
}

TEST_CASE("complex entries accept both encodings") {
  const Problem p = parse_problem(
      "{\"a0\": [[0]], \"a1\": [[0]], \"v\": [[[0.5, -0.25]]]}");
  CHECK(p.v(0, 0) == Complex(0.5, -0.25));
  const Json round_trip = matrix_to_json(p.v);
  CHECK(matrix_close(matrix_from_json(round_trip), p.v, 0.0));
}

TEST_CASE("in-file tolerances apply and validate") {
  const Problem p = parse_problem(read_file(fixture("all_case_iii.json")));
  CHECK(p.tolerances.eig_cluster_tol == 0.2);
  CHECK_THROWS_AS(
      parse_problem("{\"a0\": [[0]], \"a1\": [[0]], \"v\": [[1]], \"tolerances\": {\"rank_rtol\": -1}}"),
      ParseError);
}

TEST_CASE("grid and ladder specs materialize") {
  const std::vector<double> grid = GridSpec{-1.0, 1.0, 5}.materialize();
  REQUIRE(grid.size() == 5);
  CHECK(grid[0] == -1.0);
  CHECK(grid[2] == Catch::Approx(0.0).margin(1e-15));
  CHECK(grid[4] == 1.0);
  CHECK_THROWS_AS((GridSpec{0.0, 1.0, 0}.materialize()), InvalidInput);

  const std::vector<double> ladder = LadderSpec{1e-2, 1e-4, 10.0}.materialize();
  REQUIRE(ladder.size() == 3);
  CHECK(ladder[0] == Catch::Approx(1e-2));
  CHECK(ladder[2] == Catch::Approx(1e-4));
  CHECK_THROWS_AS((LadderSpec{1e-8, 1e-2, 10.0}.materialize()), InvalidInput);
}

TEST_CASE("digest is stable") {
  CHECK(content_digest("") == "fnv1a64:cbf29ce484222325");
  CHECK(content_digest("a") == "fnv1a64:af63dc4c8601ec8c");
}

TEST_CASE("cli check reports the hypothesis") {
  const std::string out = scratch("check.json");
  const int code = run_cli("check " + fixture("mixed_4x4.json") + " --out " + out);
  CHECK(code == 0);
  const Json report = load_json(out);
  CHECK(report["tool"]["name"] == "blockric");
  CHECK(report["command"] == "check");
  CHECK(report["hypothesis"]["cyclic_ok"] == true);
  CHECK(report["input"]["d0"] == 2);
  const std::string digest = report["input"]["digest"];
  CHECK(digest.rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("cli check fails the hypothesis on an uncoupled axis") {
  const std::string out = scratch("check2.json");
  const int code = run_cli("check " + fixture("noncyclic_2x1.json") + " --out " + out);
  CHECK(code == 2);
  const Json report = load_json(out);
  CHECK(report["hypothesis"]["cyclic_ok"] == false);
  CHECK(report["hypothesis"]["krylov_rank"] == 1);
  CHECK(report["result"] == "hypothesis_fails");
}

TEST_CASE("cli rejects malformed inputs with the documented codes") {
  CHECK(run_cli("check " + fixture("bad_syntax.json") + " 2> /dev/null") == 1);
  CHECK(run_cli("check " + fixture("bad_dims.json") + " 2> /dev/null") == 1);
  const std::string err = scratch("err.txt");
  const int code = run_cli("check " + fixture("bad_nonhermitian.json") + " 2> " + err);
  CHECK(code == 1);
  const std::string diagnostic = read_file(err);
  CHECK(diagnostic.find("a0") != std::string::npos);
}

TEST_CASE("cli classify emits witnesses, exclusions and atoms") {
  const std::string out = scratch("classify.json");
  const int code = run_cli("classify " + fixture("mixed_4x4.json") + " --out " + out);
  CHECK(code == 0);
  const Json report = load_json(out);
  CHECK(report["k0_restricted"] == false);
  REQUIRE(report["classification"].size() == 4);
  REQUIRE(report["case_iii_excluded"].size() == 1);
  CHECK(report["case_iii_excluded"][0]["lambda"].get<double>() == Catch::Approx(1.0).margin(1e-9));
  CHECK(report["case_iii_excluded"][0]["excluded_from_k_pp"] == true);
  CHECK(report["k_pp"].size() == 3);
  CHECK(report["atoms"]["total_mass"].get<double>() == Catch::Approx(2.0).margin(1e-8));
  // Witness vectors in the report are exact library output.
  const Matrix y = matrix_from_json(report["case_iii_excluded"][0]["y"]);
  CHECK(matrix_close(y, column2(0.0, 1.0), 1e-8));
}

TEST_CASE("cli classify exits 2 when nothing is reachable") {
  const std::string problem = "{\"a0\": [[1, 0], [0, 2]], \"a1\": [[1]], \"v\": [[0], [0]]}";
  const std::string input = scratch("zero_v.json");
  const std::string out = scratch("classify2.json");
  std::ofstream(input) << problem;
  CHECK(run_cli("classify " + input + " --out " + out) == 2);
  const Json report = load_json(out);
  CHECK(report["result"] == "hypothesis_fails");
}

TEST_CASE("cli solve is byte-deterministic and re-verifiable") {
  const std::string out1 = scratch("solve1.json");
  const std::string out2 = scratch("solve2.json");
  CHECK(run_cli("solve " + fixture("mixed_4x4.json") + " --out " + out1) == 0);
  CHECK(run_cli("solve " + fixture("mixed_4x4.json") + " --out " + out2) == 0);
  const std::string first = read_file(out1);
  CHECK(first == read_file(out2));

  const Json report = Json::parse(first);
  CHECK(report["result"] == "solution");
  const Matrix x = matrix_from_json(report["solution"]["x"]);
  const double recorded = report["solution"]["residual"].get<double>();
  const BlockOperator op = parse_problem(read_file(fixture("mixed_4x4.json"))).make_operator();
  CHECK(std::abs(riccati_residual(op, x) - recorded) <= 1e-12);
  REQUIRE(report["solution"]["lambda_set"].size() == 2);
}

TEST_CASE("cli solve returns the scalar root") {
  const std::string out = scratch("solve3.json");
  CHECK(run_cli("solve " + fixture("scalar_sqrt2.json") + " --out " + out) == 0);
  const Json report = load_json(out);
  const Matrix x = matrix_from_json(report["solution"]["x"]);
  CHECK(std::abs(x(0, 0) - Complex(1.0 - std::sqrt(2.0), 0.0)) <= 1e-10);
  CHECK(report["solution"]["residual"].get<double>() <= 1e-12);
}

TEST_CASE("cli solve surfaces the oracle when asked") {
  const std::string out = scratch("solve4.json");
  CHECK(run_cli("solve " + fixture("mixed_4x4.json") + " --all-oracle --out " + out) == 0);
  const Json report = load_json(out);
  CHECK(report["oracle"]["count"] == 6);
  REQUIRE(report["oracle"]["solutions"].size() == 6);
}

TEST_CASE("cli solve reports no certificate with evidence") {
  const std::string out = scratch("solve5.json");
  const int code = run_cli("solve " + fixture("all_case_iii.json") + " --out " + out);
  CHECK(code == 3);
  const Json report = load_json(out);
  CHECK(report["result"] == "no_certificate");
  CHECK(report["no_certificate"]["pool_size"] == 0);
  CHECK(report["no_certificate"]["witnesses_needed"] == 2);
  CHECK(report["no_certificate"]["classification"].size() == 4);
}

TEST_CASE("cli scan writes a report and plot data") {
  const std::string out = scratch("scan.json");
  const std::string plot_out = scratch("scan.tsv");
  const int code = run_cli("scan " + fixture("flat_couple.json") +
                           " --out " + out + " --plot-out " + plot_out);
  CHECK(code == 0);
  const Json report = load_json(out);
  CHECK(report["scan"]["grid"].size() == 401);
  REQUIRE(report["scan"]["flagged_atoms"].size() == 2);
  for (const auto& atom : report["scan"]["flagged_atoms"]) {
    CHECK(std::abs(std::abs(atom["lambda"].get<double>()) - 1.0) <= 1e-12);
    CHECK(atom["estimated_mass"].get<double>() == Catch::Approx(0.5).epsilon(0.05));
  }
  CHECK(report["scan"]["sc_candidates"].empty());
  CHECK(report["plot_file"] == plot_out);

  const std::string plot = read_file(plot_out);
  CHECK(plot.rfind("lambda\teps\ttrace_im_m\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : plot)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 401 * 7);  // header + grid x default ladder
}

TEST_CASE("cli scan default grid is seeded and finds every atom") {
  const std::string out = scratch("scan2.json");
  REQUIRE(run_cli("scan " + fixture("mixed_4x4.json") + " --out " + out) == 0);
  const Json report = load_json(out);
  CHECK(report["scan"]["grid_seeded_with_eigenvalues"].get<bool>());

  const AtomTable table = atom_table(testsupport::mixed_op());
  const auto& flagged = report["scan"]["flagged_atoms"];
  REQUIRE(flagged.size() == table.entries.size());
  for (std::size_t k = 0; k < table.entries.size(); ++k) {
    CHECK(flagged[k]["lambda"].get<double>() ==
          Catch::Approx(table.entries[k].lambda).margin(1e-9));
    CHECK(flagged[k]["estimated_mass"].get<double>() ==
          Catch::Approx(table.entries[k].mass).epsilon(1e-6));
  }
}

TEST_CASE("cli scan validates grids") {
  CHECK(run_cli("scan " + fixture("scalar_sqrt2.json") + " --grid 0:1:0 2> /dev/null") == 1);
  CHECK(run_cli("scan " + fixture("scalar_sqrt2.json") + " --grid nope 2> /dev/null") == 1);
  CHECK(run_cli("scan " + fixture("scalar_sqrt2.json") +
                " --eps-ladder 1e-8:1e-2:10 2> /dev/null") == 1);
}

TEST_CASE("cli rejects bad tolerance overrides") {
  CHECK(run_cli("solve " + fixture("mixed_4x4.json") +
                " --tol-residual -1 2> /dev/null") == 1);
}
