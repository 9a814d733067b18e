// End-to-end coverage of the command-line tool: flows, output grammar,
// exit codes, and byte-level determinism. Compiled only when the build
// provides the binary location.
#ifdef KMARGIN_CLI_PATH

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "kmargin/classify.hpp"
#include "kmargin/io.hpp"

using namespace kmargin;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + KMARGIN_CLI_PATH + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  std::string path;
  TempDir() {
    char tmpl[] = "/tmp/kmargin_cli_XXXXXX";
    const char* made = mkdtemp(tmpl);
    REQUIRE(made != nullptr);
    path = made;
  }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << content;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

// File content with the timestamp comment removed, for rerun comparisons.
std::string without_generated_at(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream keep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# generated-at ", 0) == 0) continue;
    keep << line << "\n";
  }
  return keep.str();
}

const std::string kSeparableCsv =
    "x1,x2,label\n"
    "1.0,1.2,1\n"
    "1.4,0.8,1\n"
    "0.9,1.6,1\n"
    "1.8,1.1,1\n"
    "-1.1,-0.9,-1\n"
    "-0.8,-1.3,-1\n"
    "-1.5,-0.7,-1\n"
    "-1.0,-1.8,-1\n";

}  // namespace

TEST_CASE("cli: train then predict reproduces library decisions") {
  TempDir dir;
  const std::string data = dir.file("train.csv");
  write_file(data, kSeparableCsv);
  const std::string model_path = dir.file("model.txt");

  const CmdResult trained = run_cli("train --data " + data +
                                    " --kernel gauss:1.2 --loss hinge --lambda 0.05"
                                    " --iters 400 --backend bundle --out " +
                                    model_path);
  CHECK(trained.exit_code == 0);
  const std::vector<std::string> tl = lines_of(trained.output);
  REQUIRE(tl.size() == 6);
  CHECK(tl[0] == "n 8");
  CHECK(tl[1] == "d 2");
  CHECK(tl[2].rfind("objective ", 0) == 0);
  CHECK(tl[3].rfind("norm_sq ", 0) == 0);
  CHECK(tl[4].rfind("support_fraction ", 0) == 0);
  CHECK(tl[5] == "model " + model_path);

  const std::string pred_path = dir.file("pred.csv");
  const CmdResult predicted = run_cli("predict --model " + model_path + " --data " +
                                      data + " --out " + pred_path);
  CHECK(predicted.exit_code == 0);
  const std::vector<std::string> pl = lines_of(predicted.output);
  REQUIRE(pl.size() == 9);
  CHECK(pl[0] == "decision,label");

  // The printed rows must match what the library computes from the same files.
  const Model model = load_model(model_path);
  const LabeledDataset queries = ingest(data, "csv");
  const Vector values = decision_batch(model, queries.points);
  for (int i = 0; i < 8; ++i) {
    const std::string expected =
        format_double(values[i]) + "," + (values[i] >= 0.0 ? "1" : "-1");
    CHECK(pl[i + 1] == expected);
  }
  // Separable data with a sensible kernel: every training point classified right.
  for (int i = 0; i < 8; ++i) {
    CHECK((values[i] >= 0.0 ? 1 : -1) == queries.labels[i]);
  }

  // The saved copy is the stdout body behind one timestamp comment.
  CHECK(without_generated_at(pred_path) == predicted.output);
}

TEST_CASE("cli: predict accepts svmlight queries") {
  TempDir dir;
  const std::string data = dir.file("train.csv");
  write_file(data, kSeparableCsv);
  const std::string model_path = dir.file("model.txt");
  REQUIRE(run_cli("train --data " + data + " --out " + model_path).exit_code == 0);

  const std::string queries = dir.file("q.svm");
  write_file(queries, "+1 1:1.0 2:1.2\n-1 1:-1.1 2:-0.9\n");
  const CmdResult predicted =
      run_cli("predict --model " + model_path + " --data " + queries +
              " --format svmlight");
  CHECK(predicted.exit_code == 0);
  const std::vector<std::string> pl = lines_of(predicted.output);
  REQUIRE(pl.size() == 3);
  CHECK(pl[0] == "decision,label");
  CHECK(pl[1].substr(pl[1].find(',') + 1) == "1");
  CHECK(pl[2].substr(pl[2].find(',') + 1) == "-1");
}

TEST_CASE("cli: probe reports exact risks and the psi table") {
  TempDir dir;
  const std::string joint = dir.file("joint.txt");
  // Two atoms, p = (0.5, 0.5), eta = (0.9, 0.2): Bayes risk 0.15 and
  // hinge optimal surrogate risk 0.3 follow by hand.
  write_file(joint, "2\n1 0.5 0.9\n-1 0.5 0.2\n");

  const CmdResult probed = run_cli("probe --joint " + joint);
  CHECK(probed.exit_code == 0);
  const std::vector<std::string> pl = lines_of(probed.output);
  REQUIRE(pl.size() == 1 + 4 + 4 * 21);
  CHECK(pl[0] == "bayes_risk 0.15");
  CHECK(pl[1] == "optimal_phi_risk hinge 0.3");
  CHECK(pl[2].rfind("optimal_phi_risk logistic ", 0) == 0);
  CHECK(pl[3].rfind("optimal_phi_risk exp ", 0) == 0);
  CHECK(pl[4].rfind("optimal_phi_risk quad ", 0) == 0);

  // psi lines: four blocks of 21; the hinge block is the identity up to
  // floating-point rounding in the generic transform.
  int hinge_rows = 0;
  for (std::size_t i = 5; i < pl.size(); ++i) {
    CHECK(pl[i].rfind("psi ", 0) == 0);
    std::istringstream ts(pl[i]);
    std::string tag, loss;
    double theta = -1.0, value = -1.0;
    ts >> tag >> loss >> theta >> value;
    if (loss == "hinge") {
      ++hinge_rows;
      CHECK(std::abs(value - theta) <= 1e-12);
    }
    if (theta == 1.0) CHECK(value == 1.0);  // psi(1) = 1 for every loss
  }
  CHECK(hinge_rows == 21);
}

TEST_CASE("cli: usage and input errors exit 2") {
  TempDir dir;
  const std::string data = dir.file("ok.csv");
  write_file(data, kSeparableCsv);

  CHECK(run_cli("bogus-subcommand").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);  // a subcommand is required
  CHECK(run_cli("train --data " + data).exit_code == 2);  // --out is required

  const CmdResult bad_kernel = run_cli("train --data " + data +
                                       " --kernel gauss:0 --out " + dir.file("m.txt"));
  CHECK(bad_kernel.exit_code == 2);
  CHECK(bad_kernel.output.find("error:") != std::string::npos);

  const CmdResult missing = run_cli("predict --model " + dir.file("absent.txt") +
                                    " --data " + data);
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("absent.txt") != std::string::npos);

  CHECK(run_cli("experiment --name nosuch").exit_code == 2);
  CHECK(run_cli("cca --x " + data + " --y " + data + " --permutations 5")
            .exit_code == 2);  // below the permutation floor
}

TEST_CASE("cli: failed experiment verdicts exit 1") {
  // A regularization scale this large pins every coefficient near zero, so
  // the learned rules cannot approach the Bayes risk; fast because each
  // fit sees at most a dozen points.
  const CmdResult r = run_cli(
      "experiment --name consistency --sizes 10,12 --lambda-c 1000 --seed 1");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("FAIL ") != std::string::npos);
  for (const std::string& line : lines_of(r.output)) {
    const bool verdict =
        line.rfind("PASS ", 0) == 0 || line.rfind("FAIL ", 0) == 0;
    CHECK(verdict);
  }
}

TEST_CASE("cli: passing experiment exits 0 and writes a report") {
  TempDir dir;
  const std::string report = dir.file("psi.csv");
  const CmdResult r =
      run_cli("experiment --name psi_bound --seed 1 --out " + report);
  CHECK(r.exit_code == 0);
  const std::vector<std::string> rl = lines_of(r.output);
  REQUIRE(rl.size() == 2);
  CHECK(rl[0].rfind("PASS psi_bound_zero_violations", 0) == 0);
  CHECK(rl[1] == "report " + report);
  CHECK(std::ifstream(report).good());
}

TEST_CASE("cli: cca and sdr reruns are byte-identical modulo the timestamp") {
  TempDir dir;
  std::ostringstream xs, ys;
  // Deterministic, mildly dependent pair of 1-d samples.
  for (int i = 0; i < 24; ++i) {
    const double x = -1.0 + 2.0 * i / 23.0;
    xs << format_double(x) << "\n";
    ys << format_double(x * x + 0.1 * ((i * 7) % 5 - 2)) << "\n";
  }
  write_file(dir.file("x.csv"), xs.str());
  write_file(dir.file("y.csv"), ys.str());

  const std::string args = "cca --x " + dir.file("x.csv") + " --y " +
                           dir.file("y.csv") +
                           " --kernel gauss:0.7 --kernel-y gauss:1.3"
                           " --kappa 0.01 --permutations 49 --seed 7 --out ";
  const CmdResult first = run_cli(args + dir.file("null1.csv"));
  const CmdResult second = run_cli(args + dir.file("null2.csv"));
  CHECK(first.exit_code == 0);
  CHECK(second.exit_code == 0);
  CHECK(first.output == second.output);
  CHECK(without_generated_at(dir.file("null1.csv")) ==
        without_generated_at(dir.file("null2.csv")));

  const std::vector<std::string> cl = lines_of(first.output);
  REQUIRE(cl.size() == 6);
  CHECK(cl[0] == "n 24");
  CHECK(cl[1] == "kappa 0.01");
  CHECK(cl[2].rfind("rho ", 0) == 0);
  CHECK(cl[3].rfind("rho_raw ", 0) == 0);
  CHECK(cl[4] == "permutations 49");
  CHECK(cl[5].rfind("p_value ", 0) == 0);
  const std::vector<std::string> nulls =
      lines_of(without_generated_at(dir.file("null1.csv")));
  REQUIRE(nulls.size() == 50);
  CHECK(nulls[0] == "replicate,null_rho");

  const std::string sdr_args = "sdr --x " + dir.file("x.csv") + " --y " +
                               dir.file("y.csv") +
                               " --dim 1 --kernel gauss:0.7 --restarts 2"
                               " --seed 3 --out ";
  const CmdResult s1 = run_cli(sdr_args + dir.file("b1.csv"));
  const CmdResult s2 = run_cli(sdr_args + dir.file("b2.csv"));
  CHECK(s1.exit_code == 0);
  CHECK(s1.output == s2.output);
  CHECK(without_generated_at(dir.file("b1.csv")) ==
        without_generated_at(dir.file("b2.csv")));
  const std::vector<std::string> sl = lines_of(s1.output);
  REQUIRE(sl.size() == 3);  // objective, restarts_used, one projection row
  CHECK(sl[0].rfind("objective ", 0) == 0);
  CHECK(sl[1] == "restarts_used 2");
  CHECK(sl[2].rfind("b ", 0) == 0);

  write_file(dir.file("t.csv"), kSeparableCsv);
  REQUIRE(run_cli("train --data " + dir.file("t.csv") + " --out " +
                  dir.file("m1.txt"))
              .exit_code == 0);
  REQUIRE(run_cli("train --data " + dir.file("t.csv") + " --out " +
                  dir.file("m2.txt"))
              .exit_code == 0);
  CHECK(without_generated_at(dir.file("m1.txt")) ==
        without_generated_at(dir.file("m2.txt")));
}

#endif  // KMARGIN_CLI_PATH
