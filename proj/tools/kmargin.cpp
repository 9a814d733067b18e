// kmargin: train/evaluate large-margin kernel classifiers, probe exact
// risk quantities on finite distributions, run kernel-CCA independence
// tests and kernel dimension reduction, and execute the reproducible
// experiment battery.
//
// Exit codes: 0 success / all verdicts pass, 1 any verdict failed,
// 2 usage or input error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kmargin/analysis.hpp"
#include "kmargin/classify.hpp"
#include "kmargin/experiments.hpp"
#include "kmargin/io.hpp"
#include "kmargin/kmethods.hpp"
#include "kmargin/losses.hpp"

namespace {

using namespace kmargin;

struct CommonFlags {
  std::string kernel = "gauss:1";
  std::string kernel_y;  // empty -> same as kernel
  std::string loss = "hinge";
  double lambda = 0.1;
  std::uint64_t seed = 1;
  std::string backend = "subgrad";
  std::string out;
};

int run_train(const std::string& data_path, const std::string& format,
              const CommonFlags& flags, int iters) {
  LabeledDataset data = ingest(data_path, format);
  TrainConfig tc;
  tc.max_iter = iters;
  tc.backend = parse_backend(flags.backend);
  Model model = train(data, Kernel::parse(flags.kernel), parse_loss(flags.loss),
                      flags.lambda, tc);
  if (flags.out.empty()) throw std::invalid_argument("train requires --out");
  save_model(model, flags.out);

  std::cout << "n " << data.n() << "\n"
            << "d " << data.dim() << "\n"
            << "objective " << format_double(objective_value(model, data)) << "\n"
            << "norm_sq " << format_double(rkhs_norm_sq(model)) << "\n"
            << "support_fraction " << format_double(support_fraction(model, 1e-6))
            << "\n"
            << "model " << flags.out << "\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& format, const std::string& out_path) {
  const Model model = load_model(model_path);
  const LabeledDataset data = ingest(data_path, format);
  const Vector values = decision_batch(model, data.points);

  std::ostringstream body;
  body << "decision,label\n";
  for (int i = 0; i < values.size(); ++i) {
    body << format_double(values[i]) << ',' << (values[i] >= 0.0 ? 1 : -1) << "\n";
  }
  std::cout << body.str();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    write_generated_at(out);
    out << body.str();
  }
  return 0;
}

int run_probe(const std::string& joint_path, const std::string& out_path) {
  const DiscreteJoint joint = load_discrete_joint(joint_path);
  const std::vector<LossKind> losses = {LossKind::kHinge, LossKind::kLogistic,
                                        LossKind::kExponential, LossKind::kQuadratic};
  std::ostringstream body;
  body << "bayes_risk " << format_double(bayes_risk(joint)) << "\n";
  for (LossKind loss : losses) {
    body << "optimal_phi_risk " << loss_name(loss) << ' '
         << format_double(optimal_phi_risk(joint, loss)) << "\n";
  }
  for (LossKind loss : losses) {
    for (int i = 0; i <= 20; ++i) {
      const double theta = i / 20.0;
      body << "psi " << loss_name(loss) << ' ' << format_double(theta) << ' '
           << format_double(psi_transform(loss, theta)) << "\n";
    }
  }
  std::cout << body.str();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    write_generated_at(out);
    out << body.str();
  }
  return 0;
}

int run_cca(const std::string& x_path, const std::string& y_path,
            const CommonFlags& flags, double kappa, int permutations) {
  const Matrix x = read_matrix_csv(x_path);
  const Matrix y = read_matrix_csv(y_path);
  const Kernel kx = Kernel::parse(flags.kernel);
  const Kernel ky = Kernel::parse(flags.kernel_y.empty() ? flags.kernel : flags.kernel_y);

  const CcaResult cca = kernel_cca(x, y, kx, ky, kappa);
  const IndependenceResult test =
      independence_test(x, y, kx, ky, kappa, permutations, flags.seed);

  std::cout << "n " << x.rows() << "\n"
            << "kappa " << format_double(kappa) << "\n"
            << "rho " << format_double(cca.rho) << "\n"
            << "rho_raw " << format_double(cca.rho_raw) << "\n"
            << "permutations " << permutations << "\n"
            << "p_value " << format_double(test.p_value) << "\n";
  if (!flags.out.empty()) {
    std::ofstream out(flags.out);
    if (!out) throw std::runtime_error("cannot write " + flags.out);
    write_generated_at(out);
    out << "replicate,null_rho\n";
    for (int b = 0; b < test.null_rhos.size(); ++b) {
      out << b << ',' << format_double(test.null_rhos[b]) << "\n";
    }
  }
  return 0;
}

int run_sdr(const std::string& x_path, const std::string& y_path,
            const CommonFlags& flags, int dim, double epsilon, int restarts) {
  const Matrix x = read_matrix_csv(x_path);
  const Matrix y = read_matrix_csv(y_path);
  const Kernel kx = Kernel::parse(flags.kernel);
  const Kernel ky = Kernel::parse(flags.kernel_y.empty() ? flags.kernel : flags.kernel_y);

  const SdrResult fit = estimate_sdr(x, y, dim, kx, ky, epsilon, restarts, flags.seed);
  std::cout << "objective " << format_double(fit.objective) << "\n"
            << "restarts_used " << fit.restarts_used << "\n";
  for (int i = 0; i < fit.b.rows(); ++i) {
    std::cout << "b";
    for (int j = 0; j < fit.b.cols(); ++j) {
      std::cout << ' ' << format_double(fit.b(i, j));
    }
    std::cout << "\n";
  }
  if (!flags.out.empty()) {
    std::ofstream out(flags.out);
    if (!out) throw std::runtime_error("cannot write " + flags.out);
    write_generated_at(out);
    for (int i = 0; i < fit.b.rows(); ++i) {
      for (int j = 0; j < fit.b.cols(); ++j) {
        out << (j ? "," : "") << format_double(fit.b(i, j));
      }
      out << "\n";
    }
  }
  return 0;
}

int run_experiment_cmd(const std::string& name, const CommonFlags& flags,
                       const std::vector<int>& sizes, double lambda_c,
                       double lambda_exp) {
  ExperimentConfig config;
  config.name = name;
  config.seed = flags.seed;
  config.sizes = sizes;
  config.lambda_c = lambda_c;
  config.lambda_exponent = lambda_exp;
  config.kernel = Kernel::parse(flags.kernel);
  config.loss = parse_loss(flags.loss);
  config.backend = parse_backend(flags.backend);
  config.out_path = flags.out;

  const ExperimentReport report = run_experiment(config);
  for (const auto& v : report.verdicts) {
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
  }
  if (!flags.out.empty()) std::cout << "report " << flags.out << "\n";
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"large-margin kernel classification and kernel dependence tools"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string data_path, format = "csv", model_path, joint_path, x_path, y_path;
  std::string experiment_name;
  std::vector<int> sizes;
  int iters = 600, permutations = 199, dim = 1, restarts = 5;
  double kappa = 1e-2, epsilon = 1e-3, lambda_c = 0.1, lambda_exp = 0.5;

  CLI::App* train_cmd = app.add_subcommand("train", "fit a model and save it");
  train_cmd->add_option("--data", data_path, "training data file")->required();
  train_cmd->add_option("--format", format, "csv|svmlight");
  train_cmd->add_option("--kernel", flags.kernel, "kernel spec");
  train_cmd->add_option("--loss", flags.loss, "hinge|logistic|exp|quad");
  train_cmd->add_option("--lambda", flags.lambda, "regularization weight");
  train_cmd->add_option("--iters", iters, "optimizer iteration cap");
  train_cmd->add_option("--backend", flags.backend, "subgrad|bundle");
  train_cmd->add_option("--seed", flags.seed, "unused; training is deterministic");
  train_cmd->add_option("--out", flags.out, "model output path")->required();

  CLI::App* predict_cmd =
      app.add_subcommand("predict", "decision value and label per input row");
  predict_cmd->add_option("--model", model_path, "model file")->required();
  predict_cmd->add_option("--data", data_path, "query data file")->required();
  predict_cmd->add_option("--format", format, "csv|svmlight");
  predict_cmd->add_option("--out", flags.out, "predictions output path");

  CLI::App* probe_cmd =
      app.add_subcommand("probe", "exact risks and psi tables of a finite joint");
  probe_cmd->add_option("--joint", joint_path, "discrete joint file")->required();
  probe_cmd->add_option("--out", flags.out, "report output path");

  CLI::App* cca_cmd =
      app.add_subcommand("cca", "kernel cca and permutation independence test");
  cca_cmd->add_option("--x", x_path, "first sample csv")->required();
  cca_cmd->add_option("--y", y_path, "second sample csv")->required();
  cca_cmd->add_option("--kernel", flags.kernel, "kernel for both inputs");
  cca_cmd->add_option("--kernel-y", flags.kernel_y, "override kernel for y");
  cca_cmd->add_option("--kappa", kappa, "regularizer");
  cca_cmd->add_option("--permutations", permutations, "permutation count (>= 19)");
  cca_cmd->add_option("--seed", flags.seed, "permutation seed");
  cca_cmd->add_option("--out", flags.out, "null-sample csv path");

  CLI::App* sdr_cmd =
      app.add_subcommand("sdr", "kernel sufficient dimension reduction");
  sdr_cmd->add_option("--x", x_path, "predictor csv")->required();
  sdr_cmd->add_option("--y", y_path, "response csv")->required();
  sdr_cmd->add_option("--dim", dim, "target dimension");
  sdr_cmd->add_option("--kernel", flags.kernel, "kernel for x");
  sdr_cmd->add_option("--kernel-y", flags.kernel_y, "override kernel for y");
  sdr_cmd->add_option("--epsilon", epsilon, "regularizer");
  sdr_cmd->add_option("--restarts", restarts, "random restarts");
  sdr_cmd->add_option("--seed", flags.seed, "restart seed");
  sdr_cmd->add_option("--out", flags.out, "projection csv path");

  CLI::App* exp_cmd = app.add_subcommand("experiment", "run a named study");
  exp_cmd->add_option("--name", experiment_name,
                      "sv_fraction|psi_bound|sieve_bound|calibration|consistency|"
                      "cca_power|sdr_recovery")
      ->required();
  exp_cmd->add_option("--seed", flags.seed, "master seed");
  exp_cmd->add_option("--sizes", sizes, "sample sizes")->delimiter(',');
  exp_cmd->add_option("--lambda-c", lambda_c, "lambda schedule scale");
  exp_cmd->add_option("--lambda-exp", lambda_exp, "lambda schedule exponent");
  exp_cmd->add_option("--kernel", flags.kernel, "kernel spec");
  exp_cmd->add_option("--loss", flags.loss, "surrogate loss");
  exp_cmd->add_option("--backend", flags.backend, "subgrad|bundle");
  exp_cmd->add_option("--out", flags.out, "report csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(data_path, format, flags, iters);
    if (predict_cmd->parsed()) {
      return run_predict(model_path, data_path, format, flags.out);
    }
    if (probe_cmd->parsed()) return run_probe(joint_path, flags.out);
    if (cca_cmd->parsed()) return run_cca(x_path, y_path, flags, kappa, permutations);
    if (sdr_cmd->parsed()) return run_sdr(x_path, y_path, flags, dim, epsilon, restarts);
    if (exp_cmd->parsed()) {
      return run_experiment_cmd(experiment_name, flags, sizes, lambda_c, lambda_exp);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
