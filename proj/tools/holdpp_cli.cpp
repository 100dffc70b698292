// Experiment CLI: data generation, training, attack evaluation, privacy
// accounting, parameter sweeps, and plot emission.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "holdpp/attack.hpp"
#include "holdpp/data.hpp"
#include "holdpp/forward.hpp"
#include "holdpp/harness.hpp"
#include "holdpp/privacy.hpp"
#include "holdpp/sampler.hpp"
#include "holdpp/score_net.hpp"

namespace fs = std::filesystem;
using namespace holdpp;

namespace {

struct ParamFlags {
  int n = 1;
  double xi = 4.0;
  std::vector<double> gammas;
  double inv_mass = 1.0;
  double beta = 10.0;
  double eps_num = 1e-3;
  double horizon = 1.0;

  void add_to(CLI::App* app) {
    app->add_option("--n", n, "model order");
    app->add_option("--xi", xi, "damping rate");
    app->add_option("--gamma", gammas, "coupling rates (n-1 values)");
    app->add_option("--inv-mass", inv_mass, "L^-1");
    app->add_option("--beta", beta, "auxiliary variance factor");
    app->add_option("--eps-num", eps_num, "initial data-block variance");
    app->add_option("--horizon", horizon, "diffusion end time T");
  }

  HoldParams build(int dim) const {
    HoldParams p;
    p.order = n;
    p.dim = dim;
    p.gammas = gammas;
    if (p.gammas.empty() && n == 2) p.gammas = {xi / 2.0};
    p.xi = xi;
    p.inv_mass = inv_mass;
    p.beta = beta;
    p.eps_num = eps_num;
    p.horizon = horizon;
    p.validate();
    return p;
  }
};

std::string output_dir_override(const std::string& configured) {
  if (const char* env = std::getenv("HOLDPP_OUTPUT_DIR")) return env;
  return configured;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOLD++ diffusion, membership-inference attack, and RDP accountant"};
  app.require_subcommand(1);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "write a spiral dataset CSV");
  SpiralConfig spiral;
  std::string gen_output = "spiral.csv";
  gen->add_option("--count", spiral.count);
  gen->add_option("--turns", spiral.turns);
  gen->add_option("--noise-std", spiral.noise_std);
  gen->add_option("--seed", spiral.seed);
  gen->add_option("--output", gen_output, "output CSV path");

  // train
  auto* tr = app.add_subcommand("train", "train a score network");
  ParamFlags tr_params;
  tr_params.add_to(tr);
  std::string tr_data, tr_ckpt = "score_net.ckpt", tr_trace;
  int tr_depth = 6, tr_width = 128;
  TrainConfig tr_cfg;
  tr->add_option("--data", tr_data, "training CSV")->required();
  tr->add_option("--output", tr_ckpt, "checkpoint path");
  tr->add_option("--loss-trace", tr_trace, "optional loss trace CSV");
  tr->add_option("--depth", tr_depth);
  tr->add_option("--width", tr_width);
  tr->add_option("--epochs", tr_cfg.epochs);
  tr->add_option("--batch-size", tr_cfg.batch_size);
  tr->add_option("--learning-rate", tr_cfg.learning_rate);
  tr->add_option("--seed", tr_cfg.seed);

  // attack
  auto* at = app.add_subcommand("attack", "run the PIA attack");
  ParamFlags at_params;
  at_params.add_to(at);
  std::string at_ckpt, at_members, at_holdouts, at_report = "attack_report.json",
              at_roc;
  AttackConfig at_cfg;
  double at_p = 2.0;
  bool at_inf_norm = false;
  at->add_option("--checkpoint", at_ckpt)->required();
  at->add_option("--members", at_members)->required();
  at->add_option("--holdouts", at_holdouts)->required();
  at->add_option("--report", at_report, "report JSON path");
  at->add_option("--roc-csv", at_roc, "optional ROC CSV path");
  at->add_option("--n-time", at_cfg.n_time);
  at->add_option("--p", at_p, "norm order");
  at->add_flag("--inf-norm", at_inf_norm, "use the max norm");
  at->add_flag("--stochastic-eps", at_cfg.stochastic_eps);
  uint64_t at_seed = 0;
  at->add_option("--seed", at_seed, "rng seed for --stochastic-eps");

  // privacy-report
  auto* pr = app.add_subcommand("privacy-report", "RDP accountant report");
  ParamFlags pr_params;
  pr_params.add_to(pr);
  double pr_delta2f = 4.0, pr_alpha = 2.0;
  int pr_grid = 50;
  std::string pr_report = "privacy_report.json", pr_csv;
  pr->add_option("--delta2f", pr_delta2f, "squared data diameter");
  pr->add_option("--alpha", pr_alpha, "Renyi order");
  pr->add_option("--grid-points", pr_grid);
  pr->add_option("--report", pr_report);
  pr->add_option("--csv", pr_csv, "optional sensitivity-curve CSV");

  // sample
  auto* sa = app.add_subcommand("sample", "generate data from a checkpoint");
  ParamFlags sa_params;
  sa_params.add_to(sa);
  std::string sa_ckpt, sa_output = "samples.csv";
  int sa_count = 500, sa_steps = 500;
  std::string sa_scheme = "probability-flow";
  uint64_t sa_seed = 0;
  sa->add_option("--checkpoint", sa_ckpt)->required();
  sa->add_option("--output", sa_output);
  sa->add_option("--count", sa_count);
  sa->add_option("--steps", sa_steps);
  sa->add_option("--scheme", sa_scheme)
      ->check(CLI::IsMember({"probability-flow", "reverse-sde"}));
  sa->add_option("--seed", sa_seed);

  // sweep
  auto* sw = app.add_subcommand("sweep", "run the full experiment grid");
  std::string sw_config;
  bool sw_plots = false;
  sw->add_option("--config", sw_config, "experiment config JSON")->required();
  sw->add_flag("--plots", sw_plots, "emit plots after the sweep");

  // plot
  auto* pl = app.add_subcommand("plot", "emit plots from a records file");
  std::string pl_records, pl_output = "results";
  pl->add_option("--records", pl_records, "records.ndjson path")->required();
  pl->add_option("--output-dir", pl_output);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      write_dataset_csv(generate_spiral(spiral), gen_output);
      std::cout << "wrote " << spiral.count << " points to " << gen_output
                << "\n";
    } else if (*tr) {
      const Eigen::MatrixXd data = read_dataset_csv(tr_data);
      const HoldParams params = tr_params.build(static_cast<int>(data.rows()));
      ScoreNetwork net(params.order, params.dim, tr_depth, tr_width,
                       tr_cfg.seed);
      const TrainResult result = train(net, params, data, tr_cfg);
      net.save_checkpoint(tr_ckpt);
      if (!tr_trace.empty()) {
        std::ofstream out(tr_trace, std::ios::trunc);
        out << "epoch,loss\n";
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
          out << i << "," << result.loss_trace[i] << "\n";
      }
      std::cout << "trained " << tr_cfg.epochs << " epochs, final loss "
                << result.loss_trace.back() << ", checkpoint " << tr_ckpt
                << "\n";
    } else if (*at) {
      const Eigen::MatrixXd members = read_dataset_csv(at_members);
      const Eigen::MatrixXd holdouts = read_dataset_csv(at_holdouts);
      const HoldParams params =
          at_params.build(static_cast<int>(members.rows()));
      const ScoreNetwork net = ScoreNetwork::load_checkpoint(
          at_ckpt, params.order, params.dim);
      at_cfg.p = at_inf_norm
                     ? std::numeric_limits<double>::infinity()
                     : at_p;
      Rng rng(at_seed);
      const AttackReport report = run_pia(
          params, make_score_fn(net, params.horizon), members, holdouts,
          at_cfg, &rng);
      std::ofstream out(at_report, std::ios::trunc);
      out << attack_report_to_json(report) << "\n";
      if (!at_roc.empty()) write_roc_csv(report, at_roc);
      std::cout << "AUROC " << report.auroc << ", report " << at_report
                << "\n";
    } else if (*pr) {
      const HoldParams params = pr_params.build(2);
      std::vector<double> grid;
      for (int i = 0; i < pr_grid; ++i)
        grid.push_back(i * params.horizon / (pr_grid - 1));
      const PrivacyReport report =
          make_privacy_report(params, grid, pr_delta2f, pr_alpha);
      std::ofstream out(pr_report, std::ios::trunc);
      out << privacy_report_to_json(report) << "\n";
      if (!pr_csv.empty()) write_sensitivity_csv(report, pr_csv);
      std::cout << "epsilon bound " << report.epsilon_bound << ", report "
                << pr_report << "\n";
    } else if (*sa) {
      ScoreNetwork net = ScoreNetwork::load_checkpoint(sa_ckpt);
      const HoldParams params = sa_params.build(net.dim());
      if (net.order() != params.order)
        throw std::runtime_error("sample: checkpoint order does not match --n");
      IntegratorConfig cfg;
      cfg.steps = sa_steps;
      cfg.scheme = sa_scheme == "reverse-sde"
                       ? IntegratorConfig::Scheme::kReverseSde
                       : IntegratorConfig::Scheme::kProbabilityFlow;
      Rng rng(sa_seed);
      write_dataset_csv(generate_batch(params, net, cfg, rng, sa_count),
                        sa_output);
      std::cout << "wrote " << sa_count << " samples to " << sa_output << "\n";
    } else if (*sw) {
      ExperimentConfig cfg = ExperimentConfig::from_json_file(sw_config);
      cfg.output_dir = output_dir_override(cfg.output_dir);
      const std::vector<RunRecord> records = run_experiment(cfg);
      if (sw_plots) emit_plots(records, cfg.output_dir);
      std::cout << records.size() << " runs completed, results in "
                << cfg.output_dir << "\n";
    } else if (*pl) {
      const std::vector<RunRecord> records = read_records_ndjson(pl_records);
      emit_plots(records, output_dir_override(pl_output));
      std::cout << "plots written to " << output_dir_override(pl_output)
                << "\n";
    }
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
