#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "holdpp/attack.hpp"
#include "holdpp/data.hpp"
#include "holdpp/params.hpp"
#include "holdpp/sampler.hpp"
#include "holdpp/score_net.hpp"

namespace holdpp {

// One point of the model-order grid: the damping parameters that go with n.
struct OrderSpec {
  int order = 1;
  double xi = 4.0;
  std::vector<double> gammas;
};

struct ExperimentConfig {
  std::vector<OrderSpec> orders;
  std::vector<double> betas{10.0};
  std::vector<double> eps_nums{1e-3};
  double inv_mass = 1.0;
  double horizon = 1.0;
  int depth = 6;
  int width = 128;
  TrainConfig train;
  AttackConfig attack;
  SpiralConfig spiral;
  IntegratorConfig sampler;
  int sample_count = 500;
  double member_fraction = 0.5;
  int repeats = 5;
  uint64_t seed_base = 0;
  std::string output_dir = "results";
  int jobs = 1;

  void validate() const;
  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_string(const std::string& text);
};

struct RunRecord {
  std::string run_id;
  int order = 0;
  double beta = 0.0;
  double eps_num = 0.0;
  double xi = 0.0;
  std::vector<double> gammas;
  int repeat = 0;
  uint64_t seed = 0;
  double auroc = 0.0;
  std::vector<double> per_time_auroc;
  double energy_distance = 0.0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::string samples_csv;  // relative to output_dir
  std::optional<std::string> error;
};

struct CiRow {
  std::string group;
  int count = 0;
  double mean = 0.0;
  double ci_halfwidth = 0.0;  // 1.96 * sd / sqrt(count)
  bool has_ci = false;        // false when count < 2
};

// Stable seed derivation: mixes seed_base with the parameter tuple and the
// repeat index, independent of grid iteration order.
uint64_t derive_run_seed(uint64_t seed_base, const OrderSpec& spec,
                         double beta, double eps_num, int repeat);

HoldParams make_params(const ExperimentConfig& cfg, const OrderSpec& spec,
                       double beta, double eps_num);

// Runs a single grid point end to end: data, training, attack, generation,
// energy distance. Throws on failure.
RunRecord run_single(const ExperimentConfig& cfg, const OrderSpec& spec,
                     double beta, double eps_num, int repeat);

// Full sweep. Appends one NDJSON line per run (including failed runs, which
// carry an error field and do not abort the sweep) to
// output_dir/records.ndjson as each run completes, then rewrites the CSV
// summary. Failed runs are excluded from the returned list.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& line);
std::vector<RunRecord> read_records_ndjson(const std::string& path);
void write_summary_csv(const std::vector<RunRecord>& records,
                       const std::string& path);

// group_keys is a subset of {"n", "beta", "eps_num"}.
std::vector<CiRow> aggregate_ci(const std::vector<RunRecord>& records,
                                const std::vector<std::string>& group_keys);

// Writes AUROC-vs-n bar data, AUROC-vs-time curves, and sample scatters,
// each as CSV plus an SVG, into output_dir.
void emit_plots(const std::vector<RunRecord>& records,
                const std::string& output_dir);

}  // namespace holdpp
