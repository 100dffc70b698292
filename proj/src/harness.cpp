#include "holdpp/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "holdpp/forward.hpp"
#include "holdpp/privacy.hpp"

namespace holdpp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t mix(uint64_t h, uint64_t v) { return splitmix64(h ^ v); }

uint64_t double_bits(double v) {
  uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  return bits;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (orders.empty()) throw std::invalid_argument("config: no model orders");
  if (betas.empty() || eps_nums.empty())
    throw std::invalid_argument("config: empty beta or eps_num grid");
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
  for (const auto& spec : orders)
    for (double b : betas)
      for (double e : eps_nums)
        make_params(*this, spec, b, e).validate();
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  for (const auto& o : j.value("orders", json::array())) {
    OrderSpec spec;
    spec.order = o.at("n").get<int>();
    spec.xi = o.value("xi", 4.0);
    spec.gammas = o.value("gammas", std::vector<double>{});
    // Critically damped default for n=2 when gammas are omitted: gamma = xi/2.
    if (spec.gammas.empty() && spec.order == 2)
      spec.gammas = {spec.xi / 2.0};
    cfg.orders.push_back(std::move(spec));
  }
  if (cfg.orders.empty()) cfg.orders.push_back(OrderSpec{});
  cfg.betas = j.value("betas", cfg.betas);
  cfg.eps_nums = j.value("eps_nums", cfg.eps_nums);
  cfg.inv_mass = j.value("inv_mass", cfg.inv_mass);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.depth = j.value("depth", cfg.depth);
  cfg.width = j.value("width", cfg.width);
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.t_min = t.value("t_min", cfg.train.t_min);
    cfg.train.t_max = t.value("t_max", cfg.train.t_max);
  }
  if (j.contains("attack")) {
    const auto& a = j["attack"];
    cfg.attack.n_time = a.value("n_time", cfg.attack.n_time);
    cfg.attack.p = a.value("p", cfg.attack.p);
    cfg.attack.use_mean = a.value("use_mean", cfg.attack.use_mean);
    cfg.attack.stochastic_eps =
        a.value("stochastic_eps", cfg.attack.stochastic_eps);
  }
  if (j.contains("spiral")) {
    const auto& s = j["spiral"];
    cfg.spiral.count = s.value("count", cfg.spiral.count);
    cfg.spiral.turns = s.value("turns", cfg.spiral.turns);
    cfg.spiral.noise_std = s.value("noise_std", cfg.spiral.noise_std);
  }
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    cfg.sampler.steps = s.value("steps", cfg.sampler.steps);
    cfg.sampler.t_end = s.value("t_end", cfg.sampler.t_end);
    const std::string scheme = s.value("scheme", std::string("probability-flow"));
    if (scheme == "probability-flow")
      cfg.sampler.scheme = IntegratorConfig::Scheme::kProbabilityFlow;
    else if (scheme == "reverse-sde")
      cfg.sampler.scheme = IntegratorConfig::Scheme::kReverseSde;
    else
      throw std::invalid_argument("config: unknown sampler scheme " + scheme);
    cfg.sample_count = s.value("count", cfg.sample_count);
  }
  cfg.member_fraction = j.value("member_fraction", cfg.member_fraction);
  cfg.repeats = j.value("repeats", cfg.repeats);
  cfg.seed_base = j.value("seed_base", cfg.seed_base);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

uint64_t derive_run_seed(uint64_t seed_base, const OrderSpec& spec,
                         double beta, double eps_num, int repeat) {
  uint64_t h = splitmix64(seed_base);
  h = mix(h, static_cast<uint64_t>(spec.order));
  h = mix(h, double_bits(spec.xi));
  for (double g : spec.gammas) h = mix(h, double_bits(g));
  h = mix(h, double_bits(beta));
  h = mix(h, double_bits(eps_num));
  h = mix(h, static_cast<uint64_t>(repeat));
  return h;
}

HoldParams make_params(const ExperimentConfig& cfg, const OrderSpec& spec,
                       double beta, double eps_num) {
  HoldParams p;
  p.order = spec.order;
  p.dim = 2;
  p.gammas = spec.gammas;
  p.xi = spec.xi;
  p.inv_mass = cfg.inv_mass;
  p.beta = beta;
  p.eps_num = eps_num;
  p.horizon = cfg.horizon;
  return p;
}

RunRecord run_single(const ExperimentConfig& cfg, const OrderSpec& spec,
                     double beta, double eps_num, int repeat) {
  const auto start = std::chrono::steady_clock::now();
  const uint64_t seed = derive_run_seed(cfg.seed_base, spec, beta, eps_num,
                                        repeat);
  const HoldParams params = make_params(cfg, spec, beta, eps_num);
  params.validate();

  const DampingReport damping =
      critical_damping_diagnostic(build_drift(params));
  if (!damping.critically_damped)
    std::cerr << "warning: drift for n=" << spec.order
              << " is not critically damped\n";

  SpiralConfig spiral = cfg.spiral;
  spiral.seed = mix(seed, 1);
  const Eigen::MatrixXd dataset = generate_spiral(spiral);
  auto [members, holdouts] = split(dataset, cfg.member_fraction, mix(seed, 2));

  ScoreNetwork net(params.order, params.dim, cfg.depth, cfg.width,
                   mix(seed, 3));
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = mix(seed, 4);
  const TrainResult trained = train(net, params, members, train_cfg);
  const std::size_t tail =
      std::min<std::size_t>(100, trained.loss_trace.size());
  double final_loss = 0.0;
  for (std::size_t i = trained.loss_trace.size() - tail;
       i < trained.loss_trace.size(); ++i)
    final_loss += trained.loss_trace[i];
  final_loss /= static_cast<double>(tail);

  const ScoreFn score = make_score_fn(net, params.horizon);
  Rng attack_rng(mix(seed, 5));
  const AttackReport attack =
      run_pia(params, score, members, holdouts, cfg.attack, &attack_rng);

  Rng gen_rng(mix(seed, 6));
  const Eigen::MatrixXd samples =
      generate_batch(params, net, cfg.sampler, gen_rng, cfg.sample_count);

  RunRecord rec;
  rec.order = spec.order;
  rec.beta = beta;
  rec.eps_num = eps_num;
  rec.xi = spec.xi;
  rec.gammas = spec.gammas;
  rec.repeat = repeat;
  rec.seed = seed;
  rec.run_id = "n" + std::to_string(spec.order) + "_b" + format_double(beta) +
               "_e" + format_double(eps_num) + "_r" + std::to_string(repeat);
  rec.auroc = attack.auroc;
  for (int k = 1; k <= cfg.attack.n_time; ++k)
    rec.per_time_auroc.push_back(per_time_auroc(attack, k));
  rec.energy_distance = energy_distance(samples, holdouts);
  rec.final_loss = final_loss;
  rec.samples_csv = "samples_" + rec.run_id + ".csv";
  write_dataset_csv(samples, (fs::path(cfg.output_dir) / rec.samples_csv)
                                 .string());
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

std::string record_to_json(const RunRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["n"] = r.order;
  j["beta"] = r.beta;
  j["eps_num"] = r.eps_num;
  j["xi"] = r.xi;
  j["gammas"] = r.gammas;
  j["repeat"] = r.repeat;
  j["seed"] = r.seed;
  j["auroc"] = r.auroc;
  j["per_time_auroc"] = r.per_time_auroc;
  j["energy_distance"] = r.energy_distance;
  j["final_loss"] = r.final_loss;
  j["wall_seconds"] = r.wall_seconds;
  j["samples_csv"] = r.samples_csv;
  if (r.error) j["error"] = *r.error;
  return j.dump();
}

RunRecord record_from_json(const std::string& line) {
  json j = json::parse(line);
  RunRecord r;
  r.run_id = j.value("run_id", std::string());
  r.order = j.value("n", 0);
  r.beta = j.value("beta", 0.0);
  r.eps_num = j.value("eps_num", 0.0);
  r.xi = j.value("xi", 0.0);
  r.gammas = j.value("gammas", std::vector<double>{});
  r.repeat = j.value("repeat", 0);
  r.seed = j.value("seed", uint64_t{0});
  r.auroc = j.value("auroc", 0.0);
  r.per_time_auroc = j.value("per_time_auroc", std::vector<double>{});
  r.energy_distance = j.value("energy_distance", 0.0);
  r.final_loss = j.value("final_loss", 0.0);
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.samples_csv = j.value("samples_csv", std::string());
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  return r;
}

std::vector<RunRecord> read_records_ndjson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("records: cannot open " + path);
  std::vector<RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(line));
  }
  return records;
}

void write_summary_csv(const std::vector<RunRecord>& records,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("summary: cannot open " + path);
  out << "run_id,n,beta,eps_num,xi,repeat,seed,auroc,energy_distance,"
         "final_loss,wall_seconds\n";
  out.precision(17);
  for (const auto& r : records) {
    if (r.error) continue;
    out << r.run_id << "," << r.order << "," << r.beta << "," << r.eps_num
        << "," << r.xi << "," << r.repeat << "," << r.seed << "," << r.auroc
        << "," << r.energy_distance << "," << r.final_loss << ","
        << r.wall_seconds << "\n";
  }
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const std::string records_path =
      (fs::path(cfg.output_dir) / "records.ndjson").string();

  struct Task {
    OrderSpec spec;
    double beta, eps_num;
    int repeat;
  };
  std::vector<Task> tasks;
  for (const auto& spec : cfg.orders)
    for (double beta : cfg.betas)
      for (double eps_num : cfg.eps_nums) {
        // One privacy report per grid point; seed-independent.
        const HoldParams p = make_params(cfg, spec, beta, eps_num);
        std::vector<double> grid;
        for (int i = 0; i < 50; ++i)
          grid.push_back(i * cfg.horizon / 49.0);
        const PrivacyReport privacy = make_privacy_report(
            p, grid, /*delta2f=*/4.0, /*alpha=*/2.0);
        const std::string tag = "n" + std::to_string(spec.order) + "_b" +
                                format_double(beta) + "_e" +
                                format_double(eps_num);
        std::ofstream pj(fs::path(cfg.output_dir) /
                         ("privacy_" + tag + ".json"));
        pj << privacy_report_to_json(privacy) << "\n";
        for (int repeat = 0; repeat < cfg.repeats; ++repeat)
          tasks.push_back({spec, beta, eps_num, repeat});
      }

  std::ofstream records_out(records_path, std::ios::app);
  if (!records_out)
    throw std::runtime_error("run_experiment: cannot open " + records_path);

  std::vector<RunRecord> records;
  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      RunRecord rec;
      try {
        rec = run_single(cfg, task.spec, task.beta, task.eps_num, task.repeat);
      } catch (const std::exception& e) {
        rec.order = task.spec.order;
        rec.beta = task.beta;
        rec.eps_num = task.eps_num;
        rec.xi = task.spec.xi;
        rec.gammas = task.spec.gammas;
        rec.repeat = task.repeat;
        rec.run_id = "n" + std::to_string(task.spec.order) + "_b" +
                     format_double(task.beta) + "_e" +
                     format_double(task.eps_num) + "_r" +
                     std::to_string(task.repeat);
        rec.error = e.what();
      }
      std::lock_guard<std::mutex> lock(io_mutex);
      records_out << record_to_json(rec) << "\n";
      records_out.flush();
      if (!rec.error) records.push_back(rec);
    }
  };

  if (cfg.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < cfg.jobs; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  write_summary_csv(records,
                    (fs::path(cfg.output_dir) / "summary.csv").string());
  return records;
}

std::vector<CiRow> aggregate_ci(const std::vector<RunRecord>& records,
                                const std::vector<std::string>& group_keys) {
  for (const auto& key : group_keys)
    if (key != "n" && key != "beta" && key != "eps_num")
      throw std::invalid_argument("aggregate_ci: unknown group key " + key);

  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.error) continue;
    std::string label;
    for (const auto& key : group_keys) {
      if (!label.empty()) label += ",";
      if (key == "n")
        label += "n=" + std::to_string(r.order);
      else if (key == "beta")
        label += "beta=" + format_double(r.beta);
      else
        label += "eps_num=" + format_double(r.eps_num);
    }
    groups[label].push_back(r.auroc);
  }

  std::vector<CiRow> rows;
  for (const auto& [label, values] : groups) {
    CiRow row;
    row.group = label;
    row.count = static_cast<int>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    row.mean = mean;
    if (values.size() >= 2) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / (values.size() - 1));
      row.ci_halfwidth = 1.96 * sd / std::sqrt(double(values.size()));
      row.has_ci = true;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace holdpp
