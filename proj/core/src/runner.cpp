#include "abrlab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "abrlab/checkpoint.hpp"
#include "abrlab/eval.hpp"
#include "abrlab/stats.hpp"
#include "abrlab/theory.hpp"

namespace abrlab {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::filesystem::path prepare_dir(const RunConfig& config) {
  const std::filesystem::path dir =
      config.out_dir.empty() ? default_out_dir(config) : config.out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

void write_manifest(const RunConfig& config, const std::filesystem::path& dir) {
  write_text(dir / "manifest.json", to_manifest_json(config));
}

json interval_json(const TInterval& t) {
  return json{{"mean", t.mean}, {"half_width", t.half_width}};
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> CsvTable::col(const std::string& name) const {
  const int idx = column(name);
  if (idx < 0) throw SchemaMismatch("missing csv column: " + name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[static_cast<std::size_t>(idx)]);
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (table.schema.empty()) {
        const auto start = line.find_first_not_of(" \t", 1);
        if (start != std::string::npos) table.schema = line.substr(start);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      table.header = cells;
      have_header = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

// Whole-run aggregates consumed by summary.json and `compare`.
json train_summary_metrics(const RunConfig& config, const TrainResult& result) {
  std::vector<double> episode_qoe;
  for (const MetricsRecord& rec : result.metrics) {
    for (const EpisodeSummary& e : rec.episode_list) episode_qoe.push_back(e.qoe_total);
  }
  std::vector<double> dormant, iter_axis;
  for (const MetricsRecord& rec : result.metrics) {
    dormant.push_back(rec.dormant_ratio);
    iter_axis.push_back(static_cast<double>(rec.iteration));
  }
  const std::size_t n_iters = result.metrics.size();
  const std::size_t q3 = n_iters - n_iters / 4;  // final quarter start
  double dormant_final_quarter = 0.0;
  for (std::size_t i = q3; i < n_iters; ++i) dormant_final_quarter += dormant[i];
  dormant_final_quarter /= static_cast<double>(n_iters - q3);
  const std::size_t half = n_iters / 2;
  const double dormant_slope_final_half =
      n_iters - half >= 2
          ? ls_slope(std::span<const double>(iter_axis).subspan(half),
                     std::span<const double>(dormant).subspan(half))
          : 0.0;

  json m;
  m["episodes"] = episode_qoe.size();
  m["episode_qoe_mean"] = episode_qoe.empty() ? 0.0 : mean_of(episode_qoe);
  m["episode_qoe_iqm"] = episode_qoe.size() >= 4 ? iqm(episode_qoe)
                                                 : m["episode_qoe_mean"].get<double>();
  m["dormant_ratio_final_quarter"] = dormant_final_quarter;
  m["dormant_slope_final_half"] = dormant_slope_final_half;
  m["final_weight_mean_abs"] = result.metrics.back().weight_mean_abs;
  m["variant"] = to_string(config.agent.variant);
  m["seed"] = config.seed;
  return m;
}

}  // namespace

void write_train_artifacts(const RunConfig& config, const TrainResult& result,
                           const std::filesystem::path& dir) {
  const int n_experts = config.agent.n_experts;
  {
    std::ostringstream os;
    os << "# abrlab.metrics.v1\n";
    os << "iteration,env_steps,regime,episodes,ep_qoe_mean,ep_bitrate_mean,ep_smooth_mean,"
          "ep_rebuffer_mean,mean_action,mean_reward,policy_loss,value_loss,entropy,clip_frac";
    for (int e = 0; e < n_experts; ++e) os << ",actor_freq_" << e;
    for (int e = 0; e < n_experts; ++e) os << ",critic_freq_" << e;
    os << ",dormant_ratio,batch_rank_mean,eff_rank_mean,approx_rank_mean,weight_mean_abs\n";
    for (const MetricsRecord& r : result.metrics) {
      os << r.iteration << "," << r.env_steps << "," << r.regime << "," << r.episodes << ","
         << fmt(r.ep_qoe_mean) << "," << fmt(r.ep_bitrate_mean) << "," << fmt(r.ep_smooth_mean)
         << "," << fmt(r.ep_rebuffer_mean) << "," << fmt(r.mean_action) << ","
         << fmt(r.mean_reward) << "," << fmt(r.policy_loss) << "," << fmt(r.value_loss) << ","
         << fmt(r.entropy) << "," << fmt(r.clip_frac);
      for (double f : r.actor_freq) os << "," << fmt(f);
      for (double f : r.critic_freq) os << "," << fmt(f);
      os << "," << fmt(r.dormant_ratio) << "," << fmt(r.batch_rank_mean) << ","
         << fmt(r.eff_rank_mean) << "," << fmt(r.approx_rank_mean) << ","
         << fmt(r.weight_mean_abs) << "\n";
    }
    write_text(dir / "metrics.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "# abrlab.plasticity.v1\n";
    os << "iteration,network,expert,layer,dormant_ratio,rank,eff_rank,approx_rank,"
          "weight_mean_abs\n";
    for (const MetricsRecord& r : result.metrics) {
      for (const PlasticityRow& row : r.layers) {
        os << r.iteration << "," << row.network << "," << row.expert << "," << row.layer << ","
           << fmt(row.dormant) << "," << row.rank << "," << fmt(row.eff_rank) << ","
           << row.approx_rank << "," << fmt(row.weight_mean_abs) << "\n";
      }
    }
    write_text(dir / "plasticity.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "# abrlab.episodes.v1\n";
    os << "iteration,regime,chunks,qoe_total,bitrate_mean,smooth_mean,rebuffer_mean\n";
    for (const MetricsRecord& r : result.metrics) {
      for (const EpisodeSummary& e : r.episode_list) {
        os << r.iteration << "," << e.regime << "," << e.chunks << "," << fmt(e.qoe_total)
           << "," << fmt(e.bitrate_sum / e.chunks) << "," << fmt(e.smooth_sum / e.chunks)
           << "," << fmt(e.rebuffer_sum / e.chunks) << "\n";
      }
    }
    write_text(dir / "episodes.csv", os.str());
  }
  {
    json s;
    s["schema"] = "abrlab.train-summary.v1";
    s["config_hash"] = config_hash(config);
    s["metrics"] = train_summary_metrics(config, result);
    write_text(dir / "summary.json", s.dump(2) + "\n");
  }
}

int run_train(const RunConfig& base) {
  std::vector<std::uint64_t> seeds = base.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);
  for (std::uint64_t seed : seeds) {
    RunConfig config = base;
    config.seed = seed;
    config.seeds.clear();
    if (seeds.size() > 1 || config.out_dir.empty()) {
      config.out_dir = base.out_dir.empty()
                           ? default_out_dir(config)
                           : base.out_dir + (seeds.size() > 1 ? "-s" + std::to_string(seed) : "");
    }
    config.validate();
    const auto dir = prepare_dir(config);
    write_manifest(config, dir);

    TrainInputs inputs = make_train_inputs(config);
    inputs.checkpoint_hook = [&dir](int iteration, const ParamSet& params) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_%04d.bin", iteration);
      save_checkpoint(params, dir / name);
    };
    const TrainResult result = train(inputs);
    write_train_artifacts(config, result, dir);
    std::cout << "train: wrote " << dir.string() << " ("
              << result.metrics.size() << " iterations)\n";
  }
  return kExitOk;
}

int run_eval(const RunConfig& base) {
  RunConfig config = base;
  config.validate();
  const auto dir = prepare_dir(config);
  write_manifest(config, dir);

  const VideoSpec video = make_video(config.env);
  const TraceSet traces = load_or_synth_traces(config.env);
  const auto& split = config.protocol.split == "train" ? traces.train : traces.test;
  const QoEWeights weights{config.env.mu1, config.env.mu2, config.env.mu3};

  EvalProtocol protocol;
  protocol.episodes = config.protocol.episodes;
  protocol.split = config.protocol.split == "train" ? Split::train : Split::test;
  protocol.deterministic_policy = config.protocol.deterministic_policy;
  protocol.cdf_bins = config.protocol.cdf_bins;
  protocol.seed = config.seed;

  std::unique_ptr<Controller> controller;
  ParamSet params;
  MoEConfig moe = config.agent;
  moe.obs_dim = kObsDim;
  moe.n_actions = static_cast<int>(config.env.bitrates_kbps.size());
  if (!config.baseline.empty()) {
    BaselineConfig bc;
    bc.kind = baseline_from_string(config.baseline);
    switch (bc.kind) {
      case BaselineKind::BufferBased:
        controller = std::make_unique<BufferBasedController>(bc);
        break;
      case BaselineKind::RateBased:
        controller = std::make_unique<RateBasedController>(bc);
        break;
      case BaselineKind::RobustMPC:
        controller = std::make_unique<RobustMPCController>(bc);
        break;
    }
  } else {
    if (config.checkpoint.empty()) {
      throw ConfigInvalid("checkpoint", "eval needs --checkpoint or --baseline");
    }
    params = load_checkpoint(config.checkpoint);
    controller = std::make_unique<PolicyController>(params, moe,
                                                    config.protocol.deterministic_policy,
                                                    config.seed);
  }

  const auto records =
      evaluate(*controller, protocol, split, video, weights, make_env_config(config.env));

  {
    std::ostringstream os;
    os << "# abrlab.eval.v1\n";
    os << "episode,trace_id,chunks,qoe_mean,qoe_total,bitrate_mbps,rebuffer_s,smooth_mbps\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      const EpisodeRecord& r = records[i];
      os << i << "," << r.trace_id << "," << r.chunks << "," << fmt(r.qoe_mean) << ","
         << fmt(r.qoe_total) << "," << fmt(r.bitrate_mbps) << "," << fmt(r.rebuffer_s) << ","
         << fmt(r.smooth_mbps) << "\n";
    }
    write_text(dir / "eval.csv", os.str());
  }
  {
    std::vector<double> qoe;
    qoe.reserve(records.size());
    for (const auto& r : records) qoe.push_back(r.qoe_mean);
    const auto cdf = empirical_cdf(qoe, config.protocol.cdf_bins);
    std::ostringstream os;
    os << "# abrlab.cdf.v1\n";
    os << "bin_right_edge,cdf\n";
    for (const auto& [x, f] : cdf) os << fmt(x) << "," << fmt(f) << "\n";
    write_text(dir / "cdf.csv", os.str());
  }
  {
    const EvalSummary s = summarize(records);
    json j;
    j["schema"] = "abrlab.eval-summary.v1";
    j["config_hash"] = config_hash(config);
    j["controller"] = controller->name();
    j["metrics"] = {{"qoe_mean", s.qoe_mean},
                    {"qoe_iqm", s.qoe_iqm},
                    {"qoe_interval", interval_json(s.qoe_interval)},
                    {"bitrate_mean", s.bitrate_mean},
                    {"bitrate_interval", interval_json(s.bitrate_interval)},
                    {"rebuffer_mean", s.rebuffer_mean},
                    {"rebuffer_interval", interval_json(s.rebuffer_interval)},
                    {"smooth_mean", s.smooth_mean},
                    {"smooth_interval", interval_json(s.smooth_interval)}};
    write_text(dir / "summary.json", j.dump(2) + "\n");
  }
  std::cout << "eval: wrote " << dir.string() << " (" << records.size() << " episodes)\n";
  return kExitOk;
}

namespace {

struct TheoryOutcome {
  bool all_pass = true;
  json summary;
  std::string csv;
};

int gamma_argmin(const std::vector<std::pair<double, double>>& sweep) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(sweep.size()); ++i) {
    if (sweep[static_cast<std::size_t>(i)].second < sweep[static_cast<std::size_t>(best)].second) {
      best = i;
    }
  }
  return best;
}

TheoryOutcome run_theory_default(std::uint64_t seed) {
  TheoryOutcome out;
  std::ostringstream csv;
  csv << "# abrlab.theory.v1\n";
  csv << "check,drift,eta,gamma,measured,bound_term,fitted_c,pass\n";

  constexpr int kDim = 10;
  constexpr double kMu = 1.0, kL = 10.0;
  constexpr long kHorizon = 2000;
  constexpr int kRepeats = 32;
  constexpr double kPath = 5.0;

  const DriftingQuadratic quad(kDim, kMu, kL, DriftKind::linear, kPath, kHorizon, seed);

  RngStream lemma_rng(seed, "lemma_trials");
  const double coco = check_cocoercivity(quad, 10000, lemma_rng);
  const double strong = check_strong_convexity(quad, 10000, lemma_rng);
  const double norm_ineq = check_norm_inequality(100000, lemma_rng);
  const double lemma_tol = 1e-9;
  const bool lemmas_pass = coco <= lemma_tol && strong <= lemma_tol && norm_ineq <= lemma_tol;
  out.all_pass = out.all_pass && lemmas_pass;
  out.summary["lemmas"] = {{"cocoercivity_max_violation", coco},
                           {"strong_convexity_max_violation", strong},
                           {"norm_inequality_max_violation", norm_ineq},
                           {"tolerance", lemma_tol},
                           {"pass", lemmas_pass}};
  csv << "lemma_cocoercivity,-,-,-," << fmt(coco) << ",-,-," << (coco <= lemma_tol) << "\n";
  csv << "lemma_strong_convexity,-,-,-," << fmt(strong) << ",-,-," << (strong <= lemma_tol)
      << "\n";
  csv << "norm_inequality,-,-,-," << fmt(norm_ineq) << ",-,-," << (norm_ineq <= lemma_tol)
      << "\n";

  // Tracking bound: calibrate C on a coarse grid spanning the test hull,
  // then require the bound on the interior 4x4 grid, per drift schedule.
  const std::vector<double> cal_etas = {0.01, 0.05, 0.1};
  const std::vector<double> cal_gammas = {0.0, 0.2, 0.5};
  const std::vector<double> test_etas = {0.02, 0.04, 0.06, 0.08};
  const std::vector<double> test_gammas = {0.05, 0.1, 0.3, 0.4};
  json bound_json = json::array();
  for (DriftKind kind : {DriftKind::linear, DriftKind::jump, DriftKind::sinusoid}) {
    const DriftingQuadratic objective(kDim, kMu, kL, kind, kPath, kHorizon, seed);
    const BoundCheck check = calibrate_and_test(objective, to_string(kind), cal_etas,
                                                cal_gammas, test_etas, test_gammas, kHorizon,
                                                kRepeats, seed);
    out.all_pass = out.all_pass && check.all_pass;
    bound_json.push_back({{"drift", to_string(kind)},
                          {"fitted_c", check.fitted_c},
                          {"pass", check.all_pass}});
    for (const BoundCell& cell : check.cells) {
      csv << (cell.calibration ? "bound_calibration," : "bound_test,") << cell.drift << ","
          << fmt(cell.eta) << "," << fmt(cell.gamma) << "," << fmt(cell.measured) << ","
          << fmt(cell.bound_term) << "," << fmt(check.fitted_c) << "," << cell.pass << "\n";
    }
  }
  out.summary["bound"] = bound_json;

  // Noise-gain trade-off on the plateau scenario (see theory.hpp).
  {
    const PlateauDrift plateau(4, 1.0, 0.3, 400);
    const std::vector<double> gammas = {0.0, 0.05, 0.15, 0.4, 1.0, 4.0, 16.0};
    const auto sweep = sweep_gamma(plateau, 0.1, gammas, 3200, 48, seed);
    const int best = gamma_argmin(sweep);
    const bool interior = best > 0 && best + 1 < static_cast<int>(sweep.size());
    out.all_pass = out.all_pass && interior;
    json arr = json::array();
    for (const auto& [g, err] : sweep) {
      arr.push_back({{"gamma", g}, {"avg_sq_error", err}});
      csv << "gamma_sweep,plateau,0.1," << fmt(g) << "," << fmt(err) << ",-,-,-\n";
    }
    out.summary["gamma_sweep"] = {{"cells", arr},
                                  {"argmin_gamma", sweep[static_cast<std::size_t>(best)].first},
                                  {"interior_minimum", interior}};
  }

  // Step-size trade-off on the drifting quadratic.
  {
    const DriftingQuadratic objective(kDim, kMu, kL, DriftKind::linear, kPath, kHorizon, seed);
    const std::vector<double> etas = {0.005, 0.01, 0.025, 0.05, 0.1};
    const auto sweep = sweep_eta(objective, etas, 0.3, kHorizon, kRepeats, seed);
    int best = 0;
    for (int i = 1; i < static_cast<int>(sweep.size()); ++i) {
      if (sweep[static_cast<std::size_t>(i)].second <
          sweep[static_cast<std::size_t>(best)].second) {
        best = i;
      }
    }
    const bool interior = best > 0 && best + 1 < static_cast<int>(sweep.size());
    out.all_pass = out.all_pass && interior;
    json arr = json::array();
    for (const auto& [e, err] : sweep) {
      arr.push_back({{"eta", e}, {"avg_sq_error", err}});
      csv << "eta_sweep,linear," << fmt(e) << ",0.3," << fmt(err) << ",-,-,-\n";
    }
    out.summary["eta_sweep"] = {{"cells", arr},
                                {"argmin_eta", sweep[static_cast<std::size_t>(best)].first},
                                {"interior_minimum", interior}};
  }

  out.csv = csv.str();
  return out;
}

}  // namespace

int run_theory(const RunConfig& base) {
  RunConfig config = base;
  config.validate();
  if (config.theory_grid != "default") {
    throw ConfigInvalid("theory_grid", "only the 'default' grid is defined");
  }
  const auto dir = prepare_dir(config);
  write_manifest(config, dir);
  TheoryOutcome out = run_theory_default(config.seed);
  write_text(dir / "theory.csv", out.csv);
  json j;
  j["schema"] = "abrlab.theory-summary.v1";
  j["config_hash"] = config_hash(config);
  j["all_pass"] = out.all_pass;
  j["results"] = out.summary;
  write_text(dir / "summary.json", j.dump(2) + "\n");
  std::cout << "theory: wrote " << dir.string() << " all_pass=" << out.all_pass << "\n";
  return out.all_pass ? kExitOk : kExitCheckFailed;
}

namespace {

int run_rl_sweep(const RunConfig& base, const std::string& param,
                 const std::vector<double>& values) {
  RunConfig config = base;
  config.validate();
  const auto dir = prepare_dir(config);
  write_manifest(config, dir);
  std::vector<std::uint64_t> seeds = config.seeds;
  if (seeds.empty()) seeds.push_back(config.seed);

  std::ostringstream csv;
  csv << "# abrlab.sweep.v1\n";
  csv << param << ",seed,episode_qoe_iqm,episode_qoe_mean\n";
  json cells = json::array();
  for (double value : values) {
    std::vector<double> iqms;
    for (std::uint64_t seed : seeds) {
      RunConfig rc = config;
      rc.command = "train";
      rc.seed = seed;
      rc.seeds.clear();
      if (param == "gamma") {
        rc.agent.plasticity_gamma = value;
        rc.agent.variant = MoEVariant::PA_MoE;
      } else {
        rc.ppo.lr = value;
      }
      TrainInputs inputs = make_train_inputs(rc);
      const TrainResult result = train(inputs);
      std::vector<double> qoe;
      for (const MetricsRecord& r : result.metrics) {
        for (const EpisodeSummary& e : r.episode_list) qoe.push_back(e.qoe_total);
      }
      const double run_iqm = qoe.size() >= 4 ? iqm(qoe) : mean_of(qoe);
      iqms.push_back(run_iqm);
      csv << fmt(value) << "," << seed << "," << fmt(run_iqm) << "," << fmt(mean_of(qoe))
          << "\n";
    }
    json cell;
    cell[param] = value;
    cell["iqm_mean"] = mean_of(iqms);
    if (iqms.size() >= 2) cell["iqm_interval"] = interval_json(t_interval(iqms));
    cells.push_back(cell);
    std::cout << "sweep " << param << "=" << value << " iqm_mean=" << mean_of(iqms) << "\n";
  }
  write_text(dir / ("sweep_" + param + ".csv"), csv.str());
  json j;
  j["schema"] = "abrlab.sweep-summary.v1";
  j["param"] = param;
  j["cells"] = cells;
  write_text(dir / "summary.json", j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_sweep_gamma(const RunConfig& config) {
  return run_rl_sweep(config, "gamma", config.sweep_gammas);
}

int run_sweep_lr(const RunConfig& config) {
  return run_rl_sweep(config, "lr", config.sweep_lrs);
}

int run_traces_validate(const RunConfig& config) {
  const std::string dir =
      config.traces_validate_dir.empty() ? config.env.traces_dir : config.traces_validate_dir;
  if (dir.empty()) throw ConfigInvalid("traces_validate_dir", "no directory given");
  int errors = 0;
  for (const char* split : {"train", "test"}) {
    const std::filesystem::path split_dir = std::filesystem::path(dir) / split;
    if (!std::filesystem::is_directory(split_dir)) {
      std::cout << "missing split directory: " << split_dir.string() << "\n";
      ++errors;
      continue;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(split_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".log") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        const Trace t = parse_trace_file(f);
        std::cout << "ok " << f.string() << " (" << t.points.size() << " points, "
                  << t.duration_s() << " s)\n";
      } catch (const TraceError& e) {
        std::cout << "error " << e.what() << "\n";
        ++errors;
      }
    }
  }
  std::cout << (errors == 0 ? "all traces valid\n" : "trace errors: " + std::to_string(errors) + "\n");
  return errors == 0 ? kExitOk : kExitConfig;
}

int run_compare(const std::vector<std::string>& run_dirs, const std::string& metric) {
  if (run_dirs.size() < 2) throw ConfigInvalid("compare", "need at least 2 run directories");
  struct Entry {
    std::string variant;
    double value;
  };
  std::vector<Entry> entries;
  for (const std::string& dir : run_dirs) {
    std::ifstream in(std::filesystem::path(dir) / "summary.json");
    if (!in) throw std::runtime_error("missing summary.json in " + dir);
    json j;
    in >> j;
    if (!j.contains("metrics") || !j["metrics"].contains(metric)) {
      throw SchemaMismatch("metric '" + metric + "' not present in " + dir);
    }
    Entry e;
    e.value = j["metrics"][metric].get<double>();
    e.variant = j["metrics"].value("variant", dir);
    entries.push_back(e);
  }
  // Group by variant.
  std::map<std::string, std::vector<double>> groups;
  for (const Entry& e : entries) groups[e.variant].push_back(e.value);

  std::printf("%-12s %8s %14s %14s %14s\n", "variant", "runs", "mean", "iqm", "t95_half");
  std::vector<std::pair<std::string, double>> means;
  for (const auto& [variant, values] : groups) {
    const double m = mean_of(values);
    const double q = values.size() >= 4 ? iqm(values) : m;
    const double hw = values.size() >= 2 ? t_interval(values).half_width : 0.0;
    std::printf("%-12s %8zu %14.6g %14.6g %14.6g\n", variant.c_str(), values.size(), m, q, hw);
    means.emplace_back(variant, m);
  }
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t k = 0; k < means.size(); ++k) {
      if (i == k) continue;
      const double rel = means[k].second != 0.0
                             ? (means[i].second - means[k].second) / std::abs(means[k].second)
                             : 0.0;
      std::printf("%s vs %s: %+.2f%%\n", means[i].first.c_str(), means[k].first.c_str(),
                  100.0 * rel);
    }
  }
  return kExitOk;
}

int run_from_manifest(const std::filesystem::path& manifest_path,
                      const std::string& out_dir_override) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig config = from_manifest_json(ss.str());
  if (!out_dir_override.empty()) config.out_dir = out_dir_override;
  return dispatch(config);
}

int dispatch(const RunConfig& config) {
  if (config.command == "train") return run_train(config);
  if (config.command == "eval") return run_eval(config);
  if (config.command == "theory") return run_theory(config);
  if (config.command == "sweep-gamma") return run_sweep_gamma(config);
  if (config.command == "sweep-lr") return run_sweep_lr(config);
  if (config.command == "traces-validate") return run_traces_validate(config);
  throw ConfigInvalid("command", "unknown command '" + config.command + "'");
}

}  // namespace abrlab
