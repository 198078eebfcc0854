#include "pamnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pamnet/checkpoint.hpp"
#include "pamnet/errors.hpp"

namespace pamnet {

namespace {

std::string num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

double mse(const Tensor<double>& y, const Tensor<double>& yhat) {
  require_same_shape(y.shape(), yhat.shape(), "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return s / double(y.size());
}

double mae(const Tensor<double>& y, const Tensor<double>& yhat) {
  return time_mae(y, yhat);
}

MetricValues score(const WindowBatch& test, const std::vector<Tensor<double>>& predictions,
                   std::optional<std::size_t> target_channel, const NormStats* raw_units) {
  if (test.size() != predictions.size()) throw DimensionError("score: one prediction per window required");
  if (test.empty()) throw DomainError("score: empty test set");
  double sq = 0.0, ab = 0.0, tsq = 0.0, tab = 0.0;
  std::size_t count = 0, tcount = 0;
  for (std::size_t w = 0; w < test.size(); ++w) {
    const auto& y = test.windows[w].y;
    const auto& p = predictions[w];
    require_same_shape(y.shape(), p.shape(), "score");
    for (std::size_t h = 0; h < y.dim(0); ++h) {
      for (std::size_t n = 0; n < y.dim(1); ++n) {
        double yv = y.at(h, n), pv = p.at(h, n);
        if (raw_units) {
          yv = raw_units->restore(yv, n);
          pv = raw_units->restore(pv, n);
        }
        const double d = yv - pv;
        sq += d * d;
        ab += std::abs(d);
        ++count;
        if (target_channel && *target_channel == n) {
          tsq += d * d;
          tab += std::abs(d);
          ++tcount;
        }
      }
    }
  }
  MetricValues m;
  m.mse = sq / double(count);
  m.mae = ab / double(count);
  if (target_channel) {
    if (tcount == 0) throw ConfigError("target channel index out of range");
    m.target_mse = tsq / double(tcount);
    m.target_mae = tab / double(tcount);
  }
  return m;
}

Evaluation evaluate(ModelParams<float>& params, const ModelConfig& config, const WindowBatch& test,
                    const std::vector<std::string>& channel_names, const std::optional<std::string>& target_channel,
                    const NormStats* raw_units) {
  std::optional<std::size_t> target;
  if (target_channel) {
    const auto it = std::find(channel_names.begin(), channel_names.end(), *target_channel);
    if (it == channel_names.end()) throw ConfigError("unknown target channel '" + *target_channel + "'");
    target = std::size_t(it - channel_names.begin());
  }
  std::vector<Tensor<float>> inputs;
  std::vector<std::size_t> taus;
  inputs.reserve(test.size());
  for (const auto& w : test.windows) {
    inputs.push_back(w.x.cast<float>());
    taus.push_back(w.tau_end);
  }
  Evaluation e;
  for (auto& p : predict(params, config, inputs, taus)) e.predictions.push_back(p.cast<double>());
  e.metrics = score(test, e.predictions, target, raw_units);
  return e;
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) throw DomainError("aggregate of no values");
  Aggregate a;
  double s = 0.0;
  for (double v : values) s += v;
  a.mean = s / double(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / double(values.size() - 1));
  }
  auto sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  a.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return a;
}

bool MetricReport::all_ok() const {
  return !seeds.empty() && completed() == seeds.size();
}

std::size_t MetricReport::completed() const {
  return std::size_t(std::count_if(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok; }));
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData d;
  SeriesFrame raw = cfg.source == DataSource::csv ? load_csv(cfg.csv_path) : synth_generate(cfg.synth);
  if (cfg.model.cycle_len > raw.steps()) throw ConfigError("cycle length exceeds the series length");
  d.ranges = split_chronological(raw.steps(), cfg.split, cfg.model.lookback, cfg.model.horizon);
  if (cfg.standardize) {
    auto [frame, stats] = standardize(raw, RowRange{0, d.ranges.train_end});
    d.frame = std::move(frame);
    d.stats = std::move(stats);
    d.standardized = true;
  } else {
    d.frame = std::move(raw);
  }
  if (cfg.target_channel && !d.frame.channel_index(*cfg.target_channel)) {
    throw ConfigError("unknown target channel '" + *cfg.target_channel + "'");
  }
  d.train = make_windows(d.frame, d.ranges.train, cfg.model.lookback, cfg.model.horizon);
  d.val = make_windows(d.frame, d.ranges.val, cfg.model.lookback, cfg.model.horizon);
  d.test = make_windows(d.frame, d.ranges.test, cfg.model.lookback, cfg.model.horizon);
  return d;
}

ModelConfig resolve_model_config(const ExperimentConfig& cfg, std::size_t channels) {
  ModelConfig model = cfg.model;
  LossConfig loss = cfg.loss;
  apply_ablation(model, loss, cfg.ablation);
  model.channels = channels;
  model.validate();
  return model;
}

LossConfig resolve_loss_config(const ExperimentConfig& cfg) {
  ModelConfig model = cfg.model;
  LossConfig loss = cfg.loss;
  apply_ablation(model, loss, cfg.ablation);
  loss.validate();
  return loss;
}

SeedResult run_seed(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed) {
  SeedResult r;
  r.seed = seed;
  try {
    const ModelConfig model = resolve_model_config(cfg, data.frame.width());
    const LossConfig loss = resolve_loss_config(cfg);
    Rng corrupt_rng(seed ^ 0xC022E7ULL);
    const WindowBatch train = corrupt(data.train, cfg.corruption, corrupt_rng);
    const WindowBatch val = corrupt(data.val, cfg.corruption, corrupt_rng);
    r.params = init_params<float>(model, seed);
    r.train = fit(r.params, model, train, val, loss, cfg.optim, seed);
    const NormStats* raw = (cfg.raw_units && data.standardized) ? &data.stats : nullptr;
    Evaluation e;
    if (cfg.corruption.apply_to_test) {
      const WindowBatch test = corrupt(data.test, cfg.corruption, corrupt_rng);
      e = evaluate(r.params, model, test, data.frame.channels, cfg.target_channel, raw);
    } else {
      e = evaluate(r.params, model, data.test, data.frame.channels, cfg.target_channel, raw);
    }
    r.metrics = e.metrics;
    r.predictions = std::move(e.predictions);
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::size_t run_parallelism() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PAMNET_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::size_t(v);
  }
  return n;
}

namespace {

void finalize(MetricReport& report) {
  std::vector<double> mse_v, mae_v, tmse, tmae;
  for (const auto& s : report.seeds) {
    if (!s.ok) continue;
    mse_v.push_back(s.metrics.mse);
    mae_v.push_back(s.metrics.mae);
    if (s.metrics.target_mse) tmse.push_back(*s.metrics.target_mse);
    if (s.metrics.target_mae) tmae.push_back(*s.metrics.target_mae);
  }
  if (!mse_v.empty()) {
    report.mse = aggregate(mse_v);
    report.mae = aggregate(mae_v);
  }
  if (!tmse.empty()) {
    report.target_mse = aggregate(tmse);
    report.target_mae = aggregate(tmae);
  }
}

}  // namespace

std::vector<MetricReport> run_experiments(const std::vector<ExperimentConfig>& cfgs) {
  std::vector<MetricReport> reports(cfgs.size());
  std::vector<std::optional<PreparedData>> data(cfgs.size());
  std::vector<std::string> data_errors(cfgs.size());
  struct Task {
    std::size_t cfg;
    std::size_t slot;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    reports[i].ablation = cfgs[i].ablation;
    reports[i].horizon = cfgs[i].model.horizon;
    reports[i].seeds.resize(cfgs[i].seeds.size());
    try {
      data[i] = prepare_data(cfgs[i]);
    } catch (const std::exception& e) {
      data_errors[i] = e.what();
    }
    for (std::size_t s = 0; s < cfgs[i].seeds.size(); ++s) {
      reports[i].seeds[s].seed = cfgs[i].seeds[s];
      if (data[i]) tasks.push_back({i, s});
      else reports[i].seeds[s].error = data_errors[i];
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& t = tasks[k];
      reports[t.cfg].seeds[t.slot] = run_seed(cfgs[t.cfg], *data[t.cfg], cfgs[t.cfg].seeds[t.slot]);
    }
  };
  const std::size_t threads = std::min(run_parallelism(), tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    finalize(reports[i]);
    if (!cfgs[i].output_dir.empty() && data[i]) write_artifacts(cfgs[i], reports[i], *data[i]);
  }
  return reports;
}

MetricReport run_experiment(const ExperimentConfig& cfg) {
  return run_experiments({cfg}).front();
}

std::string metrics_json(const MetricReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["ablation"] = report.ablation;
  j["horizon"] = report.horizon;
  ordered_json seeds = ordered_json::array();
  for (const auto& s : report.seeds) {
    ordered_json row;
    row["seed"] = s.seed;
    row["ok"] = s.ok;
    if (!s.ok) {
      row["error"] = s.error;
    } else {
      row["mse"] = s.metrics.mse;
      row["mae"] = s.metrics.mae;
      if (s.metrics.target_mse) {
        row["target_mse"] = *s.metrics.target_mse;
        row["target_mae"] = *s.metrics.target_mae;
      }
      row["best_epoch"] = s.train.best_epoch;
      row["epochs_run"] = s.train.val_loss.size();
      row["best_val_loss"] = s.train.best_val_loss;
      row["stopped_early"] = s.train.stopped_early;
    }
    seeds.push_back(std::move(row));
  }
  j["seeds"] = std::move(seeds);
  ordered_json agg = ordered_json::object();
  auto put = [&agg](const char* name, const std::optional<Aggregate>& a) {
    if (!a) return;
    ordered_json o;
    o["mean"] = a->mean;
    o["std"] = a->stddev ? ordered_json(*a->stddev) : ordered_json(nullptr);
    o["median"] = a->median;
    agg[name] = std::move(o);
  };
  put("mse", report.mse);
  put("mae", report.mae);
  put("target_mse", report.target_mse);
  put("target_mae", report.target_mae);
  j["aggregate"] = std::move(agg);
  return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_carriers(const std::filesystem::path& path, const Tensor<float>& table, char prefix) {
  SeriesFrame f;
  for (std::size_t j = 0; j < table.dim(1); ++j) f.channels.push_back(std::string(1, prefix) + std::to_string(j));
  f.values = table.cast<double>();
  save_csv(f, path);
}

}  // namespace

void write_artifacts(const ExperimentConfig& cfg, const MetricReport& report, const PreparedData& data) {
  namespace fs = std::filesystem;
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);
  write_text(root / "metrics.json", metrics_json(report));
  write_text(root / "config.txt", dump_config(cfg));
  const NormStats* raw = (cfg.raw_units && data.standardized) ? &data.stats : nullptr;
  for (const auto& s : report.seeds) {
    if (!s.ok) continue;
    const std::string tag = std::to_string(s.seed);
    {
      std::ostringstream os;
      os << "window,step,channel,y,yhat\n";
      for (std::size_t w = 0; w < s.predictions.size(); ++w) {
        const auto& y = data.test.windows[w].y;
        const auto& p = s.predictions[w];
        for (std::size_t h = 0; h < y.dim(0); ++h) {
          for (std::size_t n = 0; n < y.dim(1); ++n) {
            double yv = y.at(h, n), pv = p.at(h, n);
            if (raw) {
              yv = raw->restore(yv, n);
              pv = raw->restore(pv, n);
            }
            os << w << ',' << h << ',' << n << ',' << num(yv) << ',' << num(pv) << '\n';
          }
        }
      }
      write_text(root / ("predictions_" + tag + ".csv"), os.str());
    }
    {
      std::ostringstream os;
      os << "epoch,train_loss,val_loss,wall_seconds\n";
      for (std::size_t e = 0; e < s.train.val_loss.size(); ++e) {
        os << (e + 1) << ',' << num(s.train.train_loss[e]) << ',' << num(s.train.val_loss[e]) << ','
           << num(s.train.wall_seconds) << '\n';
      }
      write_text(root / ("train_report_" + tag + ".csv"), os.str());
    }
    const fs::path seed_dir = root / ("seed_" + tag);
    fs::create_directories(seed_dir);
    const ModelConfig model = resolve_model_config(cfg, data.frame.width());
    save_checkpoint(seed_dir / "checkpoint.bin", s.params, model,
                    CheckpointMeta{s.seed, std::uint32_t(s.train.best_epoch)});
    if (parameter_is_active("carrier.phase", model)) {
      write_carriers(seed_dir / "carriers_phase.csv", s.params.carriers.phase.value, 'p');
    }
    if (parameter_is_active("carrier.amplitude", model)) {
      write_carriers(seed_dir / "carriers_amplitude.csv", s.params.carriers.amplitude.value, 'a');
    }
  }
}

std::string ablation_table_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "tag,seeds_ok,mse_mean,mse_std,mse_median,mae_mean,mae_std,mae_median\n";
  auto cell = [](const std::optional<Aggregate>& a, int which) -> std::string {
    if (!a) return "";
    if (which == 0) return num(a->mean);
    if (which == 1) return a->stddev ? num(*a->stddev) : "";
    return num(a->median);
  };
  for (const auto& r : reports) {
    os << r.ablation << ',' << r.completed();
    for (int k = 0; k < 3; ++k) os << ',' << cell(r.mse, k);
    for (int k = 0; k < 3; ++k) os << ',' << cell(r.mae, k);
    os << '\n';
  }
  return os.str();
}

}  // namespace pamnet
