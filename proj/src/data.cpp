#include "pamnet/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pamnet/errors.hpp"

namespace pamnet {

std::optional<std::size_t> SeriesFrame::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == name) return i;
  return std::nullopt;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_date_header(std::string name) {
  for (auto& ch : name) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  return name == "date";
}

}  // namespace

SeriesFrame load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path.string() + ": missing header row");
  auto header = split_line(line);
  for (auto& h : header) h = trim(h);
  const std::size_t skip = (!header.empty() && is_date_header(header[0])) ? 1 : 0;
  if (header.size() <= skip) throw LoadError(path.string() + ": no value columns");

  SeriesFrame frame;
  frame.channels.assign(header.begin() + std::ptrdiff_t(skip), header.end());
  frame.origin = path.string();
  const std::size_t n = frame.channels.size();
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw LoadError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()));
    }
    for (std::size_t col = skip; col < cells.size(); ++col) {
      const std::string cell = trim(cells[col]);
      double v = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw LoadError(path.string() + ": bad value '" + cell + "' at (row " + std::to_string(row) +
                        ", column " + std::to_string(col + 1) + ")");
      }
      values.push_back(v);
    }
  }
  if (row == 0) throw LoadError(path.string() + ": no data rows");
  frame.values = Tensor<double>({row, n}, std::move(values));
  return frame;
}

void save_csv(const SeriesFrame& frame, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  for (std::size_t j = 0; j < frame.channels.size(); ++j) out << (j ? "," : "") << frame.channels[j];
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < frame.steps(); ++t) {
    for (std::size_t j = 0; j < frame.width(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, frame.values.at(t, j));
      (void)ec;
      if (j) out << ',';
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void SplitSpec::validate() const {
  if (steps) return;
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ConfigError("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

SplitRanges split_chronological(std::size_t steps, const SplitSpec& spec, std::size_t lookback,
                                std::size_t horizon) {
  spec.validate();
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  if (spec.steps) {
    const auto& s = *spec.steps;
    if (s[0] + s[1] + s[2] > steps) {
      throw ConfigError("explicit split counts exceed the series length " + std::to_string(steps));
    }
    n_train = s[0];
    n_val = s[1];
    n_test = s[2];
  } else {
    // Small slack so that e.g. 100 * 0.7 lands on 70 rather than 69.
    n_train = std::size_t(std::floor(double(steps) * spec.fractions[0] + 1e-9));
    n_val = std::size_t(std::floor(double(steps) * spec.fractions[1] + 1e-9));
    n_test = steps - n_train - n_val;
  }
  SplitRanges r;
  r.train_end = n_train;
  r.val_end = n_train + n_val;
  if (n_train < lookback + horizon) {
    throw ConfigError("train split has " + std::to_string(n_train) + " rows, needs at least L+H = " +
                      std::to_string(lookback + horizon));
  }
  if (n_val < horizon) throw ConfigError("validation split yields no windows (" + std::to_string(n_val) + " rows)");
  if (n_test < horizon) throw ConfigError("test split yields no windows (" + std::to_string(n_test) + " rows)");
  r.train = {0, n_train};
  r.val = {r.train_end - lookback, r.val_end};
  r.test = {r.val_end - lookback, r.val_end + n_test};
  return r;
}

std::pair<SeriesFrame, NormStats> standardize(const SeriesFrame& frame, RowRange train) {
  if (train.end <= train.begin || train.end > frame.steps()) throw ConfigError("standardize: empty train range");
  const std::size_t n = frame.width();
  NormStats stats;
  stats.mean.assign(n, 0.0);
  stats.stddev.assign(n, 0.0);
  const double count = double(train.end - train.begin);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t t = train.begin; t < train.end; ++t) s += frame.values.at(t, j);
    const double mu = s / count;
    double v = 0.0;
    for (std::size_t t = train.begin; t < train.end; ++t) {
      const double d = frame.values.at(t, j) - mu;
      v += d * d;
    }
    const double sd = std::sqrt(v / count);
    if (!(sd > 0.0)) throw ConfigError("channel '" + frame.channels[j] + "' has zero variance on the train split");
    stats.mean[j] = mu;
    stats.stddev[j] = sd;
  }
  SeriesFrame out = frame;
  for (std::size_t t = 0; t < frame.steps(); ++t)
    for (std::size_t j = 0; j < n; ++j) out.values.at(t, j) = (frame.values.at(t, j) - stats.mean[j]) / stats.stddev[j];
  return {std::move(out), std::move(stats)};
}

WindowBatch make_windows(const SeriesFrame& frame, RowRange range, std::size_t lookback, std::size_t horizon,
                         std::size_t stride) {
  if (stride == 0) throw WindowError("stride must be >= 1");
  if (range.end > frame.steps() || range.begin > range.end) {
    throw WindowError("row range [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                      ") exceeds series of " + std::to_string(frame.steps()) + " rows");
  }
  const std::size_t need = lookback + horizon;
  const std::size_t have = range.end - range.begin;
  if (have < need) {
    throw WindowError("window needs " + std::to_string(need) + " rows (L+H), range has " + std::to_string(have));
  }
  const std::size_t n = frame.width();
  WindowBatch batch;
  // Anchored on the last window so the final target ends on range.end.
  std::vector<std::size_t> starts;
  for (std::size_t s = range.end - need;; s -= stride) {
    starts.push_back(s);
    if (s < range.begin + stride) break;
  }
  batch.windows.reserve(starts.size());
  for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
    const std::size_t s = *it;
    Window w;
    const auto& v = frame.values.storage();
    w.x = Tensor<double>({lookback, n}, std::vector<double>(v.begin() + std::ptrdiff_t(s * n),
                                                             v.begin() + std::ptrdiff_t((s + lookback) * n)));
    w.y = Tensor<double>({horizon, n}, std::vector<double>(v.begin() + std::ptrdiff_t((s + lookback) * n),
                                                            v.begin() + std::ptrdiff_t((s + need) * n)));
    w.tau_end = s + lookback - 1;
    batch.windows.push_back(std::move(w));
  }
  return batch;
}

void CorruptionSpec::validate() const {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("corrupt.p must lie in [0, 1)");
}

std::string to_string(CorruptionMode mode) { return mode == CorruptionMode::zeros ? "zeros" : "noise"; }

CorruptionMode parse_corruption_mode(const std::string& name) {
  if (name == "zeros") return CorruptionMode::zeros;
  if (name == "noise") return CorruptionMode::noise;
  throw ConfigError("unknown corruption mode '" + name + "'");
}

WindowBatch corrupt(const WindowBatch& batch, const CorruptionSpec& spec, Rng& rng) {
  spec.validate();
  WindowBatch out = batch;
  if (spec.p == 0.0) return out;
  for (auto& w : out.windows) {
    const std::size_t L = w.x.dim(0), n = w.x.dim(1);
    std::vector<double> sigma(n, 0.0);
    if (spec.mode == CorruptionMode::noise) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t t = 0; t < L; ++t) s += w.x.at(t, j);
        const double mu = s / double(L);
        for (std::size_t t = 0; t < L; ++t) s2 += (w.x.at(t, j) - mu) * (w.x.at(t, j) - mu);
        sigma[j] = std::sqrt(s2 / double(L));
      }
    }
    auto replacement = [&](std::size_t j) {
      return spec.mode == CorruptionMode::zeros ? 0.0 : rng.normal(0.0, sigma[j]);
    };
    for (std::size_t t = 0; t < L; ++t) {
      if (spec.per_row) {
        if (!rng.bernoulli(spec.p)) continue;
        for (std::size_t j = 0; j < n; ++j) w.x.at(t, j) = replacement(j);
      } else {
        for (std::size_t j = 0; j < n; ++j)
          if (rng.bernoulli(spec.p)) w.x.at(t, j) = replacement(j);
      }
    }
  }
  return out;
}

void SynthSpec::validate() const {
  if (cycle_len < 2) throw ConfigError("synth.c must be >= 2");
  if (!(drift_depth >= 0.0 && drift_depth < 1.0)) throw ConfigError("synth.depth must lie in [0, 1)");
  if (drift_cycles < 1) throw ConfigError("synth.k must be >= 1");
  if (channels < 1 || steps < 1) throw ConfigError("synth.T and synth.N must be >= 1");
  if (noise_std < 0.0) throw ConfigError("synth.noise must be non-negative");
  if (!phases.empty() && phases.size() != channels) throw ConfigError("synth.phases needs one value per channel");
}

double synth_amplitude(const SynthSpec& spec, std::size_t tau) {
  const double period = double(spec.drift_cycles * spec.cycle_len);
  return 1.0 + spec.drift_depth * std::sin(2.0 * std::numbers::pi * double(tau) / period);
}

SeriesFrame synth_generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t T = spec.steps, N = spec.channels, c = spec.cycle_len;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Rng rng(spec.seed);
  std::vector<double> phases = spec.phases;
  if (phases.empty())
    for (std::size_t i = 0; i < N; ++i) phases.push_back(two_pi * rng.uniform());
  // m_i: second and third harmonics of the cycle with random weights.
  std::vector<double> profile(N * c);
  for (std::size_t i = 0; i < N; ++i) {
    const double a2 = rng.normal(), b2 = two_pi * rng.uniform();
    const double a3 = rng.normal(), b3 = two_pi * rng.uniform();
    for (std::size_t p = 0; p < c; ++p) {
      const double x = two_pi * double(p) / double(c);
      profile[i * c + p] = spec.mean_scale * (a2 * std::sin(2.0 * x + b2) + a3 * std::sin(3.0 * x + b3)) / std::sqrt(2.0);
    }
  }
  SeriesFrame frame;
  frame.origin = "synthetic";
  for (std::size_t i = 0; i < N; ++i) frame.channels.push_back("ch" + std::to_string(i));
  frame.values = Tensor<double>({T, N});
  for (std::size_t tau = 0; tau < T; ++tau) {
    const std::size_t pos = tau % c;
    const double amp = synth_amplitude(spec, tau);
    for (std::size_t i = 0; i < N; ++i) {
      double v = amp * std::sin(two_pi * double(pos) / double(c) + phases[i]) + profile[i * c + pos];
      if (spec.noise_std > 0.0) v += rng.normal(0.0, spec.noise_std);
      frame.values.at(tau, i) = v;
    }
  }
  return frame;
}

}  // namespace pamnet
