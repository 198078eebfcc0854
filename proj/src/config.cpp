#include "pamnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pamnet/errors.hpp"

namespace pamnet {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + key + "': not a number: '" + value + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + key + "': not a non-negative integer: '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("key '" + key + "': not a boolean: '" + value + "'");
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

// Parsed state that only resolves after every key is read.
struct ParseState {
  bool cycle_given = false;
  bool dataset_given = false;
};

using Setter = std::function<void(ExperimentConfig&, ParseState&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto size = [](std::size_t ModelConfig::*field) {
      return [field](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
        c.model.*field = std::size_t(to_uint(k, v));
      };
    };
    auto flag = [](bool ModelConfig::*field) {
      return [field](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
        c.model.*field = to_bool(k, v);
      };
    };
    m["data.source"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) {
      if (v == "synth") c.source = DataSource::synth;
      else if (v == "csv") c.source = DataSource::csv;
      else throw ConfigError("data.source must be synth or csv");
    };
    m["data.csv"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) {
      c.csv_path = v;
      c.source = DataSource::csv;
    };
    m["data.dataset"] = [](ExperimentConfig& c, ParseState& st, const std::string&, const std::string& v) {
      c.dataset = v;
      st.dataset_given = true;
    };
    m["data.split"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      const auto parts = split_list(v);
      if (parts.size() != 3) throw ConfigError("data.split needs three fractions");
      for (std::size_t i = 0; i < 3; ++i) c.split.fractions[i] = to_double(k, parts[i]);
      c.split.steps.reset();
    };
    m["data.split_steps"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      const auto parts = split_list(v);
      if (parts.size() != 3) throw ConfigError("data.split_steps needs three counts");
      std::array<std::size_t, 3> s{};
      for (std::size_t i = 0; i < 3; ++i) s[i] = std::size_t(to_uint(k, parts[i]));
      c.split.steps = s;
    };
    m["data.standardize"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      c.standardize = to_bool(k, v);
    };
    m["eval.raw_units"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      c.raw_units = to_bool(k, v);
    };
    m["synth.T"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.steps = to_uint(k, v); };
    m["synth.N"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.channels = to_uint(k, v); };
    m["synth.c"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.cycle_len = to_uint(k, v); };
    m["synth.depth"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.drift_depth = to_double(k, v); };
    m["synth.k"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.drift_cycles = to_uint(k, v); };
    m["synth.noise"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.noise_std = to_double(k, v); };
    m["synth.mean_scale"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.mean_scale = to_double(k, v); };
    m["synth.seed"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.synth.seed = to_uint(k, v); };
    m["synth.phases"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      c.synth.phases.clear();
      for (const auto& p : split_list(v)) c.synth.phases.push_back(to_double(k, p));
    };
    m["model.L"] = size(&ModelConfig::lookback);
    m["model.H"] = size(&ModelConfig::horizon);
    m["model.N"] = size(&ModelConfig::channels);
    m["model.d"] = size(&ModelConfig::embed_dim);
    m["model.c"] = [](ExperimentConfig& c, ParseState& st, const std::string& k, const std::string& v) {
      c.model.cycle_len = to_uint(k, v);
      st.cycle_given = true;
    };
    m["model.dropout"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      c.model.dropout_rate = to_double(k, v);
    };
    m["model.activation"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) {
      c.model.activation = parse_activation(v);
    };
    m["model.use_phase"] = flag(&ModelConfig::use_phase);
    m["model.use_amplitude"] = flag(&ModelConfig::use_amplitude);
    m["model.sinusoidal"] = flag(&ModelConfig::sinusoidal_carriers);
    m["model.use_modulator"] = flag(&ModelConfig::use_modulator);
    m["model.share_modulator"] = flag(&ModelConfig::share_modulator_weights);
    m["model.dropout_before_product"] = flag(&ModelConfig::dropout_before_product);
    m["model.instance_norm"] = flag(&ModelConfig::instance_norm);
    m["model.eps"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      c.model.norm_eps = to_double(k, v);
    };
    m["loss.alpha"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.loss.alpha = to_double(k, v); };
    m["loss.mode"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) { c.loss.mode = parse_loss_mode(v); };
    m["optim.lr"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.optim.learning_rate = to_double(k, v); };
    m["optim.beta1"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.optim.beta1 = to_double(k, v); };
    m["optim.beta2"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.optim.beta2 = to_double(k, v); };
    m["optim.eps"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.optim.eps = to_double(k, v); };
    m["optim.epochs"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.optim.max_epochs = to_uint(k, v); };
    m["optim.patience"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.optim.patience = to_uint(k, v); };
    m["optim.batch_size"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.optim.batch_size = to_uint(k, v); };
    m["corrupt.p"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.corruption.p = to_double(k, v); };
    m["corrupt.mode"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) {
      c.corruption.mode = parse_corruption_mode(v);
    };
    m["corrupt.per_row"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.corruption.per_row = to_bool(k, v); };
    m["corrupt.test"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) { c.corruption.apply_to_test = to_bool(k, v); };
    m["seeds"] = [](ExperimentConfig& c, ParseState&, const std::string& k, const std::string& v) {
      c.seeds.clear();
      for (const auto& s : split_list(v)) c.seeds.push_back(to_uint(k, s));
      if (c.seeds.empty()) throw ConfigError("seeds must list at least one seed");
    };
    m["ablation"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) {
      const auto& tags = ablation_tags();
      if (std::find(tags.begin(), tags.end(), v) == tags.end()) throw RegistryError("unknown ablation tag '" + v + "'");
      c.ablation = v;
    };
    m["target_channel"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) {
      if (v.empty()) c.target_channel.reset();
      else c.target_channel = v;
    };
    m["output"] = [](ExperimentConfig& c, ParseState&, const std::string&, const std::string& v) { c.output_dir = v; };
    return m;
  }();
  return table;
}

void apply_text(ExperimentConfig& cfg, std::string_view text, ParseState& state) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(cfg, state, key, value);
  }
}

void resolve(ExperimentConfig& cfg, const ParseState& state) {
  if (state.dataset_given && !cfg.dataset.empty() && !state.cycle_given) cfg.model.cycle_len = default_cycle_length(cfg.dataset);
}

// Range checks that do not depend on the data; channel count and ablation
// are checked again once the run is resolved.
void validate(const ExperimentConfig& cfg) {
  cfg.model.validate();
  cfg.loss.validate();
  cfg.optim.validate();
  cfg.corruption.validate();
  cfg.split.validate();
  if (cfg.source == DataSource::synth) cfg.synth.validate();
  if (cfg.seeds.empty()) throw ConfigError("seeds must list at least one seed");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  ParseState state;
  apply_text(cfg, text, state);
  resolve(cfg, state);
  validate(cfg);
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, std::string_view text) {
  ParseState state;
  apply_text(cfg, text, state);
  resolve(cfg, state);
  validate(cfg);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_model_config(const ModelConfig& m) {
  std::ostringstream os;
  os << "model.L=" << m.lookback << '\n'
     << "model.H=" << m.horizon << '\n'
     << "model.N=" << m.channels << '\n'
     << "model.d=" << m.embed_dim << '\n'
     << "model.c=" << m.cycle_len << '\n'
     << "model.dropout=" << format_double(m.dropout_rate) << '\n'
     << "model.activation=" << to_string(m.activation) << '\n'
     << "model.use_phase=" << bool_str(m.use_phase) << '\n'
     << "model.use_amplitude=" << bool_str(m.use_amplitude) << '\n'
     << "model.sinusoidal=" << bool_str(m.sinusoidal_carriers) << '\n'
     << "model.use_modulator=" << bool_str(m.use_modulator) << '\n'
     << "model.share_modulator=" << bool_str(m.share_modulator_weights) << '\n'
     << "model.dropout_before_product=" << bool_str(m.dropout_before_product) << '\n'
     << "model.instance_norm=" << bool_str(m.instance_norm) << '\n'
     << "model.eps=" << format_double(m.norm_eps) << '\n';
  return os.str();
}

ModelConfig parse_model_config(std::string_view text) {
  ExperimentConfig cfg;
  ParseState state;
  apply_text(cfg, text, state);
  return cfg.model;
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto join = [](const auto& values, auto fmt) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
    return out;
  };
  os << "data.source=" << (cfg.source == DataSource::synth ? "synth" : "csv") << '\n';
  if (!cfg.csv_path.empty()) os << "data.csv=" << cfg.csv_path << '\n';
  if (!cfg.dataset.empty()) os << "data.dataset=" << cfg.dataset << '\n';
  if (cfg.split.steps) {
    os << "data.split_steps=" << join(*cfg.split.steps, [](std::size_t v) { return std::to_string(v); }) << '\n';
  } else {
    os << "data.split=" << join(cfg.split.fractions, format_double) << '\n';
  }
  os << "data.standardize=" << bool_str(cfg.standardize) << '\n'
     << "eval.raw_units=" << bool_str(cfg.raw_units) << '\n'
     << "synth.T=" << cfg.synth.steps << '\n'
     << "synth.N=" << cfg.synth.channels << '\n'
     << "synth.c=" << cfg.synth.cycle_len << '\n'
     << "synth.depth=" << format_double(cfg.synth.drift_depth) << '\n'
     << "synth.k=" << cfg.synth.drift_cycles << '\n'
     << "synth.noise=" << format_double(cfg.synth.noise_std) << '\n'
     << "synth.mean_scale=" << format_double(cfg.synth.mean_scale) << '\n'
     << "synth.seed=" << cfg.synth.seed << '\n';
  if (!cfg.synth.phases.empty()) os << "synth.phases=" << join(cfg.synth.phases, format_double) << '\n';
  os << dump_model_config(cfg.model);
  os << "loss.alpha=" << format_double(cfg.loss.alpha) << '\n'
     << "loss.mode=" << to_string(cfg.loss.mode) << '\n'
     << "optim.lr=" << format_double(cfg.optim.learning_rate) << '\n'
     << "optim.beta1=" << format_double(cfg.optim.beta1) << '\n'
     << "optim.beta2=" << format_double(cfg.optim.beta2) << '\n'
     << "optim.eps=" << format_double(cfg.optim.eps) << '\n'
     << "optim.epochs=" << cfg.optim.max_epochs << '\n'
     << "optim.patience=" << cfg.optim.patience << '\n'
     << "optim.batch_size=" << cfg.optim.batch_size << '\n'
     << "corrupt.p=" << format_double(cfg.corruption.p) << '\n'
     << "corrupt.mode=" << to_string(cfg.corruption.mode) << '\n'
     << "corrupt.per_row=" << bool_str(cfg.corruption.per_row) << '\n'
     << "corrupt.test=" << bool_str(cfg.corruption.apply_to_test) << '\n'
     << "seeds=" << join(cfg.seeds, [](std::uint64_t v) { return std::to_string(v); }) << '\n'
     << "ablation=" << cfg.ablation << '\n';
  if (cfg.target_channel) os << "target_channel=" << *cfg.target_channel << '\n';
  os << "output=" << cfg.output_dir << '\n';
  return os.str();
}

std::size_t default_cycle_length(std::string_view dataset) {
  static const std::vector<std::pair<std::string, std::size_t>> table = {
      {"ETTh1", 24},   {"ETTh2", 24},   {"ETTm1", 96},  {"ETTm2", 96},  {"ECL", 168},    {"Traffic", 168},
      {"Weather", 144}, {"Solar", 144}, {"PEMS03", 288}, {"PEMS04", 288}, {"PEMS07", 288}, {"PEMS08", 288},
  };
  for (const auto& [tag, period] : table)
    if (tag == dataset) return period;
  std::string known;
  for (const auto& [tag, period] : table) known += (known.empty() ? "" : ", ") + tag;
  throw LookupError("unknown dataset '" + std::string(dataset) + "'; known: " + known);
}

const std::vector<std::string>& ablation_tags() {
  static const std::vector<std::string> tags = {
      "full",     "act_silu", "act_tanh",   "act_sigmoid",  "act_relu", "act_gelu",
      "no_EA",    "no_EP",    "sinusoidal", "no_modulator", "loss_mse", "loss_mae",
  };
  return tags;
}

void apply_ablation(ModelConfig& model, LossConfig& loss, std::string_view tag) {
  if (tag == "full") return;
  if (tag == "act_silu") model.activation = Activation::silu;
  else if (tag == "act_tanh") model.activation = Activation::tanh;
  else if (tag == "act_sigmoid") model.activation = Activation::sigmoid;
  else if (tag == "act_relu") model.activation = Activation::relu;
  else if (tag == "act_gelu") model.activation = Activation::gelu;
  else if (tag == "no_EA") model.use_amplitude = false;
  else if (tag == "no_EP") model.use_phase = false;
  else if (tag == "sinusoidal") model.sinusoidal_carriers = true;
  else if (tag == "no_modulator") model.use_modulator = false;
  else if (tag == "loss_mse") loss.mode = LossMode::mse;
  else if (tag == "loss_mae") loss.mode = LossMode::mae;
  else throw RegistryError("unknown ablation tag '" + std::string(tag) + "'");
}

}  // namespace pamnet
