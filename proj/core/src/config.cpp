#include "deeprx/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deeprx {

namespace {
std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

FlatConfig FlatConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not readable: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

FlatConfig FlatConfig::parse_string(const std::string& text, const std::string& origin) {
  FlatConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full))
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + full + "'");
    cfg.entries_[full] = Entry{value, line_no};
  }
  return cfg;
}

bool FlatConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

void FlatConfig::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const std::string where =
      it == entries_.end() ? origin_ : origin_ + ":" + std::to_string(it->second.line);
  throw ConfigError(where + ": key '" + key + "': " + what);
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  return it->second.value;
}

long FlatConfig::get_int(const std::string& key, long fallback) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second.value, &pos);
    if (pos != it->second.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(key, "expected an integer, got '" + it->second.value + "'");
  }
}

double FlatConfig::get_double(const std::string& key, double fallback) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second.value, &pos);
    if (pos != it->second.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + it->second.value + "'");
  }
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  if (it->second.value == "true") return true;
  if (it->second.value == "false") return false;
  fail(key, "expected true or false, got '" + it->second.value + "'");
}

std::vector<double> FlatConfig::get_double_list(const std::string& key,
                                                std::vector<double> fallback) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  std::vector<double> out;
  for (const std::string& cell : split(it->second.value, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(cell, &pos));
      if (pos != cell.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail(key, "expected a comma-separated number list, got '" + it->second.value + "'");
    }
  }
  return out;
}

std::vector<int> FlatConfig::get_int_list(const std::string& key, std::vector<int> fallback) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  std::vector<int> out;
  for (const std::string& cell : split(it->second.value, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(cell, &pos));
      if (pos != cell.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail(key, "expected a comma-separated integer list, got '" + it->second.value + "'");
    }
  }
  return out;
}

std::vector<std::string> FlatConfig::get_string_list(const std::string& key,
                                                     std::vector<std::string> fallback) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  return split(it->second.value, ',');
}

void FlatConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = Entry{value, 0};
}

std::vector<std::string> FlatConfig::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_)
    if (!read_.count(key)) out.push_back(key);
  return out;
}

ExperimentConfig config_from_flat(FlatConfig& flat) {
  ExperimentConfig cfg;

  const std::string channel = flat.get_string("experiment.channel", "siso");
  if (channel == "siso") cfg.channel = ChannelKind::Siso;
  else if (channel == "mimo") cfg.channel = ChannelKind::Mimo;
  else throw ConfigError("experiment.channel must be siso or mimo, got '" + channel + "'");

  const std::string profile = flat.get_string("experiment.profile", "fading_synthetic");
  if (profile == "static") cfg.profile = ProfileKind::Static;
  else if (profile == "fading_synthetic") cfg.profile = ProfileKind::FadingSynthetic;
  else if (profile == "trace") cfg.profile = ProfileKind::Trace;
  else
    throw ConfigError("experiment.profile must be static, fading_synthetic or trace, got '" +
                      profile + "'");

  cfg.trace_file = flat.get_string("experiment.trace_file", "");
  cfg.tanh = flat.get_bool("experiment.tanh", false);
  cfg.tanh_gain = flat.get_double("experiment.tanh_gain", 1.0);
  cfg.snr_grid_db = flat.get_double_list("experiment.snr_db", cfg.snr_grid_db);
  cfg.blocks = static_cast<int>(flat.get_int("experiment.blocks", cfg.blocks));
  cfg.seeds = static_cast<int>(flat.get_int("experiment.seeds", cfg.seeds));
  cfg.master_seed =
      static_cast<std::uint64_t>(flat.get_int("experiment.master_seed",
                                              static_cast<long>(cfg.master_seed)));
  cfg.receiver = receiver_by_name(flat.get_string("experiment.receiver", "viterbinet"));
  const auto method_names =
      flat.get_string_list("experiment.methods", {"regular", "combined"});
  cfg.methods.clear();
  for (const std::string& name : method_names) {
    try {
      cfg.methods.push_back(method_by_name(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("experiment.methods: ") + e.what());
    }
  }
  cfg.extended_beta = flat.get_double("experiment.extended_beta", cfg.extended_beta);
  cfg.include_genie = flat.get_bool("experiment.include_genie", cfg.include_genie);
  cfg.jobs = static_cast<int>(flat.get_int("experiment.jobs", cfg.jobs));

  cfg.layout.pilots = static_cast<int>(flat.get_int("layout.pilots", cfg.layout.pilots));
  cfg.layout.info = static_cast<int>(flat.get_int("layout.info", cfg.layout.info));

  cfg.memory = static_cast<int>(flat.get_int("siso.memory", cfg.memory));
  cfg.taps = flat.get_double_list("siso.taps", cfg.taps);
  cfg.fading_periods = flat.get_int_list("siso.periods", cfg.fading_periods);
  cfg.fading_base = flat.get_double("siso.osc_base", cfg.fading_base);
  cfg.fading_amplitude = flat.get_double("siso.osc_amplitude", cfg.fading_amplitude);

  cfg.users = static_cast<int>(flat.get_int("mimo.users", cfg.users));
  cfg.antennas = static_cast<int>(flat.get_int("mimo.antennas", cfg.antennas));

  cfg.augment.kappa = static_cast<int>(flat.get_int("augment.kappa", cfg.augment.kappa));
  cfg.augment.alpha1 = flat.get_double("augment.alpha1", cfg.augment.alpha1);
  cfg.augment.alpha2 = flat.get_double("augment.alpha2", cfg.augment.alpha2);
  const auto enabled = flat.get_string_list("augment.enabled",
                                            {"geometric", "projection", "translation"});
  cfg.augment.geometric = cfg.augment.projection = cfg.augment.translation = false;
  for (const std::string& kind : enabled) {
    if (kind == "geometric") cfg.augment.geometric = true;
    else if (kind == "projection") cfg.augment.projection = true;
    else if (kind == "translation") cfg.augment.translation = true;
    else throw ConfigError("augment.enabled: unknown augmentation '" + kind + "'");
  }

  cfg.train_iterations = static_cast<int>(flat.get_int("training.iterations", 500));
  cfg.train_batch_size = static_cast<int>(flat.get_int("training.batch_size", 0));
  cfg.train_learning_rate = flat.get_double("training.learning_rate", 0.0);
  cfg.warm_start = flat.get_bool("training.warm_start", true);

  const auto unread = flat.unread_keys();
  if (!unread.empty()) {
    std::string names;
    for (std::size_t i = 0; i < unread.size(); ++i) names += (i ? ", " : "") + unread[i];
    throw ConfigError("unknown config keys: " + names);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
  FlatConfig flat = FlatConfig::parse_file(path);
  return config_from_flat(flat);
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  char fp[32];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(cfg.fingerprint()));
  out << "# resolved experiment configuration (all defaults materialized)\n";
  out << "# fingerprint = " << fp << "\n";
  out << "[experiment]\n";
  out << "channel = " << (cfg.channel == ChannelKind::Siso ? "siso" : "mimo") << "\n";
  out << "profile = "
      << (cfg.profile == ProfileKind::Static
              ? "static"
              : cfg.profile == ProfileKind::FadingSynthetic ? "fading_synthetic" : "trace")
      << "\n";
  if (!cfg.trace_file.empty()) out << "trace_file = " << cfg.trace_file << "\n";
  out << "tanh = " << (cfg.tanh ? "true" : "false") << "\n";
  out << "tanh_gain = " << format_full(cfg.tanh_gain) << "\n";
  out << "snr_db = ";
  for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i)
    out << (i ? "," : "") << format_full(cfg.snr_grid_db[i]);
  out << "\n";
  out << "blocks = " << cfg.blocks << "\n";
  out << "seeds = " << cfg.seeds << "\n";
  out << "master_seed = " << cfg.master_seed << "\n";
  out << "receiver = " << receiver_name(cfg.receiver) << "\n";
  out << "methods = ";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    out << (i ? "," : "") << method_name(cfg.methods[i]);
  out << "\n";
  out << "extended_beta = " << format_full(cfg.extended_beta) << "\n";
  out << "include_genie = " << (cfg.include_genie ? "true" : "false") << "\n";
  out << "jobs = " << cfg.jobs << "\n";
  out << "[layout]\n";
  out << "pilots = " << cfg.layout.pilots << "\n";
  out << "info = " << cfg.layout.info << "\n";
  out << "[siso]\n";
  out << "memory = " << cfg.memory << "\n";
  out << "taps = ";
  for (std::size_t i = 0; i < cfg.taps.size(); ++i) out << (i ? "," : "") << format_full(cfg.taps[i]);
  out << "\n";
  out << "periods = ";
  for (std::size_t i = 0; i < cfg.fading_periods.size(); ++i)
    out << (i ? "," : "") << cfg.fading_periods[i];
  out << "\n";
  out << "osc_base = " << format_full(cfg.fading_base) << "\n";
  out << "osc_amplitude = " << format_full(cfg.fading_amplitude) << "\n";
  out << "[mimo]\n";
  out << "users = " << cfg.users << "\n";
  out << "antennas = " << cfg.antennas << "\n";
  out << "[augment]\n";
  out << "kappa = " << cfg.augment.kappa << "\n";
  out << "alpha1 = " << format_full(cfg.augment.alpha1) << "\n";
  out << "alpha2 = " << format_full(cfg.augment.alpha2) << "\n";
  out << "enabled = ";
  {
    std::vector<std::string> kinds;
    if (cfg.augment.geometric) kinds.push_back("geometric");
    if (cfg.augment.projection) kinds.push_back("projection");
    if (cfg.augment.translation) kinds.push_back("translation");
    for (std::size_t i = 0; i < kinds.size(); ++i) out << (i ? "," : "") << kinds[i];
  }
  out << "\n";
  out << "[training]\n";
  const TrainConfig tc = effective_training(cfg);
  out << "iterations = " << tc.iterations << "\n";
  out << "batch_size = " << tc.batch_size << "\n";
  out << "learning_rate = " << format_full(tc.learning_rate) << "\n";
  out << "warm_start = " << (cfg.warm_start ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace deeprx
