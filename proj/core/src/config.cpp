#include "bmsfed/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(int line, const std::string& key, const std::string& msg) {
  std::string where = "config";
  if (line > 0) where += " line " + std::to_string(line);
  if (!key.empty()) where += ", key '" + key + "'";
  throw ConfigError(where + ": " + msg);
}

double parse_double(int line, const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) fail(line, key, "trailing characters in number '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, key, "expected a number, got '" + v + "'");
  }
}

long long parse_int(int line, const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) fail(line, key, "trailing characters in integer '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, key, "expected an integer, got '" + v + "'");
  }
}

Method parse_method(int line, const std::string& v) {
  if (v == "bmsfed") return Method::BmsFed;
  if (v == "fedavg") return Method::FedAvg;
  if (v == "fedavg_drop") return Method::FedAvgDrop;
  if (v == "powd") return Method::PowD;
  if (v == "divfl") return Method::DivFL;
  fail(line, "method", "unknown method '" + v + "'");
}

PartitionKind parse_partition(int line, const std::string& v) {
  if (v == "iid") return PartitionKind::Iid;
  if (v == "dirichlet") return PartitionKind::Dirichlet;
  fail(line, "partition", "expected iid or dirichlet, got '" + v + "'");
}

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) return buf;
  }
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::map<std::string, int> key_lines;
  bool s_sample_given = false;
  bool alpha_given = false;
  bool drop_given = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "", "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "", "empty key");
    if (value.empty()) fail(line_no, key, "empty value");
    if (!seen.insert(key).second) fail(line_no, key, "duplicate key");
    key_lines[key] = line_no;

    if (key == "method") {
      cfg.method = parse_method(line_no, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(line_no, key, value));
    } else if (key == "rounds") {
      cfg.rounds = static_cast<int>(parse_int(line_no, key, value));
    } else if (key == "clients") {
      cfg.clients = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else if (key == "budget") {
      cfg.budget = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else if (key == "s_sample") {
      cfg.s_sample = static_cast<std::size_t>(parse_int(line_no, key, value));
      s_sample_given = true;
    } else if (key == "chi") {
      cfg.chi = parse_double(line_no, key, value);
    } else if (key == "partition") {
      cfg.partition = parse_partition(line_no, value);
    } else if (key == "alpha") {
      cfg.alpha = parse_double(line_no, key, value);
      alpha_given = true;
    } else if (key == "fraction_uni") {
      cfg.fraction_uni = parse_double(line_no, key, value);
    } else if (key == "drop_prob") {
      cfg.drop_prob = parse_double(line_no, key, value);
      drop_given = true;
    } else if (key == "lr") {
      cfg.lr = parse_double(line_no, key, value);
    } else if (key == "lr_decay_round") {
      cfg.lr_decay_round = static_cast<int>(parse_int(line_no, key, value));
    } else if (key == "local_epochs") {
      cfg.local_epochs = static_cast<int>(parse_int(line_no, key, value));
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else if (key == "classes") {
      cfg.classes = static_cast<int>(parse_int(line_no, key, value));
    } else if (key == "per_class") {
      cfg.per_class = static_cast<int>(parse_int(line_no, key, value));
    } else if (key == "dim_a") {
      cfg.dim_a = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else if (key == "dim_i") {
      cfg.dim_i = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else if (key == "snr_a") {
      cfg.snr_a = parse_double(line_no, key, value);
    } else if (key == "snr_i") {
      cfg.snr_i = parse_double(line_no, key, value);
    } else if (key == "mean_scale") {
      cfg.mean_scale = parse_double(line_no, key, value);
    } else if (key == "test_per_class") {
      cfg.test_per_class = static_cast<int>(parse_int(line_no, key, value));
    } else if (key == "hidden_dim") {
      cfg.hidden_dim = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else if (key == "embedding_dim") {
      cfg.embedding_dim = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else if (key == "encoder_layers") {
      cfg.encoder_layers = static_cast<std::size_t>(parse_int(line_no, key, value));
    } else {
      fail(line_no, key, "unknown key");
    }
  }

  auto line_of = [&](const char* key) {
    auto it = key_lines.find(key);
    return it == key_lines.end() ? 0 : it->second;
  };
  for (const char* required : {"method", "seed", "rounds", "clients", "budget"}) {
    if (!seen.count(required)) fail(0, required, "required key missing");
  }

  if (cfg.rounds < 1) fail(line_of("rounds"), "rounds", "must be >= 1");
  if (cfg.clients < 1) fail(line_of("clients"), "clients", "must be >= 1");
  if (cfg.budget < 1 || cfg.budget > cfg.clients) {
    fail(line_of("budget"), "budget",
         "must be in [1, clients]; got " + std::to_string(cfg.budget) + " with " +
             std::to_string(cfg.clients) + " clients");
  }
  if (!s_sample_given) cfg.s_sample = cfg.clients;
  if (cfg.s_sample < 1) fail(line_of("s_sample"), "s_sample", "must be >= 1");
  if (cfg.chi < 1.0) fail(line_of("chi"), "chi", "must be >= 1");
  if (cfg.partition == PartitionKind::Dirichlet) {
    if (!alpha_given) fail(0, "alpha", "required with partition = dirichlet");
    if (!(cfg.alpha > 0.0)) fail(line_of("alpha"), "alpha", "must be positive");
  } else if (alpha_given) {
    fail(line_of("alpha"), "alpha", "only valid with partition = dirichlet");
  }
  if (cfg.fraction_uni < 0.0 || cfg.fraction_uni > 1.0) {
    fail(line_of("fraction_uni"), "fraction_uni", "must lie in [0, 1]");
  }
  if (cfg.method == Method::FedAvgDrop) {
    if (!drop_given) fail(0, "drop_prob", "required with method = fedavg_drop");
    if (cfg.drop_prob < 0.0 || cfg.drop_prob > 1.0) {
      fail(line_of("drop_prob"), "drop_prob", "must lie in [0, 1]");
    }
  } else if (drop_given) {
    fail(line_of("drop_prob"), "drop_prob", "only valid with method = fedavg_drop");
  }
  if (!(cfg.lr > 0.0)) fail(line_of("lr"), "lr", "must be positive");
  if (cfg.lr_decay_round < 0) fail(line_of("lr_decay_round"), "lr_decay_round", "must be >= 0");
  if (cfg.local_epochs < 1) fail(line_of("local_epochs"), "local_epochs", "must be >= 1");
  if (cfg.batch_size < 1) fail(line_of("batch_size"), "batch_size", "must be >= 1");
  if (cfg.classes < 2) fail(line_of("classes"), "classes", "need at least 2 classes");
  if (cfg.per_class < 1) fail(line_of("per_class"), "per_class", "must be >= 1");
  if (cfg.test_per_class < 1) fail(line_of("test_per_class"), "test_per_class", "must be >= 1");
  if (cfg.dim_a < static_cast<std::size_t>(cfg.classes) ||
      cfg.dim_i < static_cast<std::size_t>(cfg.classes)) {
    fail(0, "dim_a", "modality dims must be >= classes");
  }
  if (!(cfg.snr_a > 0.0) || !(cfg.snr_i > 0.0)) {
    fail(0, "snr_a", "snr values must be positive");
  }
  if (!(cfg.mean_scale > 0.0)) {
    fail(line_of("mean_scale"), "mean_scale", "must be positive");
  }
  if (cfg.hidden_dim < 1 || cfg.embedding_dim < 1 || cfg.encoder_layers < 1) {
    fail(0, "hidden_dim", "model dims must be >= 1");
  }
  const auto total = static_cast<std::size_t>(cfg.classes) *
                     static_cast<std::size_t>(cfg.per_class);
  if (cfg.clients > total) {
    fail(line_of("clients"), "clients", "more clients than training samples");
  }
  if (cfg.method == Method::PowD) {
    const std::size_t d_pool = (cfg.clients + 1) / 2;
    if (cfg.budget > d_pool) {
      fail(line_of("budget"), "budget",
           "powd selects from a half-size pool; budget must be <= " +
               std::to_string(d_pool));
    }
    if (cfg.fraction_uni > 0.0) {
      fail(line_of("fraction_uni"), "fraction_uni",
           "powd is not applicable with modality incongruity");
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const char* method = method_name(cfg.method);
  out << "method = " << method << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "rounds = " << cfg.rounds << "\n";
  out << "clients = " << cfg.clients << "\n";
  out << "budget = " << cfg.budget << "\n";
  out << "s_sample = " << cfg.s_sample << "\n";
  out << "chi = " << format_double(cfg.chi) << "\n";
  out << "partition = "
      << (cfg.partition == PartitionKind::Iid ? "iid" : "dirichlet") << "\n";
  if (cfg.partition == PartitionKind::Dirichlet) {
    out << "alpha = " << format_double(cfg.alpha) << "\n";
  }
  out << "fraction_uni = " << format_double(cfg.fraction_uni) << "\n";
  if (cfg.method == Method::FedAvgDrop) {
    out << "drop_prob = " << format_double(cfg.drop_prob) << "\n";
  }
  out << "lr = " << format_double(cfg.lr) << "\n";
  out << "lr_decay_round = " << cfg.lr_decay_round << "\n";
  out << "local_epochs = " << cfg.local_epochs << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "classes = " << cfg.classes << "\n";
  out << "per_class = " << cfg.per_class << "\n";
  out << "dim_a = " << cfg.dim_a << "\n";
  out << "dim_i = " << cfg.dim_i << "\n";
  out << "snr_a = " << format_double(cfg.snr_a) << "\n";
  out << "snr_i = " << format_double(cfg.snr_i) << "\n";
  out << "mean_scale = " << format_double(cfg.mean_scale) << "\n";
  out << "test_per_class = " << cfg.test_per_class << "\n";
  out << "hidden_dim = " << cfg.hidden_dim << "\n";
  out << "embedding_dim = " << cfg.embedding_dim << "\n";
  out << "encoder_layers = " << cfg.encoder_layers << "\n";
  return out.str();
}

FederationConfig federation_config(const ExperimentConfig& cfg) {
  FederationConfig fc;
  fc.seed = cfg.seed;
  fc.num_clients = cfg.clients;
  fc.budget = cfg.budget;
  fc.s_sample = cfg.s_sample == 0 ? cfg.clients : cfg.s_sample;
  fc.chi = cfg.chi;
  fc.lr = cfg.lr;
  fc.lr_decay_round = cfg.lr_decay_round;
  fc.local_epochs = cfg.local_epochs;
  fc.batch_size = cfg.batch_size;
  fc.method = cfg.method;
  fc.drop_prob = cfg.drop_prob;
  fc.model_shape =
      ModelShape{cfg.dim_a,          cfg.dim_i,         cfg.hidden_dim,
                 cfg.embedding_dim,  static_cast<std::size_t>(cfg.classes),
                 cfg.encoder_layers};
  return fc;
}

DataSpec train_data_spec(const ExperimentConfig& cfg) {
  return DataSpec{cfg.classes, cfg.per_class, cfg.dim_a,     cfg.dim_i,
                  cfg.snr_a,   cfg.snr_i,     cfg.mean_scale};
}

DataSpec test_data_spec(const ExperimentConfig& cfg) {
  DataSpec spec = train_data_spec(cfg);
  spec.per_class = cfg.test_per_class;
  return spec;
}

}  // namespace bmsfed
