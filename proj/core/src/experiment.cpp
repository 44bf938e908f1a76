#include "bmsfed/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw DataError("write failed for " + path);
}

/// Canonical form with the method-dependent parts removed, for checking
/// that compared configs share everything else.
std::string shared_fields_key(ExperimentConfig cfg) {
  cfg.method = Method::FedAvg;
  cfg.drop_prob = 0.0;
  return serialize_config(cfg);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult result;
  result.config = cfg;

  RngStream train_rng(cfg.seed, StreamPurpose::TrainData);
  const BimodalDataset train = generate(train_data_spec(cfg), train_rng);
  RngStream test_rng(cfg.seed, StreamPurpose::TestData);
  const BimodalDataset test = generate(test_data_spec(cfg), test_rng);

  RngStream part_rng(cfg.seed, StreamPurpose::Partition);
  PartitionPlan plan =
      cfg.partition == PartitionKind::Iid
          ? partition_iid(train.size(), cfg.clients, part_rng)
          : partition_dirichlet(train.labels, cfg.clients, cfg.alpha, part_rng);
  if (cfg.fraction_uni > 0.0) {
    RngStream inc_rng(cfg.seed, StreamPurpose::Incongruity);
    apply_incongruity(plan, cfg.fraction_uni, inc_rng);
  }

  auto clients = make_clients(train, plan);
  const FederationConfig fed_cfg = federation_config(cfg);
  ServerState server = init_server(fed_cfg);

  result.rounds.push_back(bootstrap_round(server, clients, test, fed_cfg));
  for (int r = 2; r <= cfg.rounds; ++r) {
    result.rounds.push_back(run_round(server, clients, test, fed_cfg));
  }
  return result;
}

std::string metrics_csv(const RunResult& result) {
  std::ostringstream out;
  out << "round,acc_multi,acc_uni_a,acc_uni_i,global_ratio,n_multi,n_uni,train_loss\n";
  for (const auto& m : result.rounds) {
    out << m.round << ',' << fixed6(m.acc_multi) << ',' << fixed6(m.acc_uni_a)
        << ',' << fixed6(m.acc_uni_i) << ',' << fixed6(m.global_ratio) << ','
        << m.n_multi << ',' << m.n_uni << ',' << fixed6(m.train_loss) << '\n';
  }
  return out.str();
}

std::string summary_json(const RunResult& result) {
  const auto& rounds = result.rounds;
  std::size_t best = 0;
  for (std::size_t i = 1; i < rounds.size(); ++i) {
    if (rounds[i].acc_multi > rounds[best].acc_multi) best = i;
  }
  const auto& fin = rounds.back();
  const auto& top = rounds[best];
  std::ostringstream out;
  out << "{\n";
  out << "  \"method\": \"" << method_name(result.config.method) << "\",\n";
  out << "  \"seed\": " << result.config.seed << ",\n";
  out << "  \"rounds\": " << rounds.size() << ",\n";
  out << "  \"final_round\": " << fin.round << ",\n";
  out << "  \"final_acc_multi\": " << fixed6(fin.acc_multi) << ",\n";
  out << "  \"final_acc_uni_a\": " << fixed6(fin.acc_uni_a) << ",\n";
  out << "  \"final_acc_uni_i\": " << fixed6(fin.acc_uni_i) << ",\n";
  out << "  \"final_global_ratio\": " << fixed6(fin.global_ratio) << ",\n";
  out << "  \"best_round\": " << top.round << ",\n";
  out << "  \"best_acc_multi\": " << fixed6(top.acc_multi) << ",\n";
  out << "  \"best_acc_uni_a\": " << fixed6(top.acc_uni_a) << ",\n";
  out << "  \"best_acc_uni_i\": " << fixed6(top.acc_uni_i) << "\n";
  out << "}\n";
  return out.str();
}

void write_run_outputs(const RunResult& result, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir + "/metrics.csv", metrics_csv(result));
  write_text(out_dir + "/summary.json", summary_json(result));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<MethodSummary> compare_methods(
    const std::vector<ExperimentConfig>& configs,
    const std::vector<std::uint64_t>& seeds) {
  if (configs.empty()) throw ParameterError("compare_methods: no configs");
  if (seeds.empty()) throw ParameterError("compare_methods: no seeds");
  const std::string reference = shared_fields_key(configs.front());
  for (const auto& cfg : configs) {
    if (shared_fields_key(cfg) != reference) {
      throw ConfigError(
          "compare_methods: configs must differ only in method-specific keys");
    }
  }
  std::vector<MethodSummary> rows;
  for (const auto& cfg : configs) {
    std::vector<double> multi, uni_a, uni_i;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.seed = seed;
      const auto result = run_experiment(run_cfg);
      multi.push_back(result.final_round().acc_multi);
      uni_a.push_back(result.final_round().acc_uni_a);
      uni_i.push_back(result.final_round().acc_uni_i);
    }
    MethodSummary row;
    row.method = method_name(cfg.method);
    row.acc_multi_median = quantile(multi, 0.5);
    row.acc_multi_iqr = quantile(multi, 0.75) - quantile(multi, 0.25);
    row.acc_uni_a_median = quantile(uni_a, 0.5);
    row.acc_uni_a_iqr = quantile(uni_a, 0.75) - quantile(uni_a, 0.25);
    row.acc_uni_i_median = quantile(uni_i, 0.5);
    row.acc_uni_i_iqr = quantile(uni_i, 0.75) - quantile(uni_i, 0.25);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_csv(const std::vector<MethodSummary>& rows) {
  std::ostringstream out;
  out << "method,acc_multi_median,acc_multi_iqr,acc_uni_a_median,acc_uni_a_iqr,"
         "acc_uni_i_median,acc_uni_i_iqr\n";
  for (const auto& r : rows) {
    out << r.method << ',' << fixed6(r.acc_multi_median) << ','
        << fixed6(r.acc_multi_iqr) << ',' << fixed6(r.acc_uni_a_median) << ','
        << fixed6(r.acc_uni_a_iqr) << ',' << fixed6(r.acc_uni_i_median) << ','
        << fixed6(r.acc_uni_i_iqr) << '\n';
  }
  return out.str();
}

}  // namespace bmsfed
