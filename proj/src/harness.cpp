#include "dpre/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dpre/moments.hpp"
#include "dpre/stats.hpp"
#include "dpre/walk.hpp"

namespace dpre {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

uint64_t fnv1a(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int64_t parse_int(const std::string& field, const std::string& s) {
  try {
    size_t pos = 0;
    const int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, field + ": not an integer: '" + s + "'");
  }
}

double parse_real(const std::string& field, const std::string& s) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, field + ": not a number: '" + s + "'");
  }
}

std::string beta_tag(double beta_hat) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", beta_hat);
  std::string t(buf);
  for (auto& c : t) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return t;
}

std::string cell_base(ExperimentKind kind, int64_t N, int M, double beta_hat) {
  return kind_name(kind) + "_N" + std::to_string(N) + "_M" + std::to_string(M) + "_b" +
         beta_tag(beta_hat);
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["kind"] = kind_name(c.kind);
  j["N"] = c.N_values;
  j["M"] = c.M_values;
  j["beta_hat"] = c.beta_hats;
  j["family"] = family_name(c.family);
  j["seed"] = c.master_seed;
  j["replicates"] = c.replicates;
  j["epsilon0"] = c.epsilon0;
  j["alpha"] = c.alpha;
  j["workers"] = c.workers;
  j["out"] = c.out_dir;
  return j;
}

void write_text(const std::string& path, const std::string& text,
                std::vector<std::string>& files) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
  files.push_back(path);
}

double se_of_mean(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (double(v.size()) * double(v.size() - 1)));
}

}  // namespace

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::tables: return "tables";
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::clt: return "clt";
    case ExperimentKind::decouple: return "decouple";
    case ExperimentKind::moments: return "moments";
    case ExperimentKind::taylor: return "taylor";
    case ExperimentKind::supercritical: return "supercritical";
  }
  return "simulate";
}

ExperimentKind kind_from_name(const std::string& name) {
  if (name == "tables") return ExperimentKind::tables;
  if (name == "simulate") return ExperimentKind::simulate;
  if (name == "clt") return ExperimentKind::clt;
  if (name == "decouple") return ExperimentKind::decouple;
  if (name == "moments") return ExperimentKind::moments;
  if (name == "taylor") return ExperimentKind::taylor;
  if (name == "supercritical") return ExperimentKind::supercritical;
  throw ConfigError("kind", "kind: unknown experiment kind '" + name + "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "kind") {
      c.kind = kind_from_name(value);
    } else if (key == "N") {
      c.N_values.clear();
      for (const auto& item : split_list(value)) c.N_values.push_back(parse_int("N", item));
    } else if (key == "M") {
      c.M_values.clear();
      for (const auto& item : split_list(value)) c.M_values.push_back(int(parse_int("M", item)));
    } else if (key == "beta_hat") {
      c.beta_hats.clear();
      for (const auto& item : split_list(value)) c.beta_hats.push_back(parse_real("beta_hat", item));
    } else if (key == "family") {
      try {
        c.family = family_from_name(value);
      } catch (const std::exception& e) {
        throw ConfigError("family", e.what());
      }
    } else if (key == "seed") {
      c.master_seed = uint64_t(parse_int("seed", value));
    } else if (key == "replicates") {
      c.replicates = parse_int("replicates", value);
    } else if (key == "epsilon0") {
      c.epsilon0 = parse_real("epsilon0", value);
    } else if (key == "alpha") {
      c.alpha = parse_real("alpha", value);
    } else if (key == "workers") {
      c.workers = int(parse_int("workers", value));
    } else if (key == "out") {
      c.out_dir = value;
    } else {
      throw ConfigError(key, "unknown config key '" + key + "'");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const ExperimentConfig& c) {
  if (c.N_values.empty()) throw ConfigError("N", "N: at least one horizon required");
  for (int64_t n : c.N_values) {
    if (n < 2) throw ConfigError("N", "N: every horizon must be >= 2, got " + std::to_string(n));
  }
  if (c.M_values.empty()) throw ConfigError("M", "M: at least one scale count required");
  for (int m : c.M_values) {
    if (m < 1) throw ConfigError("M", "M: every scale count must be >= 1, got " + std::to_string(m));
  }
  if (c.beta_hats.empty()) throw ConfigError("beta_hat", "beta_hat: at least one value required");
  for (double b : c.beta_hats) {
    if (!(b > 0.0)) throw ConfigError("beta_hat", "beta_hat: values must be > 0");
    if (c.kind == ExperimentKind::clt && !(b < 1.0))
      throw ConfigError("beta_hat",
                        "beta_hat: clt experiments require beta_hat < 1 (no Gaussian target "
                        "at or above the critical point)");
  }
  if (c.replicates < 1) throw ConfigError("replicates", "replicates: must be >= 1");
  if (!(c.epsilon0 > 0.0)) throw ConfigError("epsilon0", "epsilon0: must be > 0");
  if (!(c.alpha > 0.0)) throw ConfigError("alpha", "alpha: must be > 0");
  if (c.workers < 0) throw ConfigError("workers", "workers: must be >= 0");
}

uint64_t derive_cell_seed(uint64_t master_seed, uint64_t cell_index) {
  return splitmix64(splitmix64(master_seed) ^ (cell_index + 1));
}

CellResult run_cell(const CellParams& params, int64_t replicates, int workers) {
  CellResult result;
  result.grid = dyadic_decompose(params.N, params.M);
  result.beta = coupling_constant(params.beta_hat, params.N);
  result.samples.assign(size_t(replicates), PartitionSample{});

  std::vector<char> ok(size_t(replicates), 0);
  std::vector<std::string> errors(static_cast<size_t>(replicates));
  std::atomic<int64_t> next{0};

  int w = (workers <= 0) ? int(std::thread::hardware_concurrency()) : workers;
  w = std::max(1, std::min<int>(w, int(std::min<int64_t>(replicates, 64))));

  auto worker_loop = [&]() {
    PolymerEngine engine(params.N);
    for (;;) {
      const int64_t r = next.fetch_add(1);
      if (r >= replicates) break;
      DisorderSpec spec{params.family, params.cell_seed, uint32_t(r)};
      try {
        result.samples[size_t(r)] =
            engine.sample_all(spec, result.grid, result.beta, params.windows_only);
        ok[size_t(r)] = 1;
      } catch (const std::exception& e) {
        errors[size_t(r)] = e.what();
      }
    }
  };

  if (w == 1) {
    worker_loop();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(w));
    for (int i = 0; i < w; ++i) pool.emplace_back(worker_loop);
    for (auto& t : pool) t.join();
  }

  for (int64_t r = 0; r < replicates; ++r) {
    if (!ok[size_t(r)]) result.failures.emplace_back(r, errors[size_t(r)]);
  }
  return result;
}

namespace {

ordered_json sample_row(const PartitionSample& ps, const CellParams& cell, double beta) {
  ordered_json row;
  row["replicate"] = ps.replicate;
  row["N"] = cell.N;
  row["M"] = cell.M;
  row["beta_hat"] = cell.beta_hat;
  row["beta"] = beta;
  row["family"] = family_name(cell.family);
  if (ps.has_w) {
    row["w"] = ps.w;
    row["log_w"] = ps.log_w;
  }
  row["z"] = ps.z;
  row["log_z"] = ps.log_z;
  row["u"] = ps.u;
  row["product_z"] = ps.product_z;
  row["shared_env"] = ps.shared_env;
  return row;
}

std::string samples_jsonl(const CellResult& res, const CellParams& cell) {
  std::string out;
  size_t fail_idx = 0;
  for (int64_t r = 0; r < int64_t(res.samples.size()); ++r) {
    const bool failed =
        fail_idx < res.failures.size() && res.failures[fail_idx].first == r;
    if (failed) {
      ordered_json row;
      row["replicate"] = r;
      row["error"] = res.failures[fail_idx].second;
      out += row.dump();
      ++fail_idx;
    } else {
      out += sample_row(res.samples[size_t(r)], cell, res.beta).dump();
    }
    out += '\n';
  }
  return out;
}

std::string samples_csv(const CellResult& res, const CellParams& cell) {
  std::ostringstream out;
  out << "replicate";
  if (!cell.windows_only) out << ",w,log_w";
  for (int k = 1; k <= cell.M; ++k) out << ",z_" << k;
  for (int k = 1; k <= cell.M; ++k) out << ",u_" << k;
  out << ",product_z\n";
  size_t fail_idx = 0;
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (int64_t r = 0; r < int64_t(res.samples.size()); ++r) {
    if (fail_idx < res.failures.size() && res.failures[fail_idx].first == r) {
      ++fail_idx;
      continue;
    }
    const PartitionSample& ps = res.samples[size_t(r)];
    out << r;
    if (!cell.windows_only) {
      put(ps.w);
      put(ps.log_w);
    }
    for (double z : ps.z) put(z);
    for (double u : ps.u) put(u);
    put(ps.product_z);
    out << '\n';
  }
  return out.str();
}

struct CellSeries {
  std::vector<double> w, log_w, product_z;
  std::vector<std::vector<double>> u_by_window;  // [k][replicate]
};

CellSeries collect_series(const CellResult& res, const CellParams& cell) {
  CellSeries s;
  s.u_by_window.assign(size_t(cell.M), {});
  size_t fail_idx = 0;
  for (int64_t r = 0; r < int64_t(res.samples.size()); ++r) {
    if (fail_idx < res.failures.size() && res.failures[fail_idx].first == r) {
      ++fail_idx;
      continue;
    }
    const PartitionSample& ps = res.samples[size_t(r)];
    if (ps.has_w) {
      s.w.push_back(ps.w);
      s.log_w.push_back(ps.log_w);
    }
    s.product_z.push_back(ps.product_z);
    for (int k = 0; k < cell.M; ++k) s.u_by_window[size_t(k)].push_back(ps.u[size_t(k)]);
  }
  return s;
}

ordered_json cell_summary(ExperimentKind kind, const CellResult& res, const CellParams& cell,
                          double epsilon0, double alpha,
                          const ReturnProbabilityTable& table) {
  const CellSeries series = collect_series(res, cell);
  ordered_json j;
  j["N"] = cell.N;
  j["M"] = cell.M;
  j["beta_hat"] = cell.beta_hat;
  j["beta"] = res.beta;
  j["family"] = family_name(cell.family);
  j["dyadic_times"] = res.grid.times;
  j["replicates"] = res.samples.size();
  j["excluded"] = res.failures.size();
  const size_t n_ok = res.samples.size() - res.failures.size();
  j["used"] = n_ok;
  if (n_ok == 0) return j;

  if (!series.w.empty()) {
    j["mean_w"] = mean(series.w);
    j["se_w"] = se_of_mean(series.w);
    j["mean_log_w"] = mean(series.log_w);
  }
  j["mean_product_z"] = mean(series.product_z);

  switch (kind) {
    case ExperimentKind::clt: {
      const CltReport rep = clt_report(series.log_w, cell.beta_hat);
      ordered_json c;
      c["mean"] = rep.mean;
      c["variance"] = rep.variance;
      c["se_mean"] = rep.se_mean;
      c["w1"] = rep.w1;
      c["target_mean"] = rep.target_mean;
      c["target_variance"] = rep.target_variance;
      j["clt"] = c;
      break;
    }
    case ExperimentKind::decouple: {
      const GapEstimate gap = l2_decoupling_gap(series.w, series.product_z);
      j["l2_gap"] = gap.gap;
      j["l2_gap_se"] = gap.se;
      break;
    }
    case ExperimentKind::taylor: {
      std::vector<double> gaps, truncated;
      size_t fail_idx = 0;
      for (int64_t r = 0; r < int64_t(res.samples.size()); ++r) {
        if (fail_idx < res.failures.size() && res.failures[fail_idx].first == r) {
          ++fail_idx;
          continue;
        }
        gaps.push_back(taylor_gap(res.samples[size_t(r)].u));
        truncated.push_back(truncated_variance_sum(res.samples[size_t(r)].u, alpha));
      }
      j["mean_taylor_gap"] = mean(gaps);
      ordered_json tails;
      for (double delta : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
        size_t cnt = 0;
        for (double g : gaps) {
          if (g >= delta) ++cnt;
        }
        char key[16];
        std::snprintf(key, sizeof(key), "%g", delta);
        tails[key] = double(cnt) / double(gaps.size());
      }
      j["taylor_gap_tail_freq"] = tails;
      j["alpha"] = alpha;
      j["mean_truncated_variance_sum"] = mean(truncated);
      j["oracle_lambda_mn"] =
          lambda_MN(cell.N, cell.M, cell.beta_hat, cell.family, table);
      const double p = 2.0 + epsilon0;
      ordered_json moms = ordered_json::array();
      double sup = 0.0;
      for (int k = 0; k < cell.M; ++k) {
        const MomentEstimate est = empirical_moment(series.u_by_window[size_t(k)], p, false);
        ordered_json mrow;
        mrow["k"] = k + 1;
        mrow["value"] = est.value;
        mrow["se"] = est.se;
        moms.push_back(mrow);
        sup = std::max(sup, est.value);
      }
      j["u_abs_moment_p"] = p;
      j["u_abs_moment_per_window"] = moms;
      j["sup_u_abs_moment"] = sup;
      j["sup_scaled"] = sup * std::pow(double(cell.M), 0.5 * p);
      break;
    }
    case ExperimentKind::supercritical: {
      j["median_w"] = median(series.w);
      j["median_log_w"] = median(series.log_w);
      break;
    }
    default:
      break;
  }
  return j;
}

std::string tables_csv(const ReturnProbabilityTable& table, int64_t N,
                       const std::vector<double>& beta_hats) {
  std::ostringstream out;
  out << "n,p2n,R_n";
  for (double b : beta_hats) out << ",beta_N_b" << beta_tag(b);
  out << '\n';
  char buf[40];
  for (int64_t n = 1; n <= N; ++n) {
    out << n;
    std::snprintf(buf, sizeof(buf), "%.17g", table.return_probability(n));
    out << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", table.overlap_sum(n));
    out << ',' << buf;
    for (double b : beta_hats) {
      std::snprintf(buf, sizeof(buf), "%.17g", b / std::sqrt(table.overlap_sum(n)));
      out << ',' << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string moment_table_csv(const MomentTable& mt) {
  std::ostringstream out;
  out << "k,t_lo,t_hi,second_moment,var_u,running_lambda_mn,limit_value\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (const auto& row : mt.rows) {
    out << row.k << ',' << row.t_lo << ',' << row.t_hi;
    put(row.second_moment);
    put(row.var_u);
    put(row.running_lambda_mn);
    put(row.limit_value);
    out << '\n';
  }
  return out.str();
}

}  // namespace

RunManifest run(const ExperimentConfig& config) {
  validate_config(config);
  const auto t0 = std::chrono::steady_clock::now();

  std::filesystem::create_directories(config.out_dir);
  RunManifest manifest;
  manifest.version = kVersion;
  manifest.out_dir = config.out_dir;
  manifest.config_echo = config_json(config).dump();

  const int64_t max_n = *std::max_element(config.N_values.begin(), config.N_values.end());
  const ReturnProbabilityTable table = ReturnProbabilityTable::build(max_n);
  manifest.table_checksum =
      fnv1a(table.values.data(), table.values.size() * sizeof(double));

  auto path_of = [&](const std::string& name) {
    return (std::filesystem::path(config.out_dir) / name).string();
  };

  if (config.kind == ExperimentKind::tables) {
    for (int64_t N : config.N_values) {
      write_text(path_of("tables_N" + std::to_string(N) + ".csv"),
                 tables_csv(table, N, config.beta_hats), manifest.files);
    }
  } else if (config.kind == ExperimentKind::moments) {
    for (int64_t N : config.N_values) {
      for (int M : config.M_values) {
        for (double b : config.beta_hats) {
          const MomentTable mt = build_moment_table(N, M, b, config.family, table);
          const std::string base = cell_base(config.kind, N, M, b);
          write_text(path_of(base + ".csv"), moment_table_csv(mt), manifest.files);
          ordered_json j;
          j["N"] = N;
          j["M"] = M;
          j["beta_hat"] = b;
          j["family"] = family_name(config.family);
          j["beta"] = mt.beta;
          j["big_lambda"] = mt.big_lambda;
          j["lambda_mn"] = mt.lambda_mn;
          if (b < 1.0) j["lambda2_limit"] = std::log(1.0 / (1.0 - b * b));
          write_text(path_of(base + "_summary.json"), j.dump(2) + "\n", manifest.files);
        }
      }
    }
  } else {
    uint64_t cell_index = 0;
    for (int64_t N : config.N_values) {
      for (int M : config.M_values) {
        for (double b : config.beta_hats) {
          CellParams cell;
          cell.N = N;
          cell.M = M;
          cell.beta_hat = b;
          cell.family = config.family;
          cell.cell_seed = derive_cell_seed(config.master_seed, cell_index);
          cell.windows_only = (config.kind == ExperimentKind::taylor);
          const CellResult res = run_cell(cell, config.replicates, config.workers);
          manifest.total_replicates += config.replicates;
          manifest.excluded_replicates += int64_t(res.failures.size());
          if (double(res.failures.size()) > 0.001 * double(config.replicates)) {
            throw std::runtime_error(
                "cell " + cell_base(config.kind, N, M, b) + ": " +
                std::to_string(res.failures.size()) +
                " replicates excluded, above the 0.1% budget");
          }
          const std::string base = cell_base(config.kind, N, M, b);
          write_text(path_of(base + ".jsonl"), samples_jsonl(res, cell), manifest.files);
          write_text(path_of(base + ".csv"), samples_csv(res, cell), manifest.files);
          const ordered_json summary =
              cell_summary(config.kind, res, cell, config.epsilon0, config.alpha, table);
          write_text(path_of(base + "_summary.json"), summary.dump(2) + "\n",
                     manifest.files);
          ++cell_index;
        }
      }
    }
  }

  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.total_replicates = std::max<int64_t>(manifest.total_replicates, 0);

  ordered_json mj;
  mj["version"] = manifest.version;
  mj["config"] = ordered_json::parse(manifest.config_echo);
  mj["table_checksum"] = manifest.table_checksum;
  mj["total_replicates"] = manifest.total_replicates;
  mj["excluded_replicates"] = manifest.excluded_replicates;
  mj["files"] = manifest.files;
  mj["wall_seconds"] = manifest.wall_seconds;
  manifest.manifest_path = path_of("manifest.json");
  {
    std::ofstream out(manifest.manifest_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + manifest.manifest_path);
    out << mj.dump(2) << "\n";
  }
  return manifest;
}

std::vector<RunManifest> sweep(const std::vector<ExperimentConfig>& configs) {
  std::vector<RunManifest> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(run(c));
  return out;
}

}  // namespace dpre
