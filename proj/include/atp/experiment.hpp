#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "atp/attack.hpp"
#include "atp/baselines.hpp"
#include "atp/metrics.hpp"
#include "atp/table.hpp"
#include "atp/victim.hpp"

namespace atp {

enum class MethodKind { kVanilla, kRandom, kBestOfK, kRowReversal, kColReversal, kEvolutionary, kAtp };

struct MethodSpec {
  std::string name;  // unique label; used in reports and resume keys
  MethodKind kind = MethodKind::kVanilla;
  int k = 20;     // best-of-k only
  EvoConfig evo;  // evolutionary only
  AtpConfig atp;  // atp only

  static MethodSpec vanilla() { return {"vanilla", MethodKind::kVanilla}; }
  static MethodSpec random() { return {"random", MethodKind::kRandom}; }
  static MethodSpec best_of(int k) {
    MethodSpec m{"best_of_" + std::to_string(k), MethodKind::kBestOfK};
    m.k = k;
    return m;
  }
  static MethodSpec row_reversal() { return {"row_reversal", MethodKind::kRowReversal}; }
  static MethodSpec col_reversal() { return {"col_reversal", MethodKind::kColReversal}; }
  static MethodSpec evolutionary(const EvoConfig& cfg) {
    MethodSpec m{"evolutionary", MethodKind::kEvolutionary};
    m.evo = cfg;
    return m;
  }
  static MethodSpec atp_attack(std::string name, const AtpConfig& cfg) {
    MethodSpec m{std::move(name), MethodKind::kAtp};
    m.atp = cfg;
    return m;
  }
};

struct ExperimentRecord {
  std::string example_id;
  std::string method;
  bool failed = false;
  std::string error;
  double clean_score = 0.0;
  double attacked_score = 0.0;
  double clean_loss = 0.0;
  double attacked_loss = 0.0;
  std::vector<std::size_t> row_perm;
  std::vector<std::size_t> col_perm;
  std::string clean_generation;
  std::string attacked_generation;
  double runtime_ms = 0.0;  // measured per run; never written to results files

  bool operator==(const ExperimentRecord& o) const {
    return example_id == o.example_id && method == o.method && failed == o.failed &&
           error == o.error && clean_score == o.clean_score && attacked_score == o.attacked_score &&
           clean_loss == o.clean_loss && attacked_loss == o.attacked_loss && row_perm == o.row_perm &&
           col_perm == o.col_perm && clean_generation == o.clean_generation &&
           attacked_generation == o.attacked_generation;
  }
};

// Results-file encoding: deterministic fields only, so identical runs produce
// byte-identical files.
inline nlohmann::json record_to_json(const ExperimentRecord& r) {
  return nlohmann::json{{"example_id", r.example_id},
                        {"method", r.method},
                        {"failed", r.failed},
                        {"error", r.error},
                        {"clean_score", r.clean_score},
                        {"attacked_score", r.attacked_score},
                        {"clean_loss", r.clean_loss},
                        {"attacked_loss", r.attacked_loss},
                        {"row_perm", r.row_perm},
                        {"col_perm", r.col_perm},
                        {"clean_generation", r.clean_generation},
                        {"attacked_generation", r.attacked_generation}};
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  ExperimentRecord r;
  r.example_id = j.at("example_id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.clean_score = j.at("clean_score").get<double>();
  r.attacked_score = j.at("attacked_score").get<double>();
  r.clean_loss = j.at("clean_loss").get<double>();
  r.attacked_loss = j.at("attacked_loss").get<double>();
  r.row_perm = j.at("row_perm").get<std::vector<std::size_t>>();
  r.col_perm = j.at("col_perm").get<std::vector<std::size_t>>();
  r.clean_generation = j.at("clean_generation").get<std::string>();
  r.attacked_generation = j.at("attacked_generation").get<std::string>();
  if (j.contains("runtime_ms")) r.runtime_ms = j.at("runtime_ms").get<double>();
  return r;
}

struct MethodAggregate {
  std::string method;
  int n = 0;
  int failures = 0;
  double mean_clean_score = 0.0;
  double mean_attacked_score = 0.0;
  double mean_clean_loss = 0.0;
  double mean_attacked_loss = 0.0;
  double mean_runtime_ms = 0.0;
};

struct ExperimentReport {
  std::vector<ExperimentRecord> records;
  nlohmann::json config_snapshot = nlohmann::json::object();
  std::uint64_t seed = 0;

  // Unweighted means over non-failed records, methods in first-seen order.
  std::vector<MethodAggregate> aggregates() const {
    std::vector<MethodAggregate> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
      auto it = index.find(r.method);
      if (it == index.end()) {
        it = index.emplace(r.method, out.size()).first;
        out.push_back(MethodAggregate{r.method});
      }
      MethodAggregate& agg = out[it->second];
      if (r.failed) {
        ++agg.failures;
        continue;
      }
      ++agg.n;
      agg.mean_clean_score += r.clean_score;
      agg.mean_attacked_score += r.attacked_score;
      agg.mean_clean_loss += r.clean_loss;
      agg.mean_attacked_loss += r.attacked_loss;
      agg.mean_runtime_ms += r.runtime_ms;
    }
    for (auto& agg : out) {
      if (agg.n == 0) continue;
      agg.mean_clean_score /= agg.n;
      agg.mean_attacked_score /= agg.n;
      agg.mean_clean_loss /= agg.n;
      agg.mean_attacked_loss /= agg.n;
      agg.mean_runtime_ms /= agg.n;
    }
    return out;
  }
};

class ResultSink {
 public:
  virtual ~ResultSink() = default;
  virtual void write(std::size_t task_index, const ExperimentRecord& record) = 0;
};

// Line-delimited JSON sink. Records may arrive out of order from parallel
// workers; they are buffered and flushed strictly in task order, one fsync'd
// line at a time, so interrupting a run loses only unflushed completions and
// reruns stay byte-identical.
class JsonlResultSink : public ResultSink {
 public:
  JsonlResultSink(const std::string& path, std::size_t start_index = 0)
      : out_(path, start_index == 0 ? std::ios::binary | std::ios::trunc
                                    : std::ios::binary | std::ios::app),
        next_(start_index) {
    if (!out_) throw std::runtime_error("JsonlResultSink: cannot open " + path);
  }

  void write(std::size_t task_index, const ExperimentRecord& record) override {
    std::lock_guard<std::mutex> lock(mu_);
    pending_.emplace(task_index, record);
    while (!pending_.empty() && pending_.begin()->first == next_) {
      out_ << record_to_json(pending_.begin()->second).dump() << '\n';
      out_.flush();
      pending_.erase(pending_.begin());
      ++next_;
    }
  }

 private:
  std::ofstream out_;
  std::mutex mu_;
  std::map<std::size_t, ExperimentRecord> pending_;
  std::size_t next_;
};

inline std::vector<ExperimentRecord> load_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_results: cannot open " + path);
  std::vector<ExperimentRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  bool include_order_sensitive = false;
  std::size_t max_generate_tokens = 8;
  PositionMode pos_mode = PositionMode::kSerializedOrder;
};

// Maps a model response to an alignment score in [0, 1] for one example.
using ScoreFn = std::function<double(const TqaExample&, const std::string& response)>;

inline ScoreFn containment_score_fn() {
  return [](const TqaExample& ex, const std::string& response) {
    return containment_score(ex.answer, response).value;
  };
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t task_seed(std::uint64_t base, const std::string& id, const std::string& method) {
  std::uint64_t h = fnv1a(method, fnv1a(id));
  h ^= base + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

// Gradient-attack variants share one seed stream so row-only, column-only
// and joint runs start from the same initialization on a given example.
inline std::string seed_label(const MethodSpec& m) {
  return m.kind == MethodKind::kAtp ? std::string("atp") : m.name;
}

inline AttackResult dispatch_method(const ToyVictim& victim, const TqaExample& ex,
                                    const EncodedExample& enc, const MethodSpec& method,
                                    std::uint64_t seed, const ExperimentConfig& cfg) {
  const std::size_t n = ex.table.n_rows(), m = ex.table.n_cols();
  auto fixed_pair = [&](RowPerm rp, ColPerm cp) {
    AttackResult r;
    r.row_perm = std::move(rp);
    r.col_perm = std::move(cp);
    fill_generations(victim, enc, &r, cfg.pos_mode, cfg.max_generate_tokens);
    r.fitness = r.attacked_loss;
    return r;
  };
  switch (method.kind) {
    case MethodKind::kVanilla:
      return fixed_pair(identity_perm(n), identity_perm(m));
    case MethodKind::kRandom: {
      Rng rng(seed);
      auto [rp, cp] = random_attack(ex.table, rng);
      return fixed_pair(std::move(rp), std::move(cp));
    }
    case MethodKind::kRowReversal:
      return fixed_pair(row_reversal(ex.table), identity_perm(m));
    case MethodKind::kColReversal:
      return fixed_pair(identity_perm(n), col_reversal(ex.table));
    case MethodKind::kBestOfK: {
      Rng rng(seed);
      return best_of_k(victim, enc, method.k, make_ce_scorer(victim, enc, cfg.pos_mode), rng,
                       cfg.pos_mode, cfg.max_generate_tokens);
    }
    case MethodKind::kEvolutionary: {
      EvoConfig evo = method.evo;
      evo.seed = seed;
      return evolutionary_search(victim, enc, evo, make_ce_scorer(victim, enc, cfg.pos_mode),
                                 cfg.pos_mode, cfg.max_generate_tokens);
    }
    case MethodKind::kAtp: {
      AtpConfig atp = method.atp;
      atp.seed = seed;
      atp.pos_mode = cfg.pos_mode;
      atp.max_generate_tokens = cfg.max_generate_tokens;
      return run_atp(victim, ex, atp);
    }
  }
  throw std::logic_error("dispatch_method: unknown method kind");
}

}  // namespace detail

// Runs every method on every surviving example. Records stream to the sink
// in task order; per-example failures are recorded and the run continues.
// When `resume` holds records from an interrupted run they must form a prefix
// of this run's schedule and are reused instead of recomputed.
inline ExperimentReport run_experiment(const ToyVictim& victim,
                                       const std::vector<TqaExample>& examples,
                                       const std::vector<MethodSpec>& methods,
                                       const ExperimentConfig& cfg, const ScoreFn& score,
                                       ResultSink* sink = nullptr,
                                       const std::vector<ExperimentRecord>* resume = nullptr) {
  std::vector<const TqaExample*> kept;
  for (const auto& ex : examples)
    if (cfg.include_order_sensitive || !ex.order_sensitive) kept.push_back(&ex);

  struct Task {
    const TqaExample* example;
    const MethodSpec* method;
  };
  std::vector<Task> tasks;
  for (const TqaExample* ex : kept)
    for (const MethodSpec& m : methods) tasks.push_back({ex, &m});

  const std::size_t resumed = resume ? resume->size() : 0;
  if (resumed > tasks.size())
    throw std::runtime_error("run_experiment: resume file has more records than the schedule");
  for (std::size_t i = 0; i < resumed; ++i) {
    if ((*resume)[i].example_id != tasks[i].example->table.id ||
        (*resume)[i].method != tasks[i].method->name)
      throw std::runtime_error("run_experiment: resume records do not match the schedule");
  }

  ExperimentReport report;
  report.seed = cfg.seed;
  report.records.resize(tasks.size());
  for (std::size_t i = 0; i < resumed; ++i) report.records[i] = (*resume)[i];

  std::atomic<std::size_t> cursor{resumed};
  const int workers = std::max(1, cfg.workers);
  auto worker = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& task = tasks[i];
      ExperimentRecord rec;
      rec.example_id = task.example->table.id;
      rec.method = task.method->name;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const EncodedExample enc = encode_example(victim, *task.example);
        const AttackResult r = detail::dispatch_method(
            victim, *task.example, enc, *task.method,
            detail::task_seed(cfg.seed, rec.example_id, detail::seed_label(*task.method)), cfg);
        rec.clean_loss = r.clean_loss;
        rec.attacked_loss = r.attacked_loss;
        rec.clean_generation = r.clean_generation;
        rec.attacked_generation = r.attacked_generation;
        rec.row_perm = r.row_perm.map;
        rec.col_perm = r.col_perm.map;
        rec.clean_score = score(*task.example, r.clean_generation);
        rec.attacked_score = score(*task.example, r.attacked_generation);
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
      }
      rec.runtime_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      report.records[i] = rec;
      if (sink) sink->write(i, rec);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return report;
}

}  // namespace atp
