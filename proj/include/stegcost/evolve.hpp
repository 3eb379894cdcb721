#pragma once
// Evolutionary search over cost-function programs: a clustered program
// database, softmax reference sampling, prompting, preliminary rounds against
// a detector pool, periodic accurate evaluation with promotion and pool
// growth, and multi-rate validation. Every decision is journaled so a run can
// be replayed exactly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "stegcost/dsl.hpp"
#include "stegcost/llm.hpp"
#include "stegcost/prng.hpp"
#include "stegcost/steganalysis.hpp"

namespace stegcost::evolve {

// ---------------------------------------------------------------- database

enum class Status { candidate, seed, optimized, potential, superior, discarded };
std::string_view status_name(Status s);
Status parse_status(std::string_view name);

struct CandidateProgram {
  std::uint64_t id = 0;
  std::string source;  // canonical form
  std::vector<std::uint64_t> parents;
  int sub_index = -1;  // sub-database the program was derived in; -1 for seeds
  std::optional<double> prelim_score;
  std::optional<double> accurate_score;
  Status status = Status::candidate;

  /// Program length l_k: characters of the canonical form.
  std::size_t length() const { return source.size(); }
};

/// Cluster key: the score rounded to 4 decimals, held as an integer count of 1e-4.
std::int64_t score_key(double score);

struct Cluster {
  std::int64_t key = 0;
  std::vector<CandidateProgram> programs;
  double score() const { return static_cast<double>(key) / 1e4; }
};

struct SubDatabase {
  std::vector<Cluster> clusters;  // creation order

  /// Adds p to the cluster of its rounded prelim_score, creating the cluster if
  /// needed. Throws std::invalid_argument if p has no prelim_score.
  void insert(CandidateProgram p);
  /// Highest-score cluster; nullptr when empty.
  const Cluster* top_cluster() const;
  std::size_t program_count() const;
};

struct ProgramDatabase {
  std::vector<SubDatabase> subs;
  std::size_t program_count() const;
};

/// n sub-databases, each holding every seed clustered by score.
/// Throws std::invalid_argument on an empty seed list, an unscored seed or n < 1.
ProgramDatabase init_database(const std::vector<CandidateProgram>& seeds, int n);

inline constexpr double kLengthEpsilon = 1e-6;

/// Softmax of cluster scores at temperature T, in cluster order.
std::vector<double> cluster_probabilities(const SubDatabase& sub, double T);
/// Softmax of -l' with l' = (l - min) / (max - min + eps), in program order.
std::vector<double> program_probabilities(const Cluster& c, double eps = kLengthEpsilon);

/// Index drawn from probs (summing to 1) with one uniform; the last index
/// absorbs rounding.
std::size_t draw_index(const std::vector<double>& probs, Xorshift64Star& rng);

struct ReferenceIndex {
  int sub = 0;
  std::size_t cluster = 0;
  std::size_t program = 0;
};

/// Draws a cluster of sub-database `sub`, then a program in it. Singleton
/// clusters and singleton databases skip their draw.
ReferenceIndex sample_in_sub(const ProgramDatabase& db, int sub, double T, Xorshift64Star& rng);
/// Uniform sub-database, then sample_in_sub. Throws std::invalid_argument on an
/// empty database or T <= 0.
ReferenceIndex sample_reference(const ProgramDatabase& db, double T, Xorshift64Star& rng);
const CandidateProgram& program_at(const ProgramDatabase& db, const ReferenceIndex& at);

struct RefreshReport {
  std::vector<int> replaced;  // bad sub-database indices
  std::vector<int> donors;    // good sub-database copied into each
};

/// Replaces the floor(fraction * n) sub-databases with the lowest top score by
/// the top cluster of a uniformly chosen remaining one. Sub-databases whose top
/// score equals the best are never replaced, so a full tie is a no-op.
RefreshReport refresh_database(ProgramDatabase& db, double fraction, Xorshift64Star& rng);

nlohmann::json program_to_json(const CandidateProgram& p);
CandidateProgram program_from_json(const nlohmann::json& j);
nlohmann::json database_to_json(const ProgramDatabase& db);
ProgramDatabase database_from_json(const nlohmann::json& j);

/// Writes one <id>.scf per resident program plus index.json with the
/// clusters, scores and seeds.
void write_snapshot(const std::filesystem::path& dir, const ProgramDatabase& db,
                    const std::vector<CandidateProgram>& seeds);

/// Canonical text with the function name's version suffix dropped; equal keys
/// mean the same program.
std::string dedup_key(const dsl::DslProgram& p);

// ------------------------------------------------------------------ prompt

struct PromptReference {
  int sub_index = 0;
  std::string source;
};

/// Default instruction appended after the code block.
std::string default_instruction();

/// Code block with the references renamed _v0.._v{r-1}, followed by an empty
/// placeholder _v{r} with the first reference's base name and parameter, then
/// the instruction verbatim. Throws std::invalid_argument on no references,
/// references from different sub-databases, or an unparsable reference.
std::string build_prompt(const std::vector<PromptReference>& refs, const std::string& instruction);

struct PromptParts {
  std::vector<std::string> references;  // sources as they appear in the prompt
  std::string target_name;
  std::string param;
};

/// Inverse of build_prompt's layout; nullopt if the prompt has no placeholder.
std::optional<PromptParts> split_prompt(const std::string& prompt);

// ------------------------------------------------------------------ config

enum class PromotionRule { at_least_minus_epsilon, at_least_plus_epsilon };
enum class RefreshTrigger { iterations, wall_clock };

struct CorpusSettings {
  /// Directory of .pgm covers; empty means a synthetic corpus.
  std::string dir;
  std::size_t synthetic_count = 64;
  int width = 64;
  int height = 64;
  std::uint64_t synthetic_seed = 1;
};

struct LlmSettings {
  std::string provider = "mock";  // mock | http
  std::uint64_t mock_seed = 1;
  double mock_fault_rate = 0.1;
  HttpSettings http;
};

struct EvolutionConfig {
  int n = 2;    // sub-databases
  int r = 1;    // references per prompt
  int n_p = 4;  // responses per prompt
  double T0 = 0.1;
  double T_decay = 0.97;
  double T_floor = 0.01;
  int max_iterations = 20;
  int burn_in_iters = 10;
  int stage2_period = 5;
  RefreshTrigger refresh_trigger = RefreshTrigger::iterations;
  int refresh_every = 40;
  double refresh_hours = 4.0;
  double refresh_fraction = 0.5;
  double epsilon = 0.01;
  PromotionRule promotion = PromotionRule::at_least_minus_epsilon;
  /// Pool growth: prelim >= s_init + pool_prelim_margin and accurate < s_init - pool_accurate_margin.
  double pool_prelim_margin = 0.0;
  double pool_accurate_margin = 0.01;
  int ps_threshold = 10;
  double stage1_rate = 0.4;
  std::vector<double> rates{0.4, 0.3, 0.2, 0.1};
  std::uint64_t seed = 1;
  /// Shipped program stems (wow, hill, ...) or .scf paths; the first is p_init.
  std::vector<std::string> seeds{"wow"};
  bool stop_on_superior = true;
  CorpusSettings corpus;
  LlmSettings llm;
  std::string instruction;  // empty = default_instruction()
  int threads = 0;          // 0 = runtime default
  std::int64_t interpreter_max_ops = 2'000'000'000;
  std::int64_t interpreter_time_ms = 30'000;
};

nlohmann::json config_to_json(const EvolutionConfig& c);
/// Strict: unknown keys are errors. Missing keys keep their defaults.
EvolutionConfig config_from_json(const nlohmann::json& j);
EvolutionConfig load_config(const std::filesystem::path& path);
/// Throws ConfigurationError naming the first violated constraint.
void validate_config(const EvolutionConfig& c);

/// T_k = max(T_floor, T0 * T_decay^k), k counted from 0.
double temperature(const EvolutionConfig& c, int k);
/// Stage 2 runs after 1-based iteration i when i >= burn_in and (i - burn_in) % period == 0.
bool stage2_due(const EvolutionConfig& c, int i);
bool promoted(double accurate, double s_init, double epsilon, PromotionRule rule);
/// Strictly better at every rate.
bool outperforms_at_all_rates(const std::vector<double>& candidate, const std::vector<double>& baseline);

std::unique_ptr<LlmClient> make_client(const LlmSettings& s);

// ----------------------------------------------------------------- journal

struct JournalRecord {
  int iter = 0;
  std::string event_type;
  nlohmann::json payload;
  std::string rng_state_digest;

  nlohmann::json to_json() const;
  static JournalRecord from_json(const nlohmann::json& j);
  bool operator==(const JournalRecord& o) const;
};

/// Append-only event log, kept in memory and optionally mirrored to a
/// JSON-lines file (flushed per record).
class Journal {
 public:
  Journal() = default;
  explicit Journal(const std::filesystem::path& file);

  void append(JournalRecord r);
  const std::vector<JournalRecord>& records() const { return records_; }

  static std::vector<JournalRecord> read(const std::filesystem::path& file);

 private:
  std::vector<JournalRecord> records_;
  std::unique_ptr<std::ofstream> out_;
};

/// 16 hex digits of FNV-1a over the generator state.
std::string rng_digest(const Xorshift64Star& rng);

// ------------------------------------------------------------------ engine

struct IterationReport {
  int iter = 0;  // 1-based
  double temperature = 0.0;
  int sub_index = 0;
  std::vector<std::uint64_t> reference_ids;
  int n_p = 0;  // responses received
  int n_q = 0;  // executable, scored and inserted
  std::map<std::string, int> faults;  // parse, name, duplicate, infeasible, fault kinds
  std::vector<std::uint64_t> inserted;
  bool refreshed = false;
};

struct ValidationReport {
  std::uint64_t id = 0;
  std::vector<double> rates;
  std::vector<double> candidate;
  std::vector<double> baseline;
  bool superior = false;
};

struct Stage2Report {
  int iter = 0;
  std::size_t ps_size = 0;
  std::vector<std::uint64_t> evaluated;
  std::vector<std::uint64_t> promoted;
  std::vector<std::uint64_t> pool_added;
  std::vector<std::uint64_t> discarded;
  std::vector<ValidationReport> validations;
  std::size_t pool_size = 0;
  double best_seed_accurate = 0.0;
};

struct RunReport {
  int iterations = 0;
  double s_init = 0.0;
  std::vector<IterationReport> rounds;
  std::vector<Stage2Report> stage2;
  std::optional<CandidateProgram> superior;
  std::size_t pool_size = 0;
  nlohmann::json database;  // final state

  nlohmann::json to_json() const;
};

/// Covers split into the detector-training half (initial pool, accurate
/// evaluation) and the preliminary-scoring half.
struct SplitCorpus {
  FeatureCorpus training;
  FeatureCorpus scoring;
};

SplitCorpus split_corpus(std::vector<GrayImage> covers, std::uint64_t seed);
std::vector<GrayImage> load_corpus(const CorpusSettings& s);

class Engine {
 public:
  /// `journal` may be null. The client must outlive the engine.
  Engine(EvolutionConfig config, LlmClient& client, Journal* journal = nullptr);

  /// Builds the corpus, the initial pool, the seeds and the database.
  /// `covers` overrides config.corpus when given.
  void setup(std::optional<std::vector<GrayImage>> covers = std::nullopt);
  bool ready() const { return ready_; }

  /// The whole loop; setup() runs first if needed (not at all for zero iterations).
  RunReport run();

  IterationReport preliminary_round(int iter);
  RefreshReport refresh(int iter);
  Stage2Report stage2(int iter);
  ValidationReport multi_rate_validate(const CandidateProgram& candidate);

  /// Called after every iteration, stage 2 included.
  std::function<void(const Engine&, int iter)> on_iteration;
  /// Overrides the refresh trigger (replay of wall-clock runs).
  std::function<bool(int iter)> refresh_decider;

  const EvolutionConfig& config() const { return config_; }
  const ProgramDatabase& database() const { return db_; }
  ProgramDatabase& mutable_database() { return db_; }
  const EvaluatorPool& pool() const { return pool_; }
  const std::vector<CandidateProgram>& seeds() const { return seeds_; }
  double s_init() const { return s_init_; }
  const SplitCorpus& corpus() const { return corpus_; }
  const Xorshift64Star& rng() const { return rng_; }

  /// Preliminary score of a program on the scoring half with the current pool.
  /// Throws NonExecutable with the fault description on failure.
  double prelim_score(const dsl::DslProgram& prog);
  /// Accurate evaluation at `rate` on the training half with the run's fixed split.
  AccurateResult accurate(const dsl::DslProgram& prog, double rate, std::uint64_t tag);

  /// Embedding seed of preliminary scoring (see make_stegos).
  std::uint64_t stego_seed() const;

  /// Next program id; ids are unique within a run.
  std::uint64_t next_id() { return next_id_++; }

 private:
  struct Failure {
    std::string kind;
    std::string message;
  };
  using StegoFeatures = std::variant<std::vector<FeatureVector>, Failure>;
  StegoFeatures compute_stegos(const dsl::DslProgram& prog) const;
  const StegoFeatures& scoring_stegos(const dsl::DslProgram& prog);
  const std::string& key_of(const CandidateProgram& p);
  double score_with_pool(const std::vector<FeatureVector>& stego) const;
  void record(int iter, const std::string& type, nlohmann::json payload);
  void rescore_seeds();
  dsl::Limits limits() const;

  EvolutionConfig config_;
  LlmClient& client_;
  Journal* journal_;
  Xorshift64Star rng_;
  bool ready_ = false;
  SplitCorpus corpus_;
  EvaluatorPool pool_;
  std::vector<CandidateProgram> seeds_;
  ProgramDatabase db_;
  double s_init_ = 0.0;
  std::uint64_t next_id_ = 1;
  std::map<std::string, StegoFeatures> stego_cache_;
  std::map<std::uint64_t, std::string> keys_;
  std::optional<std::vector<double>> baseline_rates_;
  std::optional<CandidateProgram> superior_;
  std::chrono::steady_clock::time_point last_refresh_;
};

/// Runs with the configured provider, journaling to run_dir/journal.jsonl and
/// writing run_dir/snapshot/, run_dir/report.json and, when found,
/// run_dir/superior.scf. Zero iterations create nothing.
RunReport run_evolution(const EvolutionConfig& config, const std::filesystem::path& run_dir);

struct ReplayResult {
  bool identical = false;
  std::size_t records_compared = 0;
  /// Index of the first differing record when not identical.
  std::optional<std::size_t> first_mismatch;
  std::string message;
  RunReport report;
};

/// Re-runs the recorded configuration with the recorded responses and compares
/// every journal record and the final database.
ReplayResult replay(const std::vector<JournalRecord>& journal);

}  // namespace stegcost::evolve
