#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "stegcost/evolve.hpp"

namespace stegcost::evolve {

namespace {

using nlohmann::json;

std::string_view trigger_name(RefreshTrigger t) {
  return t == RefreshTrigger::iterations ? "iterations" : "wall_clock";
}
std::string_view rule_name(PromotionRule r) {
  return r == PromotionRule::at_least_minus_epsilon ? "at_least_minus_epsilon" : "at_least_plus_epsilon";
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigurationError(where + " must be a JSON object");
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ConfigurationError("unknown config key '" + where + item.key() + "'");
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

json config_to_json(const EvolutionConfig& c) {
  json llm = {{"provider", c.llm.provider},
              {"mock_seed", c.llm.mock_seed},
              {"mock_fault_rate", c.llm.mock_fault_rate},
              {"endpoint", c.llm.http.endpoint},
              {"model", c.llm.http.model},
              {"api_key_env", c.llm.http.api_key_env},
              {"temperature", c.llm.http.temperature},
              {"timeout_ms", c.llm.http.timeout.count()},
              {"retries", c.llm.http.retries},
              {"retry_backoff_ms", c.llm.http.retry_backoff.count()}};
  json corpus = {{"dir", c.corpus.dir},
                 {"synthetic_count", c.corpus.synthetic_count},
                 {"width", c.corpus.width},
                 {"height", c.corpus.height},
                 {"synthetic_seed", c.corpus.synthetic_seed}};
  return {{"n", c.n},
          {"r", c.r},
          {"n_p", c.n_p},
          {"T0", c.T0},
          {"T_decay", c.T_decay},
          {"T_floor", c.T_floor},
          {"max_iterations", c.max_iterations},
          {"burn_in_iters", c.burn_in_iters},
          {"stage2_period", c.stage2_period},
          {"refresh_trigger", trigger_name(c.refresh_trigger)},
          {"refresh_every", c.refresh_every},
          {"refresh_hours", c.refresh_hours},
          {"refresh_fraction", c.refresh_fraction},
          {"epsilon", c.epsilon},
          {"promotion", rule_name(c.promotion)},
          {"pool_prelim_margin", c.pool_prelim_margin},
          {"pool_accurate_margin", c.pool_accurate_margin},
          {"ps_threshold", c.ps_threshold},
          {"stage1_rate", c.stage1_rate},
          {"rates", c.rates},
          {"seed", c.seed},
          {"seeds", c.seeds},
          {"stop_on_superior", c.stop_on_superior},
          {"corpus", corpus},
          {"llm", llm},
          {"instruction", c.instruction},
          {"threads", c.threads},
          {"interpreter_max_ops", c.interpreter_max_ops},
          {"interpreter_time_ms", c.interpreter_time_ms}};
}

EvolutionConfig config_from_json(const json& j) {
  EvolutionConfig c;
  std::set<std::string> known;
  const json defaults = config_to_json(c);
  for (const auto& item : defaults.items()) known.insert(item.key());
  reject_unknown(j, known, "");

  read(j, "n", c.n);
  read(j, "r", c.r);
  read(j, "n_p", c.n_p);
  read(j, "T0", c.T0);
  read(j, "T_decay", c.T_decay);
  read(j, "T_floor", c.T_floor);
  read(j, "max_iterations", c.max_iterations);
  read(j, "burn_in_iters", c.burn_in_iters);
  read(j, "stage2_period", c.stage2_period);
  read(j, "refresh_every", c.refresh_every);
  read(j, "refresh_hours", c.refresh_hours);
  read(j, "refresh_fraction", c.refresh_fraction);
  read(j, "epsilon", c.epsilon);
  read(j, "pool_prelim_margin", c.pool_prelim_margin);
  read(j, "pool_accurate_margin", c.pool_accurate_margin);
  read(j, "ps_threshold", c.ps_threshold);
  read(j, "stage1_rate", c.stage1_rate);
  read(j, "rates", c.rates);
  read(j, "seed", c.seed);
  read(j, "seeds", c.seeds);
  read(j, "stop_on_superior", c.stop_on_superior);
  read(j, "instruction", c.instruction);
  read(j, "threads", c.threads);
  read(j, "interpreter_max_ops", c.interpreter_max_ops);
  read(j, "interpreter_time_ms", c.interpreter_time_ms);

  std::string s;
  if (j.contains("refresh_trigger")) {
    read(j, "refresh_trigger", s);
    if (s == "iterations") c.refresh_trigger = RefreshTrigger::iterations;
    else if (s == "wall_clock") c.refresh_trigger = RefreshTrigger::wall_clock;
    else throw ConfigurationError("refresh_trigger must be 'iterations' or 'wall_clock'");
  }
  if (j.contains("promotion")) {
    read(j, "promotion", s);
    if (s == "at_least_minus_epsilon") c.promotion = PromotionRule::at_least_minus_epsilon;
    else if (s == "at_least_plus_epsilon") c.promotion = PromotionRule::at_least_plus_epsilon;
    else throw ConfigurationError("promotion must be 'at_least_minus_epsilon' or 'at_least_plus_epsilon'");
  }
  if (j.contains("corpus")) {
    const json& k = j.at("corpus");
    reject_unknown(k, {"dir", "synthetic_count", "width", "height", "synthetic_seed"}, "corpus.");
    read(k, "dir", c.corpus.dir);
    read(k, "synthetic_count", c.corpus.synthetic_count);
    read(k, "width", c.corpus.width);
    read(k, "height", c.corpus.height);
    read(k, "synthetic_seed", c.corpus.synthetic_seed);
  }
  if (j.contains("llm")) {
    const json& k = j.at("llm");
    reject_unknown(k,
                   {"provider", "mock_seed", "mock_fault_rate", "endpoint", "model", "api_key_env", "temperature",
                    "timeout_ms", "retries", "retry_backoff_ms"},
                   "llm.");
    read(k, "provider", c.llm.provider);
    read(k, "mock_seed", c.llm.mock_seed);
    read(k, "mock_fault_rate", c.llm.mock_fault_rate);
    read(k, "endpoint", c.llm.http.endpoint);
    read(k, "model", c.llm.http.model);
    read(k, "api_key_env", c.llm.http.api_key_env);
    read(k, "temperature", c.llm.http.temperature);
    read(k, "retries", c.llm.http.retries);
    std::int64_t ms = c.llm.http.timeout.count();
    read(k, "timeout_ms", ms);
    c.llm.http.timeout = std::chrono::milliseconds(ms);
    ms = c.llm.http.retry_backoff.count();
    read(k, "retry_backoff_ms", ms);
    c.llm.http.retry_backoff = std::chrono::milliseconds(ms);
  }
  validate_config(c);
  return c;
}

EvolutionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void validate_config(const EvolutionConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigurationError("invalid config: " + what);
  };
  require(c.n >= 1, "n must be positive");
  require(c.r >= 1, "r must be positive");
  require(c.n_p >= 1, "n_p must be positive");
  require(c.T0 > 0.0 && c.T_floor > 0.0, "temperatures must be positive");
  require(c.T_decay > 0.0 && c.T_decay <= 1.0, "T_decay must lie in (0, 1]");
  require(c.max_iterations >= 0, "max_iterations must be non-negative");
  require(c.burn_in_iters >= 1, "burn_in_iters must be positive");
  require(c.stage2_period >= 1, "stage2_period must be positive");
  require(c.refresh_every >= 1, "refresh_every must be positive");
  require(c.refresh_hours > 0.0, "refresh_hours must be positive");
  require(c.refresh_fraction >= 0.0 && c.refresh_fraction <= 1.0, "refresh_fraction must lie in [0, 1]");
  require(c.epsilon >= 0.0, "epsilon must be non-negative");
  require(c.ps_threshold >= 1, "ps_threshold must be positive");
  const double max_rate = std::log2(3.0);
  require(c.stage1_rate > 0.0 && c.stage1_rate <= max_rate, "stage1_rate must lie in (0, log2 3]");
  require(!c.rates.empty(), "rates must be non-empty");
  for (double r : c.rates) require(r > 0.0 && r <= max_rate, "rates must lie in (0, log2 3]");
  require(!c.seeds.empty(), "at least one seed program is required");
  require(c.corpus.width > 0 && c.corpus.height > 0, "corpus size must be positive");
  require(c.llm.provider == "mock" || c.llm.provider == "http", "llm.provider must be 'mock' or 'http'");
  require(c.llm.mock_fault_rate >= 0.0 && c.llm.mock_fault_rate <= 1.0, "llm.mock_fault_rate must lie in [0, 1]");
  require(c.llm.provider != "http" || !c.llm.http.endpoint.empty(), "llm.endpoint is required for http");
  require(c.llm.http.retries >= 0, "llm.retries must be non-negative");
  require(c.threads >= 0, "threads must be non-negative");
  require(c.interpreter_max_ops > 0 && c.interpreter_time_ms > 0, "interpreter limits must be positive");
}

double temperature(const EvolutionConfig& c, int k) {
  return std::max(c.T_floor, c.T0 * std::pow(c.T_decay, k));
}

bool stage2_due(const EvolutionConfig& c, int i) {
  return i >= c.burn_in_iters && (i - c.burn_in_iters) % c.stage2_period == 0;
}

bool promoted(double accurate, double s_init, double epsilon, PromotionRule rule) {
  // Scores are multiples of 1e-4 or ratios of small counts; the slack absorbs
  // the rounding in s_init -/+ epsilon.
  const double bar = rule == PromotionRule::at_least_minus_epsilon ? s_init - epsilon : s_init + epsilon;
  return accurate >= bar - 1e-9;
}

bool outperforms_at_all_rates(const std::vector<double>& candidate, const std::vector<double>& baseline) {
  if (candidate.size() != baseline.size() || candidate.empty()) return false;
  for (std::size_t i = 0; i < candidate.size(); ++i)
    if (!(candidate[i] > baseline[i])) return false;
  return true;
}

std::unique_ptr<LlmClient> make_client(const LlmSettings& s) {
  if (s.provider == "mock") return std::make_unique<MockProvider>(s.mock_seed, s.mock_fault_rate);
  if (s.provider == "http") return std::make_unique<HttpProvider>(s.http);
  throw ConfigurationError("unknown llm provider '" + s.provider + "'");
}

}  // namespace stegcost::evolve
