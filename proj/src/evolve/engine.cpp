#include <algorithm>
#include <deque>
#include <exception>
#include <fstream>
#include <set>

#include "stegcost/embedder.hpp"
#include "stegcost/evolve.hpp"
#include "stegcost/parallel.hpp"
#include "stegcost/pgm.hpp"
#include "stegcost/synthetic.hpp"

namespace stegcost::evolve {

namespace {

using nlohmann::json;

// Stream tags for derive_seed.
constexpr std::uint64_t kEngineTag = 0xE7617E;
constexpr std::uint64_t kSplitTag = 0x5911;
constexpr std::uint64_t kPoolTag = 0x9001;
constexpr std::uint64_t kAccurateTag = 0xACC0;
constexpr std::uint64_t kStegoTag = 0x57E6;

json ids_json(const std::vector<std::uint64_t>& ids) { return json(ids); }

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigurationError("cannot read seed program " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

dsl::DslProgram parse_or_throw(const std::string& source, const std::string& what) {
  dsl::ParseResult r = dsl::parse(source);
  if (!r.ok()) throw ConfigurationError(what + " does not parse:\n" + dsl::format_diagnostics(r.diagnostics));
  return std::move(*r.program);
}

}  // namespace

std::vector<GrayImage> load_corpus(const CorpusSettings& s) {
  if (s.dir.empty()) return synthetic_corpus(s.synthetic_count, s.width, s.height, s.synthetic_seed);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(s.dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".pnm")) files.push_back(entry.path());
  }
  if (files.empty()) throw ConfigurationError("no .pgm covers in " + s.dir);
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> out;
  for (const auto& f : files) out.push_back(load_image(f));
  return out;
}

SplitCorpus split_corpus(std::vector<GrayImage> covers, std::uint64_t seed) {
  const std::size_t n = covers.size();
  if (n < 2) throw ConfigurationError("need at least two covers to split the corpus");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Xorshift64Star rng(derive_seed(seed, kSplitTag));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  const std::size_t half = (n + 1) / 2;
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<GrayImage> ta, tb;
  for (std::size_t i : a) ta.push_back(std::move(covers[i]));
  for (std::size_t i : b) tb.push_back(std::move(covers[i]));
  return {FeatureCorpus::build(std::move(ta)), FeatureCorpus::build(std::move(tb))};
}

Engine::Engine(EvolutionConfig config, LlmClient& client, Journal* journal)
    : config_(std::move(config)),
      client_(client),
      journal_(journal),
      rng_(derive_seed(config_.seed, kEngineTag)),
      last_refresh_(std::chrono::steady_clock::now()) {
  validate_config(config_);
}

dsl::Limits Engine::limits() const {
  dsl::Limits l;
  l.max_ops = config_.interpreter_max_ops;
  l.time_budget = std::chrono::milliseconds(config_.interpreter_time_ms);
  return l;
}

void Engine::record(int iter, const std::string& type, json payload) {
  if (journal_) journal_->append(JournalRecord{iter, type, std::move(payload), rng_digest(rng_)});
}

const std::string& Engine::key_of(const CandidateProgram& p) {
  auto it = keys_.find(p.id);
  if (it == keys_.end()) it = keys_.emplace(p.id, dedup_key(parse_or_throw(p.source, "program"))).first;
  return it->second;
}

void Engine::setup(std::optional<std::vector<GrayImage>> covers) {
  if (config_.threads > 0) set_max_threads(config_.threads);
  std::vector<GrayImage> images = covers ? std::move(*covers) : load_corpus(config_.corpus);
  const std::size_t n_covers = images.size();
  corpus_ = split_corpus(std::move(images), config_.seed);
  if (corpus_.training.size() < 10) {
    throw ConfigurationError("the corpus needs at least 19 covers (10 for detector training), got " +
                             std::to_string(n_covers));
  }
  pool_ = initial_pool(corpus_.training, config_.stage1_rate, derive_seed(config_.seed, kPoolTag));

  seeds_.clear();
  for (const std::string& name : config_.seeds) {
    const bool is_path = name.find('/') != std::string::npos || (name.size() > 4 && name.ends_with(".scf"));
    const std::string text = is_path ? read_text(name) : dsl::shipped_source(name);
    const dsl::DslProgram prog = parse_or_throw(text, "seed " + name);
    CandidateProgram p;
    p.id = next_id();
    p.source = dsl::print(prog);
    p.status = Status::seed;
    try {
      p.prelim_score = prelim_score(prog);
      p.accurate_score = accurate(prog, config_.stage1_rate, 0).pe;
    } catch (const std::exception& e) {
      throw ConfigurationError("seed " + name + " is not executable: " + e.what());
    }
    seeds_.push_back(std::move(p));
  }
  s_init_ = *seeds_.front().accurate_score;
  db_ = init_database(seeds_, config_.n);
  ready_ = true;

  json seeds = json::array();
  for (const auto& s : seeds_) seeds.push_back(program_to_json(s));
  json pool = json::array();
  for (const Evaluator& e : pool_.members())
    pool.push_back({{"trained_on", e.metadata.trained_on}, {"ridge", e.metadata.ridge}});
  record(0, "setup",
         {{"config", config_to_json(config_)},
          {"covers", n_covers},
          {"training_covers", corpus_.training.size()},
          {"scoring_covers", corpus_.scoring.size()},
          {"pool", pool},
          {"seeds", seeds},
          {"s_init", s_init_}});
}

std::uint64_t Engine::stego_seed() const { return derive_seed(config_.seed, kStegoTag); }

Engine::StegoFeatures Engine::compute_stegos(const dsl::DslProgram& prog) const {
  const std::vector<GrayImage>& covers = corpus_.scoring.images;
  const std::uint64_t seed = stego_seed();
  const dsl::Limits lim = limits();
  std::vector<GrayImage> stegos(covers.size());
  std::vector<std::optional<Failure>> failures(covers.size());
  const auto n = static_cast<std::ptrdiff_t>(covers.size());
  STEGCOST_OMP("omp parallel for schedule(dynamic)")
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const std::string where = "cover " + std::to_string(k) + ": ";
    const dsl::Outcome out = dsl::interpret(prog, covers[k], lim);
    if (const auto* f = std::get_if<dsl::RuntimeFault>(&out)) {
      failures[k] = Failure{std::string(dsl::fault_name(f->kind)),
                            where + std::to_string(f->pos.line) + ":" + std::to_string(f->pos.column) + ": " +
                                f->message};
      continue;
    }
    try {
      stegos[k] = embed(covers[k], std::get<CostPair>(out), config_.stage1_rate, image_seed(covers[k], seed)).stego;
    } catch (const std::exception& e) {
      failures[k] = Failure{"infeasible", where + e.what()};
    }
  }
  for (auto& f : failures)
    if (f) return *f;
  return extract_features(stegos);
}

const Engine::StegoFeatures& Engine::scoring_stegos(const dsl::DslProgram& prog) {
  const std::string key = dedup_key(prog);
  auto it = stego_cache_.find(key);
  if (it == stego_cache_.end()) it = stego_cache_.emplace(key, compute_stegos(prog)).first;
  return it->second;
}

double Engine::score_with_pool(const std::vector<FeatureVector>& stego) const {
  std::vector<double> errs;
  for (const Evaluator& e : pool_.members()) errs.push_back(detect_error(e, corpus_.scoring.features, stego));
  return combine_pool_errors(std::move(errs));
}

double Engine::prelim_score(const dsl::DslProgram& prog) {
  const StegoFeatures& s = scoring_stegos(prog);
  if (const auto* f = std::get_if<Failure>(&s)) throw NonExecutable(f->kind + ": " + f->message);
  return score_with_pool(std::get<std::vector<FeatureVector>>(s));
}

AccurateResult Engine::accurate(const dsl::DslProgram& prog, double rate, std::uint64_t tag) {
  const dsl::Limits lim = limits();
  const CostFunction fn = [&prog, lim](const GrayImage& img) { return dsl::interpret_or_throw(prog, img, lim); };
  AccurateOptions opts;
  opts.trained_on = prog.function_name();
  return accurate_score(fn, corpus_.training, rate, derive_seed(derive_seed(config_.seed, kAccurateTag), tag), opts);
}

IterationReport Engine::preliminary_round(int iter) {
  if (!ready_) throw std::logic_error("preliminary_round before setup");
  IterationReport rep;
  rep.iter = iter;
  rep.temperature = temperature(config_, iter - 1);

  std::vector<ReferenceIndex> picks{sample_reference(db_, rep.temperature, rng_)};
  for (int k = 1; k < config_.r; ++k) picks.push_back(sample_in_sub(db_, picks[0].sub, rep.temperature, rng_));
  rep.sub_index = picks[0].sub;
  std::vector<PromptReference> refs;
  json picked = json::array();
  for (const ReferenceIndex& at : picks) {
    const CandidateProgram& p = program_at(db_, at);
    refs.push_back({at.sub, p.source});
    rep.reference_ids.push_back(p.id);
    picked.push_back({{"cluster", at.cluster}, {"program", at.program}, {"id", p.id}});
  }
  record(iter, "sample", {{"temperature", rep.temperature}, {"sub", rep.sub_index}, {"refs", picked}});

  const std::string prompt =
      build_prompt(refs, config_.instruction.empty() ? default_instruction() : config_.instruction);
  record(iter, "prompt", {{"text", prompt}});

  Generation gen = client_.generate(prompt, config_.n_p);
  if (gen.responses.size() > static_cast<std::size_t>(config_.n_p))
    gen.responses.resize(static_cast<std::size_t>(config_.n_p));
  record(iter, "generation", {{"responses", gen.responses}, {"errors", gen.errors}});
  rep.n_p = static_cast<int>(gen.responses.size());
  if (!gen.errors.empty()) rep.faults["llm_error"] += static_cast<int>(gen.errors.size());

  // Screen: parse, name, duplicates. Survivors are scored in parallel.
  std::set<std::string> resident;
  for (const Cluster& c : db_.subs[static_cast<std::size_t>(rep.sub_index)].clusters)
    for (const CandidateProgram& p : c.programs) resident.insert(key_of(p));
  struct Pending {
    std::size_t index;
    dsl::DslProgram prog;
    std::string key;
  };
  std::vector<Pending> pending;
  std::vector<json> outcomes(gen.responses.size());
  for (std::size_t i = 0; i < gen.responses.size(); ++i) {
    auto reject = [&](const std::string& kind, const std::string& message) {
      ++rep.faults[kind];
      outcomes[i] = {{"index", i}, {"outcome", kind}, {"message", message}};
    };
    dsl::ParseResult parsed = dsl::parse(dsl::extract_code_block(gen.responses[i]));
    if (!parsed.ok()) {
      reject("parse", dsl::format_diagnostics(parsed.diagnostics));
      continue;
    }
    if (!dsl::valid_function_name(parsed.program->function_name())) {
      reject("name", "invalid function name '" + parsed.program->function_name() + "'");
      continue;
    }
    std::string key = dedup_key(*parsed.program);
    if (!resident.insert(key).second) {
      reject("duplicate", "same program already in sub-database " + std::to_string(rep.sub_index));
      continue;
    }
    pending.push_back({i, std::move(*parsed.program), std::move(key)});
  }

  std::vector<std::size_t> todo;
  for (std::size_t j = 0; j < pending.size(); ++j)
    if (!stego_cache_.count(pending[j].key)) todo.push_back(j);
  std::vector<StegoFeatures> computed(todo.size());
  const auto n_todo = static_cast<std::ptrdiff_t>(todo.size());
  STEGCOST_OMP("omp parallel for schedule(dynamic)")
  for (std::ptrdiff_t t = 0; t < n_todo; ++t) {
    computed[static_cast<std::size_t>(t)] = compute_stegos(pending[todo[static_cast<std::size_t>(t)]].prog);
  }
  for (std::size_t t = 0; t < todo.size(); ++t) stego_cache_.emplace(pending[todo[t]].key, std::move(computed[t]));

  for (Pending& p : pending) {
    const StegoFeatures& s = stego_cache_.at(p.key);
    if (const auto* f = std::get_if<Failure>(&s)) {
      ++rep.faults[f->kind];
      outcomes[p.index] = {{"index", p.index}, {"outcome", f->kind}, {"message", f->message}};
      continue;
    }
    CandidateProgram c;
    c.id = next_id();
    c.source = dsl::print(p.prog);
    c.parents = rep.reference_ids;
    c.sub_index = rep.sub_index;
    c.prelim_score = score_with_pool(std::get<std::vector<FeatureVector>>(s));
    keys_[c.id] = p.key;
    outcomes[p.index] = {{"index", p.index}, {"outcome", "inserted"}, {"id", c.id}, {"score", *c.prelim_score}};
    rep.inserted.push_back(c.id);
    ++rep.n_q;
    db_.subs[static_cast<std::size_t>(rep.sub_index)].insert(std::move(c));
  }
  for (json& o : outcomes) record(iter, "candidate", std::move(o));
  record(iter, "round_end", {{"n_p", rep.n_p}, {"n_q", rep.n_q}, {"faults", rep.faults}, {"inserted", rep.inserted}});
  return rep;
}

RefreshReport Engine::refresh(int iter) {
  RefreshReport r = refresh_database(db_, config_.refresh_fraction, rng_);
  last_refresh_ = std::chrono::steady_clock::now();
  record(iter, "refresh", {{"replaced", r.replaced}, {"donors", r.donors}});
  return r;
}

ValidationReport Engine::multi_rate_validate(const CandidateProgram& candidate) {
  ValidationReport v;
  v.id = candidate.id;
  v.rates = config_.rates;
  if (!baseline_rates_) {
    const dsl::DslProgram base = parse_or_throw(seeds_.front().source, "initial program");
    std::vector<double> b;
    for (std::size_t j = 0; j < config_.rates.size(); ++j) b.push_back(accurate(base, config_.rates[j], 1 + j).pe);
    baseline_rates_ = std::move(b);
  }
  v.baseline = *baseline_rates_;
  try {
    const dsl::DslProgram prog = parse_or_throw(candidate.source, "candidate");
    for (std::size_t j = 0; j < config_.rates.size(); ++j)
      v.candidate.push_back(accurate(prog, config_.rates[j], 1 + j).pe);
  } catch (const std::exception&) {
    v.candidate.clear();
  }
  v.superior = outperforms_at_all_rates(v.candidate, v.baseline);
  return v;
}

void Engine::rescore_seeds() {
  for (CandidateProgram& s : seeds_) s.prelim_score = prelim_score(parse_or_throw(s.source, "seed"));
}

Stage2Report Engine::stage2(int iter) {
  if (!ready_) throw std::logic_error("stage2 before setup");
  Stage2Report rep;
  rep.iter = iter;

  std::set<std::uint64_t> seed_ids;
  std::set<std::string> seen;
  for (const CandidateProgram& s : seeds_) {
    seed_ids.insert(s.id);
    seen.insert(key_of(s));
  }
  std::vector<CandidateProgram> ps;
  for (const SubDatabase& sub : db_.subs)
    for (const Cluster& c : sub.clusters)
      for (const CandidateProgram& p : c.programs)
        if (!seed_ids.count(p.id) && seen.insert(key_of(p)).second) ps.push_back(p);
  rep.ps_size = ps.size();

  std::vector<std::size_t> chosen(ps.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  if (ps.size() >= static_cast<std::size_t>(config_.ps_threshold)) {
    // Uniform half without replacement (partial Fisher-Yates), kept in database order.
    const std::size_t k = (ps.size() + 1) / 2;
    for (std::size_t i = 0; i < k; ++i) std::swap(chosen[i], chosen[i + rng_.below(chosen.size() - i)]);
    chosen.resize(k);
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<std::uint64_t> ps_ids, chosen_ids;
  for (const auto& p : ps) ps_ids.push_back(p.id);
  for (std::size_t i : chosen) chosen_ids.push_back(ps[i].id);
  record(iter, "stage2_select", {{"ps", ps_ids}, {"selected", chosen_ids}});

  std::vector<std::optional<AccurateResult>> results(chosen.size());
  std::vector<std::string> errors(chosen.size());
  const auto n = static_cast<std::ptrdiff_t>(chosen.size());
  STEGCOST_OMP("omp parallel for schedule(dynamic)")
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto k = static_cast<std::size_t>(t);
    try {
      const dsl::ParseResult parsed = dsl::parse(ps[chosen[k]].source);
      if (!parsed.ok()) throw std::runtime_error(dsl::format_diagnostics(parsed.diagnostics));
      results[k] = accurate(*parsed.program, config_.stage1_rate, 0);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }

  const double p_init_prelim = *seeds_.front().prelim_score;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    CandidateProgram p = ps[chosen[k]];
    rep.evaluated.push_back(p.id);
    if (!results[k]) {
      p.status = Status::discarded;
      rep.discarded.push_back(p.id);
      record(iter, "accurate", {{"id", p.id}, {"outcome", "discarded"}, {"message", errors[k]}});
      continue;
    }
    const AccurateResult& r = *results[k];
    p.accurate_score = r.pe;
    const bool is_promoted = promoted(r.pe, s_init_, config_.epsilon, config_.promotion);
    const bool grows_pool = *p.prelim_score >= s_init_ + config_.pool_prelim_margin &&
                            r.pe < s_init_ - config_.pool_accurate_margin;
    const bool is_potential = r.pe > s_init_ && *p.prelim_score >= p_init_prelim;
    if (grows_pool) {
      Evaluator e = r.evaluator;
      e.metadata.trained_on = "program " + std::to_string(p.id);
      pool_.add(std::move(e));
      rep.pool_added.push_back(p.id);
    }
    if (is_promoted) p.status = Status::optimized;
    json v = nullptr;
    if (is_potential) {
      p.status = Status::potential;
      ValidationReport val = multi_rate_validate(p);
      if (val.superior) p.status = Status::superior;
      v = {{"rates", val.rates}, {"candidate", val.candidate}, {"baseline", val.baseline}, {"superior", val.superior}};
      rep.validations.push_back(std::move(val));
    }
    if (is_promoted) {
      rep.promoted.push_back(p.id);
      seeds_.push_back(p);
    }
    if (p.status == Status::superior && !superior_) superior_ = p;
    record(iter, "accurate",
           {{"id", p.id},
            {"outcome", status_name(p.status)},
            {"accurate", r.pe},
            {"validation_pe", r.validation_pe},
            {"promoted", is_promoted},
            {"pool_added", grows_pool},
            {"validation", v}});
  }

  rescore_seeds();
  db_ = init_database(seeds_, config_.n);
  rep.pool_size = pool_.size();
  rep.best_seed_accurate = 0.0;
  for (const CandidateProgram& s : seeds_) rep.best_seed_accurate = std::max(rep.best_seed_accurate, *s.accurate_score);
  json seeds = json::array();
  for (const CandidateProgram& s : seeds_) seeds.push_back(program_to_json(s));
  record(iter, "stage2_end",
         {{"ps_size", rep.ps_size},
          {"promoted", ids_json(rep.promoted)},
          {"pool_added", ids_json(rep.pool_added)},
          {"discarded", ids_json(rep.discarded)},
          {"pool_size", rep.pool_size},
          {"seeds", seeds}});
  return rep;
}

RunReport Engine::run() {
  RunReport report;
  if (config_.max_iterations == 0) return report;
  if (!ready_) setup();
  report.s_init = s_init_;
  last_refresh_ = std::chrono::steady_clock::now();
  for (int i = 1; i <= config_.max_iterations; ++i) {
    IterationReport r = preliminary_round(i);
    bool due = false;
    if (refresh_decider) {
      due = refresh_decider(i);
    } else if (config_.refresh_trigger == RefreshTrigger::iterations) {
      due = i % config_.refresh_every == 0;
    } else {
      const std::chrono::duration<double, std::ratio<3600>> since = std::chrono::steady_clock::now() - last_refresh_;
      due = since.count() >= config_.refresh_hours;
    }
    if (due) {
      refresh(i);
      r.refreshed = true;
    }
    report.rounds.push_back(std::move(r));
    if (stage2_due(config_, i)) report.stage2.push_back(stage2(i));
    report.iterations = i;
    if (on_iteration) on_iteration(*this, i);
    if (superior_ && config_.stop_on_superior) break;
  }
  report.superior = superior_;
  report.pool_size = pool_.size();
  report.database = database_to_json(db_);
  json seeds = json::array();
  for (const CandidateProgram& s : seeds_) seeds.push_back(program_to_json(s));
  record(report.iterations, "run_end",
         {{"database", report.database},
          {"seeds", seeds},
          {"pool_size", report.pool_size},
          {"superior", superior_ ? program_to_json(*superior_) : json(nullptr)}});
  return report;
}

json RunReport::to_json() const {
  json rounds_j = json::array();
  for (const IterationReport& r : rounds) {
    rounds_j.push_back({{"iter", r.iter},
                        {"temperature", r.temperature},
                        {"sub_index", r.sub_index},
                        {"reference_ids", r.reference_ids},
                        {"n_p", r.n_p},
                        {"n_q", r.n_q},
                        {"faults", r.faults},
                        {"inserted", r.inserted},
                        {"refreshed", r.refreshed}});
  }
  json stage2_j = json::array();
  for (const Stage2Report& s : stage2) {
    json vals = json::array();
    for (const ValidationReport& v : s.validations)
      vals.push_back({{"id", v.id}, {"rates", v.rates}, {"candidate", v.candidate}, {"baseline", v.baseline},
                      {"superior", v.superior}});
    stage2_j.push_back({{"iter", s.iter},
                        {"ps_size", s.ps_size},
                        {"evaluated", s.evaluated},
                        {"promoted", s.promoted},
                        {"pool_added", s.pool_added},
                        {"discarded", s.discarded},
                        {"validations", vals},
                        {"pool_size", s.pool_size},
                        {"best_seed_accurate", s.best_seed_accurate}});
  }
  return {{"iterations", iterations},
          {"s_init", s_init},
          {"rounds", rounds_j},
          {"stage2", stage2_j},
          {"superior", superior ? program_to_json(*superior) : json(nullptr)},
          {"pool_size", pool_size},
          {"database", database}};
}

RunReport run_evolution(const EvolutionConfig& config, const std::filesystem::path& run_dir) {
  validate_config(config);
  if (config.max_iterations == 0) return {};
  std::unique_ptr<LlmClient> client = make_client(config.llm);
  Journal journal(run_dir / "journal.jsonl");
  Engine engine(config, *client, &journal);
  RunReport report = engine.run();
  write_snapshot(run_dir / "snapshot", engine.database(), engine.seeds());
  std::ofstream out(run_dir / "report.json", std::ios::binary);
  out << report.to_json().dump(2) << '\n';
  if (report.superior) {
    std::ofstream sup(run_dir / "superior.scf", std::ios::binary);
    sup << report.superior->source;
  }
  return report;
}

ReplayResult replay(const std::vector<JournalRecord>& journal) {
  ReplayResult result;
  if (journal.empty() || journal.front().event_type != "setup") {
    result.message = "journal does not start with a setup record";
    return result;
  }
  EvolutionConfig config = config_from_json(journal.front().payload.at("config"));
  std::deque<Generation> recorded;
  std::set<int> refreshes;
  for (const JournalRecord& r : journal) {
    if (r.event_type == "generation") {
      recorded.push_back({r.payload.at("responses").get<std::vector<std::string>>(),
                          r.payload.at("errors").get<std::vector<std::string>>()});
    } else if (r.event_type == "refresh") {
      refreshes.insert(r.iter);
    }
  }
  ReplayProvider client(std::move(recorded));
  Journal fresh;
  Engine engine(config, client, &fresh);
  if (config.refresh_trigger == RefreshTrigger::wall_clock)
    engine.refresh_decider = [refreshes](int i) { return refreshes.count(i) > 0; };
  try {
    result.report = engine.run();
  } catch (const std::exception& e) {
    result.message = std::string("replay stopped: ") + e.what();
  }
  const std::vector<JournalRecord>& got = fresh.records();
  const std::size_t common = std::min(got.size(), journal.size());
  for (std::size_t i = 0; i < common; ++i) {
    ++result.records_compared;
    if (!(got[i] == journal[i])) {
      result.first_mismatch = i;
      if (result.message.empty())
        result.message = "record " + std::to_string(i) + " (" + journal[i].event_type + ", iter " +
                         std::to_string(journal[i].iter) + ") differs";
      return result;
    }
  }
  if (got.size() != journal.size()) {
    result.first_mismatch = common;
    if (result.message.empty())
      result.message = "replay produced " + std::to_string(got.size()) + " records, journal has " +
                       std::to_string(journal.size());
    return result;
  }
  result.identical = result.message.empty();
  return result;
}

}  // namespace stegcost::evolve
