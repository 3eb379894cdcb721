#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "stegcost/evolve.hpp"

namespace stegcost::evolve {

namespace {

constexpr std::string_view kStatusNames[] = {"candidate", "seed", "optimized", "potential", "superior",
                                             "discarded"};

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += p[i] = std::exp(logits[i] - top);
  for (double& v : p) v /= total;
  return p;
}

double top_score(const SubDatabase& sub) {
  const Cluster* c = sub.top_cluster();
  return c ? c->score() : -std::numeric_limits<double>::infinity();
}

}  // namespace

std::string_view status_name(Status s) { return kStatusNames[static_cast<int>(s)]; }

Status parse_status(std::string_view name) {
  for (int i = 0; i < 6; ++i)
    if (kStatusNames[i] == name) return static_cast<Status>(i);
  throw std::invalid_argument("unknown program status '" + std::string(name) + "'");
}

std::int64_t score_key(double score) { return std::llround(score * 1e4); }

void SubDatabase::insert(CandidateProgram p) {
  if (!p.prelim_score) throw std::invalid_argument("program " + std::to_string(p.id) + " has no score");
  const std::int64_t key = score_key(*p.prelim_score);
  for (Cluster& c : clusters) {
    if (c.key == key) {
      c.programs.push_back(std::move(p));
      return;
    }
  }
  clusters.push_back(Cluster{key, {std::move(p)}});
}

const Cluster* SubDatabase::top_cluster() const {
  const Cluster* best = nullptr;
  for (const Cluster& c : clusters)
    if (!best || c.key > best->key) best = &c;
  return best;
}

std::size_t SubDatabase::program_count() const {
  std::size_t n = 0;
  for (const Cluster& c : clusters) n += c.programs.size();
  return n;
}

std::size_t ProgramDatabase::program_count() const {
  std::size_t n = 0;
  for (const SubDatabase& s : subs) n += s.program_count();
  return n;
}

ProgramDatabase init_database(const std::vector<CandidateProgram>& seeds, int n) {
  if (n < 1) throw std::invalid_argument("need at least one sub-database");
  if (seeds.empty()) throw std::invalid_argument("no seed programs");
  ProgramDatabase db;
  db.subs.resize(static_cast<std::size_t>(n));
  for (SubDatabase& sub : db.subs)
    for (const CandidateProgram& s : seeds) sub.insert(s);
  return db;
}

std::vector<double> cluster_probabilities(const SubDatabase& sub, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("temperature must be positive");
  std::vector<double> logits;
  for (const Cluster& c : sub.clusters) logits.push_back(c.score() / T);
  return softmax(logits);
}

std::vector<double> program_probabilities(const Cluster& c, double eps) {
  std::size_t lo = c.programs.front().length(), hi = lo;
  for (const CandidateProgram& p : c.programs) {
    lo = std::min(lo, p.length());
    hi = std::max(hi, p.length());
  }
  std::vector<double> logits;
  for (const CandidateProgram& p : c.programs)
    logits.push_back(-static_cast<double>(p.length() - lo) / (static_cast<double>(hi - lo) + eps));
  return softmax(logits);
}

std::size_t draw_index(const std::vector<double>& probs, Xorshift64Star& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

ReferenceIndex sample_in_sub(const ProgramDatabase& db, int sub, double T, Xorshift64Star& rng) {
  const SubDatabase& s = db.subs.at(static_cast<std::size_t>(sub));
  if (s.clusters.empty()) throw std::invalid_argument("sub-database " + std::to_string(sub) + " is empty");
  ReferenceIndex at{sub, 0, 0};
  if (s.clusters.size() > 1) at.cluster = draw_index(cluster_probabilities(s, T), rng);
  const Cluster& c = s.clusters[at.cluster];
  if (c.programs.size() > 1) at.program = draw_index(program_probabilities(c), rng);
  return at;
}

ReferenceIndex sample_reference(const ProgramDatabase& db, double T, Xorshift64Star& rng) {
  if (db.subs.empty() || db.program_count() == 0) throw std::invalid_argument("empty program database");
  if (!(T > 0.0)) throw std::invalid_argument("temperature must be positive");
  const int sub = db.subs.size() > 1 ? static_cast<int>(rng.below(db.subs.size())) : 0;
  return sample_in_sub(db, sub, T, rng);
}

const CandidateProgram& program_at(const ProgramDatabase& db, const ReferenceIndex& at) {
  return db.subs.at(static_cast<std::size_t>(at.sub)).clusters.at(at.cluster).programs.at(at.program);
}

RefreshReport refresh_database(ProgramDatabase& db, double fraction, Xorshift64Star& rng) {
  if (db.subs.empty()) throw std::invalid_argument("empty program database");
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("refresh fraction outside [0, 1]");
  const std::size_t n = db.subs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return top_score(db.subs[a]) < top_score(db.subs[b]); });
  const double best = top_score(db.subs[order.back()]);
  std::size_t bad = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  while (bad > 0 && top_score(db.subs[order[bad - 1]]) >= best) --bad;

  RefreshReport report;
  if (bad == 0) return report;
  const std::vector<std::size_t> good(order.begin() + static_cast<std::ptrdiff_t>(bad), order.end());
  std::vector<std::size_t> replaced(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(bad));
  std::sort(replaced.begin(), replaced.end());
  for (std::size_t i : replaced) {
    const std::size_t donor = good[rng.below(good.size())];
    SubDatabase fresh;
    fresh.clusters.push_back(*db.subs[donor].top_cluster());
    db.subs[i] = std::move(fresh);
    report.replaced.push_back(static_cast<int>(i));
    report.donors.push_back(static_cast<int>(donor));
  }
  return report;
}

nlohmann::json program_to_json(const CandidateProgram& p) {
  nlohmann::json j;
  j["id"] = p.id;
  j["source"] = p.source;
  j["length"] = p.length();
  j["parents"] = p.parents;
  j["sub_index"] = p.sub_index;
  j["prelim_score"] = p.prelim_score ? nlohmann::json(*p.prelim_score) : nlohmann::json(nullptr);
  j["accurate_score"] = p.accurate_score ? nlohmann::json(*p.accurate_score) : nlohmann::json(nullptr);
  j["status"] = status_name(p.status);
  return j;
}

CandidateProgram program_from_json(const nlohmann::json& j) {
  CandidateProgram p;
  p.id = j.at("id").get<std::uint64_t>();
  p.source = j.at("source").get<std::string>();
  p.parents = j.at("parents").get<std::vector<std::uint64_t>>();
  p.sub_index = j.at("sub_index").get<int>();
  if (!j.at("prelim_score").is_null()) p.prelim_score = j.at("prelim_score").get<double>();
  if (!j.at("accurate_score").is_null()) p.accurate_score = j.at("accurate_score").get<double>();
  p.status = parse_status(j.at("status").get<std::string>());
  return p;
}

nlohmann::json database_to_json(const ProgramDatabase& db) {
  nlohmann::json subs = nlohmann::json::array();
  for (const SubDatabase& s : db.subs) {
    nlohmann::json clusters = nlohmann::json::array();
    for (const Cluster& c : s.clusters) {
      nlohmann::json programs = nlohmann::json::array();
      for (const CandidateProgram& p : c.programs) programs.push_back(program_to_json(p));
      clusters.push_back({{"key", c.key}, {"score", c.score()}, {"programs", programs}});
    }
    subs.push_back({{"clusters", clusters}});
  }
  return {{"subs", subs}};
}

ProgramDatabase database_from_json(const nlohmann::json& j) {
  ProgramDatabase db;
  for (const auto& s : j.at("subs")) {
    SubDatabase sub;
    for (const auto& c : s.at("clusters")) {
      Cluster cl;
      cl.key = c.at("key").get<std::int64_t>();
      for (const auto& p : c.at("programs")) cl.programs.push_back(program_from_json(p));
      sub.clusters.push_back(std::move(cl));
    }
    db.subs.push_back(std::move(sub));
  }
  return db;
}

void write_snapshot(const std::filesystem::path& dir, const ProgramDatabase& db,
                    const std::vector<CandidateProgram>& seeds) {
  std::filesystem::create_directories(dir);
  auto write_source = [&](const CandidateProgram& p) {
    std::ofstream out(dir / (std::to_string(p.id) + ".scf"), std::ios::binary);
    out << p.source;
    if (!out) throw std::runtime_error("cannot write snapshot program " + std::to_string(p.id));
  };
  for (const SubDatabase& s : db.subs)
    for (const Cluster& c : s.clusters)
      for (const CandidateProgram& p : c.programs) write_source(p);
  nlohmann::json seed_list = nlohmann::json::array();
  for (const CandidateProgram& p : seeds) {
    write_source(p);
    seed_list.push_back(program_to_json(p));
  }
  nlohmann::json index = database_to_json(db);
  index["seeds"] = seed_list;
  std::ofstream out(dir / "index.json", std::ios::binary);
  out << index.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "index.json").string());
}

std::string dedup_key(const dsl::DslProgram& p) {
  dsl::Function fn = p.ast;
  fn.name = dsl::strip_version(fn.name);
  return dsl::print(fn);
}

}  // namespace stegcost::evolve
