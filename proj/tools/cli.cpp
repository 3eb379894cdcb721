#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "stegcost/costs.hpp"
#include "stegcost/dsl.hpp"
#include "stegcost/embedder.hpp"
#include "stegcost/evolve.hpp"
#include "stegcost/parallel.hpp"
#include "stegcost/pgm.hpp"
#include "stegcost/steganalysis.hpp"

namespace stegcost::cli {
namespace {

using nlohmann::json;

/// Bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CostSource {
  std::string algo;
  std::string dsl;

  std::string label() const { return algo.empty() ? dsl : algo; }

  CostFunction resolve() const {
    if (algo.empty() == dsl.empty()) throw UsageError("exactly one of --algo or --dsl is required");
    if (!algo.empty()) {
      CostAlgorithm a;
      try {
        a = parse_algorithm(algo);
      } catch (const std::exception&) {
        throw UsageError("unknown --algo '" + algo + "' (wow, wow-e, hill, hill-e, suni, suni-e)");
      }
      return [a](const GrayImage& img) { return compute_cost(a, img); };
    }
    std::ifstream in(dsl, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + dsl);
    std::stringstream ss;
    ss << in.rdbuf();
    auto parsed = dsl::parse(ss.str());
    if (!parsed.ok()) throw std::runtime_error(dsl + ":\n" + dsl::format_diagnostics(parsed.diagnostics));
    auto prog = std::make_shared<const dsl::DslProgram>(std::move(*parsed.program));
    return [prog](const GrayImage& img) { return dsl::interpret_or_throw(*prog, img); };
  }
};

void add_source(CLI::App* cmd, CostSource& src) {
  cmd->add_option("--algo", src.algo, "Built-in cost function: wow, wow-e, hill, hill-e, suni, suni-e");
  cmd->add_option("--dsl", src.dsl, "Cost program file (.scf)")->check(CLI::ExistingFile);
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

json map_stats(const RealMap& m) {
  double lo = kInf, hi = -kInf;
  std::size_t inf = 0;
  for (double v : m.values()) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    } else {
      ++inf;
    }
  }
  json j{{"infinite", inf}};
  j["finite_min"] = std::isfinite(lo) ? json(lo) : json(nullptr);
  j["finite_max"] = std::isfinite(hi) ? json(hi) : json(nullptr);
  return j;
}

// ------------------------------------------------------------------ gain

struct RateTable {
  std::vector<std::pair<double, double>> rows;  // (rate, pe)
};

RateTable read_rates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  RateTable t;
  try {
    if (j.contains("rates")) {
      for (const auto& r : j.at("rates")) t.rows.emplace_back(r.at("rate").get<double>(), r.at("pe").get<double>());
    } else {
      t.rows.emplace_back(j.at("rate").get<double>(), j.at("pe").get<double>());
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": expected per-rate P_E entries: " + e.what());
  }
  std::sort(t.rows.begin(), t.rows.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    if (t.rows[i].first == t.rows[i - 1].first) throw std::runtime_error(path + ": duplicate rate");
  return t;
}

int cmd_gain(const std::string& evolved_path, const std::string& original_path, bool csv,
             const std::string& report, std::ostream& out) {
  const RateTable ev = read_rates(evolved_path);
  const RateTable og = read_rates(original_path);
  bool same = ev.rows.size() == og.rows.size();
  for (std::size_t i = 0; same && i < ev.rows.size(); ++i)
    same = std::abs(ev.rows[i].first - og.rows[i].first) <= 1e-9;
  if (!same) throw std::runtime_error("rate sets differ between " + evolved_path + " and " + original_path);

  json rows = json::array();
  if (csv) out << "rate,pe_original,pe_evolved,gain\n";
  else out << "rate    pe_original  pe_evolved  gain\n";
  for (std::size_t i = 0; i < ev.rows.size(); ++i) {
    const double rate = ev.rows[i].first, pe_e = ev.rows[i].second, pe_o = og.rows[i].second;
    const double g = relative_gain(pe_e, pe_o);
    rows.push_back({{"rate", rate}, {"pe_original", pe_o}, {"pe_evolved", pe_e}, {"gain", g}});
    std::ostringstream line;
    line << std::fixed;
    if (csv) {
      line << std::setprecision(2) << rate << ',' << std::setprecision(4) << pe_o << ',' << pe_e << ','
           << g;
    } else {
      line << std::setprecision(2) << std::left << std::setw(8) << rate << std::setprecision(4)
           << std::setw(13) << pe_o << std::setw(12) << pe_e << std::showpos << g;
    }
    out << line.str() << '\n';
  }
  if (!report.empty()) write_json({{"rows", rows}}, report);
  return kExitOk;
}

// ------------------------------------------------------------- pipeline

int cmd_cost(const CostSource& src, const std::string& in, const std::string& plus, const std::string& minus,
             const std::string& report, std::ostream& out) {
  const CostFunction fn = src.resolve();
  const GrayImage cover = load_image(in);
  const CostPair c = fn(cover);
  save_map(c.plus, plus, MapScaling::affine);
  save_map(c.minus, minus, MapScaling::affine);
  json j{{"cost", src.label()}, {"width", cover.width()}, {"height", cover.height()},
         {"plus", map_stats(c.plus)}, {"minus", map_stats(c.minus)}};
  if (!report.empty()) write_json(j, report);
  out << "wrote " << plus << " and " << minus << '\n';
  return kExitOk;
}

int cmd_embed(const CostSource& src, const std::string& in, double alpha, std::uint64_t seed,
              const std::string& stego_path, const std::string& report, std::ostream& out) {
  const CostFunction fn = src.resolve();
  const GrayImage cover = load_image(in);
  const StegoResult r = embed(cover, fn(cover), alpha, seed);
  save_image(r.stego, stego_path);
  json j{{"lambda", r.lambda},
         {"entropy_bits", r.entropy_bits},
         {"target_bits", r.target_bits},
         {"realized_changes", r.realized_changes},
         {"distortion", r.total_distortion},
         {"alpha", alpha},
         {"seed", seed}};
  if (!report.empty()) write_json(j, report);
  out << "wrote " << stego_path << ": " << r.realized_changes << " changes, lambda " << r.lambda << '\n';
  return kExitOk;
}

int cmd_probmap(const CostSource& src, const std::string& in, double alpha, const std::string& map_path,
                std::string report, std::ostream& out) {
  const CostFunction fn = src.resolve();
  const GrayImage cover = load_image(in);
  const CostPair costs = fn(cover);
  const LambdaSolution sol = solve_lambda(costs, alpha);
  const ProbabilityMap pm = change_probabilities(costs, sol.lambda);
  save_map(pm.total(), map_path, MapScaling::probability);
  if (report.empty()) report = map_path + ".json";
  write_json({{"lambda", sol.lambda},
              {"entropy_bits", sol.entropy_bits},
              {"target_bits", alpha * static_cast<double>(cover.size())},
              {"iterations", sol.iterations},
              {"alpha", alpha}},
             report);
  out << "wrote " << map_path << " and " << report << '\n';
  return kExitOk;
}

int cmd_evaluate(const CostSource& src, const std::string& covers_dir, std::vector<double> alphas,
                 std::uint64_t seed, const std::string& report, std::ostream& out) {
  const CostFunction fn = src.resolve();
  evolve::CorpusSettings cs;
  cs.dir = covers_dir;
  const FeatureCorpus corpus = FeatureCorpus::build(evolve::load_corpus(cs));
  AccurateOptions opts;
  opts.trained_on = src.label();

  json rates = json::array();
  for (double a : alphas) {
    const AccurateResult r = accurate_score(fn, corpus, a, seed, opts);
    rates.push_back({{"rate", a},
                     {"pe", r.pe},
                     {"validation_pe", r.validation_pe},
                     {"n_cover", r.n_test},
                     {"n_stego", r.n_test},
                     {"n_train", r.n_train},
                     {"n_validation", r.n_validation}});
    out << "rate " << a << ": P_E " << std::fixed << std::setprecision(4) << r.pe << std::defaultfloat << '\n';
  }
  json j{{"cost", src.label()}, {"covers", corpus.size()}, {"seed", seed}, {"rates", rates}};
  if (alphas.size() == 1) {
    for (const char* k : {"pe", "n_cover", "n_stego", "rate"}) j[k] = rates[0][k];
  }
  if (!report.empty()) write_json(j, report);
  return kExitOk;
}

int cmd_evolve(const std::string& config_path, const std::string& run_dir, int threads, std::ostream& out) {
  evolve::EvolutionConfig cfg = evolve::load_config(config_path);
  if (threads > 0) cfg.threads = threads;
  evolve::validate_config(cfg);
  const evolve::RunReport rep = evolve::run_evolution(cfg, run_dir);
  out << "iterations " << rep.iterations << ", s_init " << rep.s_init << ", pool " << rep.pool_size << '\n';
  if (rep.superior) out << "superior program " << rep.superior->id << " written to " << run_dir << "/superior.scf\n";
  return kExitOk;
}

int cmd_replay(const std::string& journal, std::ostream& out) {
  const evolve::ReplayResult r = evolve::replay(evolve::Journal::read(journal));
  out << (r.identical ? "identical" : "MISMATCH") << ": " << r.records_compared << " records compared";
  if (r.first_mismatch) out << ", first difference at record " << *r.first_mismatch;
  if (!r.message.empty()) out << " (" << r.message << ')';
  out << '\n';
  return r.identical ? kExitOk : kExitDomain;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive steganography cost functions: costs, embedding, detection and evolution", "stegcost"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  CostSource src;
  std::string in, out_a, out_b, report, covers, config, run_dir, journal, evolved, original;
  double alpha = 0.4;
  std::vector<double> alphas;
  std::uint64_t seed = 1;
  bool csv = false;
  const auto rate_check = CLI::Range(0.0, 1.0);

  auto* cost = app.add_subcommand("cost", "Write the +1/-1 cost maps of a cover as PGM");
  add_source(cost, src);
  cost->add_option("--in", in, "Cover PGM")->required()->check(CLI::ExistingFile);
  cost->add_option("--out-plus", out_a, "Cost map for +1 changes")->required();
  cost->add_option("--out-minus", out_b, "Cost map for -1 changes")->required();
  cost->add_option("--report", report, "JSON summary of the maps");

  auto* emb = app.add_subcommand("embed", "Simulate optimal embedding at a relative payload");
  add_source(emb, src);
  emb->add_option("--in", in, "Cover PGM")->required()->check(CLI::ExistingFile);
  emb->add_option("--alpha", alpha, "Payload in bits per pixel")->check(rate_check);
  emb->add_option("--seed", seed, "Simulator seed");
  emb->add_option("--out", out_a, "Stego PGM")->required();
  emb->add_option("--report", report, "JSON {lambda, entropy_bits, realized_changes, distortion}");

  auto* pmap = app.add_subcommand("probmap", "Render the change-probability map (bright = unlikely)");
  add_source(pmap, src);
  pmap->add_option("--in", in, "Cover PGM")->required()->check(CLI::ExistingFile);
  pmap->add_option("--alpha", alpha, "Payload in bits per pixel")->check(rate_check);
  pmap->add_option("--out", out_a, "Map PGM")->required();
  pmap->add_option("--report", report, "JSON {lambda, entropy_bits} (default: <out>.json)");

  auto* eval = app.add_subcommand("evaluate", "Held-out detection error of a dedicated detector");
  add_source(eval, src);
  eval->add_option("--covers", covers, "Directory of PGM covers")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--alpha", alphas, "Payload in bits per pixel (repeatable)")->check(rate_check);
  eval->add_option("--seed", seed, "Split and simulator seed");
  eval->add_option("--report", report, "JSON report with per-rate P_E");

  auto* evo = app.add_subcommand("evolve", "Run the evolutionary search");
  evo->add_option("--config", config, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  evo->add_option("--run-dir", run_dir, "Output directory")->required();

  auto* rep = app.add_subcommand("replay", "Re-run a journal and check it reproduces bit for bit");
  rep->add_option("--journal", journal, "journal.jsonl of a run")->required()->check(CLI::ExistingFile);

  auto* gain = app.add_subcommand("gain", "Relative P_E gain per rate from two evaluate reports");
  gain->add_option("--evolved", evolved, "Report of the evolved cost function")->required()->check(CLI::ExistingFile);
  gain->add_option("--original", original, "Report of the original cost function")->required()->check(CLI::ExistingFile);
  gain->add_flag("--csv", csv, "CSV instead of an aligned table");
  gain->add_option("--report", report, "JSON copy of the table");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  set_max_threads(threads);
  try {
    if (*cost) return cmd_cost(src, in, out_a, out_b, report, out);
    if (*emb) return cmd_embed(src, in, alpha, seed, out_a, report, out);
    if (*pmap) return cmd_probmap(src, in, alpha, out_a, report, out);
    if (*eval) {
      if (alphas.empty()) alphas.push_back(0.4);
      return cmd_evaluate(src, covers, alphas, seed, report, out);
    }
    if (*evo) return cmd_evolve(config, run_dir, threads, out);
    if (*rep) return cmd_replay(journal, out);
    if (*gain) return cmd_gain(evolved, original, csv, report, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace stegcost::cli
