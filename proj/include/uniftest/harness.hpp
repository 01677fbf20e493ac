#pragma once

// Seeded Monte-Carlo runner: instance generation, tester trials, rejection
// rates with Wilson intervals, instance certification, CSV/JSON reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "uniftest/combinatorics.hpp"
#include "uniftest/distance.hpp"
#include "uniftest/error.hpp"
#include "uniftest/family.hpp"
#include "uniftest/rational.hpp"
#include "uniftest/rng.hpp"
#include "uniftest/testers.hpp"

namespace uniftest {

enum class TesterKind { canonical, junta, density, disjoint_pair };
enum class GeneratorKind { star, junta, full, dno, random, file };

inline const char* to_string(TesterKind t) {
  switch (t) {
    case TesterKind::canonical: return "canonical";
    case TesterKind::junta: return "junta";
    case TesterKind::density: return "density";
    case TesterKind::disjoint_pair: return "disjoint-pair";
  }
  return "?";
}

inline const char* to_string(GeneratorKind g) {
  switch (g) {
    case GeneratorKind::star: return "star";
    case GeneratorKind::junta: return "junta";
    case GeneratorKind::full: return "full";
    case GeneratorKind::dno: return "dno";
    case GeneratorKind::random: return "random";
    case GeneratorKind::file: return "file";
  }
  return "?";
}

inline TesterKind parse_tester(const std::string& s) {
  for (auto t : {TesterKind::canonical, TesterKind::junta, TesterKind::density, TesterKind::disjoint_pair}) {
    if (s == to_string(t)) return t;
  }
  throw ValidationError("unknown tester '" + s + "'");
}

inline GeneratorKind parse_generator(const std::string& s) {
  for (auto g : {GeneratorKind::star, GeneratorKind::junta, GeneratorKind::full, GeneratorKind::dno,
                 GeneratorKind::random, GeneratorKind::file}) {
    if (s == to_string(g)) return g;
  }
  throw ValidationError("unknown generator '" + s + "'");
}

struct ExperimentConfig {
  int n = 0;
  int k = 0;
  Rational eps{1, 10};
  /// When set, the tolerant testers run with (eps1, eps2) = (eps, eps2);
  /// otherwise with (0, eps).
  std::optional<Rational> eps2;
  TesterKind tester = TesterKind::canonical;
  /// Explicit sample count; when absent it comes from the tester's formula.
  std::optional<std::uint64_t> m;
  int r = 2;
  double c = 1.0;
  int j = 1;
  GeneratorKind generator = GeneratorKind::star;
  int center = 1;
  int generator_j = 3;
  double p = 0.5;
  std::string family_path;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  bool validate = false;
  unsigned threads = 1;
  std::uint64_t edge_budget = kDefaultEdgeBudget;

  bool tolerant() const noexcept { return tester == TesterKind::junta || tester == TesterKind::density; }
  Rational eps1() const { return eps2 ? eps : Rational(0); }
  Rational effective_eps2() const { return eps2 ? *eps2 : eps; }
  /// The eps the instance is meant to be far (or close) against.
  Rational farness() const { return tolerant() ? effective_eps2() : eps; }
};

inline void check_config(const ExperimentConfig& cfg) {
  check_uniform_params(cfg.n, cfg.k);
  if (cfg.trials < 1) throw ValidationError("trials must be at least 1");
  if (cfg.eps < Rational(0)) throw ValidationError("eps must be nonnegative");
  if (cfg.eps2 && *cfg.eps2 < cfg.eps) throw ValidationError("need eps <= eps2");
  if (cfg.m && *cfg.m < 1 && cfg.tester != TesterKind::disjoint_pair) throw ValidationError("m must be at least 1");
  if (cfg.generator == GeneratorKind::file && cfg.family_path.empty()) {
    throw ValidationError("generator 'file' needs a family path");
  }
}

/// Sample count used by the configured tester.
inline std::uint64_t sample_size(const ExperimentConfig& cfg) {
  if (cfg.m) return *cfg.m;
  switch (cfg.tester) {
    case TesterKind::canonical: return canonical_sample_size(cfg.r, cfg.eps, cfg.c, cfg.k);
    case TesterKind::junta: return junta_sample_size(cfg.effective_eps2(), cfg.j, cfg.n);
    case TesterKind::density: return canonical_sample_size(2, cfg.effective_eps2());
    case TesterKind::disjoint_pair: {
      if (cfg.eps <= Rational(0)) throw ValidationError("disjoint-pair default m needs eps > 0");
      return static_cast<std::uint64_t>((cfg.eps.den() + cfg.eps.num() - 1) / cfg.eps.num());
    }
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Instances and their certification

struct InstanceValidation {
  bool far;
  std::uint64_t distance;
};

/// Exact distance and its classification against eps * C(n,k).
inline InstanceValidation validate_instance(const ExplicitFamily& f, const Rational& eps,
                                            std::uint64_t edge_budget = kDefaultEdgeBudget) {
  const auto d = exact_distance(f, edge_budget);
  return {exceeds(d, eps, f.total()), d};
}

enum class CertificationKind { none, exact, matching, uncertified };

inline const char* to_string(CertificationKind c) {
  switch (c) {
    case CertificationKind::none: return "none";
    case CertificationKind::exact: return "exact";
    case CertificationKind::matching: return "matching";
    case CertificationKind::uncertified: return "uncertified";
  }
  return "?";
}

inline CertificationKind parse_certification(const std::string& s) {
  for (auto c : {CertificationKind::none, CertificationKind::exact, CertificationKind::matching,
                 CertificationKind::uncertified}) {
    if (s == to_string(c)) return c;
  }
  throw ValidationError("unknown certification '" + s + "'");
}

struct Certification {
  CertificationKind kind = CertificationKind::uncertified;
  /// Exact distance (kind exact) or a proven lower bound (kind matching).
  std::uint64_t distance = 0;
  /// Meaningful unless uncertified.
  bool far = false;
};

/// True iff `pairs` are pairwise-disjoint pairs of disjoint members of f,
/// no set used twice. Such a list proves distance >= pairs.size().
inline bool verify_disjoint_pairs(const ExplicitFamily& f, const std::vector<DisjointPair>& pairs) {
  std::vector<std::uint64_t> used;
  for (const auto& p : pairs) {
    if (!f.contains(p.first) || !f.contains(p.second) || (p.first.mask() & p.second.mask()) != 0) return false;
    used.push_back(rank(p.first));
    used.push_back(rank(p.second));
  }
  std::sort(used.begin(), used.end());
  return std::adjacent_find(used.begin(), used.end()) == used.end();
}

/// Exact oracle within budget; past it, a matching certificate (the planted
/// pairs if given, else an augmented greedy matching) when it proves
/// farness; otherwise uncertified.
inline Certification certify_instance(const ExplicitFamily& f, const Rational& eps, std::uint64_t edge_budget,
                                      const std::vector<DisjointPair>* planted = nullptr) {
  try {
    const auto v = validate_instance(f, eps, edge_budget);
    return {CertificationKind::exact, v.distance, v.far};
  } catch (const BudgetError&) {
  }
  std::uint64_t lower = 0;
  if (planted != nullptr && verify_disjoint_pairs(f, *planted)) lower = planted->size();
  if (!exceeds(lower, eps, f.total())) lower = std::max(lower, augmented_matching_size(f));
  if (exceeds(lower, eps, f.total())) return {CertificationKind::matching, lower, true};
  return {CertificationKind::uncertified, 0, false};
}

struct Instance {
  std::shared_ptr<const ExplicitFamily> family;  // null for predicate-only instances
  FamilyOracle::Predicate predicate;
  std::vector<DisjointPair> planted;
};

inline bool deterministic_generator(GeneratorKind g) {
  return g != GeneratorKind::dno && g != GeneratorKind::random;
}

inline Instance make_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  Instance inst;
  const bool fits = binomial(cfg.n, cfg.k) <= kBitmapCap;
  Rng rng(seed);
  switch (cfg.generator) {
    case GeneratorKind::star:
      if (cfg.center < 1 || cfg.center > cfg.n) throw ValidationError("star center outside [1,n]");
      if (!fits) {
        inst.predicate = star_predicate(cfg.center);
        return inst;
      }
      inst.family = std::make_shared<const ExplicitFamily>(star_family(cfg.n, cfg.k, cfg.center));
      return inst;
    case GeneratorKind::full:
      if (!fits) {
        inst.predicate = full_predicate();
        return inst;
      }
      inst.family = std::make_shared<const ExplicitFamily>(full_family(cfg.n, cfg.k));
      return inst;
    case GeneratorKind::junta: {
      auto junta = majority_junta(cfg.n, cfg.generator_j);
      if (!fits) {
        inst.predicate = [junta](const KSubset& s) { return junta.admits(s); };
        return inst;
      }
      inst.family = std::make_shared<const ExplicitFamily>(junta_family(cfg.n, cfg.k, junta));
      return inst;
    }
    case GeneratorKind::dno: {
      auto d = dno_instance(cfg.n, cfg.k, cfg.farness(), rng);
      inst.family = std::make_shared<const ExplicitFamily>(std::move(d.family));
      inst.planted = std::move(d.pairs);
      return inst;
    }
    case GeneratorKind::random:
      inst.family = std::make_shared<const ExplicitFamily>(random_family(cfg.n, cfg.k, cfg.p, rng));
      return inst;
    case GeneratorKind::file: {
      auto f = read_family(cfg.family_path);
      if (f.n() != cfg.n || f.k() != cfg.k) throw ValidationError("family file (n,k) does not match --n/--k");
      inst.family = std::make_shared<const ExplicitFamily>(std::move(f));
      return inst;
    }
  }
  return inst;
}

inline FamilyOracle make_oracle(const ExperimentConfig& cfg, const Instance& inst) {
  return inst.family ? FamilyOracle(inst.family) : FamilyOracle::from_predicate(cfg.n, cfg.k, inst.predicate);
}

// ---------------------------------------------------------------------------
// Trials

/// 95% Wilson score interval for `successes` out of `trials`.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct TrialStats {
  std::uint64_t trials = 0;
  std::uint64_t rejections = 0;
  std::uint64_t acceptances = 0;
  Rational rejection_rate;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
  Rational mean_queries;
  std::optional<std::uint64_t> validated_distance;
  CertificationKind certification = CertificationKind::none;
  /// "far", "close", "mixed" or "" when not validated / uncertified.
  std::string classification;

  friend bool operator==(const TrialStats&, const TrialStats&) = default;
};

struct TrialOutcome {
  bool rejected = false;
  std::uint64_t queries = 0;
  std::optional<Certification> certification;
};

inline TrialOutcome run_single_trial(const ExperimentConfig& cfg, const Instance& inst, std::uint64_t m,
                                     std::uint64_t tester_seed) {
  FamilyOracle oracle = make_oracle(cfg, inst);
  TesterReport report;
  switch (cfg.tester) {
    case TesterKind::canonical: report = canonical_tester(oracle, cfg.n, cfg.k, m, tester_seed); break;
    case TesterKind::junta:
      report = junta_tester(oracle, cfg.n, cfg.k, cfg.eps1(), cfg.effective_eps2(), cfg.j, m, tester_seed);
      break;
    case TesterKind::density: report = density_tester(oracle, cfg.n, cfg.k, cfg.effective_eps2(), m, tester_seed); break;
    case TesterKind::disjoint_pair: report = disjoint_pair_tester(oracle, cfg.n, cfg.k, m, tester_seed); break;
  }
  return {!report.accepted(), oracle.queries_used(), std::nullopt};
}

inline Certification certify(const ExperimentConfig& cfg, const Instance& inst) {
  if (!inst.family) return {};
  return certify_instance(*inst.family, cfg.farness(), cfg.edge_budget, inst.planted.empty() ? nullptr : &inst.planted);
}

/// Runs cfg.trials independent trials. Trial t uses substream t of cfg.seed
/// (instance seed = substream 1 of it, tester seed = substream 2), so the
/// aggregate does not depend on cfg.threads.
inline TrialStats run_trials(const ExperimentConfig& cfg) {
  check_config(cfg);
  const std::uint64_t m = sample_size(cfg);
  const bool shared = deterministic_generator(cfg.generator);
  std::optional<Instance> shared_instance;
  std::optional<Certification> shared_cert;
  if (shared) {
    shared_instance = make_instance(cfg, cfg.seed);
    if (cfg.validate) shared_cert = certify(cfg, *shared_instance);
  }

  std::vector<TrialOutcome> outcomes(cfg.trials);
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t t = begin; t < end; ++t) {
      const std::uint64_t trial_seed = substream_seed(cfg.seed, t);
      if (shared) {
        outcomes[t] = run_single_trial(cfg, *shared_instance, m, substream_seed(trial_seed, 2));
      } else {
        Instance inst = make_instance(cfg, substream_seed(trial_seed, 1));
        outcomes[t] = run_single_trial(cfg, inst, m, substream_seed(trial_seed, 2));
        if (cfg.validate) outcomes[t].certification = certify(cfg, inst);
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.trials)));
  if (threads == 1) {
    work(0, cfg.trials);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (cfg.trials + threads - 1) / threads;
    for (unsigned i = 0; i < threads; ++i) {
      const std::uint64_t begin = std::min<std::uint64_t>(cfg.trials, i * chunk);
      const std::uint64_t end = std::min<std::uint64_t>(cfg.trials, begin + chunk);
      pool.emplace_back([&, i, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  TrialStats stats;
  stats.trials = cfg.trials;
  std::uint64_t queries = 0;
  for (const auto& o : outcomes) {
    stats.rejections += o.rejected ? 1 : 0;
    queries += o.queries;
  }
  stats.acceptances = stats.trials - stats.rejections;
  stats.rejection_rate = Rational(static_cast<std::int64_t>(stats.rejections), static_cast<std::int64_t>(stats.trials));
  stats.mean_queries = Rational(static_cast<std::int64_t>(queries), static_cast<std::int64_t>(stats.trials));
  std::tie(stats.wilson_lo, stats.wilson_hi) = wilson_interval(stats.rejections, stats.trials);

  if (cfg.validate) {
    std::vector<Certification> certs;
    if (shared_cert) certs.push_back(*shared_cert);
    for (const auto& o : outcomes) {
      if (o.certification) certs.push_back(*o.certification);
    }
    stats.certification = CertificationKind::exact;
    bool any_far = false, any_close = false;
    for (const auto& c : certs) {
      if (c.kind == CertificationKind::uncertified) {
        stats.certification = CertificationKind::uncertified;
        continue;
      }
      if (c.kind == CertificationKind::matching && stats.certification == CertificationKind::exact) {
        stats.certification = CertificationKind::matching;
      }
      (c.far ? any_far : any_close) = true;
      stats.validated_distance = stats.validated_distance ? std::min(*stats.validated_distance, c.distance) : c.distance;
    }
    if (stats.certification == CertificationKind::uncertified) {
      stats.validated_distance.reset();
    } else {
      stats.classification = any_far && any_close ? "mixed" : any_far ? "far" : "close";
    }
  }
  return stats;
}

struct ExperimentResult {
  ExperimentConfig config;
  std::uint64_t m = 0;
  TrialStats stats;
};

/// One row per eps value, ascending. For tolerant testers without an
/// explicit eps2, eps2 follows the grid value.
inline std::vector<ExperimentResult> run_grid(const ExperimentConfig& base, std::vector<Rational> eps_values) {
  if (eps_values.empty()) eps_values.push_back(base.eps);
  std::sort(eps_values.begin(), eps_values.end());
  std::vector<ExperimentResult> out;
  for (const auto& e : eps_values) {
    ExperimentConfig cfg = base;
    cfg.eps = e;
    out.push_back({cfg, sample_size(cfg), run_trials(cfg)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string decimal6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "n",           "k",
      "tester",      "generator",
      "eps",         "eps_num",
      "eps_den",     "eps2",
      "eps2_num",    "eps2_den",
      "m",           "trials",
      "seed",        "rejections",
      "acceptances", "rejection_rate",
      "rejection_rate_num", "rejection_rate_den",
      "wilson_lo",   "wilson_hi",
      "mean_queries", "mean_queries_num",
      "mean_queries_den", "validated_distance",
      "certification", "classification"};
  return cols;
}

inline std::vector<std::string> report_row(const ExperimentResult& r) {
  const auto& c = r.config;
  const auto& s = r.stats;
  const Rational eps2 = c.effective_eps2();
  return {std::to_string(c.n),
          std::to_string(c.k),
          to_string(c.tester),
          to_string(c.generator),
          decimal6(c.eps.to_double()),
          std::to_string(c.eps.num()),
          std::to_string(c.eps.den()),
          decimal6(eps2.to_double()),
          std::to_string(eps2.num()),
          std::to_string(eps2.den()),
          std::to_string(r.m),
          std::to_string(s.trials),
          std::to_string(c.seed),
          std::to_string(s.rejections),
          std::to_string(s.acceptances),
          decimal6(s.rejection_rate.to_double()),
          std::to_string(s.rejection_rate.num()),
          std::to_string(s.rejection_rate.den()),
          decimal6(s.wilson_lo),
          decimal6(s.wilson_hi),
          decimal6(s.mean_queries.to_double()),
          std::to_string(s.mean_queries.num()),
          std::to_string(s.mean_queries.den()),
          s.validated_distance ? std::to_string(*s.validated_distance) : "",
          to_string(s.certification),
          s.classification};
}

inline void emit_csv(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    auto cells = report_row(r);
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
}

inline nlohmann::ordered_json to_json(const ExperimentResult& r) {
  const auto& c = r.config;
  const auto& s = r.stats;
  const Rational eps2 = c.effective_eps2();
  nlohmann::ordered_json j;
  j["n"] = c.n;
  j["k"] = c.k;
  j["tester"] = to_string(c.tester);
  j["generator"] = to_string(c.generator);
  j["eps"] = decimal6(c.eps.to_double());
  j["eps_num"] = c.eps.num();
  j["eps_den"] = c.eps.den();
  j["eps2"] = decimal6(eps2.to_double());
  j["eps2_num"] = eps2.num();
  j["eps2_den"] = eps2.den();
  j["m"] = r.m;
  j["trials"] = s.trials;
  j["seed"] = c.seed;
  j["rejections"] = s.rejections;
  j["acceptances"] = s.acceptances;
  j["rejection_rate"] = decimal6(s.rejection_rate.to_double());
  j["rejection_rate_num"] = s.rejection_rate.num();
  j["rejection_rate_den"] = s.rejection_rate.den();
  j["wilson_lo"] = s.wilson_lo;
  j["wilson_hi"] = s.wilson_hi;
  j["mean_queries"] = decimal6(s.mean_queries.to_double());
  j["mean_queries_num"] = s.mean_queries.num();
  j["mean_queries_den"] = s.mean_queries.den();
  j["validated_distance"] = s.validated_distance ? nlohmann::ordered_json(*s.validated_distance) : nlohmann::ordered_json();
  j["certification"] = to_string(s.certification);
  j["classification"] = s.classification;
  return j;
}

inline void emit_json(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  nlohmann::ordered_json doc;
  doc["results"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) doc["results"].push_back(to_json(r));
  out << doc.dump(2) << '\n';
}

/// Inverse of to_json for the statistics block.
inline TrialStats stats_from_json(const nlohmann::ordered_json& j) {
  TrialStats s;
  s.trials = j.at("trials").get<std::uint64_t>();
  s.rejections = j.at("rejections").get<std::uint64_t>();
  s.acceptances = j.at("acceptances").get<std::uint64_t>();
  s.rejection_rate = Rational(j.at("rejection_rate_num").get<std::int64_t>(), j.at("rejection_rate_den").get<std::int64_t>());
  s.wilson_lo = j.at("wilson_lo").get<double>();
  s.wilson_hi = j.at("wilson_hi").get<double>();
  s.mean_queries = Rational(j.at("mean_queries_num").get<std::int64_t>(), j.at("mean_queries_den").get<std::int64_t>());
  if (!j.at("validated_distance").is_null()) s.validated_distance = j.at("validated_distance").get<std::uint64_t>();
  s.certification = parse_certification(j.at("certification").get<std::string>());
  s.classification = j.at("classification").get<std::string>();
  return s;
}

enum class ReportFormat { csv, json };

inline void emit_report(const std::vector<ExperimentResult>& rows, ReportFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report '" + path + "' for writing");
  if (format == ReportFormat::csv) {
    emit_csv(out, rows);
  } else {
    emit_json(out, rows);
  }
  if (!out) throw std::runtime_error("write failed for report '" + path + "'");
}

}  // namespace uniftest
