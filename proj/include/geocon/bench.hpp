#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "geocon/baselines.hpp"
#include "geocon/harness.hpp"
#include "geocon/simulacra.hpp"

namespace geocon {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Parsed bench configuration file.
struct BenchConfig {
  std::string name;  // method label in the report; defaults to the configuration name
  Configuration dialogue;
  double temperature_pass1 = 0.2;
  double temperature_pass50 = 0.6;
  std::size_t n_pass1 = 1;
  std::size_t n_pass50 = 50;
  AdaptiveConfig adaptive;
  bool adaptive_enabled = true;  // false: the five seed examples
  RenamePolicy rename = RenamePolicy::original();
  enum class Vrp { Off, On, Vlm } vrp = Vrp::Off;
  nlohmann::json backends = nlohmann::json::object();  // role name -> backend spec
  std::vector<std::string> baselines;
  std::size_t baseline_trials = 1000;
  std::size_t instances = kDefaultInstances;
  std::size_t workers = 1;

  static BenchConfig from_json(const nlohmann::json& j) {
    BenchConfig c;
    try {
      c.dialogue.kind = parse_config_kind(j.at("configuration").get<std::string>());
      c.name = j.value("name", std::string(config_name(c.dialogue.kind)));
      c.dialogue.feedback_mode = j.value("feedback_mode", false);
      c.dialogue.max_rounds = j.value("max_rounds", std::size_t{5});
      c.temperature_pass1 = j.value("temperature_pass1", 0.2);
      c.temperature_pass50 = j.value("temperature_pass50", 0.6);
      c.n_pass1 = j.value("n_pass1", std::size_t{1});
      c.n_pass50 = j.value("n_pass50", std::size_t{50});
      if (j.contains("adaptive") && !j["adaptive"].is_null()) {
        const auto& a = j["adaptive"];
        c.adaptive.threshold = a.value("threshold", 0.5);
        c.adaptive.cap = a.value("cap", std::size_t{15});
        c.adaptive.k = a.value("k", std::size_t{5});
        const std::string mode = a.value("mode", std::string("ST"));
        if (mode == "ST") {
          c.adaptive.mode = AdaptiveConfig::Mode::ST;
        } else if (mode == "Self") {
          c.adaptive.mode = AdaptiveConfig::Mode::Self;
        } else {
          throw ConfigError("adaptive.mode must be ST or Self");
        }
      } else {
        c.adaptive_enabled = false;
      }
      c.rename = RenamePolicy::parse(j.value("rename_policy", std::string("+0")));
      const std::string vrp = j.value("vrp", std::string("off"));
      if (vrp == "off") {
        c.vrp = Vrp::Off;
      } else if (vrp == "on") {
        c.vrp = Vrp::On;
      } else if (vrp == "vlm") {
        c.vrp = Vrp::Vlm;
      } else {
        throw ConfigError("vrp must be on, off or vlm");
      }
      c.backends = j.value("backends", nlohmann::json::object());
      c.baselines = j.value("baselines", std::vector<std::string>{});
      c.baseline_trials = j.value("baseline_trials", std::size_t{1000});
      c.instances = j.value("instances", kDefaultInstances);
      c.workers = std::max<std::size_t>(1, j.value("workers", std::size_t{1}));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bench config: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bench config: ") + e.what());
    }
    if (c.dialogue.max_rounds < 1) throw ConfigError("bench config: max_rounds must be at least 1");
    if (c.n_pass1 < 1 || c.n_pass50 < 50) throw ConfigError("bench config: need n_pass1 >= 1 and n_pass50 >= 50");
    return c;
  }
};

/// Builds a backend for a non-scripted spec, e.g. {"kind": "remote", ...}.
using ExternalBackendFactory = std::function<std::unique_ptr<ChatBackend>(const nlohmann::json& spec)>;

/// Scripted replies for one dialogue: a plain list, or an object keyed by
/// problem id with "*" as the fallback.
inline std::vector<std::string> scripted_replies(const nlohmann::json& spec, const std::string& problem) {
  const auto& r = spec.at("replies");
  if (r.is_array()) return r.get<std::vector<std::string>>();
  if (r.contains(problem)) return r.at(problem).get<std::vector<std::string>>();
  if (r.contains("*")) return r.at("*").get<std::vector<std::string>>();
  return {};
}

inline std::unique_ptr<ChatBackend> make_backend(const nlohmann::json& spec, const std::string& problem,
                                                 const std::string& role, const ExternalBackendFactory& external) {
  const std::string kind = spec.value("kind", std::string("scripted"));
  if (kind == "scripted") return std::make_unique<ScriptedBackend>(scripted_replies(spec, problem), role);
  if (!external) throw ConfigError("backend kind '" + kind + "' is not available here");
  return external(spec);
}

struct BenchOptions {
  std::vector<std::string> packs;  // empty: all
  std::size_t seeds = 10;
  std::filesystem::path out;
  Resources resources;
  ExternalBackendFactory external;
};

struct ProblemRun {
  RunRecord pass1;
  RunRecord pass50;
  std::size_t backend_errors = 0;
};

namespace detail {

inline std::string write_transcripts(const std::filesystem::path& out, const std::string& rel,
                                     const std::vector<Transcript>& ts) {
  if (out.empty()) return rel;
  const auto path = out / rel;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  for (const auto& t : ts) f << t.to_jsonl();
  return rel;
}

}  // namespace detail

/// One problem under one harness seed: n_pass1 dialogues at the pass@1
/// temperature and n_pass50 at the pass@50 temperature, each verified.
inline ProblemRun run_problem(const BenchConfig& cfg, const Bank& bank, const ProblemSpec& spec, std::uint64_t seed,
                              const BenchOptions& opt) {
  const Scene scene = instantiate(spec, seed);
  const auto role_backend = [&](const std::string& role) -> std::unique_ptr<ChatBackend> {
    if (!cfg.backends.contains(role)) return nullptr;
    return make_backend(cfg.backends.at(role), spec.id, role, opt.external);
  };

  std::vector<Example> examples;
  const KnowledgeBase kb = knowledge_for(spec, bank);
  if (cfg.adaptive_enabled) {
    std::vector<std::string> corpus;
    for (const auto& e : kb.all()) corpus.push_back(similarity_text(*e.problem));
    LexicalSimilarity sim(corpus);
    auto selector = cfg.adaptive.mode == AdaptiveConfig::Mode::Self ? role_backend("selector") : nullptr;
    if (cfg.adaptive.mode == AdaptiveConfig::Mode::Self && !selector) {
      throw ConfigError("adaptive mode Self needs a 'selector' backend");
    }
    for (const auto& e : adaptive_select(kb, spec, cfg.adaptive, sim, selector.get()).examples) {
      examples.push_back(make_example(e));
    }
  } else {
    for (const auto& e : kb.seeds) examples.push_back(make_example(e));
  }

  std::optional<std::string> vrp;
  if (cfg.vrp == BenchConfig::Vrp::On) {
    vrp = describe_scene(scene, spec);
  } else if (cfg.vrp == BenchConfig::Vrp::Vlm) {
    auto vlm = role_backend("vlm");
    if (!vlm) throw ConfigError("vrp 'vlm' needs a 'vlm' backend");
    vrp = vlm->complete({{"user", "Describe the shapes, points, lines and relations in this scene:\n" +
                                      describe_scene(scene, spec)}},
                        0.0);
  }

  const BundleFactory bundles = [&](AgentRole role) {
    return build_prompt(role, spec, examples, vrp, cfg.rename, opt.resources);
  };
  const BackendFactory backends = [&](std::uint64_t) {
    OwnedBackends b;
    b.solver_nl = role_backend("SolverNL");
    b.solver_gt = role_backend("SolverGT");
    b.validator_nl = role_backend("ValidatorNL");
    b.validator_gt = role_backend("ValidatorGT");
    return b;
  };

  ProblemRun run;
  const auto one = [&](std::size_t n, double temperature, const char* tag) {
    Configuration dc = cfg.dialogue;
    dc.temperature = temperature;
    const std::uint64_t base = mix_seed(seed, std::stoull(digest(spec.id), nullptr, 16));
    SampleSet s = sample_candidates(dc, spec, n, base, bundles, backends);
    RunRecord r;
    r.problem = spec.id;
    r.pack = spec.pack;
    r.n = n;
    r.config = cfg.name + "/" + tag;
    r.seed = seed;
    for (const auto& c : s.candidates) {
      if (c && verify(spec, *c, cfg.instances, seed).fully_correct) ++r.c;
    }
    r.transcripts = detail::write_transcripts(
        opt.out, "transcripts/seed" + std::to_string(seed) + "/" + spec.id + "." + tag + ".jsonl", s.transcripts);
    run.backend_errors += s.backend_errors;
    return r;
  };
  run.pass1 = one(cfg.n_pass1, cfg.temperature_pass1, "pass1");
  run.pass50 = one(cfg.n_pass50, cfg.temperature_pass50, "pass50");
  return run;
}

/// Runs every selected problem under seeds 0..seeds-1, aggregates pass@1 and
/// pass@50, optionally adds baseline rates, and writes report.json,
/// report.md and runs.jsonl when an output directory is given.
inline BenchReport run_bench(const BenchConfig& cfg, const Bank& bank, const BenchOptions& opt) {
  if (opt.seeds < 1) throw ConfigError("bench: need at least one seed");
  std::vector<const ProblemSpec*> problems;
  for (const auto& p : bank.problems) {
    if (bank.is_seed(p)) continue;
    if (!opt.packs.empty() && std::find(opt.packs.begin(), opt.packs.end(), p.pack) == opt.packs.end()) continue;
    problems.push_back(&p);
  }
  if (problems.empty()) throw ConfigError("bench: no problems selected");
  if (!opt.out.empty()) std::filesystem::create_directories(opt.out);

  struct Job {
    const ProblemSpec* spec;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::uint64_t s = 0; s < opt.seeds; ++s) {
    for (const auto* p : problems) jobs.push_back({p, s});
  }
  std::vector<ProblemRun> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_problem(cfg, bank, *jobs[i].spec, jobs[i].seed, opt);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(cfg.workers, jobs.size());
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<RunRecord> r1, r50;
  std::size_t backend_errors = 0;
  for (const auto& r : results) {
    r1.push_back(r.pass1);
    r50.push_back(r.pass50);
    backend_errors += r.backend_errors;
  }
  MethodResult m = aggregate(cfg.name, r1, {1});
  MethodResult m50 = aggregate(cfg.name, r50, {50});
  m.overall.merge(m50.overall);
  for (auto& [pack, ks] : m50.packs) m.packs[pack].merge(ks);

  BenchReport report;
  report.methods.push_back(std::move(m));
  for (const auto& name : cfg.baselines) {
    const auto method = parse_method(name);
    report.baselines[name] = run_baseline(bank, method, cfg.baseline_trials, 0).fully_correct_rate();
  }
  report.metadata = {{"configuration", std::string(config_name(cfg.dialogue.kind))},
                     {"feedback_mode", cfg.dialogue.feedback_mode},
                     {"max_rounds", cfg.dialogue.max_rounds},
                     {"temperature_pass1", cfg.temperature_pass1},
                     {"temperature_pass50", cfg.temperature_pass50},
                     {"n_pass1", cfg.n_pass1},
                     {"n_pass50", cfg.n_pass50},
                     {"rename_policy", cfg.rename.label()},
                     {"seeds", opt.seeds},
                     {"problems", problems.size()},
                     {"backend_errors", backend_errors},
                     {"std", "sample standard deviation over seeds"}};

  if (!opt.out.empty()) {
    std::ofstream(opt.out / "report.json") << emit_json(report);
    std::ofstream(opt.out / "report.md") << emit_markdown(report);
    std::ofstream runs(opt.out / "runs.jsonl");
    for (const auto& r : r1) runs << r.to_json().dump() << "\n";
    for (const auto& r : r50) runs << r.to_json().dump() << "\n";
  }
  return report;
}

}  // namespace geocon
