#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "geocon/geocon.hpp"
#include "geocon/remote_backend.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw geocon::Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

geocon::ExternalBackendFactory remote_factory() {
  auto limiter = std::make_shared<geocon::TokenBucket>(4.0, 1.0);
  return [limiter](const nlohmann::json& spec) -> std::unique_ptr<geocon::ChatBackend> {
    const std::string kind = spec.value("kind", std::string());
    if (kind != "remote") throw geocon::ConfigError("unknown backend kind '" + kind + "'");
    geocon::RemoteConfig rc;
    rc.base_url = spec.at("base_url").get<std::string>();
    rc.path = spec.value("path", rc.path);
    rc.model = spec.at("model").get<std::string>();
    rc.api_key_env = spec.value("api_key_env", std::string());
    rc.timeout_seconds = spec.value("timeout_seconds", rc.timeout_seconds);
    return std::make_unique<geocon::RemoteBackend>(rc, limiter);
  };
}

std::filesystem::path resource_dir() {
  if (const char* env = std::getenv("GEOCON_RESOURCES")) return env;
  return GEOCON_RESOURCE_DIR;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Straightedge-and-compass construction benchmark"};
  app.require_subcommand(1);

  std::string bank_path, problem_id, solution_path, config_path, out_dir, packs, method, policy, in_dir, format;
  std::size_t instances = geocon::kDefaultInstances, seeds = 10, trials = 1000;
  std::uint64_t seed = 0;

  auto* verify = app.add_subcommand("verify", "Verify a candidate program");
  verify->add_option("--bank", bank_path, "Problem bank JSON")->required();
  verify->add_option("--problem", problem_id, "Problem id")->required();
  verify->add_option("--solution", solution_path, "Candidate program file")->required();
  verify->add_option("--instances", instances, "Random instances");
  verify->add_option("--seed", seed, "Base seed");

  auto* bench = app.add_subcommand("bench", "Run a configuration over the bank");
  bench->add_option("--bank", bank_path)->required();
  bench->add_option("--config", config_path)->required();
  bench->add_option("--out", out_dir)->required();
  bench->add_option("--packs", packs, "Comma-separated pack names");
  bench->add_option("--seeds", seeds, "Harness seeds");

  auto* baseline = app.add_subcommand("baseline", "Run a non-LLM baseline");
  baseline->add_option("--bank", bank_path)->required();
  baseline->add_option("--method", method)->required()->check(CLI::IsMember({"lcs", "1gram", "2gram", "3gram"}));
  baseline->add_option("--trials", trials)->required();
  baseline->add_option("--seed", seed);

  auto* vrp = app.add_subcommand("vrp", "Print the scene description of an instance");
  vrp->add_option("--bank", bank_path)->required();
  vrp->add_option("--problem", problem_id)->required();
  vrp->add_option("--seed", seed);

  auto* rename = app.add_subcommand("rename", "Apply a renaming policy to a problem");
  rename->add_option("--bank", bank_path)->required();
  rename->add_option("--problem", problem_id)->required();
  rename->add_option("--policy", policy)->required()->check(CLI::IsMember({"x", "+1", "+2", "+3"}));

  auto* report = app.add_subcommand("report", "Render a bench report");
  report->add_option("--in", in_dir)->required();
  report->add_option("--format", format)->required()->check(CLI::IsMember({"md", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      const auto bank = geocon::load_bank(bank_path);
      const auto& spec = bank.at(problem_id);
      const auto program = geocon::parse(slurp(solution_path));
      const auto r = geocon::verify(spec, program, instances, seed);
      std::cout << geocon::to_json(r).dump(2) << "\n";
      return r.fully_correct ? 0 : 1;
    }
    if (*bench) {
      const auto bank = geocon::load_bank(bank_path);
      const auto cfg = geocon::BenchConfig::from_json(nlohmann::json::parse(slurp(config_path)));
      geocon::BenchOptions opt;
      opt.packs = split_list(packs);
      opt.seeds = seeds;
      opt.out = out_dir;
      opt.resources = geocon::Resources::load(resource_dir());
      opt.external = remote_factory();
      auto r = geocon::run_bench(cfg, bank, opt);
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      char stamp[32];
      std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
      r.metadata["generated_at"] = stamp;
      std::ofstream(std::filesystem::path(out_dir) / "report.json") << geocon::emit_json(r);
      std::cout << geocon::emit_markdown(r);
      return 0;
    }
    if (*baseline) {
      const auto bank = geocon::load_bank(bank_path);
      const auto s = geocon::run_baseline(bank, geocon::parse_method(method), trials, seed);
      std::cout << s.to_json().dump(2) << "\n";
      return 0;
    }
    if (*vrp) {
      const auto bank = geocon::load_bank(bank_path);
      const auto& spec = bank.at(problem_id);
      std::cout << geocon::describe_scene(geocon::instantiate(spec, seed), spec);
      return 0;
    }
    if (*rename) {
      const auto bank = geocon::load_bank(bank_path);
      const auto r = geocon::apply_rename(geocon::RenamePolicy::parse(policy), bank.at(problem_id));
      nlohmann::json j{{"problem", problem_id},
                       {"policy", geocon::RenamePolicy::parse(policy).label()},
                       {"statement", r.spec.statement},
                       {"map", r.forward},
                       {"inverse", r.inverse}};
      if (r.collision_note) j["collision"] = *r.collision_note;
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*report) {
      const auto r = geocon::BenchReport::from_json(
          nlohmann::json::parse(slurp((std::filesystem::path(in_dir) / "report.json").string())));
      std::cout << (format == "md" ? geocon::emit_markdown(r) : geocon::emit_json(r));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
