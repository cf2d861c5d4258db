// Runs a solver/validator exchange with canned replies and verifies the
// extracted program.
#include <iostream>

#include "geocon/geocon.hpp"

int main() {
  const auto bank = geocon::load_bank(std::string(GEOCON_DATA_DIR) + "/bank.json");
  const auto& spec = bank.at("alpha-midpoint");

  geocon::ScriptedBackend solver({
      "<Circle Tool> 1: Construct circle c1 with center A passing through B.\n"
      "<Circle Tool> 2: Construct circle c2 with center B passing through A.\n"
      "<Intersect Tool> 3: Construct the intersection points P and Q of c1 and c2.\n"
      "<Line Tool> 4: Construct line m through P and Q.\n"
      "<Intersect Tool> 5: Construct the intersection point M of m and AB.\n"});
  geocon::ScriptedBackend validator({
      "<STEP> 1: Correct.\n<STEP> 2: Correct.\n<STEP> 3: Correct.\n<STEP> 4: Correct.\n<STEP> 5: Correct.\n"});

  geocon::Configuration cfg;
  cfg.kind = geocon::ConfigKind::SV_GT;
  const geocon::BundleFactory bundles = [&](geocon::AgentRole role) {
    return geocon::build_prompt(role, spec, {}, std::nullopt, geocon::RenamePolicy::original());
  };
  geocon::RoleBackends roles;
  roles.solver_gt = &solver;
  roles.validator_gt = &validator;

  const auto result = geocon::run_dialogue(cfg, spec, bundles, roles);
  std::cout << result.transcript.to_jsonl() << "\n";
  if (!result.candidate) {
    std::cout << "no program extracted\n";
    return 1;
  }
  std::cout << geocon::render_canonical(*result.candidate) << "\n";
  const bool ok = geocon::verify(spec, *result.candidate).fully_correct;
  std::cout << "fully correct: " << std::boolalpha << ok << "\n";
  return ok ? 0 : 1;
}
