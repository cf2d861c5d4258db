// Checks a hand-written midpoint construction against the bundled bank.
#include <iostream>

#include "geocon/geocon.hpp"

int main() {
  const auto bank = geocon::load_bank(std::string(GEOCON_DATA_DIR) + "/bank.json");
  const auto& spec = bank.at("alpha-midpoint");
  std::cout << spec.statement << "\n\n";

  const auto program = geocon::parse(
      "circle(A, B) -> c1\n"
      "circle(B, A) -> c2\n"
      "intersect(c1, c2) -> P, Q\n"
      "line(P, Q) -> m\n"
      "intersect(m, AB) -> M\n");
  std::cout << geocon::render_paper(program) << "\n";

  const auto report = geocon::verify(spec, program);
  std::cout << "fully correct: " << std::boolalpha << report.fully_correct << "\n";
  for (const auto& inst : report.instances) {
    std::cout << "  seed " << inst.seed << ": " << (inst.verified ? "ok" : "miss") << "\n";
  }
  return report.fully_correct ? 0 : 1;
}
