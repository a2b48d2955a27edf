// Runs the distributed rotation algorithm on one random graph and prints
// the cycle it finds.
//
//   dra_demo [n] [seed]

#include <cmath>
#include <iostream>
#include <string>

#include "hcdist/rotation.hpp"
#include "hcdist/verify.hpp"

using namespace hcdist;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::stoul(argv[1]) : 200;
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 1;
  const double p = std::min(1.0, 12 * std::log(static_cast<double>(n)) / static_cast<double>(n));

  const Graph g = generate_gnp({n, p, seed});
  std::cout << "G(" << n << ", " << p << "): " << g.num_edges() << " edges\n";

  const DraResult r = run_dra(g, seed);
  const SimulationReport& rep = r.report;
  std::cout << "rounds " << rep.rounds << ", steps " << rep.steps << " (budget " << step_budget(n) << "), messages "
            << rep.messages << ", peak memory " << rep.peak_memory_max() << " words\n";
  if (!rep.success) {
    std::cout << "failed: " << to_string(*rep.failure_reason) << ' ' << rep.failure_detail << '\n';
    return 0;
  }
  std::cout << "checker: " << (check_certificate(g, r.certificate).ok() ? "accepted" : "REJECTED") << "\ncycle:";
  for (NodeId v : cycle_from_certificate(r.certificate)) std::cout << ' ' << v;
  std::cout << '\n';
  return 0;
}
