// Recovers the boundary conductivity of the smooth-trace phantom from
// simulated ND data and prints it next to the true trace.
#include <cstdio>

#include "eitbc/fem_forward.hpp"
#include "eitbc/phantoms.hpp"
#include "eitbc/trace_recon.hpp"

int main() {
  using namespace eitbc;
  const Phantom ph = phantom("smoothtrace");
  const auto R = nd_matrix(mesh_disc(1.0, 3), ph.field(), 64);
  const TraceResult t = recover_trace(nd_to_dn(add_noise(R, 1e-5, 1)), {});
  std::printf("%10s %12s %12s\n", "beta", "recovered", "true");
  for (std::size_t i = 0; i < t.betas.size(); i += 10)
    std::printf("%10.4f %12.6f %12.6f\n", t.betas[i], t.values[i], ph.trace(t.betas[i]));
}
