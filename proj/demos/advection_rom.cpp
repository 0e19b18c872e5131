// Library usage without the CLI: snapshots of the advection FOM, a POD and a
// quadratic embedding, and MPG ROMs at a held-out speed.

#include <cstdio>
#include <vector>

#include "mmor/embeddings.hpp"
#include "mmor/integrate.hpp"
#include "mmor/reduction.hpp"
#include "mmor/systems.hpp"
#include "mmor/training.hpp"

using namespace mmor;

int main() {
  AdvectionSpec spec;
  spec.gridSize = 64;
  const FomSystem fom = advectionFom(spec);
  const IntegratorSpec is;
  const std::vector<double> times = linspace(0.0, 1.0, 21);

  Mat states(fom.dim, 3 * long(times.size()));
  long col = 0;
  for (double mu : {0.5, 0.75, 1.0}) {
    const Trajectory t = integrate(fom, Vec::Constant(1, mu), is, times);
    for (long k = 0; k < t.size(); ++k) states.col(col++) = t.states.col(k);
  }
  const SnapshotSet snaps(states);

  const Params mu = Vec::Constant(1, 0.625);
  const Trajectory ref = integrate(fom, mu, is, times);
  for (const auto& fitted : {fitLinear(snaps, 6), fitQuadratic(snaps, 6)}) {
    const RomSystem rom = buildRom(fom, makeMpg(fitted.pair));
    const Trajectory lifted = liftTrajectory(integrate(rom, mu, is, times), fitted.pair.phi);
    const TrajectoryError err = trajectoryError(ref, lifted);
    std::printf("%-10s training MSE %.3e  max error at mu=0.625 %.3e\n", fitted.report.family.c_str(),
                fitted.report.finalMse, err.lInfInTime);
  }
  return 0;
}
