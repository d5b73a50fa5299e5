// Averages a noisy cloud of orthonormal frames and of the subspaces they span,
// and compares every estimator against the true center.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "rlmean/rlmean.hpp"

using namespace rlmean;

namespace {

template <class F> double millis(F &&f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

} // namespace

int main(int argc, char **argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 200;
  const double sigma = argc > 2 ? std::atof(argv[2]) : 0.3;
  if (n < 1 || !(sigma > 0.0)) {
    std::fprintf(stderr, "usage: average_subspaces [n >= 1] [sigma > 0]\n");
    return 2;
  }

  Rng rng(7);
  const StiefelDataset st = generate_stiefel_dataset(10, 5, sigma, n, rng);
  const GrassmannDataset gr = to_grassmann(st);
  std::printf("St(10, 5) / Gr(10, 5), n = %d, sigma = %g\n\n", n, sigma);
  std::printf("%-16s %14s %6s %10s\n", "estimator", "error", "iters", "ms");

  for (const auto &name : known_estimators(Manifold::stiefel)) {
    BarycenterResult<StiefelPoint> res{st.center};
    const double ms = millis([&] { res = estimate_stiefel(name, st.samples, {}); });
    std::printf("%-16s %14.6e %6d %10.2f%s\n", name.c_str(),
                err_st(st.center, res.point), res.iterations, ms,
                res.converged ? "" : "  (not converged)");
  }
  for (const auto &name : known_estimators(Manifold::grassmann)) {
    BarycenterResult<GrassmannPoint> res{gr.center};
    const double ms =
        millis([&] { res = estimate_grassmann(name, gr.samples, {}); });
    std::printf("%-16s %14.6e %6d %10.2f%s\n", name.c_str(),
                err_gr(gr.center, res.point), res.iterations, ms,
                res.converged ? "" : "  (not converged)");
  }

  // The projected mean is the fixed point of the projection-based iteration.
  SolverControls tight;
  tight.tol = 1e-13;
  tight.max_iter = 1000;
  const auto iterated = rl_barycenter_projection(st.samples, tight);
  std::printf("\n|fixed-point iterate - proj_polar| = %.3e after %d iterations\n",
              (iterated.point.matrix() - proj_mean_polar(st.samples).matrix()).norm(),
              iterated.iterations);
  return 0;
}
