// Ensemble throughput: serial reference path vs OpenMP blocked driver.
// Also checks that both paths produce bit-identical snapshot estimates.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qtraj/trajectories.hpp"

using namespace qtraj;

namespace {

double time_run(const LindbladModel& model, const StateVector& psi0, EnsembleOptions opt,
                DensityEstimate* out) {
    auto t0 = std::chrono::steady_clock::now();
    auto res = run_ensemble(model, psi0, opt);
    auto t1 = std::chrono::steady_clock::now();
    if (out) *out = std::move(res.snapshots.back());
    return std::chrono::duration<double>(t1 - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    long ntraj = argc > 1 ? std::atol(argv[1]) : 2000;
    int nmax = argc > 2 ? std::atoi(argv[2]) : 16;
    double tfinal = argc > 3 ? std::atof(argv[3]) : 1.0;

    FockSpace space{nmax};
    auto model = damped_mode(space);
    auto psi0 = coherent_state(space, 1.0);

    EnsembleOptions opt;
    opt.run.scheme = Scheme::Diffusive;
    opt.run.strategy = SamplingStrategy::OstensibleC;
    opt.run.dt = 1e-3;
    opt.run.t_final = tfinal;
    opt.run.keep_noise = false;
    opt.ntraj = ntraj;
    opt.seed = 42;

    int hw = 1;
#ifdef _OPENMP
    hw = omp_get_max_threads();
#endif
    std::printf("ensemble: %ld diffusive trajectories, nmax=%d, t_final=%g, dt=%g\n", ntraj, nmax,
                tfinal, opt.run.dt);

    DensityEstimate ref;
    opt.threads = 0;
    double t_serial = time_run(model, psi0, opt, &ref);
    std::printf("%-22s %8.3f s  (%8.1f traj/s)\n", "serial reference", t_serial,
                ntraj / t_serial);

    for (int th = 1; th <= hw; th *= 2) {
        DensityEstimate est;
        opt.threads = th;
        double t = time_run(model, psi0, opt, &est);
        bool identical = (est.mean - ref.mean).cwiseAbs().maxCoeff() == 0.0 &&
                         (est.stderr_ - ref.stderr_).cwiseAbs().maxCoeff() == 0.0;
        std::printf("%-13s %2d thr  %8.3f s  (%8.1f traj/s)  speedup %.2fx  bits %s\n", "openmp",
                    th, t, ntraj / t, t_serial / t, identical ? "identical" : "DIFFER");
        if (!identical) return 1;
    }
    return 0;
}
