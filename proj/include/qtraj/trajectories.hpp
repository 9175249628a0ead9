#pragma once

#include <functional>
#include <span>

#include "qtraj/controller.hpp"
#include "qtraj/dynamics.hpp"
#include "qtraj/record.hpp"
#include "qtraj/rng.hpp"

namespace qtraj {

// Precomputed operators for jump stepping at fixed gamma and dt.
struct JumpKit {
    FockSpace space;
    cplx gamma;
    double dt;
    double lambda1;       // ostensible jump probability per step
    bool custom_lambda;   // true when lambda1 != |gamma|^2 dt
    Mat omega0;           // full no-jump operator
    Mat cg;               // c + gamma
    Mat K;                // (c + gamma)^dag (c + gamma)
    Mat linear_jump;      // 1 + c/gamma
    Mat linear_nojump;    // 1 - dt (iH + c^dag c / 2 + gamma^* c)
};

// lambda1 < 0 selects the default |gamma|^2 dt.
JumpKit make_jump_kit(const LindbladModel& model, cplx gamma, double dt, double lambda1 = -1.0);

// Physical sampling: jump with probability dt <(c+g)^dag (c+g)>, then apply
// (c+gamma) or Omega0 and renormalize.  u is the uniform variate for the
// branch choice.  Returns 1 on a detection.  Throws StepSizeError when the
// jump probability reaches 0.1.
int step_jump_physical(Vec& psi, const JumpKit& kit, double u);

// Ostensible sampling at state-independent probability lambda1 per step; the
// state is left unnormalized so its squared norm carries the likelihood
// ratio.  Default lambda1 uses the local-oscillator forms 1 + c/gamma and
// 1 - dt(iH + c^dag c/2 + gamma^* c); a custom lambda1 applies Omega_r with
// the exact 1/sqrt(Lambda_r) compensation instead.
int step_jump_linear(Vec& psi, const JumpKit& kit, double u);

struct DiffusiveKit {
    FockSpace space;
    double dt;
    bool exact;                   // H = 0, c = a: per-step factorized exponential
    Mat euler;                    // 1 - dt (iH + c^dag c / 2)
    Mat c;
    Eigen::ArrayXd decay_half;    // exp(-n dt / 2)
};

DiffusiveKit make_diffusive_kit(const LindbladModel& model, double dt);

// One linear diffusive step with increment dw at LO phase phi (unnormalized).
void step_diffusive_linear(Vec& psi, const DiffusiveKit& kit, double dw, double phi);

// Spec-shaped single-step wrappers drawing their own noise.
StateVector step_jump_physical(const StateVector& psi, const LindbladModel& model,
                               cplx gamma, double dt, TrajectoryRng& rng, int* dn = nullptr);
StateVector step_jump_linear(const StateVector& psi, const LindbladModel& model,
                             cplx gamma, double dt, TrajectoryRng& rng, int* dn = nullptr);
StateVector step_diffusive_linear(const StateVector& psi, const LindbladModel& model,
                                  double phi, double dt, TrajectoryRng& rng,
                                  double* dw_out = nullptr);

struct RunOptions {
    Scheme scheme = Scheme::Jump;
    SamplingStrategy strategy = SamplingStrategy::PhysicalA;
    cplx gamma{0.0, 0.0};
    PhaseControllerSpec controller{};
    double dt = 1e-3;
    double t_final = 1.0;
    bool keep_noise = true;                            // store dw/events/phases
    const std::vector<double>* dw_override = nullptr;  // replay/test hook
};

struct TrajectoryResult {
    StateVector state;            // final state (normalized only for physical sampling)
    TrajectoryRecord record;
    RecordFunctionals functionals;  // diffusive runs: R, S, t
};

// Snapshot callback: (snapshot index, current amplitudes, current weight).
using SnapshotFn = std::function<void(int, const Vec&, double)>;

TrajectoryResult run_trajectory(const LindbladModel& model, const StateVector& psi0,
                                const RunOptions& opt, std::uint64_t stream_seed,
                                const std::vector<long>* snapshot_steps = nullptr,
                                const SnapshotFn& on_snapshot = {});

struct ScalarEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n = 0;
};

struct DensityEstimate {
    Mat mean;                  // weighted mean of trajectory projectors
    Eigen::MatrixXd stderr_;   // per-element standard error (complex deviation scale)
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    long n = 0;
};

// Weighted mean of <O> over an ensemble with delta-method standard error.
ScalarEstimate ensemble_average(std::span<const TrajectoryResult> ensemble,
                                const OperatorMatrix& obs);
DensityEstimate ensemble_density(std::span<const TrajectoryResult> ensemble);

struct EnsembleOptions {
    RunOptions run;
    long ntraj = 1000;
    std::uint64_t seed = 1;
    int threads = 0;                      // 0: serial reference path; >= 1: OpenMP
    std::vector<double> snapshot_times;   // defaults to {t_final}
    bool collect_results = false;
};

struct EnsembleOutput {
    std::vector<double> times;
    std::vector<DensityEstimate> snapshots;
    std::vector<TrajectoryResult> results;  // filled when collect_results
};

// Trajectories are independent work items; they are accumulated into
// fixed-size blocks that are merged in index order, so the result is
// bit-identical for any thread count (including the serial path).
EnsembleOutput run_ensemble(const LindbladModel& model, const StateVector& psi0,
                            const EnsembleOptions& opt);

// Exhaustive sums over all 2^nsteps jump records (nsteps <= 20): the weighted
// ensemble matrix sum_r P_r |psi_r><psi_r|.  The ostensible version samples
// nothing; it weights each record by Lambda_r ||psibar_r||^2.
Mat enumerate_physical_ensemble(const LindbladModel& model, const StateVector& psi0,
                                cplx gamma, double dt, int nsteps);
Mat enumerate_ostensible_ensemble(const LindbladModel& model, const StateVector& psi0,
                                  cplx gamma, double dt, int nsteps, double lambda1);

} // namespace qtraj
