#pragma once

#include <vector>

#include "qtraj/detection.hpp"

namespace qtraj {

// Binned phase POVM on the two-level (nmax = 1) space; bin k covers
// [2 pi k / nbins, 2 pi (k+1) / nbins).
struct PhasePOVM {
    FockSpace space{1};
    int nbins = 1;
    std::vector<Mat> bins;

    double bin_lo(int k) const { return 6.283185307179586477 * k / nbins; }
    double bin_hi(int k) const { return 6.283185307179586477 * (k + 1) / nbins; }
};

// Canonical phase measurement, F(phi) = |phi><phi| / 2pi with
// |phi> = |0> + e^{i phi}|1>, integrated over each bin.
PhasePOVM povm_ideal_phase(int nbins);

// Marginal heterodyne (standard) phase measurement:
// F_std = (sqrt(pi)/2) F_ideal + (1 - sqrt(pi)/2) * identity / 2pi.
PhasePOVM povm_standard_phase(int nbins);

struct PhaseSample {
    double phi = 0.0;     // arg A in [0, 2pi)
    double weight = 1.0;  // importance weight (final squared norm)
    std::uint64_t seed = 0;
};

// One adaptive (or otherwise controlled) phase measurement of a two-level
// state: runs the completed diffusive record and reports phi = arg A.
PhaseSample run_adaptive_phase_measurement(const StateVector& qubit,
                                           const PhaseControllerSpec& ctl, double dt,
                                           double t_final, std::uint64_t stream_seed);

std::vector<PhaseSample> sample_phase_measurements(const StateVector& qubit,
                                                   const PhaseControllerSpec& ctl, double dt,
                                                   double t_final, long n,
                                                   std::uint64_t root_seed, int threads = 0);

struct ReconstructionInput {
    StateVector state;                 // known two-level input
    std::vector<PhaseSample> samples;  // >= 10^4 weighted outcomes
};

struct ReconstructedPOVM {
    PhasePOVM povm;
    std::vector<Eigen::MatrixXd> stderr_;  // per bin: 2x2 element standard errors
    double completeness_residual = 0.0;    // max |sum_k E_k - 1|
    double ideal_coefficient = 0.0;        // projection onto the ideal off-diagonal pattern
    long total_samples = 0;
};

// Linear inversion of binned outcome frequencies against four (or more)
// informationally complete two-level inputs.  Throws IllConditioned when the
// states are not informationally complete or the completeness residual
// exceeds 0.1.
ReconstructedPOVM reconstruct_povm(const std::vector<ReconstructionInput>& inputs, int nbins);

} // namespace qtraj
