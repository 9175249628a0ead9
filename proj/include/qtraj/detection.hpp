#pragma once

#include <array>
#include <vector>

#include "qtraj/controller.hpp"
#include "qtraj/fock.hpp"
#include "qtraj/record.hpp"

namespace qtraj {

// Conditioned (unnormalized) state of a decaying mode given the record
// functionals: exp(-a^dag a t / 2) exp(S^* a^2 / 2 + R^* a) |psi0>.
// With guard_edge, throws TruncationError when the result's top-level
// amplitude exceeds 1e-6 of its norm (the state retains support at the
// cutoff, so it cannot stand in for the untruncated mode).  Callers that
// only consume the squared norm may disable the guard: edge amplitudes
// enter the norm at relative order e^{-nmax t}.
StateVector conditioned_state_closed_form(const StateVector& psi0, const RecordFunctionals& f,
                                          bool guard_edge = true);

// Finite-time effect (POVM density) for the record (R, S):
//   F = P0 exp(S a^dag^2 / 2 + R a^dag) exp(-a^dag a t) exp(S^* a^2 / 2 + R^* a)
Mat effect_finite_time(const RecordFunctionals& f, FockSpace space, double P0 = 1.0);

// Completed-measurement Gaussian geometry: the effect is centred at (x, y)
// in the frame rotated by theta = arg(S)/2, with quadrature variances
//   Vx = (1 - e^{-t} + |S|) / (1 - e^{-t} - |S|),  Vy = 1/Vx.
struct GaussianEffect {
    double theta = 0.0;
    double x = 0.0;
    double y = 0.0;
    double vx = 1.0;
    double vy = 1.0;
};

// Throws DegenerateEffect when 1 - e^{-t} - |S| <= 1e-9 (homodyne limit).
GaussianEffect gaussian_effect_params(const RecordFunctionals& f);

// One-standard-deviation contour of the effect's Wigner function in the
// (q, p) = (a + a^dag, -i a + i a^dag) plane; npoints samples of the ellipse.
std::vector<std::array<double, 2>> wigner_contour(const GaussianEffect& g, int npoints);

// Homodyne effect at quadrature outcome X along phase phi:
//   F(X) = (2 pi)^{-1/2} e^{-X^2/2} E(X)|0><0|E(X)^dag,
//   E(X) = exp(-e^{2 i phi} a^dag^2 / 2 + X e^{i phi} a^dag).
// E(X)|0> is an eigenvector of a e^{-i phi} + a^dag e^{i phi} with eigenvalue X
// (rows below the truncation edge satisfy the eigenvalue equation exactly).
Mat effect_homodyne(FockSpace space, double X, double phi);

// Heterodyne effect F(A) = |A><A| / pi (Q-function density).  Requires
// |A|^2 <= nmax/4 so the coherent amplitudes have headroom.
Mat effect_heterodyne(FockSpace space, cplx A);

struct CompletedMeasurement {
    cplx A;          // R(t_final)
    cplx B;          // S(t_final)
    double weight;   // final <psibar|psibar>
    std::uint64_t seed;
    RecordFunctionals f;
};

// Runs the linear diffusive record to t_final under the controller's phase
// program and returns the completed-measurement outcome.  The state update
// factorizes exactly for bare decay, so the weight is evaluated through the
// closed-form conditioned state of the accumulated (R, S).
// Requires dt in (0, 2e-3] and t_final >= 12 (e^{-t} residual below 1e-5).
CompletedMeasurement simulate_completed_measurement(const StateVector& psi0,
                                                    const PhaseControllerSpec& ctl,
                                                    double dt, double t_final,
                                                    std::uint64_t stream_seed,
                                                    const std::vector<double>* dw_override = nullptr,
                                                    std::vector<double>* phases_out = nullptr);

// n independent completed measurements with counter-derived stream seeds;
// results are indexed by trajectory, so any thread count gives identical
// output.  threads <= 0 runs the serial reference path.
std::vector<CompletedMeasurement> sample_completed_measurements(const StateVector& psi0,
                                                                const PhaseControllerSpec& ctl,
                                                                double dt, double t_final,
                                                                long n, std::uint64_t root_seed,
                                                                int threads = 0);

} // namespace qtraj
