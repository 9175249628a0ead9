#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace qtraj {

enum class Scheme { Jump, Diffusive };
enum class SamplingStrategy { PhysicalA, UniformB, OstensibleC };

// Running functionals of a diffusive measurement record:
//   R(t) = int_0^t e^{i phi(s)} e^{-s/2} dW(s)
//   S(t) = -int_0^t e^{2 i phi(s)} e^{-s} ds
// Together they are a sufficient statistic for the conditioned state of a
// decaying mode started in an arbitrary pure state.
struct RecordFunctionals {
    std::complex<double> R{0.0, 0.0};
    std::complex<double> S{0.0, 0.0};
    double t = 0.0;
};

// One Ito step; phi and dW belong to [t, t+dt), integrands evaluated at the
// left endpoint.  |S| stays <= dt (1 - e^{-t}) / (1 - e^{-dt}) -- the
// left-endpoint sum, within O(dt) of the continuum bound 1 - e^{-t}.
inline RecordFunctionals& accumulate_functionals(RecordFunctionals& f, double phi,
                                                 double dw, double dt) {
    const std::complex<double> eiphi = std::polar(1.0, phi);
    f.R += eiphi * std::exp(-0.5 * f.t) * dw;
    f.S -= eiphi * eiphi * std::exp(-f.t) * dt;
    f.t += dt;
    return f;
}

// Everything needed to replay or audit one stochastic trajectory.
struct TrajectoryRecord {
    std::uint64_t seed = 0;        // per-trajectory stream seed
    Scheme scheme = Scheme::Jump;
    double dt = 0.0;
    std::vector<std::int32_t> events;  // jump scheme: step indices of detections
    std::vector<double> dw;            // diffusive scheme: Wiener increments
    std::vector<double> phases;        // per-step LO phase; empty when constant
    bool phase_constant = true;
    double phase0 = 0.0;
    double weight = 1.0;               // final <psi|psi> (1 for physical sampling)
};

} // namespace qtraj
