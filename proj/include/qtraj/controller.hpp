#pragma once

#include <string>

#include "qtraj/record.hpp"

namespace qtraj {

// Local-oscillator phase programs.  The two adaptive kinds close the loop on
// the running record functionals; the others are deterministic in t.
enum class ControllerKind { ConstantPhase, Heterodyne, AdaptiveSinglePhoton, AdaptiveMean };

struct PhaseControllerSpec {
    ControllerKind kind = ControllerKind::ConstantPhase;
    double phi0 = 0.0;    // ConstantPhase value / Heterodyne offset
    double delta = 0.0;   // Heterodyne detuning: phi(t) = phi0 + delta * t
    double zero_phase = 0.0;  // arg(0) convention for adaptive kinds at R = 0

    bool adaptive() const {
        return kind == ControllerKind::AdaptiveSinglePhoton || kind == ControllerKind::AdaptiveMean;
    }
    std::string id() const;  // stable textual id for config echoes
};

// Running phase estimate from a single-photon record: arg R, in [0, 2pi).
double estimate_phase_single_photon(const RecordFunctionals& f);

// Mean-field estimate arg[ R (1 - e^{-t}) + S R^* ], in [0, 2pi).
double estimate_phase_mean(const RecordFunctionals& f);

// Phase to apply during [t, t+dt), given functionals accumulated through t.
// Adaptive kinds track the running estimate plus pi/2 (phase quadrature).
double controller_phase(const PhaseControllerSpec& ctl, const RecordFunctionals& f, double t);

} // namespace qtraj
