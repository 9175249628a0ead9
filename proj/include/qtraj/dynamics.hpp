#pragma once

#include <vector>

#include "qtraj/fock.hpp"

namespace qtraj {

// d rho/dt = -i[H, rho] + sum_mu D[c_mu] rho, all rates folded into c_mu.
struct LindbladModel {
    FockSpace space;
    Mat H;
    std::vector<Mat> collapse;

    LindbladModel(FockSpace s, Mat h, std::vector<Mat> cs)
        : space(s), H(std::move(h)), collapse(std::move(cs)) {
        const int d = space.dim();
        if (H.rows() != d || H.cols() != d)
            throw DimensionMismatch("LindbladModel: H shape != (nmax+1)^2");
        if ((H - Mat(H.adjoint())).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("LindbladModel: H must be Hermitian");
        for (const auto& c : collapse)
            if (c.rows() != d || c.cols() != d)
                throw DimensionMismatch("LindbladModel: collapse operator shape != (nmax+1)^2");
    }
};

// Damped-mode model with a single collapse operator c = a (unit decay rate).
LindbladModel damped_mode(FockSpace space);

// D[c] rho = c rho c^dag - (c^dag c rho + rho c^dag c)/2
Mat superop_D(const Mat& c, const Mat& rho);
// J[r] rho = r rho r^dag
Mat superop_J(const Mat& r, const Mat& rho);

// Fixed-step RK4 integration of the master equation up to t_final.
// Requires dt <= 1e-2; throws StepSizeError if the trace drifts by > 1e-6.
DensityMatrix evolve_master(const LindbladModel& model, const DensityMatrix& rho0,
                            double t_final, double dt);

// One-step measurement operators for direct detection with a local
// oscillator of amplitude gamma added before the detector:
//   Omega1 = sqrt(dt) (c + gamma)
//   Omega0 = 1 - dt [ iH + (c gamma^* - c^dag gamma)/2 + (c^dag + gamma^*)(c + gamma)/2 ]
// Completeness holds to O(dt^2).  Single collapse channel only.
struct MeasurementOperatorPair {
    FockSpace space;
    Mat omega0;
    Mat omega1;
    double dt;
};

MeasurementOperatorPair direct_detection_ops(const LindbladModel& model, cplx gamma, double dt);

// Mix the pair by the exactly-unitary 2x2 rotation that adds a local
// oscillator gamma: the jump operator becomes sqrt(dt)(c + gamma) up to
// O(dt^{3/2}) and the nonselective map is untouched (exactly, since the
// mixing matrix is unitary).
MeasurementOperatorPair unitary_rearrange(const MeasurementOperatorPair& pair, cplx gamma);

// Nonselective one-step map sum_r Omega_r rho Omega_r^dag.
Mat nonselective_step(const MeasurementOperatorPair& pair, const Mat& rho);

} // namespace qtraj
