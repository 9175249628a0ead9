#include "qtraj/dynamics.hpp"

#include <cmath>

namespace qtraj {

LindbladModel damped_mode(FockSpace space) {
    Mat h = Mat::Zero(space.dim(), space.dim());
    return LindbladModel(space, std::move(h), {annihilation(space).m});
}

Mat superop_D(const Mat& c, const Mat& rho) {
    Mat cdc = c.adjoint() * c;
    return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

Mat superop_J(const Mat& r, const Mat& rho) {
    return r * rho * r.adjoint();
}

namespace {

Mat liouvillian(const LindbladModel& model, const Mat& rho) {
    const cplx I(0.0, 1.0);
    Mat out = -I * (model.H * rho - rho * model.H);
    for (const auto& c : model.collapse) out += superop_D(c, rho);
    return out;
}

} // namespace

DensityMatrix evolve_master(const LindbladModel& model, const DensityMatrix& rho0,
                            double t_final, double dt) {
    check_same_space(model.space, rho0.space, "evolve_master");
    if (t_final < 0) throw ConfigError("evolve_master: t_final must be >= 0");
    if (dt <= 0 || dt > 1e-2) throw ConfigError("evolve_master: require 0 < dt <= 1e-2");

    Mat rho = rho0.m;
    const double tr0 = rho.trace().real();
    long nfull = long(std::floor(t_final / dt + 1e-9));
    double rem = t_final - double(nfull) * dt;
    if (rem < 1e-12 * std::max(1.0, t_final)) rem = 0.0;

    auto rk4 = [&](const Mat& r, double h) {
        Mat k1 = liouvillian(model, r);
        Mat k2 = liouvillian(model, r + 0.5 * h * k1);
        Mat k3 = liouvillian(model, r + 0.5 * h * k2);
        Mat k4 = liouvillian(model, r + h * k3);
        return Mat(r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    };

    for (long k = 0; k < nfull; ++k) rho = rk4(rho, dt);
    if (rem > 0) rho = rk4(rho, rem);

    if (std::abs(rho.trace().real() - tr0) > 1e-6)
        throw StepSizeError("evolve_master: trace drift exceeds 1e-6, reduce dt");
    return {model.space, std::move(rho)};
}

MeasurementOperatorPair direct_detection_ops(const LindbladModel& model, cplx gamma, double dt) {
    if (model.collapse.size() != 1)
        throw MultiChannelUnsupported("direct_detection_ops: exactly one collapse channel required");
    if (dt <= 0) throw ConfigError("direct_detection_ops: dt must be positive");

    const Mat& c = model.collapse[0];
    const int d = model.space.dim();
    const cplx I(0.0, 1.0);
    Mat id = Mat::Identity(d, d);

    Mat cg = c + gamma * id;
    Mat omega1 = std::sqrt(dt) * cg;
    Mat omega0 = id - dt * (I * model.H
                            + 0.5 * (c * std::conj(gamma) - c.adjoint() * gamma)
                            + 0.5 * (c.adjoint() + std::conj(gamma) * id) * cg);
    return {model.space, std::move(omega0), std::move(omega1), dt};
}

MeasurementOperatorPair unitary_rearrange(const MeasurementOperatorPair& pair, cplx gamma) {
    // U = [[cos th, -e^{-i chi} sin th], [e^{i chi} sin th, cos th]] with
    // tan th = |gamma| sqrt(dt), e^{i chi} = gamma/|gamma|.  Exactly unitary;
    // entries agree with 1 - |gamma|^2 dt/2 and +-gamma sqrt(dt) to O(dt).
    const double g = std::abs(gamma);
    if (g == 0.0) return pair;
    const double dt = pair.dt;
    const double den = std::sqrt(1.0 + g * g * dt);
    const double u = 1.0 / den;                    // cos th
    const cplx w = gamma * std::sqrt(dt) / den;    // e^{i chi} sin th
    Mat omega0 = u * pair.omega0 - std::conj(w) * pair.omega1;
    Mat omega1 = w * pair.omega0 + u * pair.omega1;
    return {pair.space, std::move(omega0), std::move(omega1), dt};
}

Mat nonselective_step(const MeasurementOperatorPair& pair, const Mat& rho) {
    return superop_J(pair.omega0, rho) + superop_J(pair.omega1, rho);
}

} // namespace qtraj
