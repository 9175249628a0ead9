#include "qtraj/adaptive.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdio>

namespace qtraj {

namespace {

constexpr double TWO_PI = 6.283185307179586477;
constexpr double PI = 3.141592653589793238;

double wrap_2pi(double x) {
    double y = std::fmod(x, TWO_PI);
    if (y < 0) y += TWO_PI;
    if (y >= TWO_PI) y = 0.0;  // a tiny negative remainder rounds up to 2pi
    return y;
}

} // namespace

std::string PhaseControllerSpec::id() const {
    char buf[96];
    switch (kind) {
        case ControllerKind::ConstantPhase:
            std::snprintf(buf, sizeof buf, "constant:%.17g", phi0);
            break;
        case ControllerKind::Heterodyne:
            std::snprintf(buf, sizeof buf, "heterodyne:%.17g,%.17g", phi0, delta);
            break;
        case ControllerKind::AdaptiveSinglePhoton:
            std::snprintf(buf, sizeof buf, "adaptive-single");
            break;
        case ControllerKind::AdaptiveMean:
            std::snprintf(buf, sizeof buf, "adaptive-mean");
            break;
    }
    return buf;
}

double estimate_phase_single_photon(const RecordFunctionals& f) {
    if (f.R == cplx(0.0, 0.0)) return 0.0;
    return wrap_2pi(std::arg(f.R));
}

double estimate_phase_mean(const RecordFunctionals& f) {
    const cplx v = f.R * (1.0 - std::exp(-f.t)) + f.S * std::conj(f.R);
    if (v == cplx(0.0, 0.0)) return 0.0;
    return wrap_2pi(std::arg(v));
}

double controller_phase(const PhaseControllerSpec& ctl, const RecordFunctionals& f, double t) {
    switch (ctl.kind) {
        case ControllerKind::ConstantPhase:
            return wrap_2pi(ctl.phi0);
        case ControllerKind::Heterodyne:
            return wrap_2pi(ctl.phi0 + ctl.delta * t);
        case ControllerKind::AdaptiveSinglePhoton: {
            double est = (f.R == cplx(0.0, 0.0)) ? ctl.zero_phase : std::arg(f.R);
            return wrap_2pi(est + 0.5 * PI);
        }
        case ControllerKind::AdaptiveMean: {
            const cplx v = f.R * (1.0 - std::exp(-f.t)) + f.S * std::conj(f.R);
            double est = (v == cplx(0.0, 0.0)) ? ctl.zero_phase : std::arg(v);
            return wrap_2pi(est + 0.5 * PI);
        }
    }
    return 0.0;
}

PhasePOVM povm_ideal_phase(int nbins) {
    if (nbins < 1) throw ConfigError("povm_ideal_phase: nbins must be >= 1");
    PhasePOVM p;
    p.nbins = nbins;
    const cplx I(0.0, 1.0);
    for (int k = 0; k < nbins; ++k) {
        double lo = p.bin_lo(k), hi = p.bin_hi(k);
        Mat e = Mat::Zero(2, 2);
        e(0, 0) = e(1, 1) = (hi - lo) / TWO_PI;
        // (1/2pi) int e^{-i phi} d phi over the bin
        e(0, 1) = (I / TWO_PI) * (std::polar(1.0, -hi) - std::polar(1.0, -lo));
        e(1, 0) = std::conj(e(0, 1));
        p.bins.push_back(std::move(e));
    }
    return p;
}

PhasePOVM povm_standard_phase(int nbins) {
    PhasePOVM p = povm_ideal_phase(nbins);
    const double eta = std::sqrt(PI) / 2.0;  // 0.8862...: ideal-component coefficient
    for (int k = 0; k < nbins; ++k) {
        double flat = (p.bin_hi(k) - p.bin_lo(k)) / TWO_PI;
        p.bins[k] = eta * p.bins[k] + (1.0 - eta) * flat * Mat::Identity(2, 2);
    }
    return p;
}

PhaseSample run_adaptive_phase_measurement(const StateVector& qubit,
                                           const PhaseControllerSpec& ctl, double dt,
                                           double t_final, std::uint64_t stream_seed) {
    if (qubit.space.nmax != 1)
        throw ConfigError("run_adaptive_phase_measurement: input must live on nmax = 1");
    auto cm = simulate_completed_measurement(qubit, ctl, dt, t_final, stream_seed);
    double phi = (cm.A == cplx(0.0, 0.0)) ? 0.0 : wrap_2pi(std::arg(cm.A));
    return {phi, cm.weight, stream_seed};
}

std::vector<PhaseSample> sample_phase_measurements(const StateVector& qubit,
                                                   const PhaseControllerSpec& ctl, double dt,
                                                   double t_final, long n,
                                                   std::uint64_t root_seed, int threads) {
    auto cms = sample_completed_measurements(qubit, ctl, dt, t_final, n, root_seed, threads);
    std::vector<PhaseSample> out(cms.size());
    for (std::size_t i = 0; i < cms.size(); ++i) {
        double phi = (cms[i].A == cplx(0.0, 0.0)) ? 0.0 : wrap_2pi(std::arg(cms[i].A));
        out[i] = {phi, cms[i].weight, cms[i].seed};
    }
    return out;
}

ReconstructedPOVM reconstruct_povm(const std::vector<ReconstructionInput>& inputs, int nbins) {
    if (nbins < 1) throw ConfigError("reconstruct_povm: nbins must be >= 1");
    if (inputs.size() < 4)
        throw ConfigError("reconstruct_povm: need at least four tomographic input states");
    const long nS = long(inputs.size());

    // Bloch rows: tr(E rho_s) = (a + n_s . v)/2 for E = (a 1 + v . sigma)/2.
    Eigen::MatrixXd M(nS, 4);
    for (long s = 0; s < nS; ++s) {
        const auto& st = inputs[s].state;
        if (st.space.nmax != 1)
            throw ConfigError("reconstruct_povm: tomographic states must live on nmax = 1");
        if (inputs[s].samples.size() < 10000)
            throw ConfigError("reconstruct_povm: fewer than 10^4 samples for an input state");
        double n2 = norm2(st);
        if (n2 < 1e-300) throw ZeroNormError("reconstruct_povm: vanishing input state");
        cplx c0 = st.amps(0) / std::sqrt(n2), c1 = st.amps(1) / std::sqrt(n2);
        cplx rho01 = c0 * std::conj(c1);
        M(s, 0) = 0.5;
        M(s, 1) = 0.5 * 2.0 * rho01.real();
        M(s, 2) = 0.5 * -2.0 * rho01.imag();
        M(s, 3) = 0.5 * (std::norm(c0) - std::norm(c1));
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin < 1e-9 * smax)
        throw IllConditioned("reconstruct_povm: input states are not informationally complete");
    Eigen::MatrixXd Minv = svd.matrixV()
        * svd.singularValues().cwiseInverse().asDiagonal()
        * svd.matrixU().transpose();  // 4 x nS pseudoinverse

    // Binned frequencies and their variances per input state.
    Eigen::MatrixXd phat = Eigen::MatrixXd::Zero(nS, nbins);
    Eigen::MatrixXd pvar = Eigen::MatrixXd::Zero(nS, nbins);
    long total = 0;
    for (long s = 0; s < nS; ++s) {
        const auto& smp = inputs[s].samples;
        total += long(smp.size());
        double sw = 0;
        std::vector<double> swk(nbins, 0.0);
        for (const auto& x : smp) {
            int k = std::min(nbins - 1, int(wrap_2pi(x.phi) / TWO_PI * nbins));
            swk[k] += x.weight;
            sw += x.weight;
        }
        if (sw <= 0) throw EmptyEnsemble("reconstruct_povm: zero total weight for an input");
        for (int k = 0; k < nbins; ++k) phat(s, k) = swk[k] / sw;
        // delta-method variance of the ratio estimator
        for (const auto& x : smp) {
            int k = std::min(nbins - 1, int(wrap_2pi(x.phi) / TWO_PI * nbins));
            for (int j = 0; j < nbins; ++j) {
                double ind = (j == k) ? 1.0 : 0.0;
                pvar(s, j) += x.weight * x.weight * (ind - phat(s, j)) * (ind - phat(s, j));
            }
        }
        for (int k = 0; k < nbins; ++k) pvar(s, k) /= sw * sw;
    }

    ReconstructedPOVM out;
    out.povm.nbins = nbins;
    out.total_samples = total;
    Mat sum = Mat::Zero(2, 2);
    const cplx I(0.0, 1.0);
    for (int k = 0; k < nbins; ++k) {
        Eigen::Vector4d coef = Minv * phat.col(k);
        Mat e(2, 2);
        e(0, 0) = 0.5 * (coef(0) + coef(3));
        e(1, 1) = 0.5 * (coef(0) - coef(3));
        e(0, 1) = 0.5 * (coef(1) - I * coef(2));
        e(1, 0) = std::conj(e(0, 1));
        sum += e;
        out.povm.bins.push_back(std::move(e));

        // covariance of (a, vx, vy, vz) from independent per-state variances
        Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
        for (long s = 0; s < nS; ++s)
            cov += pvar(s, k) * (Minv.col(s) * Minv.col(s).transpose());
        Eigen::MatrixXd se(2, 2);
        se(0, 0) = 0.5 * std::sqrt(std::max(0.0, cov(0, 0) + cov(3, 3) + 2 * cov(0, 3)));
        se(1, 1) = 0.5 * std::sqrt(std::max(0.0, cov(0, 0) + cov(3, 3) - 2 * cov(0, 3)));
        se(0, 1) = se(1, 0) = 0.5 * std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2)));
        out.stderr_.push_back(std::move(se));
    }

    out.completeness_residual = (sum - Mat::Identity(2, 2)).cwiseAbs().maxCoeff();
    if (out.completeness_residual > 0.1)
        throw IllConditioned("reconstruct_povm: completeness residual exceeds 0.1");

    // least-squares projection of the off-diagonals onto the ideal pattern
    auto ideal = povm_ideal_phase(nbins);
    double num = 0, den = 0;
    for (int k = 0; k < nbins; ++k) {
        num += (std::conj(ideal.bins[k](0, 1)) * out.povm.bins[k](0, 1)).real();
        den += std::norm(ideal.bins[k](0, 1));
    }
    out.ideal_coefficient = (den > 0) ? num / den : 0.0;
    return out;
}

} // namespace qtraj
