#include "qtraj/fock.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qtraj {

OperatorMatrix annihilation(FockSpace space) {
    Mat a = Mat::Zero(space.dim(), space.dim());
    for (int n = 1; n <= space.nmax; ++n)
        a(n - 1, n) = std::sqrt(double(n));
    return {space, std::move(a)};
}

OperatorMatrix creation(FockSpace space) {
    Mat ad = annihilation(space).m.adjoint();
    return {space, std::move(ad)};
}

OperatorMatrix number_operator(FockSpace space) {
    Mat n = Mat::Zero(space.dim(), space.dim());
    for (int k = 0; k <= space.nmax; ++k) n(k, k) = double(k);
    return {space, std::move(n)};
}

OperatorMatrix identity_op(FockSpace space) {
    return {space, Mat::Identity(space.dim(), space.dim())};
}

OperatorMatrix quadrature_operator(FockSpace space, double phi) {
    Mat a = annihilation(space).m;
    cplx ph = std::polar(1.0, phi);
    Mat x = a * std::conj(ph) + a.adjoint() * ph;
    return {space, std::move(x)};
}

StateVector vacuum_state(FockSpace space) {
    Vec v = Vec::Zero(space.dim());
    v(0) = 1.0;
    return {space, std::move(v), true};
}

StateVector fock_state(FockSpace space, int n) {
    if (n < 0 || n > space.nmax) throw ConfigError("fock_state: level outside [0, nmax]");
    Vec v = Vec::Zero(space.dim());
    v(n) = 1.0;
    return {space, std::move(v), true};
}

StateVector coherent_state(FockSpace space, cplx alpha) {
    double a2 = std::norm(alpha);
    if (a2 > space.nmax / 4.0)
        throw ConfigError("coherent_state: |alpha|^2 exceeds nmax/4");
    Vec v(space.dim());
    v(0) = std::exp(-0.5 * a2);
    for (int n = 1; n <= space.nmax; ++n)
        v(n) = v(n - 1) * alpha / std::sqrt(double(n));
    double kept = v.squaredNorm();
    if (1.0 - kept > 1e-8)
        throw TruncationError("coherent_state: tail mass beyond nmax exceeds 1e-8");
    v /= std::sqrt(kept);
    return {space, std::move(v), true};
}

StateVector displacement_apply(FockSpace space, cplx A) {
    return coherent_state(space, A);
}

double norm2(const StateVector& psi) { return psi.amps.squaredNorm(); }

StateVector& renormalize(StateVector& psi) {
    double n2 = norm2(psi);
    if (n2 < 1e-300) throw ZeroNormError("renormalize: vanishing state norm");
    psi.amps /= std::sqrt(n2);
    psi.normalized = true;
    return psi;
}

cplx expectation_c(const StateVector& psi, const OperatorMatrix& M) {
    check_same_space(psi.space, M.space, "expectation");
    double n2 = norm2(psi);
    if (n2 < 1e-300) throw ZeroNormError("expectation: vanishing state norm");
    return psi.amps.dot(M.m * psi.amps) / n2;  // Eigen dot conjugates the left arg
}

double expectation(const StateVector& psi, const OperatorMatrix& M) {
    return expectation_c(psi, M).real();
}

double fidelity(const StateVector& a, const StateVector& b) {
    check_same_space(a.space, b.space, "fidelity");
    double na = norm2(a), nb = norm2(b);
    if (na < 1e-300 || nb < 1e-300) throw ZeroNormError("fidelity: vanishing state norm");
    return std::norm(a.amps.dot(b.amps)) / (na * nb);
}

double fidelity(const StateVector& psi, const DensityMatrix& rho) {
    check_same_space(psi.space, rho.space, "fidelity");
    double n2 = norm2(psi);
    if (n2 < 1e-300) throw ZeroNormError("fidelity: vanishing state norm");
    return (psi.amps.dot(rho.m * psi.amps)).real() / n2;
}

DensityMatrix outer(const StateVector& psi) {
    double n2 = norm2(psi);
    if (n2 < 1e-300) throw ZeroNormError("outer: vanishing state norm");
    Mat r = psi.amps * psi.amps.adjoint() / n2;
    return {psi.space, std::move(r)};
}

bool is_positive_semidefinite(const Mat& m, double tol) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

namespace {

// w = exp(P) v for P strictly raising or lowering by 1..2 levels: nilpotent,
// so the series is finite; cut early once terms stop mattering.
template <typename Apply>
Vec exp_poly_apply(const Vec& v, Apply apply_p, int dim) {
    Vec w = v;
    Vec term = v;
    Vec tmp(dim);
    for (int k = 1; k <= dim; ++k) {
        apply_p(term, tmp);
        tmp /= double(k);
        term.swap(tmp);
        w += term;
        if (term.squaredNorm() <= 1e-60 * w.squaredNorm()) break;
    }
    return w;
}

} // namespace

Vec apply_exp_lowering(cplx a2, cplx a1, const Vec& v) {
    const int dim = int(v.size());
    const int nmax = dim - 1;
    auto apply_p = [&](const Vec& in, Vec& out) {
        // out = (a2 a^2 + a1 a) in
        for (int n = 0; n <= nmax; ++n) {
            cplx s = 0.0;
            if (n + 1 <= nmax) s += a1 * std::sqrt(double(n + 1)) * in(n + 1);
            if (n + 2 <= nmax) s += a2 * std::sqrt(double((n + 1) * (n + 2))) * in(n + 2);
            out(n) = s;
        }
    };
    return exp_poly_apply(v, apply_p, dim);
}

Vec apply_exp_raising(cplx b2, cplx b1, const Vec& v) {
    const int dim = int(v.size());
    const int nmax = dim - 1;
    auto apply_p = [&](const Vec& in, Vec& out) {
        // out = (b2 a^dag^2 + b1 a^dag) in
        for (int n = nmax; n >= 0; --n) {
            cplx s = 0.0;
            if (n - 1 >= 0) s += b1 * std::sqrt(double(n)) * in(n - 1);
            if (n - 2 >= 0) s += b2 * std::sqrt(double((n - 1) * n)) * in(n - 2);
            out(n) = s;
        }
    };
    return exp_poly_apply(v, apply_p, dim);
}

Mat exp_lowering_matrix(FockSpace space, cplx a2, cplx a1) {
    const int dim = space.dim();
    Mat out(dim, dim);
    Vec e = Vec::Zero(dim);
    for (int j = 0; j < dim; ++j) {
        e.setZero();
        e(j) = 1.0;
        out.col(j) = apply_exp_lowering(a2, a1, e);
    }
    return out;
}

} // namespace qtraj
