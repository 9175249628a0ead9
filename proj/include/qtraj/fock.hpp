#pragma once

#include <Eigen/Dense>
#include <complex>

#include "qtraj/errors.hpp"

namespace qtraj {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// Truncated single-mode Fock space |0..nmax>.
struct FockSpace {
    int nmax = 1;

    explicit FockSpace(int nmax_) : nmax(nmax_) {
        if (nmax < 1) throw ConfigError("FockSpace: nmax must be >= 1");
    }
    int dim() const { return nmax + 1; }
    bool operator==(const FockSpace& o) const { return nmax == o.nmax; }
};

struct StateVector {
    FockSpace space;
    Vec amps;            // amps[n] = <n|psi>
    bool normalized = false;

    StateVector(FockSpace s, Vec a, bool norm = false)
        : space(s), amps(std::move(a)), normalized(norm) {
        if (amps.size() != space.dim())
            throw DimensionMismatch("StateVector: amplitude count != nmax+1");
    }
};

struct OperatorMatrix {
    FockSpace space;
    Mat m;

    OperatorMatrix(FockSpace s, Mat mm) : space(s), m(std::move(mm)) {
        if (m.rows() != space.dim() || m.cols() != space.dim())
            throw DimensionMismatch("OperatorMatrix: shape != (nmax+1)^2");
    }
};

struct DensityMatrix {
    FockSpace space;
    Mat m;

    DensityMatrix(FockSpace s, Mat mm) : space(s), m(std::move(mm)) {
        if (m.rows() != space.dim() || m.cols() != space.dim())
            throw DimensionMismatch("DensityMatrix: shape != (nmax+1)^2");
    }
};

inline void check_same_space(const FockSpace& a, const FockSpace& b, const char* where) {
    if (!(a == b)) throw DimensionMismatch(std::string(where) + ": operands live on different Fock spaces");
}

// a|n> = sqrt(n)|n-1>
OperatorMatrix annihilation(FockSpace space);
OperatorMatrix creation(FockSpace space);
OperatorMatrix number_operator(FockSpace space);
OperatorMatrix identity_op(FockSpace space);

// X_phi = a e^{-i phi} + a^dag e^{i phi}; vacuum variance 1.
OperatorMatrix quadrature_operator(FockSpace space, double phi);

StateVector vacuum_state(FockSpace space);
StateVector fock_state(FockSpace space, int n);

// amps_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!), renormalized on the truncated space.
// Requires |alpha|^2 <= nmax/4; throws TruncationError if the lost tail mass
// beyond nmax exceeds 1e-8.
StateVector coherent_state(FockSpace space, cplx alpha);

// Truncated displacement of vacuum: D(A)|0> is exactly the coherent state.
StateVector displacement_apply(FockSpace space, cplx A);

double norm2(const StateVector& psi);
StateVector& renormalize(StateVector& psi);

// <psi|M|psi> / <psi|psi>; real part (intended for Hermitian M).
// Throws ZeroNormError when the squared norm underflows (< 1e-300).
double expectation(const StateVector& psi, const OperatorMatrix& M);
cplx expectation_c(const StateVector& psi, const OperatorMatrix& M);

// |<a|b>|^2 / (<a|a><b|b>)
double fidelity(const StateVector& a, const StateVector& b);
// <psi|rho|psi> / <psi|psi> for trace-one rho.
double fidelity(const StateVector& psi, const DensityMatrix& rho);

DensityMatrix outer(const StateVector& psi);          // normalized |psi><psi|
bool is_positive_semidefinite(const Mat& m, double tol = 1e-9);

// w = exp(a2 * a^2 + a1 * a) v.  The lowering polynomial is nilpotent on the
// truncated space, so the series terminates; it is also summed adaptively
// since the step sizes used here need only a handful of terms.
Vec apply_exp_lowering(cplx a2, cplx a1, const Vec& v);
// w = exp(b2 * a^dag^2 + b1 * a^dag) v.
Vec apply_exp_raising(cplx b2, cplx b1, const Vec& v);
// Dense matrix for exp(a2 a^2 + a1 a) (columns built from basis vectors).
Mat exp_lowering_matrix(FockSpace space, cplx a2, cplx a1);

} // namespace qtraj
