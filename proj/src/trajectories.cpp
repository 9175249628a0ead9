#include "qtraj/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qtraj {

namespace {

constexpr double kNorm2Hi = 0x1p512;
constexpr double kNorm2Lo = 0x1p-512;

long steps_from_times(double t_final, double dt, const char* where) {
    if (dt <= 0) throw ConfigError(std::string(where) + ": dt must be positive");
    if (t_final < 0) throw ConfigError(std::string(where) + ": t_final must be >= 0");
    double raw = t_final / dt;
    long n = std::lround(raw);
    if (std::abs(raw - double(n)) > 1e-9 * std::max(1.0, raw))
        throw ConfigError(std::string(where) + ": t_final must be an integer multiple of dt");
    return n;
}

bool is_bare_decay(const LindbladModel& model) {
    if (model.collapse.size() != 1) return false;
    if (model.H.cwiseAbs().maxCoeff() != 0.0) return false;
    Mat a = annihilation(model.space).m;
    return (model.collapse[0] - a).cwiseAbs().maxCoeff() == 0.0;
}

} // namespace

JumpKit make_jump_kit(const LindbladModel& model, cplx gamma, double dt, double lambda1) {
    if (model.collapse.size() != 1)
        throw MultiChannelUnsupported("jump unraveling: exactly one collapse channel required");
    auto pair = direct_detection_ops(model, gamma, dt);
    const Mat& c = model.collapse[0];
    const int d = model.space.dim();
    Mat id = Mat::Identity(d, d);

    JumpKit kit{model.space, gamma, dt, 0.0, false, std::move(pair.omega0),
                Mat(c + gamma * id), Mat(), Mat(), Mat()};
    kit.K = kit.cg.adjoint() * kit.cg;

    const double lam_default = std::norm(gamma) * dt;
    if (lambda1 < 0) {
        kit.lambda1 = lam_default;
        kit.custom_lambda = false;
    } else {
        if (lambda1 <= 0 || lambda1 >= 1)
            throw ConfigError("jump unraveling: lambda1 must lie in (0, 1)");
        kit.lambda1 = lambda1;
        kit.custom_lambda = (lambda1 != lam_default);
    }
    if (kit.lambda1 >= 0.1 && !kit.custom_lambda)
        throw StepSizeError("jump unraveling: |gamma|^2 dt >= 0.1");

    if (gamma != cplx(0.0, 0.0)) {
        const cplx I(0.0, 1.0);
        kit.linear_jump = id + c / gamma;
        kit.linear_nojump = id - dt * (I * model.H + 0.5 * c.adjoint() * c
                                       + std::conj(gamma) * c);
    }
    return kit;
}

int step_jump_physical(Vec& psi, const JumpKit& kit, double u) {
    const double p1 = kit.dt * psi.dot(kit.K * psi).real();
    if (p1 >= 0.1)
        throw StepSizeError("step_jump_physical: jump probability >= 0.1, reduce dt");
    int dn = (u < p1) ? 1 : 0;
    Vec next = dn ? Vec(kit.cg * psi) : Vec(kit.omega0 * psi);
    double n2 = next.squaredNorm();
    if (n2 < 1e-300)
        throw ZeroNormError("step_jump_physical: branch state has vanishing norm");
    psi = next / std::sqrt(n2);
    return dn;
}

int step_jump_linear(Vec& psi, const JumpKit& kit, double u) {
    if (!kit.custom_lambda && kit.gamma == cplx(0.0, 0.0))
        throw ZeroGammaError("step_jump_linear: gamma = 0 gives a degenerate ostensible measure");
    int dn = (u < kit.lambda1) ? 1 : 0;
    if (kit.custom_lambda) {
        // exact Omega_r / sqrt(Lambda_r) pairing for any state-independent measure
        if (dn)
            psi = (std::sqrt(kit.dt / kit.lambda1) * (kit.cg * psi)).eval();
        else
            psi = (kit.omega0 * psi / std::sqrt(1.0 - kit.lambda1)).eval();
    } else {
        psi = dn ? Vec(kit.linear_jump * psi) : Vec(kit.linear_nojump * psi);
    }
    return dn;
}

DiffusiveKit make_diffusive_kit(const LindbladModel& model, double dt) {
    if (model.collapse.size() != 1)
        throw MultiChannelUnsupported("diffusive unraveling: exactly one collapse channel required");
    if (dt <= 0) throw ConfigError("diffusive unraveling: dt must be positive");
    const Mat& c = model.collapse[0];
    const int d = model.space.dim();
    const cplx I(0.0, 1.0);

    DiffusiveKit kit{model.space, dt, is_bare_decay(model),
                     Mat(Mat::Identity(d, d) - dt * (I * model.H + 0.5 * c.adjoint() * c)),
                     c, Eigen::ArrayXd(d)};
    for (int n = 0; n < d; ++n) kit.decay_half(n) = std::exp(-0.5 * n * dt);
    return kit;
}

void step_diffusive_linear(Vec& psi, const DiffusiveKit& kit, double dw, double phi) {
    const cplx emiphi = std::polar(1.0, -phi);
    if (kit.exact) {
        // psi <- exp(-a^dag a dt/2) exp(dW e^{-i phi} a - e^{-2 i phi} a^2 dt/2) psi
        psi = apply_exp_lowering(-0.5 * emiphi * emiphi * kit.dt, dw * emiphi, psi);
        psi.array() *= kit.decay_half;
    } else {
        psi = (kit.euler * psi + (dw * emiphi) * (kit.c * psi)).eval();
    }
}

StateVector step_jump_physical(const StateVector& psi, const LindbladModel& model,
                               cplx gamma, double dt, TrajectoryRng& rng, int* dn) {
    check_same_space(psi.space, model.space, "step_jump_physical");
    auto kit = make_jump_kit(model, gamma, dt);
    StateVector out = psi;
    double n2 = norm2(out);
    if (n2 < 1e-300) throw ZeroNormError("step_jump_physical: vanishing input norm");
    out.amps /= std::sqrt(n2);
    int d = step_jump_physical(out.amps, kit, rng.uniform());
    out.normalized = true;
    if (dn) *dn = d;
    return out;
}

StateVector step_jump_linear(const StateVector& psi, const LindbladModel& model,
                             cplx gamma, double dt, TrajectoryRng& rng, int* dn) {
    check_same_space(psi.space, model.space, "step_jump_linear");
    auto kit = make_jump_kit(model, gamma, dt);
    StateVector out = psi;
    int d = step_jump_linear(out.amps, kit, rng.uniform());
    out.normalized = false;
    if (dn) *dn = d;
    return out;
}

StateVector step_diffusive_linear(const StateVector& psi, const LindbladModel& model,
                                  double phi, double dt, TrajectoryRng& rng, double* dw_out) {
    check_same_space(psi.space, model.space, "step_diffusive_linear");
    auto kit = make_diffusive_kit(model, dt);
    StateVector out = psi;
    double dw = rng.normal() * std::sqrt(dt);
    step_diffusive_linear(out.amps, kit, dw, phi);
    out.normalized = false;
    if (dw_out) *dw_out = dw;
    return out;
}

TrajectoryResult run_trajectory(const LindbladModel& model, const StateVector& psi0,
                                const RunOptions& opt, std::uint64_t seed,
                                const std::vector<long>* snapshot_steps,
                                const SnapshotFn& on_snapshot) {
    check_same_space(model.space, psi0.space, "run_trajectory");
    const long nsteps = steps_from_times(opt.t_final, opt.dt, "run_trajectory");

    if (opt.strategy == SamplingStrategy::UniformB)
        throw ConfigError("run_trajectory: uniform weighting is enumeration-only, "
                          "use enumerate_ostensible_ensemble");
    if (opt.scheme == Scheme::Diffusive && opt.strategy != SamplingStrategy::OstensibleC)
        throw ConfigError("run_trajectory: the diffusive scheme is linear (ostensible) only");
    if (opt.scheme == Scheme::Jump && opt.controller.kind != ControllerKind::ConstantPhase)
        throw ConfigError("run_trajectory: jump scheme supports a constant LO phase only");
    if (opt.dw_override && long(opt.dw_override->size()) < nsteps)
        throw ConfigError("run_trajectory: dw override shorter than the step count");

    TrajectoryRng rng(seed);
    const bool linear = (opt.strategy == SamplingStrategy::OstensibleC);
    const bool diffusive = (opt.scheme == Scheme::Diffusive);
    const double sqdt = std::sqrt(opt.dt);

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.scheme = opt.scheme;
    rec.dt = opt.dt;
    rec.phase_constant = (opt.controller.kind == ControllerKind::ConstantPhase);
    rec.phase0 = diffusive ? opt.controller.phi0 : std::arg(opt.gamma);

    Vec psi = psi0.amps;
    {
        double n2 = psi.squaredNorm();
        if (n2 < 1e-300) throw ZeroNormError("run_trajectory: vanishing initial norm");
        psi /= std::sqrt(n2);  // trajectories start from the physical (unit) state
    }

    int scale_log2 = 0;
    RecordFunctionals f;

    auto true_weight = [&]() {
        return linear ? std::ldexp(psi.squaredNorm(), 2 * scale_log2) : 1.0;
    };

    std::size_t snap_at = 0;
    auto emit_snapshots = [&](long step) {
        if (!snapshot_steps) return;
        while (snap_at < snapshot_steps->size() && (*snapshot_steps)[snap_at] == step) {
            if (on_snapshot) on_snapshot(int(snap_at), psi, true_weight());
            ++snap_at;
        }
    };
    emit_snapshots(0);

    if (!diffusive) {
        auto kit = make_jump_kit(model, opt.gamma, opt.dt);
        for (long k = 0; k < nsteps; ++k) {
            double u = rng.uniform();
            int dn = linear ? step_jump_linear(psi, kit, u)
                            : step_jump_physical(psi, kit, u);
            if (dn && opt.keep_noise) rec.events.push_back(std::int32_t(k));
            if (linear) {
                double n2 = psi.squaredNorm();
                if (n2 > kNorm2Hi) { psi *= 0x1p-256; scale_log2 += 256; }
                else if (n2 > 0 && n2 < kNorm2Lo) { psi *= 0x1p256; scale_log2 -= 256; }
            }
            emit_snapshots(k + 1);
        }
    } else {
        auto kit = make_diffusive_kit(model, opt.dt);
        const bool var_phase = !rec.phase_constant;
        if (opt.keep_noise) {
            rec.dw.reserve(nsteps);
            if (var_phase) rec.phases.reserve(nsteps);
        }
        for (long k = 0; k < nsteps; ++k) {
            double phi = controller_phase(opt.controller, f, f.t);
            double dw = opt.dw_override ? (*opt.dw_override)[k] : rng.normal() * sqdt;
            step_diffusive_linear(psi, kit, dw, phi);
            accumulate_functionals(f, phi, dw, opt.dt);
            if (opt.keep_noise) {
                rec.dw.push_back(dw);
                if (var_phase) rec.phases.push_back(phi);
            }
            double n2 = psi.squaredNorm();
            if (n2 > kNorm2Hi) { psi *= 0x1p-256; scale_log2 += 256; }
            else if (n2 > 0 && n2 < kNorm2Lo) { psi *= 0x1p256; scale_log2 -= 256; }
            emit_snapshots(k + 1);
        }
    }

    rec.weight = true_weight();
    StateVector out(model.space, std::move(psi), !linear);
    return {std::move(out), std::move(rec), f};
}

ScalarEstimate ensemble_average(std::span<const TrajectoryResult> ensemble,
                                const OperatorMatrix& obs) {
    if (ensemble.size() < 2)
        throw EmptyEnsemble("ensemble_average: need at least two trajectories");
    double sw = 0, swx = 0;
    std::vector<double> xs(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        xs[i] = expectation(ensemble[i].state, obs);
        sw += ensemble[i].record.weight;
        swx += ensemble[i].record.weight * xs[i];
    }
    if (sw <= 0) throw EmptyEnsemble("ensemble_average: total weight is zero");
    double mean = swx / sw;
    double v = 0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        double w = ensemble[i].record.weight;
        v += w * w * (xs[i] - mean) * (xs[i] - mean);
    }
    return {mean, std::sqrt(v) / sw, long(ensemble.size())};
}

namespace {

// Weighted running sums for one snapshot of one trajectory block.
struct SnapAccum {
    Mat s1;                 // sum w * P
    Mat s2x;                // sum w^2 * P
    Eigen::MatrixXd s2x2;   // sum w^2 * |P_jk|^2
    double sw = 0, sw2 = 0;
    long n = 0;

    void init(int d) {
        s1 = Mat::Zero(d, d);
        s2x = Mat::Zero(d, d);
        s2x2 = Eigen::MatrixXd::Zero(d, d);
    }
    void add(const Vec& amps, double w) {
        ++n;
        if (w <= 0) return;
        double n2 = amps.squaredNorm();
        if (n2 < 1e-300) return;
        Mat p = amps * amps.adjoint() / n2;
        s1.noalias() += w * p;
        s2x.noalias() += (w * w) * p;
        s2x2.noalias() += (w * w) * p.cwiseAbs2();
        sw += w;
        sw2 += w * w;
    }
    void merge(const SnapAccum& o) {
        s1 += o.s1; s2x += o.s2x; s2x2 += o.s2x2;
        sw += o.sw; sw2 += o.sw2; n += o.n;
    }
    DensityEstimate finalize() const {
        if (n < 2 || sw <= 0)
            throw EmptyEnsemble("run_ensemble: fewer than two weighted trajectories");
        DensityEstimate e;
        e.mean = s1 / sw;
        Eigen::MatrixXd var =
            (s2x2 - 2.0 * (e.mean.conjugate().cwiseProduct(s2x)).real() + e.mean.cwiseAbs2() * sw2)
            / (sw * sw);
        e.stderr_ = var.cwiseMax(0.0).cwiseSqrt();
        e.sum_w = sw; e.sum_w2 = sw2; e.n = n;
        return e;
    }
};

} // namespace

DensityEstimate ensemble_density(std::span<const TrajectoryResult> ensemble) {
    if (ensemble.empty()) throw EmptyEnsemble("ensemble_density: empty ensemble");
    SnapAccum acc;
    acc.init(ensemble[0].state.space.dim());
    for (const auto& r : ensemble) acc.add(r.state.amps, r.record.weight);
    return acc.finalize();
}

EnsembleOutput run_ensemble(const LindbladModel& model, const StateVector& psi0,
                            const EnsembleOptions& opt) {
    if (opt.ntraj < 2) throw EmptyEnsemble("run_ensemble: need at least two trajectories");

    std::vector<double> times = opt.snapshot_times;
    if (times.empty()) times = {opt.run.t_final};
    std::vector<long> snap_steps;
    for (double t : times) {
        if (t < 0 || t > opt.run.t_final + 1e-12)
            throw ConfigError("run_ensemble: snapshot time outside [0, t_final]");
        snap_steps.push_back(steps_from_times(t, opt.run.dt, "run_ensemble snapshot"));
    }
    if (!std::is_sorted(snap_steps.begin(), snap_steps.end()))
        throw ConfigError("run_ensemble: snapshot times must be ascending");
    (void)steps_from_times(opt.run.t_final, opt.run.dt, "run_ensemble");  // validate early

    const int d = model.space.dim();
    const int nsnap = int(snap_steps.size());
    constexpr long BLOCK = 64;
    const long nblocks = (opt.ntraj + BLOCK - 1) / BLOCK;

    // Block-local accumulators merged in index order keep the reduction tree
    // fixed, so results are bit-identical for any thread count.
    std::vector<std::vector<SnapAccum>> block_acc(nblocks, std::vector<SnapAccum>(nsnap));
    for (auto& blk : block_acc)
        for (auto& a : blk) a.init(d);
    std::vector<std::optional<TrajectoryResult>> collected;
    if (opt.collect_results) collected.resize(opt.ntraj);

    auto run_block = [&](long b) {
        const long lo = b * BLOCK;
        const long hi = std::min(opt.ntraj, lo + BLOCK);
        for (long i = lo; i < hi; ++i) {
            auto& blk = block_acc[b];
            SnapshotFn sink = [&](int s, const Vec& amps, double w) { blk[s].add(amps, w); };
            RunOptions ro = opt.run;
            if (!opt.collect_results) ro.keep_noise = false;
            auto res = run_trajectory(model, psi0, ro, stream_seed(opt.seed, std::uint64_t(i)),
                                      &snap_steps, sink);
            if (opt.collect_results) collected[i] = std::move(res);
        }
    };

    if (opt.threads <= 0) {
        for (long b = 0; b < nblocks; ++b) run_block(b);
    } else {
#ifdef _OPENMP
        #pragma omp parallel for schedule(dynamic) num_threads(opt.threads)
        for (long b = 0; b < nblocks; ++b) run_block(b);
#else
        for (long b = 0; b < nblocks; ++b) run_block(b);
#endif
    }

    EnsembleOutput out;
    out.times = times;
    for (int s = 0; s < nsnap; ++s) {
        SnapAccum total;
        total.init(d);
        for (long b = 0; b < nblocks; ++b) total.merge(block_acc[b][s]);
        out.snapshots.push_back(total.finalize());
    }
    if (opt.collect_results) {
        out.results.reserve(opt.ntraj);
        for (auto& r : collected) out.results.push_back(std::move(*r));
    }
    return out;
}

namespace {

void enumerate_rec(const JumpKit& kit, const Mat& omega1, Vec psi, double prob,
                   int depth, int nsteps, bool physical, Mat& sum) {
    if (depth == nsteps) {
        if (physical) {
            sum.noalias() += prob * (psi * psi.adjoint());
        } else {
            // prob carries Lambda_r; psi carries the 1/sqrt(Lambda) factors,
            // so Lambda_r psi psi^dag is the exact record contribution
            sum.noalias() += prob * (psi * psi.adjoint());
        }
        return;
    }
    if (physical) {
        double p1 = kit.dt * psi.dot(kit.K * psi).real();
        Vec j = kit.cg * psi;
        double nj = j.squaredNorm();
        if (p1 > 0 && nj > 1e-300)
            enumerate_rec(kit, omega1, j / std::sqrt(nj), prob * p1, depth + 1, nsteps, true, sum);
        Vec nj0 = kit.omega0 * psi;
        double n0 = nj0.squaredNorm();
        if (n0 > 1e-300)
            enumerate_rec(kit, omega1, nj0 / std::sqrt(n0), prob * (1.0 - p1), depth + 1, nsteps,
                          true, sum);
    } else {
        enumerate_rec(kit, omega1, Vec(omega1 * psi / std::sqrt(kit.lambda1)), prob * kit.lambda1,
                      depth + 1, nsteps, false, sum);
        enumerate_rec(kit, omega1, Vec(kit.omega0 * psi / std::sqrt(1.0 - kit.lambda1)),
                      prob * (1.0 - kit.lambda1), depth + 1, nsteps, false, sum);
    }
}

} // namespace

Mat enumerate_physical_ensemble(const LindbladModel& model, const StateVector& psi0,
                                cplx gamma, double dt, int nsteps) {
    if (nsteps < 1 || nsteps > 20)
        throw ConfigError("enumerate_physical_ensemble: nsteps must lie in [1, 20]");
    auto kit = make_jump_kit(model, gamma, dt);
    Mat omega1 = std::sqrt(dt) * kit.cg;
    Mat sum = Mat::Zero(model.space.dim(), model.space.dim());
    Vec psi = psi0.amps / psi0.amps.norm();
    enumerate_rec(kit, omega1, psi, 1.0, 0, nsteps, true, sum);
    return sum;
}

Mat enumerate_ostensible_ensemble(const LindbladModel& model, const StateVector& psi0,
                                  cplx gamma, double dt, int nsteps, double lambda1) {
    if (nsteps < 1 || nsteps > 20)
        throw ConfigError("enumerate_ostensible_ensemble: nsteps must lie in [1, 20]");
    auto kit = make_jump_kit(model, gamma, dt, lambda1);
    Mat omega1 = std::sqrt(dt) * kit.cg;
    Mat sum = Mat::Zero(model.space.dim(), model.space.dim());
    Vec psi = psi0.amps / psi0.amps.norm();
    enumerate_rec(kit, omega1, psi, 1.0, 0, nsteps, false, sum);
    return sum;
}

} // namespace qtraj
