// qtraj: trajectory ensembles, master-equation cross-checks, POVM dumps and
// reconstruction, Wigner contours, adaptive phase sampling.
//
// Exit codes: 0 success, 1 consistency failure (master-check), 2 config
// error, 3 numerical guard trip (guard named on stderr).

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "qtraj/adaptive.hpp"
#include "qtraj/json_io.hpp"
#include "qtraj/trajectories.hpp"

namespace {

using namespace qtraj;

constexpr double PI = 3.141592653589793238;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        bad(what + ": cannot parse number '" + s + "'");
    }
}

std::pair<std::string, std::string> split_once(const std::string& s, char sep,
                                               const std::string& what) {
    auto p = s.find(sep);
    if (p == std::string::npos) bad(what + ": expected '" + std::string(1, sep) + "' in '" + s + "'");
    return {s.substr(0, p), s.substr(p + 1)};
}

// Complex token: "1", "-2.5", "i", "-i", "2i", "0.5+0.5i", "1-i", "1e-2+3i".
cplx parse_complex_token(const std::string& tok, const std::string& what) {
    std::string s;
    for (char c : tok)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) bad(what + ": empty complex token");
    if (s.back() != 'i' && s.back() != 'I') return {to_double(s, what), 0.0};
    s.pop_back();
    std::size_t split = std::string::npos;
    for (std::size_t p = s.size(); p-- > 1;) {
        if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E') {
            split = p;
            break;
        }
    }
    if (split == std::string::npos) {
        if (s.empty() || s == "+") return {0.0, 1.0};
        if (s == "-") return {0.0, -1.0};
        return {0.0, to_double(s, what)};
    }
    double re = to_double(s.substr(0, split), what);
    std::string im = s.substr(split);
    if (im == "+") return {re, 1.0};
    if (im == "-") return {re, -1.0};
    return {re, to_double(im, what)};
}

// "re,im" pair of reals; a lone real means a zero imaginary part.
cplx parse_real_pair(const std::string& s, const std::string& what) {
    auto p = s.find(',');
    if (p == std::string::npos) return {to_double(s, what), 0.0};
    return {to_double(s.substr(0, p), what), to_double(s.substr(p + 1), what)};
}

struct RunConfig {
    std::string command;
    std::string state = "vacuum";
    int nmax = 16;
    double dt = 1e-3;
    double tfinal = 1.0;
    long ntraj = 1000;
    std::uint64_t seed = 1;
    std::string scheme = "jump";
    std::string method;  // resolved per scheme when empty
    std::string controller = "constant:0";
    std::string gamma = "0,0";
    std::string out;
    std::string format;  // resolved per command when empty
    int threads = 0;
    int nbins = 16;
    std::string kind = "ideal";
    // wigner
    std::string rfun = "0,0";
    std::string sfun = "0,0";
    double trec = 12.0;
    std::string record_file;
    long record_index = 0;
    int npoints = 128;
    // povm reconstruction inputs
    std::vector<std::string> reconstruct;
    bool debug_corrupt_weights = false;
};

StateVector parse_state_spec(const std::string& spec, FockSpace space) {
    auto colon = spec.find(':');
    std::string head = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (head == "vacuum") return vacuum_state(space);
    if (head == "fock") {
        double nv = to_double(rest, "--state fock");
        int n = int(nv);
        if (nv != n || n < 0) bad("--state fock: level must be a non-negative integer");
        if (n > space.nmax) bad("--state fock: level exceeds nmax");
        return fock_state(space, n);
    }
    if (head == "coherent") return coherent_state(space, parse_real_pair(rest, "--state coherent"));
    if (head == "qubit") {
        if (space.nmax != 1) bad("--state qubit requires nmax = 1");
        auto [t0, t1] = split_once(rest, ',', "--state qubit");
        Vec v(2);
        v(0) = parse_complex_token(t0, "--state qubit");
        v(1) = parse_complex_token(t1, "--state qubit");
        StateVector psi{space, std::move(v)};
        if (norm2(psi) < 1e-300) bad("--state qubit: zero state");
        return renormalize(psi);
    }
    bad("unknown state spec '" + spec + "' (vacuum | fock:n | coherent:re,im | qubit:c0,c1)");
}

PhaseControllerSpec parse_controller_spec(const std::string& s) {
    PhaseControllerSpec c;
    if (s == "adaptive-single") {
        c.kind = ControllerKind::AdaptiveSinglePhoton;
        return c;
    }
    if (s == "adaptive-mean") {
        c.kind = ControllerKind::AdaptiveMean;
        return c;
    }
    if (s.rfind("constant:", 0) == 0) {
        c.kind = ControllerKind::ConstantPhase;
        c.phi0 = to_double(s.substr(9), "--controller constant");
        return c;
    }
    if (s.rfind("heterodyne:", 0) == 0) {
        auto [a, b] = split_once(s.substr(11), ',', "--controller heterodyne");
        c.kind = ControllerKind::Heterodyne;
        c.phi0 = to_double(a, "--controller heterodyne");
        c.delta = to_double(b, "--controller heterodyne");
        return c;
    }
    bad("unknown controller '" + s +
        "' (constant:PHI | heterodyne:PHI0,DELTA | adaptive-single | adaptive-mean)");
}

Scheme parse_scheme(const std::string& s) {
    if (s == "jump") return Scheme::Jump;
    if (s == "diffusive") return Scheme::Diffusive;
    bad("--scheme must be jump or diffusive");
}

SamplingStrategy resolve_method(RunConfig& cfg) {
    if (cfg.method.empty()) cfg.method = (cfg.scheme == "diffusive") ? "C" : "A";
    if (cfg.method == "A") return SamplingStrategy::PhysicalA;
    if (cfg.method == "C") return SamplingStrategy::OstensibleC;
    bad("--method must be A (physical) or C (ostensible)");
}

void validate_basics(const RunConfig& cfg) {
    if (cfg.dt <= 0) bad("--dt must be positive");
    if (cfg.tfinal <= 0) bad("--tfinal must be positive");
    if (cfg.ntraj < 2) bad("--ntraj must be at least 2");
    if (cfg.threads < 0) bad("--threads must be >= 0");
    if (cfg.nbins < 1) bad("--nbins must be >= 1");
    if (cfg.npoints < 3) bad("--npoints must be >= 3");
}

void resolve_format(RunConfig& cfg, const char* wanted) {
    if (cfg.format.empty()) cfg.format = wanted;
    if (cfg.format != wanted)
        bad("command '" + cfg.command + "' emits --format " + wanted + " only");
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["command"] = cfg.command;
    j["state"] = cfg.state;
    j["nmax"] = cfg.nmax;
    j["dt"] = cfg.dt;
    j["tfinal"] = cfg.tfinal;
    j["ntraj"] = cfg.ntraj;
    j["seed"] = cfg.seed;
    j["scheme"] = cfg.scheme;
    j["method"] = cfg.method;
    j["controller"] = cfg.controller;
    j["gamma"] = cfg.gamma;
    j["threads"] = cfg.threads;
    j["nbins"] = cfg.nbins;
    j["kind"] = cfg.kind;
    j["format"] = cfg.format;
    if (cfg.command == "wigner") {
        j["R"] = cfg.rfun;
        j["S"] = cfg.sfun;
        j["t"] = cfg.trec;
        if (!cfg.record_file.empty()) {
            j["record"] = cfg.record_file;
            j["index"] = cfg.record_index;
        }
        j["npoints"] = cfg.npoints;
    }
    if (!cfg.reconstruct.empty()) j["reconstruct"] = cfg.reconstruct;
    if (!cfg.out.empty()) j["out"] = cfg.out;
    return j;
}

// Data goes to --out (or stdout); human summary goes to the other stream so
// piped data stays machine-clean.
struct Streams {
    std::ofstream file;
    std::ostream* data = &std::cout;
    std::ostream* summary = &std::cerr;

    explicit Streams(const RunConfig& cfg) {
        if (!cfg.out.empty()) {
            file.open(cfg.out);
            if (!file) bad("cannot open output file '" + cfg.out + "'");
            data = &file;
            summary = &std::cout;
        }
    }
};

json real_matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(RunConfig& cfg) {
    resolve_format(cfg, "jsonl");
    Scheme scheme = parse_scheme(cfg.scheme);

    RunOptions ro;
    ro.scheme = scheme;
    ro.strategy = resolve_method(cfg);
    ro.gamma = parse_real_pair(cfg.gamma, "--gamma");
    ro.controller = parse_controller_spec(cfg.controller);
    ro.dt = cfg.dt;
    ro.t_final = cfg.tfinal;
    ro.keep_noise = true;

    FockSpace space{cfg.nmax};
    auto model = damped_mode(space);
    auto psi0 = parse_state_spec(cfg.state, space);

    EnsembleOptions eo;
    eo.run = ro;
    eo.ntraj = cfg.ntraj;
    eo.seed = cfg.seed;
    eo.threads = cfg.threads;
    eo.collect_results = true;
    auto ens = run_ensemble(model, psi0, eo);

    Streams io(cfg);
    *io.data << json{{"config", config_echo(cfg)}}.dump() << "\n";
    long total_jumps = 0;
    for (const auto& r : ens.results) {
        json line = to_json(r.record);
        if (scheme == Scheme::Diffusive) {
            line["R"] = to_json(r.functionals.R);
            line["S"] = to_json(r.functionals.S);
            line["t"] = r.functionals.t;
        }
        *io.data << line.dump() << "\n";
        total_jumps += long(r.record.events.size());
    }

    auto est = ensemble_average(ens.results, number_operator(space));
    *io.summary << "trajectories: " << cfg.ntraj << "\n";
    *io.summary << "weighted mean photon number at t=" << cfg.tfinal << ": " << est.mean
                << " (stderr " << est.stderr_ << ")\n";
    if (scheme == Scheme::Jump)
        *io.summary << "jumps: " << total_jumps << " total, "
                    << double(total_jumps) / double(cfg.ntraj) << " per trajectory\n";
    return 0;
}

// ------------------------------------------------------------ master-check

int cmd_master_check(RunConfig& cfg) {
    if (cfg.format.empty()) cfg.format = "text";
    Scheme scheme = parse_scheme(cfg.scheme);

    RunOptions ro;
    ro.scheme = scheme;
    ro.strategy = resolve_method(cfg);
    ro.gamma = parse_real_pair(cfg.gamma, "--gamma");
    ro.controller = parse_controller_spec(cfg.controller);
    ro.dt = cfg.dt;
    ro.t_final = cfg.tfinal;

    FockSpace space{cfg.nmax};
    auto model = damped_mode(space);
    auto psi0 = parse_state_spec(cfg.state, space);

    EnsembleOptions eo;
    eo.run = ro;
    eo.ntraj = cfg.ntraj;
    eo.seed = cfg.seed;
    eo.threads = cfg.threads;
    eo.collect_results = cfg.debug_corrupt_weights;

    DensityEstimate est;
    auto ens = run_ensemble(model, psi0, eo);
    if (cfg.debug_corrupt_weights) {
        auto nhat = number_operator(space);
        for (auto& r : ens.results)
            r.record.weight *= 1.0 + expectation(r.state, nhat);
        est = ensemble_density(ens.results);
    } else {
        est = std::move(ens.snapshots.back());
    }

    double master_dt = std::min(cfg.dt, 1e-2);
    auto rho = evolve_master(model, outer(psi0), cfg.tfinal, master_dt);

    const int d = space.dim();
    double max_dev = 0, se_at_max = 0, worst_ratio = 0;
    int mi = 0, mj = 0;
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            double dev = std::abs(est.mean(i, k) - rho.m(i, k));
            double tol = 3.0 * est.stderr_(i, k) + 1e-12;
            if (dev > max_dev) {
                max_dev = dev;
                se_at_max = est.stderr_(i, k);
                mi = i;
                mj = k;
            }
            worst_ratio = std::max(worst_ratio, dev / tol);
        }
    const bool pass = worst_ratio < 1.0;

    Streams io(cfg);
    *io.data << "# config: " << config_echo(cfg).dump() << "\n";
    *io.data << "trajectories: " << cfg.ntraj << ", elements: " << d << "x" << d
             << ", t=" << cfg.tfinal << "\n";
    *io.data << "max |ensemble - master|: " << max_dev << " at (" << mi << "," << mj << ")"
             << ", stderr there: " << se_at_max << "\n";
    *io.data << "worst deviation / (3 stderr + 1e-12): " << worst_ratio << "\n";
    *io.data << "consistency: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

// ------------------------------------------------------------------- povm

ReconstructionInput load_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open sample file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) bad("sample file '" + path + "' is empty");
    json hdr;
    try {
        hdr = json::parse(line);
    } catch (const json::exception& e) {
        bad("sample file '" + path + "': bad header: " + e.what());
    }
    const json& c = hdr.contains("config") ? hdr.at("config") : hdr;
    std::string spec;
    try {
        spec = c.at("state").get<std::string>();
        if (c.value("nmax", 1) != 1) bad("sample file '" + path + "' was not a two-level run");
    } catch (const json::exception& e) {
        bad("sample file '" + path + "': header lacks a state spec: " + e.what());
    }
    ReconstructionInput input{parse_state_spec(spec, FockSpace{1}), {}};
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            input.samples.push_back({j.at("phi").get<double>(), j.at("weight").get<double>(),
                                     j.value("seed", std::uint64_t(0))});
        } catch (const json::exception& e) {
            bad("sample file '" + path + "' line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return input;
}

// Projection of a binned POVM's off-diagonals onto the ideal pattern.
double ideal_pattern_coefficient(const PhasePOVM& p) {
    auto ideal = povm_ideal_phase(p.nbins);
    double num = 0, den = 0;
    for (int k = 0; k < p.nbins; ++k) {
        num += (std::conj(ideal.bins[k](0, 1)) * p.bins[k](0, 1)).real();
        den += std::norm(ideal.bins[k](0, 1));
    }
    return den > 0 ? num / den : 0.0;
}

int cmd_povm(RunConfig& cfg) {
    resolve_format(cfg, "json");
    Streams io(cfg);
    json doc;
    doc["config"] = config_echo(cfg);
    json entries = json::array();
    json report;

    if (!cfg.reconstruct.empty()) {
        cfg.kind = "reconstructed";
        doc["config"]["kind"] = cfg.kind;
        if (cfg.reconstruct.size() < 4)
            bad("--reconstruct needs at least four sample files (tomographically complete inputs)");
        std::vector<ReconstructionInput> inputs;
        for (const auto& p : cfg.reconstruct) inputs.push_back(load_samples(p));
        auto rec = reconstruct_povm(inputs, cfg.nbins);
        for (int k = 0; k < cfg.nbins; ++k) {
            json e = povm_entry(json{{"bin", k}}, rec.povm.bins[k]);
            e["stderr"] = real_matrix_to_json(rec.stderr_[k]);
            entries.push_back(std::move(e));
        }
        report["completeness_residual"] = rec.completeness_residual;
        report["ideal_coefficient"] = rec.ideal_coefficient;
        report["total_samples"] = rec.total_samples;
        *io.summary << "reconstructed " << cfg.nbins << " bins from " << rec.total_samples
                    << " samples\n";
        *io.summary << "completeness residual: " << rec.completeness_residual << "\n";
        *io.summary << "ideal-pattern coefficient: " << rec.ideal_coefficient << "\n";
    } else if (cfg.kind == "ideal" || cfg.kind == "standard") {
        auto p = cfg.kind == "ideal" ? povm_ideal_phase(cfg.nbins) : povm_standard_phase(cfg.nbins);
        Mat sum = Mat::Zero(2, 2);
        for (int k = 0; k < cfg.nbins; ++k) {
            entries.push_back(povm_entry(json{{"bin", k}}, p.bins[k]));
            sum += p.bins[k];
        }
        double residual = (sum - Mat::Identity(2, 2)).cwiseAbs().maxCoeff();
        double coef = ideal_pattern_coefficient(p);
        report["completeness_residual"] = residual;
        report["ideal_coefficient"] = coef;
        *io.summary << "completeness residual: " << residual << "\n";
        *io.summary << "ideal-pattern coefficient: " << coef << "\n";
    } else if (cfg.kind == "homodyne") {
        FockSpace space{cfg.nmax};
        auto ctl = parse_controller_spec(cfg.controller);
        if (ctl.kind != ControllerKind::ConstantPhase)
            bad("--kind homodyne uses a constant quadrature phase (--controller constant:PHI)");
        const double lo = -8.0, hi = 8.0;
        const double dx = (hi - lo) / cfg.nbins;
        Mat sum = Mat::Zero(space.dim(), space.dim());
        for (int i = 0; i < cfg.nbins; ++i) {
            double x = lo + (i + 0.5) * dx;
            Mat f = effect_homodyne(space, x, ctl.phi0);
            sum += dx * f;
            entries.push_back(povm_entry(json{{"X", x}}, f));
        }
        double residual = (sum - Mat::Identity(space.dim(), space.dim())).cwiseAbs().maxCoeff();
        report["completeness_residual"] = residual;
        report["window"] = json::array({lo, hi});
        *io.summary << "completeness residual over X in [-8, 8] with " << cfg.nbins
                    << " points: " << residual << "\n";
    } else if (cfg.kind == "heterodyne") {
        FockSpace space{cfg.nmax};
        const double rmax = 0.5 * std::sqrt(double(cfg.nmax)) * (1.0 - 1e-12);
        const double dr = rmax / cfg.nbins;
        const double dth = 2.0 * PI / cfg.nbins;
        Mat sum = Mat::Zero(space.dim(), space.dim());
        for (int i = 0; i < cfg.nbins; ++i) {
            double r = (i + 0.5) * dr;
            for (int m = 0; m < cfg.nbins; ++m) {
                cplx a = std::polar(r, m * dth);
                Mat f = effect_heterodyne(space, a);
                sum += r * dr * dth * f;
                entries.push_back(povm_entry(json{{"A", json::array({a.real(), a.imag()})}}, f));
            }
        }
        double residual = (sum - Mat::Identity(space.dim(), space.dim())).cwiseAbs().maxCoeff();
        report["completeness_residual"] = residual;
        report["disc_radius"] = rmax;
        *io.summary << "completeness residual over |A| <= " << rmax << ": " << residual << "\n";
    } else {
        bad("--kind must be ideal | standard | homodyne | heterodyne (or use --reconstruct)");
    }

    doc["report"] = std::move(report);
    doc["povm"] = std::move(entries);
    *io.data << doc.dump(1) << "\n";
    return 0;
}

// ------------------------------------------------------------------ wigner

int cmd_wigner(RunConfig& cfg) {
    resolve_format(cfg, "csv");
    RecordFunctionals f;
    if (!cfg.record_file.empty()) {
        std::ifstream in(cfg.record_file);
        if (!in) bad("cannot open record file '" + cfg.record_file + "'");
        std::string line;
        long idx = -1;  // config header does not count
        json j;
        bool found = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                bad("record file '" + cfg.record_file + "': " + e.what());
            }
            if (idx < 0 && j.contains("config")) {
                idx = 0;
                continue;
            }
            if (idx < 0) idx = 0;
            if (idx == cfg.record_index) {
                found = true;
                break;
            }
            ++idx;
        }
        if (!found) bad("record file has no record line with index " + std::to_string(cfg.record_index));
        if (!j.contains("R") || !j.contains("S") || !j.contains("t"))
            bad("record line lacks (R, S, t); use a diffusive simulate output");
        f.R = cplx_from_json(j.at("R"));
        f.S = cplx_from_json(j.at("S"));
        f.t = j.at("t").get<double>();
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", f.R.real(), f.R.imag());
        cfg.rfun = buf;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", f.S.real(), f.S.imag());
        cfg.sfun = buf;
        cfg.trec = f.t;
    } else {
        f.R = parse_real_pair(cfg.rfun, "--R");
        f.S = parse_real_pair(cfg.sfun, "--S");
        f.t = cfg.trec;
        if (f.t <= 0) bad("--t must be positive");
    }

    auto g = gaussian_effect_params(f);
    auto pts = wigner_contour(g, cfg.npoints);
    const double cq = g.x * std::cos(g.theta) - g.y * std::sin(g.theta);
    const double cp = g.x * std::sin(g.theta) + g.y * std::cos(g.theta);
    const double area = PI * std::sqrt(g.vx * g.vy);

    Streams io(cfg);
    *io.data << "# config: " << config_echo(cfg).dump() << "\n";
    *io.data << "# theta=" << g.theta << " x=" << g.x << " y=" << g.y << " vx=" << g.vx
             << " vy=" << g.vy << "\n";
    *io.data << "# center_q=" << cq << " center_p=" << cp << " area=" << area << "\n";
    *io.data << "q,p\n";
    for (const auto& p : pts) *io.data << p[0] << "," << p[1] << "\n";
    *io.summary << "one-standard-deviation contour: center (" << cq << ", " << cp
                << "), area " << area << "\n";
    return 0;
}

// ---------------------------------------------------------------- adaptive

int cmd_adaptive(RunConfig& cfg) {
    resolve_format(cfg, "jsonl");
    if (cfg.nmax != 1) bad("adaptive phase runs live on nmax = 1 (two-level states)");
    FockSpace space{1};
    auto psi0 = parse_state_spec(cfg.state, space);
    auto ctl = parse_controller_spec(cfg.controller);

    auto samples =
        sample_phase_measurements(psi0, ctl, cfg.dt, cfg.tfinal, cfg.ntraj, cfg.seed, cfg.threads);

    Streams io(cfg);
    *io.data << json{{"config", config_echo(cfg)}}.dump() << "\n";
    double sw = 0;
    cplx resultant = 0;
    for (const auto& s : samples) {
        json line = to_json(s);
        line["state"] = cfg.state;  // each outcome names its input, so files are self-describing
        *io.data << line.dump() << "\n";
        sw += s.weight;
        resultant += s.weight * std::polar(1.0, s.phi);
    }
    *io.summary << "samples: " << samples.size() << ", total weight: " << sw << "\n";
    if (sw > 0)
        *io.summary << "weighted circular mean phase: " << std::arg(resultant / sw)
                    << " (resultant length " << std::abs(resultant) / sw << ")\n";
    return 0;
}

// ---------------------------------------------------------------- plumbing

struct FlagState {
    CLI::App* sub = nullptr;
    const json* file = nullptr;

    bool touched(const std::string& flag, const std::string& key) const {
        auto* opt = sub->get_option_no_throw(flag);
        if (opt && opt->count() > 0) return true;
        return file && file->contains(key);
    }
};

void apply_config_file(const json& file, CLI::App* sub, RunConfig& cfg) {
    auto unset = [&](const char* flag) {
        auto* opt = sub->get_option_no_throw(flag);
        return opt != nullptr && opt->count() == 0;
    };
    try {
        auto str = [&](const char* flag, const char* key, std::string& dst) {
            if (file.contains(key) && unset(flag)) dst = file.at(key).get<std::string>();
        };
        auto num = [&](const char* flag, const char* key, auto& dst) {
            if (file.contains(key) && unset(flag))
                dst = file.at(key).get<std::remove_reference_t<decltype(dst)>>();
        };
        str("--state", "state", cfg.state);
        num("--nmax", "nmax", cfg.nmax);
        num("--dt", "dt", cfg.dt);
        num("--tfinal", "tfinal", cfg.tfinal);
        num("--ntraj", "ntraj", cfg.ntraj);
        num("--seed", "seed", cfg.seed);
        str("--scheme", "scheme", cfg.scheme);
        str("--method", "method", cfg.method);
        str("--controller", "controller", cfg.controller);
        str("--gamma", "gamma", cfg.gamma);
        str("--out", "out", cfg.out);
        str("--format", "format", cfg.format);
        num("--threads", "threads", cfg.threads);
        num("--nbins", "nbins", cfg.nbins);
        str("--kind", "kind", cfg.kind);
        str("--R", "R", cfg.rfun);
        str("--S", "S", cfg.sfun);
        num("--t", "t", cfg.trec);
        str("--record", "record", cfg.record_file);
        num("--index", "index", cfg.record_index);
        num("--npoints", "npoints", cfg.npoints);
    } catch (const json::exception& e) {
        bad(std::string("config file: ") + e.what());
    }
}

int dispatch(RunConfig& cfg) {
    validate_basics(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "master-check") return cmd_master_check(cfg);
    if (cfg.command == "povm") return cmd_povm(cfg);
    if (cfg.command == "wigner") return cmd_wigner(cfg);
    if (cfg.command == "adaptive") return cmd_adaptive(cfg);
    bad("unknown command");
}

int run(int argc, char** argv) {
    CLI::App app{"Quantum-trajectory toolkit for a single damped bosonic mode"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path,
                        "JSON file of option values (command-line flags take precedence)");
        sub->add_option("--state", cfg.state,
                        "initial state: vacuum | fock:n | coherent:re,im | qubit:c0,c1");
        sub->add_option("--nmax", cfg.nmax, "Fock-space truncation (dimension nmax+1)");
        sub->add_option("--dt", cfg.dt, "time step");
        sub->add_option("--tfinal", cfg.tfinal, "final time");
        sub->add_option("--ntraj", cfg.ntraj, "number of trajectories / samples");
        sub->add_option("--seed", cfg.seed, "root RNG seed (env QTRAJ_SEED as fallback)");
        sub->add_option("--scheme", cfg.scheme, "unraveling: jump | diffusive");
        sub->add_option("--method", cfg.method,
                        "record sampling: A (physical) | C (ostensible); default A for jump, C for diffusive");
        sub->add_option("--controller", cfg.controller,
                        "phase program: constant:PHI | heterodyne:PHI0,DELTA | adaptive-single | adaptive-mean");
        sub->add_option("--gamma", cfg.gamma, "local-oscillator amplitude re,im (jump scheme)");
        sub->add_option("--out", cfg.out, "output file (default: stdout, summary to stderr)");
        sub->add_option("--format", cfg.format, "output format: jsonl | csv | json");
        sub->add_option("--threads", cfg.threads, "worker threads (0 = serial reference path)");
        sub->add_option("--nbins", cfg.nbins, "phase bins / grid points per axis");
        sub->add_option("--kind", cfg.kind, "POVM kind: ideal | standard | homodyne | heterodyne");
        return sub;
    };

    add_common(app.add_subcommand(
        "simulate", "Run a trajectory ensemble; one JSONL record per trajectory"));
    auto* mc = add_common(app.add_subcommand(
        "master-check", "Compare an ensemble against the deterministic master-equation solution"));
    mc->add_flag("--debug-corrupt-weights", cfg.debug_corrupt_weights,
                 "corrupt trajectory weights (negative control)")
        ->group("");
    auto* pv = add_common(app.add_subcommand("povm", "Emit analytic or reconstructed POVMs"));
    pv->add_option("--reconstruct", cfg.reconstruct,
                   "phase-sample files (>= 4 tomographic inputs) to invert");
    auto* wg = add_common(
        app.add_subcommand("wigner", "Emit the one-standard-deviation Wigner contour as CSV"));
    wg->add_option("--R", cfg.rfun, "linear record functional R as re,im");
    wg->add_option("--S", cfg.sfun, "quadratic record functional S as re,im");
    wg->add_option("--t", cfg.trec, "record duration");
    wg->add_option("--record", cfg.record_file, "diffusive simulate output to read (R, S, t) from");
    wg->add_option("--index", cfg.record_index, "record line index within --record");
    wg->add_option("--npoints", cfg.npoints, "contour sample count");
    add_common(app.add_subcommand(
        "adaptive", "Sample completed phase measurements of a two-level state"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();

    json filecfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) bad("cannot open config file '" + config_path + "'");
        try {
            json whole = json::parse(in);
            filecfg = whole.contains("config") ? whole.at("config") : whole;
        } catch (const json::exception& e) {
            bad(std::string("config file: ") + e.what());
        }
        apply_config_file(filecfg, sub, cfg);
    }

    FlagState fs{sub, config_path.empty() ? nullptr : &filecfg};
    if (!fs.touched("--seed", "seed")) {
        if (const char* env = std::getenv("QTRAJ_SEED")) {
            try {
                std::size_t pos = 0;
                cfg.seed = std::stoull(env, &pos);
                if (env[pos] != '\0') throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                bad("QTRAJ_SEED: cannot parse unsigned integer");
            }
        }
    }
    if (cfg.command == "adaptive") {
        if (!fs.touched("--tfinal", "tfinal")) cfg.tfinal = 16.0;
        if (!fs.touched("--controller", "controller")) cfg.controller = "adaptive-single";
        if (!fs.touched("--nmax", "nmax")) cfg.nmax = 1;
    }
    if (cfg.state.rfind("qubit", 0) == 0 && !fs.touched("--nmax", "nmax")) cfg.nmax = 1;

    return dispatch(cfg);
}

} // namespace

int main(int argc, char** argv) {
    auto guard = [](const char* name, const std::exception& e, int code) {
        std::cerr << (code == 2 ? "config error" : "numerical guard") << " [" << name
                  << "]: " << e.what() << "\n";
        return code;
    };
    try {
        return run(argc, argv);
    } catch (const qtraj::ConfigError& e) {
        return guard("ConfigError", e, 2);
    } catch (const qtraj::ZeroGammaError& e) {
        return guard("ZeroGammaError", e, 2);
    } catch (const qtraj::DimensionMismatch& e) {
        return guard("DimensionMismatch", e, 2);
    } catch (const qtraj::TruncationError& e) {
        return guard("TruncationError", e, 3);
    } catch (const qtraj::StepSizeError& e) {
        return guard("StepSizeError", e, 3);
    } catch (const qtraj::ZeroNormError& e) {
        return guard("ZeroNormError", e, 3);
    } catch (const qtraj::PositivityError& e) {
        return guard("PositivityError", e, 3);
    } catch (const qtraj::DegenerateEffect& e) {
        return guard("DegenerateEffect", e, 3);
    } catch (const qtraj::IllConditioned& e) {
        return guard("IllConditioned", e, 3);
    } catch (const qtraj::MultiChannelUnsupported& e) {
        return guard("MultiChannelUnsupported", e, 3);
    } catch (const qtraj::EmptyEnsemble& e) {
        return guard("EmptyEnsemble", e, 3);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
