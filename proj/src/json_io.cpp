#include "qtraj/json_io.hpp"

namespace qtraj {

json to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("complex value must be a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const StateVector& s) {
    json amps = json::array();
    for (int n = 0; n < s.space.dim(); ++n) amps.push_back(to_json(s.amps(n)));
    return {{"nmax", s.space.nmax}, {"amps", amps}};
}

StateVector state_from_json(const json& j) {
    FockSpace space{j.at("nmax").get<int>()};
    const auto& amps = j.at("amps");
    if (int(amps.size()) != space.dim())
        throw DimensionMismatch("state amplitude count does not match nmax + 1");
    StateVector s{space, Vec(space.dim())};
    for (int n = 0; n < space.dim(); ++n) s.amps(n) = cplx_from_json(amps[n]);
    return s;
}

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array of rows");
    const Eigen::Index nr = Eigen::Index(j.size());
    const Eigen::Index nc = Eigen::Index(j[0].size());
    Mat m(nr, nc);
    for (Eigen::Index r = 0; r < nr; ++r) {
        if (Eigen::Index(j[r].size()) != nc)
            throw ConfigError("matrix rows have inconsistent lengths");
        for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = cplx_from_json(j[r][c]);
    }
    return m;
}

json to_json(const OperatorMatrix& op) {
    return {{"nmax", op.space.nmax}, {"rows", matrix_to_json(op.m)}};
}

OperatorMatrix operator_from_json(const json& j) {
    FockSpace space{j.at("nmax").get<int>()};
    Mat m = matrix_from_json(j.at("rows"));
    if (m.rows() != space.dim() || m.cols() != space.dim())
        throw DimensionMismatch("operator shape does not match nmax + 1");
    return {space, std::move(m)};
}

json to_json(const LindbladModel& m) {
    json collapse = json::array();
    for (const auto& c : m.collapse) collapse.push_back(matrix_to_json(c));
    return {{"nmax", m.space.nmax}, {"H", matrix_to_json(m.H)}, {"collapse", collapse}};
}

LindbladModel model_from_json(const json& j) {
    FockSpace space{j.at("nmax").get<int>()};
    Mat h = matrix_from_json(j.at("H"));
    std::vector<Mat> collapse;
    for (const auto& cj : j.at("collapse")) collapse.push_back(matrix_from_json(cj));
    return LindbladModel(space, std::move(h), std::move(collapse));
}

json to_json(const TrajectoryRecord& r) {
    json j{{"seed", r.seed},
           {"scheme", r.scheme == Scheme::Jump ? "jump" : "diffusive"},
           {"dt", r.dt},
           {"weight", r.weight}};
    if (r.scheme == Scheme::Jump) {
        j["events"] = r.events;
        j["phase0"] = r.phase0;
    } else {
        j["dw"] = r.dw;
        if (r.phase_constant)
            j["phase0"] = r.phase0;
        else
            j["phases"] = r.phases;
    }
    return j;
}

TrajectoryRecord record_from_json(const json& j) {
    TrajectoryRecord r;
    r.seed = j.at("seed").get<std::uint64_t>();
    const std::string scheme = j.at("scheme").get<std::string>();
    if (scheme == "jump")
        r.scheme = Scheme::Jump;
    else if (scheme == "diffusive")
        r.scheme = Scheme::Diffusive;
    else
        throw ConfigError("unknown scheme label: " + scheme);
    r.dt = j.at("dt").get<double>();
    r.weight = j.value("weight", 1.0);
    if (r.scheme == Scheme::Jump) {
        r.events = j.at("events").get<std::vector<std::int32_t>>();
        r.phase0 = j.value("phase0", 0.0);
        r.phase_constant = true;
    } else {
        r.dw = j.at("dw").get<std::vector<double>>();
        if (j.contains("phases")) {
            r.phases = j.at("phases").get<std::vector<double>>();
            r.phase_constant = false;
        } else {
            r.phase0 = j.value("phase0", 0.0);
            r.phase_constant = true;
        }
    }
    return r;
}

json to_json(const PhaseSample& s) {
    return {{"phi", s.phi}, {"weight", s.weight}, {"seed", s.seed}};
}

json povm_entry(const json& label, const Mat& m) {
    return {{"label", label}, {"matrix", matrix_to_json(m)}};
}

} // namespace qtraj
