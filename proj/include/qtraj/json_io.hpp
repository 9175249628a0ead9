#pragma once

#include <string>

#include "json.hpp"

#include "qtraj/adaptive.hpp"
#include "qtraj/detection.hpp"
#include "qtraj/dynamics.hpp"
#include "qtraj/fock.hpp"
#include "qtraj/record.hpp"

// JSON (de)serialization for states, operators, models, trajectory records and
// POVM dumps.  Complex scalars are [re, im] pairs throughout.

namespace qtraj {

// ordered_json keeps insertion order, so config echoes stay at the top of
// emitted documents.
using json = nlohmann::ordered_json;

json to_json(const cplx& z);
cplx cplx_from_json(const json& j);

json to_json(const StateVector& s);
StateVector state_from_json(const json& j);

json to_json(const OperatorMatrix& op);
OperatorMatrix operator_from_json(const json& j);

json to_json(const LindbladModel& m);
LindbladModel model_from_json(const json& j);

json to_json(const TrajectoryRecord& r);
TrajectoryRecord record_from_json(const json& j);

json to_json(const PhaseSample& s);

// POVM dump entry: {"label": ..., "matrix": [[..row..], ...]}
json povm_entry(const json& label, const Mat& m);

json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j);

} // namespace qtraj
