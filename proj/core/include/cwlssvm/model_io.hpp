#pragma once

#include <string>

#include "cwlssvm/lssvm.hpp"

namespace cwlssvm {

/// JSON document for a trained model.
///
/// Fields: task, D (components), P (input columns), N, alpha, b, S_D
/// (1-based), kernel (family, sigma, 1-based input per component), X
/// (row-major, one row per training point), Y (classification labels only),
/// eta (only for per-component trade-off models), component_norms.
/// Numbers are written with 17 significant digits so a reload reproduces
/// predictions exactly.
std::string serialize_model(const TrainedModel& model, int indent = 2);

/// Inverse of serialize_model. Throws IoError naming the offending field.
TrainedModel parse_model(const std::string& text);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

} // namespace cwlssvm
