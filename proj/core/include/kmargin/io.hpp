#pragma once

#include <ostream>
#include <string>

#include "kmargin/analysis.hpp"
#include "kmargin/classify.hpp"

namespace kmargin {

// Shortest decimal form that round-trips binary64 exactly (%.17g trimmed
// by the C library); all persisted numbers go through this.
std::string format_double(double v);

// `# generated-at <utc timestamp>` — the single line excluded from
// byte-identical output comparisons.
void write_generated_at(std::ostream& os);

// Reads a labeled dataset. Formats:
//   csv       header row ending in `label`, then one point per row
//   svmlight  `label idx:val ...` with 1-based indices, zeros implied
// Labels {0,-1} map to -1 and {1,+1} to +1. Malformed rows raise
// std::runtime_error naming path and line.
LabeledDataset ingest(const std::string& path, const std::string& format);

// Numeric matrix from csv; a non-numeric first row is treated as a
// header and skipped. Used by the cca/sdr commands.
Matrix read_matrix_csv(const std::string& path);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);  // rejects unknown versions

// Text layout: first line `m`, then rows `x-coords... p eta`.
void save_discrete_joint(const DiscreteJoint& d, const std::string& path);
DiscreteJoint load_discrete_joint(const std::string& path);

}  // namespace kmargin
