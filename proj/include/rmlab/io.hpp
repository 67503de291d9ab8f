#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <span>
#include <vector>

#include "rmlab/ensemble.hpp"
#include "rmlab/geometry.hpp"

namespace rmlab {

using json = nlohmann::json;

// Complex numbers serialize as [re, im].
json complex_to_json(cdouble z);
cdouble complex_from_json(const json& j);

void to_json(json& j, const GraphSpec& spec);
void from_json(const json& j, GraphSpec& spec);
void to_json(json& j, const EntryModel& model);
void from_json(const json& j, EntryModel& model);
void to_json(json& j, const EnsembleSpec& spec);
void from_json(const json& j, EnsembleSpec& spec);

// Dense complex matrix as little-endian f64 interleaved (re, im), row-major,
// with a JSON sidecar carrying dimension and provenance.
void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd read_matrix_binary(const std::filesystem::path& path, int n);

// Writes <basename>.bin and <basename>.json for one sample.
void write_sample(const std::filesystem::path& basename, const MatrixSample& sample);
MatrixSample read_sample(const std::filesystem::path& basename);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// CSV columns (trial, re, im).
std::string eigenvalue_csv(int trial, std::span<const cdouble> values);
// CSV columns (re, im) tracing the region boundary.
std::string boundary_csv(const EllipticRegion& region, int points);

}  // namespace rmlab
