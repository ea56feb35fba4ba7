#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "udseq/glue.hpp"
#include "udseq/kr.hpp"
#include "udseq/measure.hpp"
#include "udseq/product.hpp"

namespace udseq::io {

// Insertion-ordered throughout: reports and files are deterministic.
using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

// Exact weights serialize as "p/q" strings (bit-exact round trip),
// inexact ones as JSON numbers (shortest round-trip form).
json weight_to_json(const Weight& w);
Weight weight_from_json(const json& j, const std::string& path,
                        std::vector<SchemaViolation>& violations);

json space_to_json(const MetricSpace& space);
SpacePtr space_from_json(const json& j, const std::string& file);

// `context` may be null; then the measure file must embed its space.
json measure_to_json(const DiscreteMeasure& m, bool embed_space = false);
DiscreteMeasure measure_from_json(const json& j, const std::string& file,
                                  SpacePtr context);

json sequence_to_json(const PointSequence& s, bool embed_space = false);
PointSequence sequence_from_json(const json& j, const std::string& file,
                                 SpacePtr context);

json plan_to_json(const TransportPlan& plan);

json decomposition_to_json(const PieceDecomposition& d);
PieceDecomposition decomposition_from_json(const json& j, const std::string& file);

KernelPtr kernel_from_json(const json& j, const std::string& file);

json tightness_to_json(const TightnessCertificate& cert, int horizon);

json load_json_file(const std::string& path);
void save_json_file(const json& j, const std::string& path);

SpacePtr load_space(const std::string& path);
DiscreteMeasure load_measure(const std::string& path, SpacePtr context);
PointSequence load_sequence(const std::string& path, SpacePtr context);
PieceDecomposition load_decomposition(const std::string& path);
KernelPtr load_kernel(const std::string& path);

// Fixed 12-digit decimal used by every report.
std::string fmt_fixed(double v);
std::string csv_line(const std::vector<std::string>& cells);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace udseq::io
