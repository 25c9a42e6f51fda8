#pragma once

// Panel CSV format, version 1:
//
//   # fidfac-panel-csv v1
//   source_id,fragment_id,<element_1>,...,<element_q>
//   W001,1,4.0943,3.9120,...
//
// The version line is optional on input and always written on output.
// Values are either log-transformed concentrations or, when ingested with
// log_transform = true, raw concentrations (which must be > 0).

#include <iosfwd>
#include <string>
#include <vector>

#include "fidfac/data_model.hpp"

namespace fidfac {

inline constexpr const char* kPanelCsvVersionLine = "# fidfac-panel-csv v1";

struct ElementTable {
  std::vector<std::string> elements;
  std::vector<std::string> source_ids;
  std::vector<std::string> fragment_ids;
  Mat values;  // one row per fragment

  Eigen::Index rows() const { return values.rows(); }
};

ElementTable parse_element_csv(std::istream& in, bool log_transform, const std::string& origin = "<stream>");
ElementTable read_element_csv(const std::string& path, bool log_transform);
void write_element_csv(std::ostream& out, const ElementTable& table);
void write_element_csv(const std::string& path, const ElementTable& table);

/// Panels grouped by source_id in order of first appearance.
std::vector<MeasurementPanel> group_panels(const ElementTable& table);
ElementTable table_from_panels(const std::vector<MeasurementPanel>& panels, const std::vector<std::string>& elements);

AlternativeDataset to_dataset(std::vector<MeasurementPanel> panels);

/// Shortest round-tripping decimal representation.
std::string format_double(double v);
/// Splits one CSV line on commas (no quoting; the formats never need it).
std::vector<std::string> split_csv_line(const std::string& line);
bool parse_double(const std::string& text, double& out);

}  // namespace fidfac
