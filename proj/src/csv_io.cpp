#include "fidfac/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace fidfac {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& origin, std::size_t line, const std::string& column) {
  return origin + " line " + std::to_string(line) + ", column '" + column + "'";
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ElementTable parse_element_csv(std::istream& in, bool log_transform, const std::string& origin) {
  ElementTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t.rfind("# fidfac-panel-csv", 0) == 0 && t != kPanelCsvVersionLine)
        throw Error(ErrorCode::SchemaError, origin + ": unsupported schema version '" + t + "'");
      continue;
    }
    header = split_csv_line(t);
    break;
  }
  if (header.size() < 3 || header[0] != "source_id" || header[1] != "fragment_id")
    throw Error(ErrorCode::SchemaError,
                origin + " line " + std::to_string(line_no) + ": header must be source_id,fragment_id,<elements...>");
  table.elements.assign(header.begin() + 2, header.end());
  const std::size_t q = table.elements.size();

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_csv_line(t);
    if (fields.size() != q + 2) {
      const std::string col = fields.size() < q + 2 ? header[fields.size()] : "<extra>";
      throw Error(ErrorCode::SchemaError, where(origin, line_no, col) + ": expected " + std::to_string(q + 2) +
                                              " fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw Error(ErrorCode::SchemaError, where(origin, line_no, "source_id") + ": missing");
    std::vector<double> values(q);
    for (std::size_t j = 0; j < q; ++j) {
      const std::string& cell = fields[j + 2];
      if (cell.empty()) throw Error(ErrorCode::SchemaError, where(origin, line_no, header[j + 2]) + ": missing value");
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v))
        throw Error(ErrorCode::SchemaError, where(origin, line_no, header[j + 2]) + ": not a number '" + cell + "'");
      if (log_transform) {
        if (v <= 0.0)
          throw Error(ErrorCode::NonPositiveConcentration,
                      where(origin, line_no, header[j + 2]) + ": concentration " + cell + " cannot be logged");
        v = std::log(v);
      }
      values[j] = v;
    }
    table.source_ids.push_back(fields[0]);
    table.fragment_ids.push_back(fields[1]);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorCode::SchemaError, origin + ": no data rows");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < q; ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return table;
}

ElementTable read_element_csv(const std::string& path, bool log_transform) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open '" + path + "'");
  return parse_element_csv(in, log_transform, path);
}

void write_element_csv(std::ostream& out, const ElementTable& table) {
  out << kPanelCsvVersionLine << '\n' << "source_id,fragment_id";
  for (const auto& e : table.elements) out << ',' << e;
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    out << table.source_ids[static_cast<std::size_t>(i)] << ',' << table.fragment_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << ',' << format_double(table.values(i, j));
    out << '\n';
  }
}

void write_element_csv(const std::string& path, const ElementTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::SchemaError, "cannot write '" + path + "'");
  write_element_csv(out, table);
}

std::vector<MeasurementPanel> group_panels(const ElementTable& table) {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<Eigen::Index>> members;
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    const auto& id = table.source_ids[static_cast<std::size_t>(i)];
    auto [it, inserted] = index.emplace(id, ids.size());
    if (inserted) {
      ids.push_back(id);
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }
  std::vector<MeasurementPanel> panels;
  panels.reserve(ids.size());
  for (std::size_t s = 0; s < ids.size(); ++s) {
    MeasurementPanel panel;
    panel.source_id = ids[s];
    panel.rows.resize(static_cast<Eigen::Index>(members[s].size()), table.values.cols());
    for (std::size_t k = 0; k < members[s].size(); ++k)
      panel.rows.row(static_cast<Eigen::Index>(k)) = table.values.row(members[s][k]);
    panels.push_back(std::move(panel));
  }
  return panels;
}

ElementTable table_from_panels(const std::vector<MeasurementPanel>& panels, const std::vector<std::string>& elements) {
  ElementTable table;
  table.elements = elements;
  Eigen::Index total = 0;
  for (const auto& p : panels) {
    if (p.dim() != static_cast<Eigen::Index>(elements.size()))
      throw Error(ErrorCode::LengthMismatch, "panel width differs from element list");
    total += p.count();
  }
  table.values.resize(total, static_cast<Eigen::Index>(elements.size()));
  Eigen::Index r = 0;
  for (const auto& p : panels) {
    for (Eigen::Index k = 0; k < p.count(); ++k) {
      table.source_ids.push_back(p.source_id);
      table.fragment_ids.push_back(std::to_string(k + 1));
      table.values.row(r++) = p.rows.row(k);
    }
  }
  return table;
}

AlternativeDataset to_dataset(std::vector<MeasurementPanel> panels) {
  AlternativeDataset data;
  data.sources = std::move(panels);
  return data;
}

}  // namespace fidfac
