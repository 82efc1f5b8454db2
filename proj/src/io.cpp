#include "cfnn/io.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace cfnn {

using nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) throw Error("cannot serialize a non-finite value");
  if (v == 0.0 && std::signbit(v)) return "-0.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string model_to_json(const Network& net) {
  std::string out = "{\n  \"activation\": \"";
  out += to_string(net.activation());
  out += "\",\n  \"structure\": [";
  const auto widths = net.structure();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(widths[i]);
  }
  out += "],\n  \"layers\": [\n";
  const auto& layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    out += "    {\n      \"weights\": [\n";
    for (Eigen::Index i = 0; i < l.fan_in(); ++i) {
      out += "        [";
      for (Eigen::Index j = 0; j < l.fan_out(); ++j) {
        if (j) out += ", ";
        out += format_double(l.weights(i, j));
      }
      out += i + 1 < l.fan_in() ? "],\n" : "]\n";
    }
    out += "      ],\n      \"thresholds\": [";
    for (Eigen::Index j = 0; j < l.thresholds.size(); ++j) {
      if (j) out += ", ";
      out += format_double(l.thresholds(j));
    }
    out += k + 1 < layers.size() ? "]\n    },\n" : "]\n    }\n";
  }
  out += "  ],\n  \"offset\": ";
  out += format_double(net.offset());
  out += "\n}\n";
  return out;
}

namespace {

[[noreturn]] void field_error(const std::string& source, const std::string& field, const std::string& what) {
  throw Error(source + ": field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& source, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) field_error(source, path + key, "missing");
  return obj.at(key);
}

double as_number(const json& v, const std::string& source, const std::string& field) {
  if (!v.is_number()) field_error(source, field, "expected a number");
  return v.get<double>();
}

}  // namespace

Network model_from_json(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(source + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw Error(source + ": model must be a JSON object");

  const auto& act = require(doc, "activation", source, "");
  if (!act.is_string()) field_error(source, "activation", "expected a string");
  Activation kind;
  try {
    kind = activation_from_string(act.get<std::string>());
  } catch (const Error& e) {
    field_error(source, "activation", e.what());
  }

  const auto& layers_json = require(doc, "layers", source, "");
  if (!layers_json.is_array() || layers_json.empty()) field_error(source, "layers", "expected a non-empty array");
  std::vector<Layer> layers;
  for (std::size_t k = 0; k < layers_json.size(); ++k) {
    const std::string base = "layers[" + std::to_string(k) + "].";
    const auto& lj = layers_json[k];
    const auto& wj = require(lj, "weights", source, base);
    if (!wj.is_array() || wj.empty() || !wj[0].is_array() || wj[0].empty())
      field_error(source, base + "weights", "expected a non-empty 2D array");
    const auto rows = Eigen::Index(wj.size());
    const auto cols = Eigen::Index(wj[0].size());
    Layer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd()};
    for (Eigen::Index i = 0; i < rows; ++i) {
      const std::string row = base + "weights[" + std::to_string(i) + "]";
      const auto& r = wj[std::size_t(i)];
      if (!r.is_array() || Eigen::Index(r.size()) != cols) field_error(source, row, "ragged row");
      for (Eigen::Index j = 0; j < cols; ++j)
        l.weights(i, j) = as_number(r[std::size_t(j)], source, row + "[" + std::to_string(j) + "]");
    }
    const auto& tj = require(lj, "thresholds", source, base);
    if (!tj.is_array() || Eigen::Index(tj.size()) != cols)
      field_error(source, base + "thresholds", "expected " + std::to_string(cols) + " entries");
    l.thresholds.resize(cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      l.thresholds(j) = as_number(tj[std::size_t(j)], source, base + "thresholds[" + std::to_string(j) + "]");
    layers.push_back(std::move(l));
  }

  double offset = 0.0;
  if (doc.contains("offset")) offset = as_number(doc["offset"], source, "offset");

  std::optional<Network> net;
  try {
    net.emplace(kind, std::move(layers), offset);
  } catch (const Error& e) {
    field_error(source, "layers", e.what());
  }

  if (doc.contains("structure")) {
    const auto& sj = doc["structure"];
    const auto widths = net->structure();
    bool ok = sj.is_array() && sj.size() == widths.size();
    for (std::size_t i = 0; ok && i < widths.size(); ++i)
      ok = sj[i].is_number_integer() && sj[i].get<Eigen::Index>() == widths[i];
    if (!ok) field_error(source, "structure", "does not match layer shapes");
  }
  return std::move(*net);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw Error(path.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(path.string() + ": cannot rename temporary file");
  }
}

Network load_model(const std::filesystem::path& path) {
  return model_from_json(read_file(path), path.string());
}

void save_model(const std::filesystem::path& path, const Network& net) {
  write_file_atomic(path, model_to_json(net));
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (Eigen::Index k = 0; k < data.dimension(); ++k) out += "x" + std::to_string(k + 1) + ",";
  out += "y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index k = 0; k < data.dimension(); ++k) out += format_double(data.inputs(i, k)) + ",";
    out += format_double(data.targets(i)) + "\n";
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) {
      header = false;
      columns = cells.size();
      if (columns < 2) throw Error(source + ": header needs at least one input column and a target");
      continue;
    }
    if (cells.size() != columns)
      throw Error(source + ": line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                  " columns");
    std::vector<double> values;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const char* begin = cells[c].c_str();
      char* stop = nullptr;
      errno = 0;
      const double v = std::strtod(begin, &stop);
      if (stop == begin || *stop != '\0' || errno == ERANGE || !std::isfinite(v))
        throw Error(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                    ": not a finite number");
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(source + ": no data rows");
  Eigen::MatrixXd x(Eigen::Index(rows.size()), Eigen::Index(columns - 1));
  Eigen::VectorXd y(Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c + 1 < columns; ++c) x(Eigen::Index(i), Eigen::Index(c)) = rows[i][c];
    y(Eigen::Index(i)) = rows[i].back();
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_csv(read_file(path), path.string());
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  write_file_atomic(path, dataset_to_csv(data));
}

namespace {

std::vector<double> parse_numbers(std::string_view text, const std::string& context) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const std::string cell(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    char* stop = nullptr;
    const double v = std::strtod(cell.c_str(), &stop);
    if (cell.empty() || *stop != '\0' || !std::isfinite(v))
      throw Error("domain '" + context + "': bad number '" + cell + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Domain parse_domain(std::string_view text, Eigen::Index default_dim) {
  const std::string context(text);
  if (text.starts_with("box:")) {
    std::vector<double> lo, hi;
    auto rest = text.substr(4);
    std::size_t start = 0;
    for (;;) {
      const auto semi = rest.find(';', start);
      const auto pair = parse_numbers(rest.substr(start, semi == rest.npos ? rest.npos : semi - start), context);
      if (pair.size() != 2) throw Error("domain '" + context + "': each box axis needs lo,hi");
      lo.push_back(pair[0]);
      hi.push_back(pair[1]);
      if (semi == rest.npos) break;
      start = semi + 1;
    }
    // A single pair with default_dim > 1 means the same interval on every axis.
    if (lo.size() == 1 && default_dim > 1) {
      lo.assign(std::size_t(default_dim), lo[0]);
      hi.assign(std::size_t(default_dim), hi[0]);
    }
    return Domain::box(Eigen::Map<Eigen::VectorXd>(lo.data(), Eigen::Index(lo.size())),
                       Eigen::Map<Eigen::VectorXd>(hi.data(), Eigen::Index(hi.size())));
  }
  if (text.starts_with("ball:")) {
    auto rest = text.substr(5);
    Eigen::Index dim = default_dim;
    if (const auto at = rest.find('@'); at != rest.npos) {
      const auto d = parse_numbers(rest.substr(at + 1), context);
      if (d.size() != 1 || d[0] < 1 || d[0] != std::floor(d[0]))
        throw Error("domain '" + context + "': bad ball dimension");
      dim = Eigen::Index(d[0]);
      rest = rest.substr(0, at);
    }
    const auto r = parse_numbers(rest, context);
    if (r.size() != 1) throw Error("domain '" + context + "': ball needs one radius");
    return Domain::ball(dim, r[0]);
  }
  throw Error("domain '" + context + "': expected box:lo,hi[;lo,hi...] or ball:r");
}

std::string report_to_json(const CanonReport& report) {
  json j;
  j["removed_dead"] = report.removed_dead;
  j["absorbed_saturated"] = report.absorbed_saturated;
  j["gadget_neurons_added"] = report.gadget_neurons_added;
  j["max_pointwise_deviation"] = report.max_pointwise_deviation;
  return j.dump(2) + "\n";
}

}  // namespace cfnn
