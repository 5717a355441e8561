#include "pingloop/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pingloop {

namespace {

using nlohmann::json;

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error(tmp + ": cannot open for writing");
    f << content;
    f.flush();
    if (!f) throw io_error(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    std::remove(tmp.c_str());
    throw io_error(path + ": rename failed: " + std::strerror(err));
  }
}

json parse_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error(path + ": cannot open");
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw io_error(path + ": invalid JSON");
  return j;
}

double require_number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw io_error(path + ": missing or non-numeric field '" + key + "'");
  return j[key].get<double>();
}

Point3 parse_point(const json& j, const std::string& path, const char* field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number())
    throw io_error(path + ": field '" + field + "' must be [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::vector<double> parse_number_array(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key) || !j[key].is_array())
    throw io_error(path + ": missing array field '" + key + "'");
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw io_error(path + ": non-numeric value in '" + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

json point_to_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

const char* status_name(ReconStatus s) {
  switch (s) {
    case ReconStatus::complete: return "complete";
    case ReconStatus::partial: return "partial";
    case ReconStatus::core_not_found: return "core_not_found";
  }
  return "core_not_found";
}

ReconStatus status_from(const std::string& s, const std::string& path) {
  if (s == "complete") return ReconStatus::complete;
  if (s == "partial") return ReconStatus::partial;
  if (s == "core_not_found") return ReconStatus::core_not_found;
  throw io_error(path + ": unknown status '" + s + "'");
}

const char* kind_name(PathKind k) { return k == PathKind::ping ? "ping" : "loop"; }

PathKind kind_from(const std::string& s, const std::string& path) {
  if (s == "ping") return PathKind::ping;
  if (s == "loop") return PathKind::loop;
  throw io_error(path + ": unknown path kind '" + s + "'");
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TotalConfiguration read_scene(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object()) throw io_error(path + ": scene must be a JSON object");
  if (!j.contains("sensor")) throw io_error(path + ": missing field 'sensor'");
  if (!j.contains("points") || !j["points"].is_array())
    throw io_error(path + ": missing array field 'points'");

  TotalConfiguration config;
  config.sensor = parse_point(j["sensor"], path, "sensor");
  for (const auto& p : j["points"]) config.points.push_back(parse_point(p, path, "points"));
  config.reflectivity = parse_number_array(j, path, "reflectivity");
  config.diameter_m = parse_number_array(j, path, "diameter_m");
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw io_error(path + ": " + e.what());
  }
  return config;
}

void write_scene(const std::string& path, const TotalConfiguration& config) {
  json j;
  j["sensor"] = point_to_json(config.sensor);
  j["points"] = json::array();
  for (const auto& p : config.points) j["points"].push_back(point_to_json(p));
  j["reflectivity"] = config.reflectivity;
  j["diameter_m"] = config.diameter_m;
  atomic_write(path, j.dump(2) + "\n");
}

Histogram read_histogram(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object()) throw io_error(path + ": histogram must be a JSON object");
  Histogram h;
  h.t0 = require_number(j, path, "t0_ps") * 1e-12;
  h.bin_width = require_number(j, path, "bin_ps") * 1e-12;
  if (!(h.bin_width > 0.0)) throw io_error(path + ": bin_ps must be positive");
  h.counts = parse_number_array(j, path, "counts");
  if (h.counts.empty()) throw io_error(path + ": counts must be non-empty");
  for (double c : h.counts)
    if (c < 0.0) throw io_error(path + ": negative count");
  return h;
}

void write_histogram(const std::string& path, const Histogram& h) {
  json j;
  j["t0_ps"] = h.t0 * 1e12;
  j["bin_ps"] = h.bin_width * 1e12;
  j["counts"] = h.counts;
  atomic_write(path, j.dump() + "\n");
}

DistanceList read_distances(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error(path + ": cannot open");
  std::vector<double> lengths;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    const auto end = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(start, end - start + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw io_error(path + ": line " + std::to_string(line_no) + ": not a number");
    }
    if (used != token.size())
      throw io_error(path + ": line " + std::to_string(line_no) + ": trailing characters");
    if (!(v > 0.0))
      throw io_error(path + ": line " + std::to_string(line_no) + ": length must be positive");
    lengths.push_back(v);
  }
  return DistanceList::from_lengths(std::move(lengths));
}

void write_distances(const std::string& path, const DistanceList& beta) {
  std::string out;
  for (const auto& e : beta.entries) {
    out += format_value(e.length);
    out += '\n';
  }
  atomic_write(path, out);
}

Reconstruction read_reconstruction(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object()) throw io_error(path + ": reconstruction must be a JSON object");
  Reconstruction r;
  if (!j.contains("points") || !j["points"].is_array())
    throw io_error(path + ": missing array field 'points'");
  for (const auto& p : j["points"]) r.points.push_back(parse_point(p, path, "points"));
  if (!j.contains("status") || !j["status"].is_string())
    throw io_error(path + ": missing string field 'status'");
  r.status = status_from(j["status"].get<std::string>(), path);
  if (j.contains("consumed")) {
    if (!j["consumed"].is_array()) throw io_error(path + ": 'consumed' must be an array");
    for (const auto& c : j["consumed"]) {
      ConsumedEntry e;
      e.entry = static_cast<std::size_t>(require_number(c, path, "entry"));
      if (!c.contains("kind") || !c["kind"].is_string())
        throw io_error(path + ": consumed entry missing 'kind'");
      e.kind = kind_from(c["kind"].get<std::string>(), path);
      e.i = static_cast<int>(require_number(c, path, "i"));
      e.j = c.contains("j") && c["j"].is_number() ? c["j"].get<int>() : -1;
      e.fitted_length = require_number(c, path, "fitted_m");
      e.residual = require_number(c, path, "residual_m");
      r.consumed.push_back(e);
    }
  }
  if (j.contains("unplaced")) {
    if (!j["unplaced"].is_array()) throw io_error(path + ": 'unplaced' must be an array");
    for (const auto& u : j["unplaced"]) {
      if (!u.is_number()) throw io_error(path + ": non-numeric unplaced entry id");
      r.unplaced.push_back(u.get<std::size_t>());
    }
  }
  if (j.contains("diagnostics") && j["diagnostics"].is_object()) {
    const auto& d = j["diagnostics"];
    r.diagnostics.core_attempts = static_cast<long long>(require_number(d, path, "core_attempts"));
    r.diagnostics.vertex_attempts =
        static_cast<long long>(require_number(d, path, "vertex_attempts"));
    r.diagnostics.max_residual = require_number(d, path, "max_residual_m");
  }
  return r;
}

void write_reconstruction(const std::string& path, const Reconstruction& r) {
  json j;
  j["points"] = json::array();
  for (const auto& p : r.points) j["points"].push_back(point_to_json(p));
  j["status"] = status_name(r.status);
  j["consumed"] = json::array();
  for (const auto& c : r.consumed) {
    json e;
    e["entry"] = c.entry;
    e["kind"] = kind_name(c.kind);
    e["i"] = c.i;
    if (c.kind == PathKind::loop) e["j"] = c.j;
    e["fitted_m"] = c.fitted_length;
    e["residual_m"] = c.residual;
    j["consumed"].push_back(e);
  }
  j["unplaced"] = r.unplaced;
  j["diagnostics"] = {{"core_attempts", r.diagnostics.core_attempts},
                      {"vertex_attempts", r.diagnostics.vertex_attempts},
                      {"max_residual_m", r.diagnostics.max_residual}};
  atomic_write(path, j.dump(2) + "\n");
}

void write_sweep(const std::string& csv_path, const SweepTable& table) {
  std::string csv = "n,diameter_m,trials,successes,probability\n";
  for (const auto& c : table.cells) {
    csv += std::to_string(c.n_points);
    csv += ',';
    csv += format_value(c.diameter_m);
    csv += ',';
    csv += std::to_string(c.trials);
    csv += ',';
    csv += std::to_string(c.successes);
    csv += ',';
    csv += format_value(c.probability);
    csv += '\n';
  }
  atomic_write(csv_path, csv);

  json j;
  j["n_values"] = table.n_values;
  j["diameters_m"] = table.diameters_m;
  j["trials_per_cell"] = table.trials_per_cell;
  j["seed"] = table.seed;
  j["cells"] = json::array();
  for (const auto& c : table.cells)
    j["cells"].push_back({{"n", c.n_points},
                          {"diameter_m", c.diameter_m},
                          {"trials", c.trials},
                          {"successes", c.successes},
                          {"probability", c.probability}});
  const auto slash = csv_path.find_last_of('/');
  const auto dot = csv_path.find_last_of('.');
  const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash))
                               ? csv_path.substr(0, dot)
                               : csv_path;
  atomic_write(stem + ".json", j.dump(2) + "\n");
}

SweepTable read_sweep_sidecar(const std::string& json_path) {
  const json j = parse_file(json_path);
  if (!j.is_object()) throw io_error(json_path + ": sweep sidecar must be a JSON object");
  SweepTable t;
  if (!j.contains("n_values") || !j["n_values"].is_array())
    throw io_error(json_path + ": missing array field 'n_values'");
  for (const auto& v : j["n_values"]) t.n_values.push_back(v.get<int>());
  t.diameters_m = parse_number_array(j, json_path, "diameters_m");
  t.trials_per_cell = static_cast<int>(require_number(j, json_path, "trials_per_cell"));
  if (!j.contains("seed") || !j["seed"].is_number())
    throw io_error(json_path + ": missing field 'seed'");
  t.seed = j["seed"].get<std::uint64_t>();
  if (!j.contains("cells") || !j["cells"].is_array())
    throw io_error(json_path + ": missing array field 'cells'");
  for (const auto& c : j["cells"]) {
    SweepCell cell;
    cell.n_points = static_cast<int>(require_number(c, json_path, "n"));
    cell.diameter_m = require_number(c, json_path, "diameter_m");
    cell.trials = static_cast<int>(require_number(c, json_path, "trials"));
    cell.successes = static_cast<int>(require_number(c, json_path, "successes"));
    cell.probability = require_number(c, json_path, "probability");
    t.cells.push_back(cell);
  }
  if (t.cells.size() != t.n_values.size() * t.diameters_m.size())
    throw io_error(json_path + ": cell count does not match axes");
  return t;
}

}  // namespace pingloop
