#include "icta/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "icta/error.hpp"
#include "icta/units.hpp"

namespace icta::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Locale-independent strict parse of a whole token.
std::optional<double> to_double(std::string_view tok) {
  std::string t = trim(tok);
  if (t.empty()) return std::nullopt;
  if (t == "NA" || t == "nan" || t == "NaN") return std::numeric_limits<double>::quiet_NaN();
  const char* first = t.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

double number_or_throw(const std::string& tok, const std::string& path) {
  const auto v = to_double(tok);
  if (!v || !std::isfinite(*v)) throw ValidationError(path, "not a finite number: '" + tok + "'");
  return *v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double require_number(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ValidationError(path + "." + key, "missing");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(path + "." + key, "must be a number");
  return v.get<double>();
}

Json column_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
  return a;
}

}  // namespace

// ---- CSV ------------------------------------------------------------------

const std::vector<double>& CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return columns[k];
  throw ParseError("csv", 0, "no column '" + std::string(name) + "'");
}

bool CsvTable::has(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable parse_csv(std::istream& in, const std::string& source,
                   const std::vector<std::string>& required) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto fields = split(s, ',');
    if (!have_header) {
      for (const auto& f : fields)
        if (f.empty()) throw ParseError(source, lineno, "empty column name in header");
      t.header = fields;
      for (const auto& r : required)
        if (!t.has(r)) throw ParseError(source, lineno, "missing required column '" + r + "'");
      t.columns.assign(t.header.size(), {});
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError(source, lineno,
                       "expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto v = to_double(fields[k]);
      if (!v) throw ParseError(source, lineno, "column '" + t.header[k] + "': not a number '" +
                                                   fields[k] + "'");
      t.columns[k].push_back(*v);
    }
  }
  if (!have_header) throw ParseError(source, lineno, "missing header row");
  if (t.rows() == 0) throw ParseError(source, lineno, "no data rows");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in, path.string(), required);
}

LoadSpectrum read_load_spectrum(const std::filesystem::path& path, LoadLabel label,
                                double temperature_k) {
  const auto t = read_csv(path, {"freq_mhz", "value"});
  LoadSpectrum s;
  s.label = label;
  s.temperature = temperature_k;
  for (double f : t.column("freq_mhz")) s.omega.push_back(units::mhz_to_rad(f));
  s.power = t.column("value");
  return s;
}

SpectrumRecord read_linewidth_csv(const std::filesystem::path& path, double probe_omega) {
  const auto t = read_csv(path, {"wj_mhz", "psd"});
  SpectrumRecord r;
  for (double f : t.column("wj_mhz")) r.omega_j.push_back(units::mhz_to_rad(f));
  r.psd = t.column("psd");
  if (t.has("sigma")) r.sigma = t.column("sigma");
  r.probe_omega = probe_omega;
  r.label = path.filename().string();
  return r;
}

void write_csv(std::ostream& out, const std::vector<NamedColumn>& columns) {
  std::size_t rows = 0;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out << (k ? "," : "") << columns[k].name;
    rows = std::max(rows, columns[k].values.size());
  }
  out << "\n";
  char buf[64];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (k) out << ",";
      if (r >= columns[k].values.size()) continue;
      const double v = columns[k].values[r];
      if (std::isnan(v)) {
        out << "NA";
      } else {
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        out.write(buf, res.ptr - buf);
      }
    }
    out << "\n";
  }
}

// ---- devices and distributions --------------------------------------------

DeviceParams DeviceSpec::params() const {
  DeviceParams p;
  p.omega_s = units::mhz_to_rad(omega_s_mhz);
  p.omega_i = units::mhz_to_rad(omega_i_mhz);
  p.kappa_s = units::mhz_to_rad(kappa_s_mhz);
  p.kappa_i = units::mhz_to_rad(kappa_i_mhz);
  p.z_s = z_s_ohm;
  p.z_i = z_i_ohm;
  p.josephson_energy = units::mhz_to_joule(ej_mhz);
  p.degenerate = degenerate;
  return p;
}

std::vector<std::string> device_preset_names() { return {"sample_A", "sample_B"}; }

DeviceSpec device_preset(const std::string& name) {
  if (name == "sample_A") return {4800, 6200, 96, 226, 400, 400, 0.0, false};
  if (name == "sample_B") return {4450, 4450, 185, 185, 80, 80, 0.0, true};
  throw ValidationError("device", "unknown preset '" + name + "' (sample_A, sample_B)");
}

Json device_to_json(const DeviceSpec& d) {
  Json j;
  j["omega_s_mhz"] = d.omega_s_mhz;
  j["omega_i_mhz"] = d.omega_i_mhz;
  j["kappa_s_mhz"] = d.kappa_s_mhz;
  j["kappa_i_mhz"] = d.kappa_i_mhz;
  j["z_s_ohm"] = d.z_s_ohm;
  j["z_i_ohm"] = d.z_i_ohm;
  j["ej_mhz"] = d.ej_mhz;
  j["degenerate"] = d.degenerate;
  return j;
}

DeviceSpec device_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "must be an object");
  DeviceSpec d;
  if (j.contains("degenerate")) {
    if (!j["degenerate"].is_boolean()) throw ValidationError(path + ".degenerate", "must be a boolean");
    d.degenerate = j["degenerate"].get<bool>();
  }
  d.omega_s_mhz = require_number(j, "omega_s_mhz", path);
  d.kappa_s_mhz = require_number(j, "kappa_s_mhz", path);
  d.z_s_ohm = require_number(j, "z_s_ohm", path);
  auto idler = [&](const char* key, double fallback) {
    return d.degenerate && !j.contains(key) ? fallback : require_number(j, key, path);
  };
  d.omega_i_mhz = idler("omega_i_mhz", d.omega_s_mhz);
  d.kappa_i_mhz = idler("kappa_i_mhz", d.kappa_s_mhz);
  d.z_i_ohm = idler("z_i_ohm", d.z_s_ohm);
  if (j.contains("ej_mhz")) d.ej_mhz = require_number(j, "ej_mhz", path);
  try {
    d.params().validate();
  } catch (const DomainError& e) {
    throw ValidationError(path, e.what());
  }
  return d;
}

std::vector<LorentzianComponent> to_components(const std::vector<LineSpec>& lines) {
  std::vector<LorentzianComponent> out;
  for (const auto& l : lines)
    out.push_back({l.weight, units::mhz_to_rad(l.center_mhz), units::mhz_to_rad(l.fwhm_mhz)});
  return out;
}

std::vector<LineSpec> from_components(const std::vector<LorentzianComponent>& comps) {
  std::vector<LineSpec> out;
  for (const auto& c : comps)
    out.push_back({c.weight, units::rad_to_mhz(c.center), units::rad_to_mhz(c.fwhm)});
  return out;
}

std::vector<std::string> distribution_preset_names() { return {"zero", "low", "medium", "high"}; }

std::vector<LineSpec> distribution_preset(const std::string& name) {
  if (name == "zero") return {{1.0, 0.0, 0.0}};
  if (name == "low") return {{1.0, 0.0, 5.6}};
  if (name == "medium") return {{0.5, 0.0, 28.5}, {0.25, 48.0, 45.8}, {0.25, -48.0, 45.8}};
  if (name == "high") return {{1.0, 0.0, 73.8}};
  throw ValidationError("dist", "unknown preset '" + name + "' (zero, low, medium, high)");
}

Json distribution_to_json(const std::vector<LineSpec>& lines) {
  Json arr = Json::array();
  for (const auto& l : lines)
    arr.push_back({{"weight", l.weight}, {"center_mhz", l.center_mhz}, {"fwhm_mhz", l.fwhm_mhz}});
  return Json{{"components", arr}};
}

namespace {

std::vector<LineSpec> checked(std::vector<LineSpec> lines, const std::string& path) {
  if (lines.empty()) throw ValidationError(path, "no components");
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& l = lines[k];
    const std::string p = path + "[" + std::to_string(k) + "]";
    if (!(l.weight > 0.0) || !std::isfinite(l.weight)) throw ValidationError(p, "weight must be positive");
    if (!(l.fwhm_mhz >= 0.0) || !std::isfinite(l.fwhm_mhz)) throw ValidationError(p, "FWHM must be non-negative");
    if (!std::isfinite(l.center_mhz)) throw ValidationError(p, "center must be finite");
  }
  return lines;
}

}  // namespace

std::vector<LineSpec> distribution_from_json(const Json& j, const std::string& path) {
  const Json* obj = &j;
  if (j.is_object() && j.contains("distribution")) obj = &j.at("distribution");
  else if (j.is_object() && j.contains("summary") && j["summary"].is_object() &&
           j["summary"].contains("distribution"))
    obj = &j["summary"]["distribution"];
  if (!obj->is_object() || !obj->contains("components") || !obj->at("components").is_array())
    throw ValidationError(path, "expected an object with a 'components' array");
  std::vector<LineSpec> lines;
  std::size_t k = 0;
  for (const auto& c : obj->at("components")) {
    const std::string p = path + ".components[" + std::to_string(k++) + "]";
    if (!c.is_object()) throw ValidationError(p, "must be an object");
    LineSpec l;
    l.weight = c.contains("weight") ? require_number(c, "weight", p) : 1.0;
    l.center_mhz = c.contains("center_mhz") ? require_number(c, "center_mhz", p) : 0.0;
    l.fwhm_mhz = require_number(c, "fwhm_mhz", p);
    lines.push_back(l);
  }
  return checked(std::move(lines), path);
}

std::vector<LineSpec> parse_distribution(const std::string& spec, const std::string& path) {
  const std::string s = trim(spec);
  if (s.empty()) throw ValidationError(path, "empty distribution");
  const auto names = distribution_preset_names();
  if (std::find(names.begin(), names.end(), s) != names.end()) return distribution_preset(s);
  if (s.rfind("lorentzian:", 0) == 0) {
    std::vector<LineSpec> lines;
    std::size_t k = 0;
    for (const auto& part : split(s, '+')) {
      const std::string p = path + "[" + std::to_string(k++) + "]";
      std::string body = part;
      if (body.rfind("lorentzian:", 0) == 0) body = body.substr(11);
      const auto fields = split(body, ',');
      if (fields.empty() || fields.size() > 3)
        throw ValidationError(p, "expected lorentzian:FWHM[,center[,weight]]");
      LineSpec l;
      l.fwhm_mhz = number_or_throw(fields[0], p + ".fwhm");
      if (fields.size() > 1) l.center_mhz = number_or_throw(fields[1], p + ".center");
      if (fields.size() > 2) l.weight = number_or_throw(fields[2], p + ".weight");
      lines.push_back(l);
    }
    return checked(std::move(lines), path);
  }
  const std::filesystem::path file(s);
  if (!std::filesystem::exists(file))
    throw ValidationError(path, "'" + s + "' is neither a preset, a lorentzian: spec nor a file");
  Json j;
  try {
    j = Json::parse(read_file(file));
  } catch (const Json::parse_error& e) {
    throw ParseError(s, 0, e.what());
  }
  return distribution_from_json(j, path);
}

std::vector<double> parse_grid(const std::string& spec, const std::string& path) {
  const std::string s = trim(spec);
  if (s.empty()) throw ValidationError(path, "empty grid");
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    const auto f = split(s, ':');
    if (f.size() != 3) throw ValidationError(path, "expected start:stop:n");
    const double a = number_or_throw(f[0], path), b = number_or_throw(f[1], path);
    const auto n = to_double(f[2]);
    if (!n || *n < 1 || *n != std::floor(*n) || *n > 1e7)
      throw ValidationError(path, "point count must be a positive integer");
    const auto count = static_cast<std::size_t>(*n);
    if (count == 1) {
      if (a != b) throw ValidationError(path, "a single-point grid needs start == stop");
      return {a};
    }
    if (!(a < b)) throw ValidationError(path, "start must be below stop");
    for (std::size_t k = 0; k < count; ++k)
      out.push_back(k + 1 == count ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
    return out;
  }
  for (const auto& tok : split(s, ',')) out.push_back(number_or_throw(tok, path));
  for (std::size_t k = 1; k < out.size(); ++k)
    if (!(out[k] > out[k - 1])) throw ValidationError(path, "grid must be strictly increasing");
  return out;
}

// ---- results documents ----------------------------------------------------

const Table& ResultsDocument::table(std::string_view name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw Error("no table '" + std::string(name) + "'");
}

Json to_json(const ResultsDocument& doc) {
  Json j;
  j["schema_version"] = doc.schema_version;
  j["command"] = doc.command;
  j["config"] = doc.config;
  j["summary"] = doc.summary;
  Json tables = Json::object();
  for (const auto& t : doc.tables) {
    Json cols = Json::object();
    for (const auto& c : t.columns) cols[c.name] = column_json(c.values);
    tables[t.name] = cols;
  }
  j["tables"] = tables;
  j["warnings"] = doc.warnings;
  Json inputs = Json::array();
  for (const auto& in : doc.inputs)
    inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  j["provenance"] = {{"timestamp", doc.timestamp},
                     {"tool_version", doc.tool_version},
                     {"inputs", inputs}};
  return j;
}

ResultsDocument document_from_json(const Json& j, const std::string& source) {
  auto fail = [&](const std::string& what) -> ParseError { return ParseError(source, 0, what); };
  if (!j.is_object()) throw fail("document must be an object");
  for (const char* key : {"schema_version", "command", "config", "summary", "tables", "warnings", "provenance"})
    if (!j.contains(key)) throw fail(std::string("missing field '") + key + "'");
  ResultsDocument doc;
  if (!j["schema_version"].is_number_integer()) throw fail("schema_version must be an integer");
  doc.schema_version = j["schema_version"].get<int>();
  if (doc.schema_version != kSchemaVersion)
    throw fail("unsupported schema_version " + std::to_string(doc.schema_version));
  if (!j["command"].is_string()) throw fail("command must be a string");
  doc.command = j["command"].get<std::string>();
  doc.config = j["config"];
  doc.summary = j["summary"];
  if (!doc.summary.is_object()) throw fail("summary must be an object");
  if (!j["tables"].is_object()) throw fail("tables must be an object");
  for (const auto& [name, cols] : j["tables"].items()) {
    if (!cols.is_object()) throw fail("table '" + name + "' must be an object");
    Table t{name, {}};
    std::size_t rows = 0;
    bool first = true;
    for (const auto& [cname, arr] : cols.items()) {
      if (!arr.is_array()) throw fail("column '" + name + "." + cname + "' must be an array");
      NamedColumn c{cname, {}};
      for (const auto& v : arr) {
        if (v.is_null()) c.values.push_back(std::numeric_limits<double>::quiet_NaN());
        else if (v.is_number()) c.values.push_back(v.get<double>());
        else throw fail("column '" + name + "." + cname + "' holds a non-number");
      }
      if (!first && c.values.size() != rows) throw fail("ragged table '" + name + "'");
      rows = c.values.size();
      first = false;
      t.columns.push_back(std::move(c));
    }
    doc.tables.push_back(std::move(t));
  }
  for (const auto& w : j["warnings"]) doc.warnings.push_back(w.get<std::string>());
  const auto& prov = j["provenance"];
  if (!prov.is_object() || !prov.contains("timestamp") || !prov.contains("tool_version") ||
      !prov.contains("inputs"))
    throw fail("incomplete provenance");
  doc.timestamp = prov["timestamp"].get<std::string>();
  doc.tool_version = prov["tool_version"].get<std::string>();
  for (const auto& in : prov["inputs"])
    doc.inputs.push_back({in.at("role").get<std::string>(), in.at("path").get<std::string>(),
                          in.at("sha256").get<std::string>()});
  return doc;
}

std::string serialize(const ResultsDocument& doc) { return to_json(doc).dump(2) + "\n"; }

void write_document(const ResultsDocument& doc, const std::filesystem::path& path, bool csv_tables) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize(doc);
    if (!out) throw IoError("write failed: " + path.string());
  }
  if (!csv_tables) return;
  for (const auto& t : doc.tables) {
    auto csv = path;
    csv.replace_extension("." + t.name + ".csv");
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw IoError("cannot write " + csv.string());
    write_csv(out, t.columns);
  }
}

ResultsDocument read_document(const std::filesystem::path& path) {
  try {
    return document_from_json(Json::parse(read_file(path)), path.string());
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path resolve_output_path(const std::string& out, const std::string& default_name) {
  if (!out.empty()) return out;
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir)
    return std::filesystem::path(dir) / default_name;
  return default_name;
}

}  // namespace icta::io
