#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icta/bias_noise.hpp"
#include "icta/calibration.hpp"
#include "icta/linewidth_fit.hpp"
#include "icta/physics.hpp"
#include "json.hpp"

namespace icta::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "ICTA_OUTPUT_DIR";

// ---- CSV ------------------------------------------------------------------

// Numeric columns keyed by header name, in file order.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(std::string_view name) const;
  bool has(std::string_view name) const;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Header row required, '#' comment lines and blank lines skipped, '.' as
// decimal point. Missing required columns and malformed numbers raise
// ParseError with the offending line.
CsvTable parse_csv(std::istream& in, const std::string& source,
                   const std::vector<std::string>& required);
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required);

// `freq_mhz,value` spectrum.
LoadSpectrum read_load_spectrum(const std::filesystem::path& path, LoadLabel label,
                                double temperature_k = 0.0);
// `wj_mhz,psd[,sigma]` linewidth data.
SpectrumRecord read_linewidth_csv(const std::filesystem::path& path, double probe_omega = 0.0);

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

// Full precision; NaN written as "NA".
void write_csv(std::ostream& out, const std::vector<NamedColumn>& columns);

// ---- devices and distributions --------------------------------------------

// Device parameters in CLI units. Configs keep these values verbatim so that a
// results document's echo reproduces a run exactly.
struct DeviceSpec {
  double omega_s_mhz = 0.0;
  double omega_i_mhz = 0.0;
  double kappa_s_mhz = 0.0;
  double kappa_i_mhz = 0.0;
  double z_s_ohm = 0.0;
  double z_i_ohm = 0.0;
  double ej_mhz = 0.0;
  bool degenerate = false;

  DeviceParams params() const;
};

std::vector<std::string> device_preset_names();
// "sample_A" / "sample_B"; E_J is left at 0 (set through Xi).
DeviceSpec device_preset(const std::string& name);

Json device_to_json(const DeviceSpec& d);
// Validates the parameters; errors name the field path.
DeviceSpec device_from_json(const Json& j, const std::string& path = "device");

// One Lorentzian component in MHz; weights need not be normalized.
struct LineSpec {
  double weight = 1.0;
  double center_mhz = 0.0;
  double fwhm_mhz = 0.0;
};

std::vector<LorentzianComponent> to_components(const std::vector<LineSpec>& lines);
std::vector<LineSpec> from_components(const std::vector<LorentzianComponent>& comps);

std::vector<std::string> distribution_preset_names();
// "zero", "low", "medium", "high".
std::vector<LineSpec> distribution_preset(const std::string& name);

// `lorentzian:FWHM[,center[,weight]]` joined with '+', a preset name, or a
// JSON file holding a "distribution" object (as written by fit-linewidth).
std::vector<LineSpec> parse_distribution(const std::string& spec, const std::string& path = "dist");

Json distribution_to_json(const std::vector<LineSpec>& lines);
std::vector<LineSpec> distribution_from_json(const Json& j, const std::string& path = "dist");

// `start:stop:n` (n >= 1, start <= stop) or a comma-separated list.
std::vector<double> parse_grid(const std::string& spec, const std::string& path);

// ---- results documents ----------------------------------------------------

struct Table {
  std::string name;
  std::vector<NamedColumn> columns;
};

struct InputDigest {
  std::string role;
  std::string path;
  std::string sha256;
};

struct ResultsDocument {
  int schema_version = kSchemaVersion;
  std::string command;
  Json config = Json::object();
  Json summary = Json::object();
  std::vector<Table> tables;
  std::vector<std::string> warnings;
  std::string timestamp;
  std::string tool_version = kToolVersion;
  std::vector<InputDigest> inputs;

  const Table& table(std::string_view name) const;
};

Json to_json(const ResultsDocument& doc);
// Validates structure and schema version; throws ParseError.
ResultsDocument document_from_json(const Json& j, const std::string& source = "document");

std::string serialize(const ResultsDocument& doc);
// Writes the document; with `csv_tables`, also <stem>.<table>.csv beside it.
void write_document(const ResultsDocument& doc, const std::filesystem::path& path,
                    bool csv_tables = false);
ResultsDocument read_document(const std::filesystem::path& path);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

// UTC ISO-8601 timestamp.
std::string utc_timestamp();

// `out` when given; otherwise `default_name` under $ICTA_OUTPUT_DIR, or under
// the working directory when unset.
std::filesystem::path resolve_output_path(const std::string& out, const std::string& default_name);

}  // namespace icta::io
