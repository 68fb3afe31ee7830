#include "oamsim/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace oamsim {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw error("cannot write " + file.string());
  out << text;
}

json setting_to_json(const MeasurementSetting& s) {
  json j;
  j["l1"] = s.l1;
  if (s.l2)
    j["l2"] = *s.l2;
  else
    j["l2"] = nullptr;
  j["phase_rad"] = s.phase;
  return j;
}

// --- minimal JSON-schema subset ------------------------------------------

bool type_matches(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") return value.is_number_integer();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  return false;
}

bool validate_node(const json& value, const json& schema, const std::string& where,
                   std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = where + ": " + msg;
    return false;
  };
  if (schema.contains("type")) {
    const auto& t = schema.at("type");
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(value, t.get<std::string>());
    } else {
      for (const auto& option : t)
        ok = ok || type_matches(value, option.get<std::string>());
    }
    if (!ok) return fail("unexpected type");
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& option : schema.at("enum")) ok = ok || option == value;
    if (!ok) return fail("value not in enum");
  }
  if (value.is_object()) {
    const json props =
        schema.contains("properties") ? schema.at("properties") : json::object();
    if (schema.contains("required"))
      for (const auto& key : schema.at("required"))
        if (!value.contains(key.get<std::string>()))
          return fail("missing required key " + key.get<std::string>());
    const bool strict = schema.contains("additionalProperties") &&
                        schema.at("additionalProperties").is_boolean() &&
                        !schema.at("additionalProperties").get<bool>();
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (props.contains(it.key())) {
        if (!validate_node(it.value(), props.at(it.key()), where + "/" + it.key(),
                           error))
          return false;
      } else if (strict) {
        return fail("unknown key " + it.key());
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    int i = 0;
    for (const auto& item : value) {
      if (!validate_node(item, schema.at("items"), where + "[" + std::to_string(i) + "]",
                         error))
        return false;
      ++i;
    }
  }
  return true;
}

}  // namespace

void write_pgm16(const ComplexField& f, const std::filesystem::path& file) {
  const GridSpec& g = f.grid();
  double peak = 0.0;
  for (const auto& a : f.data()) peak = std::max(peak, std::norm(a));
  std::string out;
  out += "P5\n# nx=" + std::to_string(g.nx) + " ny=" + std::to_string(g.ny) +
         " dx_m=" + fmt(g.dx) + " dy_m=" + fmt(g.dy) +
         " wavelength_m=" + fmt(g.wavelength) + "\n" + std::to_string(g.nx) + " " +
         std::to_string(g.ny) + "\n65535\n";
  out.reserve(out.size() + static_cast<size_t>(g.nx) * g.ny * 2);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double v = peak > 0.0 ? std::norm(f.at(ix, iy)) / peak : 0.0;
      const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
      out.push_back(static_cast<char>((q >> 8) & 0xFF));
      out.push_back(static_cast<char>(q & 0xFF));
    }
  write_text(file, out);
}

void write_field_csv(const ComplexField& f, const std::filesystem::path& file) {
  const GridSpec& g = f.grid();
  std::string out = "# nx=" + std::to_string(g.nx) + " ny=" + std::to_string(g.ny) +
                    " dx_m=" + fmt(g.dx) + " dy_m=" + fmt(g.dy) +
                    " wavelength_m=" + fmt(g.wavelength) + "\n";
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const cdouble a = f.at(ix, iy);
      if (ix) out += ',';
      out += fmt(a.real());
      out += ',';
      out += fmt(a.imag());
    }
    out += '\n';
  }
  write_text(file, out);
}

void write_spectrum_csv(const OamSpectrum& spec, const std::filesystem::path& file) {
  std::string out = "l,p,power,phase\n";
  for (const auto& e : spec.entries) {
    out += std::to_string(e.l) + "," + std::to_string(e.p) + "," +
           fmt(std::norm(e.amplitude)) + "," + fmt(std::arg(e.amplitude)) + "\n";
  }
  out += "# residual=" + fmt(spec.residual) + " waist_m=" + fmt(spec.waist) + "\n";
  write_text(file, out);
}

void write_counts_csv(std::span<const CountRecord> records, std::uint64_t seed,
                      const std::filesystem::path& file) {
  std::string out =
      "setting_a_l1,setting_a_l2,setting_a_phase_rad,"
      "setting_b_l1,setting_b_l2,setting_b_phase_rad,"
      "expected_rate,count,time_s,seed\n";
  for (const auto& r : records) {
    auto field = [](const MeasurementSetting& s) {
      std::string t = std::to_string(s.l1) + ",";
      t += s.l2 ? std::to_string(*s.l2) : std::string();
      t += ",";
      t += fmt(s.phase);
      return t;
    };
    out += field(r.setting_a) + "," + field(r.setting_b) + "," +
           fmt(r.expected_rate) + "," + std::to_string(r.count) + "," +
           fmt(r.integration_s) + "," + std::to_string(seed) + "\n";
  }
  write_text(file, out);
}

void write_transfer_json(const TransferMatrix& T, const std::filesystem::path& file) {
  json j;
  j["schema"] = "oamsim-transfer/1";
  j["l_values"] = T.l_values;
  j["p_max"] = T.p_max;
  j["channels"] = T.channels();
  j["channel_l"] = T.channel_l;
  j["column_power"] = T.column_power;
  j["residual"] = T.residual;
  j["spectrum_waist_m"] = T.spectrum_waist;
  j["detection_waist_m"] = T.detection_waist;
  json cols = json::array();
  for (int k = 0; k < T.n_slits(); ++k) {
    json rows = json::array();
    for (int r = 0; r < T.entries.rows(); ++r)
      rows.push_back({T.entries(r, k).real(), T.entries(r, k).imag()});
    cols.push_back(rows);
  }
  j["entries"] = cols;
  json det = json::array();
  for (int k = 0; k < T.n_slits(); ++k) {
    json rows = json::array();
    for (int r = 0; r < T.detector_amps.rows(); ++r)
      rows.push_back({T.detector_amps(r, k).real(), T.detector_amps(r, k).imag()});
    det.push_back(rows);
  }
  j["detector_amps"] = det;
  write_text(file, j.dump(2) + "\n");
}

void write_witness_json(const WitnessOutcome& outcome, std::uint64_t seed,
                        const std::filesystem::path& file) {
  json j;
  j["schema"] = "oamsim-witness/1";
  j["target_lambda"] = outcome.report.target.lambda;
  j["fidelity"] = outcome.report.fidelity;
  j["sigma_fidelity"] = outcome.report.sigma_fidelity;
  json bounds = json::object();
  for (size_t d = 0; d < outcome.report.bounds.size(); ++d)
    bounds[std::to_string(d + 1)] = outcome.report.bounds[d];
  j["bounds"] = bounds;
  j["significance"] = outcome.report.significance;
  j["certified_dimension"] = outcome.report.certified_dimension;
  j["channels"] = outcome.estimate.channels;
  json vis = json::array();
  for (const auto& [key, fit] : outcome.visibilities.fringes) {
    json v;
    v["la"] = key.first;
    v["lb"] = key.second;
    v["visibility"] = fit.visibility;
    v["sigma"] = fit.sigma_visibility;
    v["offset_rad"] = fit.offset;
    vis.push_back(v);
  }
  j["visibilities"] = vis;
  json pops = json::array();
  for (const auto& [key, p] : outcome.visibilities.populations)
    pops.push_back({{"la", key.first}, {"lb", key.second}, {"population", p}});
  j["populations"] = pops;
  json warns = json::array();
  for (const auto& w : outcome.warnings) warns.push_back(w.code);
  j["warnings"] = warns;
  j["seed"] = seed;
  write_text(file, j.dump(2) + "\n");
}

void write_chsh_json(const ChshSettings& settings, const ChshResult& result,
                     std::uint64_t seed, const std::filesystem::path& file) {
  json j;
  j["schema"] = "oamsim-chsh/1";
  j["subspace"] = {settings.la, settings.lb};
  j["settings_rad"] = {{"alpha", settings.alpha},
                       {"alpha_prime", settings.alpha_prime},
                       {"beta", settings.beta},
                       {"beta_prime", settings.beta_prime}};
  j["E"] = result.E;
  j["S"] = result.S;
  j["sigma"] = result.sigma;
  j["seed"] = seed;
  write_text(file, j.dump(2) + "\n");
}

bool validate_json(const std::string& json_text, const std::string& schema_text,
                   std::string* error) {
  json value, schema;
  try {
    value = json::parse(json_text);
  } catch (const json::exception& e) {
    if (error) *error = std::string("invalid JSON: ") + e.what();
    return false;
  }
  try {
    schema = json::parse(schema_text);
  } catch (const json::exception& e) {
    if (error) *error = std::string("invalid schema: ") + e.what();
    return false;
  }
  return validate_node(value, schema, "$", error);
}

bool validate_json_file(const std::filesystem::path& json_file,
                        const std::filesystem::path& schema_file,
                        std::string* error) {
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw oamsim::error("cannot open " + p.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  return validate_json(slurp(json_file), slurp(schema_file), error);
}

std::string error_json(const std::string& type, const std::string& message) {
  json j;
  j["error"] = {{"type", type}, {"message", message}};
  return j.dump();
}

}  // namespace oamsim
