#include "oamsim/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include "oamsim/io.hpp"

namespace oamsim {

namespace {

using nlohmann::json;

constexpr const char* kSchemaVersion = "oamsim-config/1";

json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw config_error("cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("invalid JSON in " + file.string() + ": " + e.what());
  }
  return j;
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw config_error(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw config_error(std::string(key) + " must be an integer");
  return j.at(key).get<int>();
}

}  // namespace

WitnessExperimentConfig RunConfig::witness_config() const {
  WitnessExperimentConfig c;
  c.ctx = ctx;
  c.slits = slits;
  c.state = state;
  c.white = white;
  c.dephase = dephase;
  c.rate_pairs_per_s = rate_pairs_per_s;
  c.integration_s = integration_s;
  c.fringe_steps = fringe_steps;
  c.mc_trials = mc_trials;
  c.seed = seed;
  return c;
}

ChshExperimentConfig RunConfig::chsh_config() const {
  ChshExperimentConfig c;
  c.ctx = ctx;
  c.slits = slits;
  c.state = state;
  c.white = white;
  c.dephase = dephase;
  c.settings = chsh;
  c.rate_pairs_per_s = rate_pairs_per_s;
  c.integration_s = integration_s;
  c.mc_trials = mc_trials;
  c.seed = seed;
  return c;
}

std::string config_schema_version() { return kSchemaVersion; }

RunConfig parse_config(const std::string& json_text) {
  // structural validation first: types and unknown-key rejection
  {
    std::string err;
    const auto schema_file = find_data_file("schemas/config.schema.json");
    std::ifstream in(schema_file);
    std::string schema((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
    if (!validate_json(json_text, schema, &err))
      throw config_error("config rejected: " + err);
  }

  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("invalid JSON: ") + e.what());
  }
  if (j.at("schema").get<std::string>() != kSchemaVersion)
    throw config_error("unsupported config schema: " +
                       j.at("schema").get<std::string>());

  RunConfig cfg;
  double wavelength = 810.0e-9;

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    const int n = get_int(g, "n", 1024);
    const double window = get_num(g, "window_m", 8.0e-3);
    wavelength = get_num(g, "wavelength_m", 810.0e-9);
    cfg.ctx.slit_grid = GridSpec::square(n, window, wavelength);
  } else {
    cfg.ctx.slit_grid = GridSpec::square(1024, 8.0e-3, wavelength);
  }
  if (j.contains("output_grid")) {
    const json& g = j.at("output_grid");
    cfg.ctx.output_grid = GridSpec::square(get_int(g, "n", 1024),
                                           get_num(g, "window_m", 16.0e-3),
                                           wavelength);
  } else {
    cfg.ctx.output_grid = GridSpec::square(1024, 16.0e-3, wavelength);
  }

  if (j.contains("sorter")) {
    const json& s = j.at("sorter");
    SorterSpec sp;
    sp.f = get_num(s, "f_m", 0.3);
    sp.b = get_num(s, "b_m", 2.0e-3);
    if (s.contains("a_m") == s.contains("pitch_m"))
      throw config_error("sorter needs exactly one of a_m or pitch_m");
    if (s.contains("a_m"))
      sp.a = get_num(s, "a_m", 0.0);
    else
      sp.a = wavelength * sp.f /
             (2.0 * std::numbers::pi * get_num(s, "pitch_m", 150.0e-6));
    const std::string mode = s.value("mode", "ideal_remap");
    sp.mode = mode == "physical_phases" ? SorterMode::physical_phases
                                        : SorterMode::ideal_remap;
    sp.validate();
    cfg.ctx.sorter = sp;
  }

  if (j.contains("slits")) {
    const json& s = j.at("slits");
    cfg.ctx.slit_height = get_num(s, "height_m", 1.0e-3);
    cfg.ctx.slit_width = get_num(s, "width_m", 150.0e-6);
    SlitArray arr;
    arr.height = cfg.ctx.slit_height;
    if (s.contains("positions_m")) {
      const auto positions = s.at("positions_m").get<std::vector<double>>();
      for (size_t i = 0; i < positions.size(); ++i) {
        Slit slit;
        slit.center_x = positions[i];
        slit.width = cfg.ctx.slit_width;
        if (s.contains("transmissions"))
          slit.transmission = s.at("transmissions").at(i).get<double>();
        if (s.contains("phases_rad"))
          slit.phase = s.at("phases_rad").at(i).get<double>();
        arr.slits.push_back(slit);
      }
      arr.validate();
      cfg.slits = arr;
    }
  }
  if (cfg.slits.slits.empty()) {
    cfg.slits.height = cfg.ctx.slit_height;
    cfg.slits.slits = {{0.0, cfg.ctx.slit_width, 1.0, 0.0}};
  }

  if (j.contains("illumination")) {
    const json& il = j.at("illumination");
    const std::string type = il.value("type", "plane");
    if (type == "gaussian") {
      cfg.ctx.illumination.kind = Illumination::Kind::gaussian;
      cfg.ctx.illumination.waist = get_num(il, "waist_m", 1.0e-3);
    } else {
      cfg.ctx.illumination.kind = Illumination::Kind::plane;
    }
  }

  if (j.contains("numerics")) {
    const json& n = j.at("numerics");
    cfg.ctx.pad_factor = get_int(n, "pad_factor", 2);
    cfg.ctx.crop_to = get_int(n, "crop_to", 0);
    cfg.ctx.l_max_basis = get_int(n, "l_max_basis", 9);
    cfg.ctx.p_max = get_int(n, "p_max", 6);
    cfg.ctx.detection_pad = get_int(n, "detection_pad", 2);
  }

  if (j.contains("state")) {
    const json& st = j.at("state");
    cfg.state.amplitudes = st.at("amplitudes").get<std::vector<double>>();
    if (st.contains("phases_rad"))
      cfg.state.phases = st.at("phases_rad").get<std::vector<double>>();
    else
      cfg.state.phases.assign(cfg.state.amplitudes.size() - 1, 0.0);
    // allow un-normalized amplitudes in the file; normalize here
    double s2 = 0.0;
    for (double a : cfg.state.amplitudes) s2 += a * a;
    if (!(s2 > 0.0)) throw config_error("state amplitudes are all zero");
    for (double& a : cfg.state.amplitudes) a /= std::sqrt(s2);
    cfg.state.validate();
  }

  if (j.contains("noise")) {
    cfg.white = get_num(j.at("noise"), "white", 0.0);
    cfg.dephase = get_num(j.at("noise"), "dephase", 0.0);
  }

  if (j.contains("counts")) {
    const json& c = j.at("counts");
    cfg.rate_pairs_per_s = get_num(c, "rate_pairs_per_s", 2000.0);
    cfg.integration_s = get_num(c, "integration_s", 1.0);
    cfg.fringe_steps = get_int(c, "fringe_steps", 16);
    cfg.mc_trials = get_int(c, "mc_trials", 200);
  }

  if (j.contains("chsh")) {
    const json& c = j.at("chsh");
    if (c.contains("subspace")) {
      const auto sub = c.at("subspace").get<std::vector<int>>();
      if (sub.size() != 2) throw config_error("chsh subspace needs two l values");
      cfg.chsh.la = sub[0];
      cfg.chsh.lb = sub[1];
    }
    if (c.contains("phases_rad")) {
      const auto ph = c.at("phases_rad").get<std::vector<double>>();
      if (ph.size() != 4) throw config_error("chsh needs four setting phases");
      cfg.chsh.alpha = ph[0];
      cfg.chsh.alpha_prime = ph[1];
      cfg.chsh.beta = ph[2];
      cfg.chsh.beta_prime = ph[3];
    }
  }

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw config_error("cannot open config " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

RunConfig load_preset(const std::string& name) {
  return load_config(find_data_file("presets/" + name + ".json"));
}

std::filesystem::path find_data_file(const std::string& relative) {
  namespace fs = std::filesystem;
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("OAMSIM_DATA_DIR")) roots.emplace_back(env);
#ifdef OAMSIM_SOURCE_PRESET_DIR
  roots.emplace_back(fs::path(OAMSIM_SOURCE_PRESET_DIR).parent_path());
#endif
  std::error_code ec;
  const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    roots.push_back(exe.parent_path() / ".." / "share" / "oamsim");
    roots.push_back(exe.parent_path());
  }
  for (const auto& root : roots) {
    const fs::path candidate = root / relative;
    if (fs::exists(candidate, ec)) return candidate;
  }
  throw config_error("data file not found: " + relative);
}

}  // namespace oamsim
