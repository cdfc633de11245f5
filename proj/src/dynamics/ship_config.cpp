#include "harbour/dynamics/ship_config.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "harbour/common/ini.hpp"
#include "harbour/dynamics/model.hpp"

namespace harbour::dynamics {

namespace {

const IniSection& required(const IniDocument& doc, const std::string& name) {
  const IniSection* s = doc.section(name);
  if (s == nullptr) doc.fail(0, "missing section [" + name + "]");
  return *s;
}

std::vector<KtSample> parse_kt_samples(const IniDocument& doc, const IniSection& s) {
  const IniEntry* e = s.find("kt_samples");
  std::vector<KtSample> out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) doc.fail(e->line, "kt_samples entries must be 'J:K_T'");
    try {
      out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      doc.fail(e->line, "kt_samples entry is not numeric: '" + item + "'");
    }
  }
  return out;
}

}  // namespace

ShipConfig parse_ship_config(std::istream& in, const std::string& source) {
  const IniDocument doc = IniDocument::parse(in, source);
  ShipConfig c;

  const IniSection& ship = required(doc, "ship");
  doc.reject_unknown(ship, {"name"});
  c.name = doc.text(ship, "name");

  const IniSection& ps = required(doc, "particulars");
  doc.reject_unknown(ps, {"length_pp", "length_wl", "breadth", "hull_depth", "draft",
                          "displacement_volume", "block_coeff", "x_g", "wetted_surface",
                          "resistance_coeff", "yaw_gyradius_fraction"});
  auto& p = c.particulars;
  p.length_pp = doc.number(ps, "length_pp");
  p.length_wl = doc.optional_number(ps, "length_wl").value_or(p.length_pp);
  p.breadth = doc.number(ps, "breadth");
  p.hull_depth = doc.number(ps, "hull_depth");
  p.draft = doc.number(ps, "draft");
  p.displacement_volume = doc.number(ps, "displacement_volume");
  p.block_coeff = doc.number(ps, "block_coeff");
  p.x_g = doc.optional_number(ps, "x_g").value_or(0.0);
  p.wetted_surface = doc.optional_number(ps, "wetted_surface")
                         .value_or(denny_wetted_surface(p.length_pp, p.breadth, p.draft,
                                                        p.block_coeff));
  p.resistance_coeff = doc.number(ps, "resistance_coeff");
  p.yaw_gyradius_fraction = doc.optional_number(ps, "yaw_gyradius_fraction").value_or(0.25);

  double rho = 1025.0;
  c.mass = default_mass_properties(p, rho);
  if (const IniSection* ms = doc.section("mass")) {
    doc.reject_unknown(*ms, {"water_density", "added_mass_x_fraction", "added_mass_y_fraction",
                             "added_yaw_inertia_fraction", "mass", "added_mass_x", "added_mass_y",
                             "yaw_inertia", "added_yaw_inertia"});
    rho = doc.optional_number(*ms, "water_density").value_or(rho);
    c.mass = default_mass_properties(p, rho);
    auto& m = c.mass;
    m.mass = doc.optional_number(*ms, "mass").value_or(m.mass);
    m.added_mass_x = doc.optional_number(*ms, "added_mass_x")
                         .value_or(doc.optional_number(*ms, "added_mass_x_fraction").value_or(0.05) *
                                   m.mass);
    m.added_mass_y = doc.optional_number(*ms, "added_mass_y")
                         .value_or(doc.optional_number(*ms, "added_mass_y_fraction").value_or(0.9) *
                                   m.mass);
    m.yaw_inertia = doc.optional_number(*ms, "yaw_inertia").value_or(m.yaw_inertia);
    m.added_yaw_inertia =
        doc.optional_number(*ms, "added_yaw_inertia")
            .value_or(doc.optional_number(*ms, "added_yaw_inertia_fraction").value_or(0.1) *
                      m.yaw_inertia);
  }

  const IniSection& hs = required(doc, "hull");
  doc.reject_unknown(hs, {"x0", "xvr", "yv", "yr", "yvvv", "yvvr", "yvrr", "yrrr", "nv", "nr",
                          "nvvv", "nvvr", "nvrr", "nrrr"});
  auto& h = c.hull;
  h.x0 = doc.optional_number(hs, "x0").value_or(resistance_coefficient(p));
  h.xvr = doc.number(hs, "xvr");
  h.yv = doc.number(hs, "yv");
  h.yr = doc.number(hs, "yr");
  h.yvvv = doc.number(hs, "yvvv");
  h.yvvr = doc.number(hs, "yvvr");
  h.yvrr = doc.number(hs, "yvrr");
  h.yrrr = doc.number(hs, "yrrr");
  h.nv = doc.number(hs, "nv");
  h.nr = doc.number(hs, "nr");
  h.nvvv = doc.number(hs, "nvvv");
  h.nvvr = doc.number(hs, "nvvr");
  h.nvrr = doc.number(hs, "nvrr");
  h.nrrr = doc.number(hs, "nrrr");

  const IniSection& prs = required(doc, "propeller");
  doc.reject_unknown(prs, {"diameter", "blades", "pitch_ratio", "rotation", "wake_fraction",
                           "thrust_deduction", "kt", "kt_samples"});
  auto& pr = c.propeller;
  pr.diameter = doc.number(prs, "diameter");
  pr.blade_count = static_cast<int>(doc.optional_number(prs, "blades").value_or(0));
  pr.pitch_ratio = doc.optional_number(prs, "pitch_ratio").value_or(0.0);
  const std::string hand = doc.optional_text(prs, "rotation").value_or("right");
  if (hand != "right" && hand != "left") {
    doc.fail(prs.find("rotation")->line, "rotation must be 'right' or 'left'");
  }
  pr.hand = hand == "right" ? RotationHand::right : RotationHand::left;
  pr.wake_fraction = doc.number(prs, "wake_fraction");
  pr.thrust_deduction = doc.number(prs, "thrust_deduction");
  if (prs.find("kt") != nullptr) {
    const auto kt = doc.numbers(prs, "kt");
    if (kt.size() != 3) doc.fail(prs.find("kt")->line, "kt needs exactly three coefficients");
    pr.kt = {kt[0], kt[1], kt[2]};
  } else if (prs.find("kt_samples") != nullptr) {
    const auto samples = parse_kt_samples(doc, prs);
    try {
      pr.kt = fit_kt_coeffs(samples);
    } catch (const RankDeficient& e) {
      doc.fail(prs.find("kt_samples")->line, e.what());
    }
  } else {
    doc.fail(prs.line, "[propeller] needs 'kt' or 'kt_samples'");
  }

  const IniSection& rs = required(doc, "rudder");
  doc.reject_unknown(rs, {"lateral_area", "surface_area", "aspect_ratio", "drag_coeff",
                          "interaction_coeff", "x_r", "x_h", "max_angle_deg", "turn_rate_deg_s",
                          "wake_ratio", "race_kappa", "prop_height_ratio", "flow_straightening",
                          "lever", "interaction_sign"});
  auto& r = c.rudder;
  r.area = doc.number(rs, "lateral_area");
  r.surface_area = doc.optional_number(rs, "surface_area").value_or(0.0);
  r.aspect_ratio = doc.number(rs, "aspect_ratio");
  r.drag_coeff = doc.number(rs, "drag_coeff");
  r.interaction_coeff = doc.number(rs, "interaction_coeff");
  r.x_r = doc.optional_number(rs, "x_r").value_or(r.x_r);
  r.x_h = doc.optional_number(rs, "x_h").value_or(r.x_h);
  r.max_angle = deg2rad(doc.optional_number(rs, "max_angle_deg").value_or(35.0));
  r.max_rate = deg2rad(doc.optional_number(rs, "turn_rate_deg_s").value_or(2.32));
  r.wake_ratio = doc.optional_number(rs, "wake_ratio").value_or(r.wake_ratio);
  r.race_kappa = doc.optional_number(rs, "race_kappa").value_or(r.race_kappa);
  r.prop_height_ratio = doc.optional_number(rs, "prop_height_ratio").value_or(r.prop_height_ratio);
  r.flow_straightening =
      doc.optional_number(rs, "flow_straightening").value_or(r.flow_straightening);
  r.lever = doc.optional_number(rs, "lever").value_or(r.lever);
  if (auto sign = doc.optional_text(rs, "interaction_sign")) {
    if (*sign == "printed") {
      r.interaction_sign = InteractionSign::printed;
    } else if (*sign == "conventional") {
      r.interaction_sign = InteractionSign::conventional;
    } else {
      doc.fail(rs.find("interaction_sign")->line,
               "interaction_sign must be 'printed' or 'conventional'");
    }
  }

  for (const IniSection* ts : doc.sections_named("thruster")) {
    doc.reject_unknown(*ts, {"rated_thrust", "x_position", "cutoff_speed"});
    ThrusterConfig t;
    t.name = ts->argument.empty() ? "thruster" + std::to_string(c.thrusters.size()) : ts->argument;
    t.rated_thrust = doc.number(*ts, "rated_thrust");
    t.x_position = doc.number(*ts, "x_position");
    t.cutoff_speed = doc.optional_number(*ts, "cutoff_speed").value_or(t.cutoff_speed);
    c.thrusters.push_back(t);
  }

  if (const IniSection* ws = doc.section("wind")) {
    doc.reject_unknown(*ws, {"enabled", "air_density", "frontal_area", "lateral_area", "cx", "cy",
                             "cn"});
    auto& w = c.wind;
    w.enabled = doc.flag(*ws, "enabled", false);
    w.air_density = doc.optional_number(*ws, "air_density").value_or(w.air_density);
    w.frontal_area = doc.optional_number(*ws, "frontal_area").value_or(w.frontal_area);
    w.lateral_area = doc.optional_number(*ws, "lateral_area").value_or(w.lateral_area);
    w.cx = doc.optional_number(*ws, "cx").value_or(w.cx);
    w.cy = doc.optional_number(*ws, "cy").value_or(w.cy);
    w.cn = doc.optional_number(*ws, "cn").value_or(w.cn);
  }

  const IniSection& es = required(doc, "engine");
  doc.reject_unknown(es, {"time_constant", "rated_rpm", "max_rpm"});
  c.engine.time_constant = doc.optional_number(es, "time_constant").value_or(20.0);
  c.engine.rated_rate = rpm_to_rps(doc.number(es, "rated_rpm"));
  c.engine.max_rate =
      rpm_to_rps(doc.optional_number(es, "max_rpm").value_or(rps_to_rpm(c.engine.rated_rate)));

  if (const IniSection* ss = doc.section("stability")) {
    doc.reject_unknown(*ss, {"gm_t", "roll_period", "roll_damping_ratio", "roll_damping",
                             "roll_moment"});
    auto& st = c.stability;
    st.gm_t = doc.optional_number(*ss, "gm_t").value_or(st.gm_t);
    st.roll_period = doc.optional_number(*ss, "roll_period").value_or(st.roll_period);
    st.roll_damping_ratio =
        doc.optional_number(*ss, "roll_damping_ratio").value_or(st.roll_damping_ratio);
    st.roll_damping = doc.optional_number(*ss, "roll_damping");
    st.roll_moment = doc.optional_number(*ss, "roll_moment");
  }

  Environment env;
  env.water_density = rho;
  try {
    validate(c, env);
  } catch (const ConfigError& e) {
    doc.fail(0, e.what());
  }
  return c;
}

ShipConfig load_ship_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ship config '" + path + "'");
  return parse_ship_config(in, path);
}

}  // namespace harbour::dynamics
