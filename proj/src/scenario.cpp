#include "intercoord/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace intercoord {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kDefaultMovements{"ES", "EW", "NE", "NS", "WN", "WE", "SW", "SN"};

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ScenarioError("field '" + field + "' " + what);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(field, "must be finite");
  return x;
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "must be an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "must be true or false");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "must be a string");
  return v.get<std::string>();
}

void read_geometry(const json& g, GeometryConfig& cfg) {
  if (!g.is_object()) fail("geometry", "must be an object");
  for (const auto& [key, v] : g.items()) {
    const std::string f = "geometry." + key;
    if (key == "lane_width") cfg.lane_width = number(v, f);
    else if (key == "approach_length") cfg.approach_length = number(v, f);
    else if (key == "exit_length") cfg.exit_length = number(v, f);
    else if (key == "left_turn_radius") cfg.left_turn_radius = number(v, f);
    else if (key == "include_right_turns") cfg.include_right_turns = boolean(v, f);
    else if (key == "half_width") cfg.half_width = number(v, f);
    else if (key == "enter_margin") cfg.enter_margin = number(v, f);
    else if (key == "safe_margin") cfg.safe_margin = number(v, f);
    else if (key == "movements") {
      if (!v.is_array()) fail(f, "must be an array of movement ids");
      cfg.movements.clear();
      for (std::size_t k = 0; k < v.size(); ++k) {
        cfg.movements.push_back(text(v[k], f + "[" + std::to_string(k) + "]"));
      }
    } else {
      fail(f, "is not a known geometry field");
    }
  }
}

void set_scalar(Scenario& s, const std::string& key, const json& v) {
  if (key == "name") s.name = text(v, key);
  else if (key == "v0_default") s.v0_default = number(v, key);
  else if (key == "v0_jitter") s.v0_jitter = number(v, key);
  else if (key == "v_min") s.v_min = number(v, key);
  else if (key == "v_max") s.v_max = number(v, key);
  else if (key == "a_max") s.a_max = number(v, key);
  else if (key == "k_rescale") s.k_rescale = number(v, key);
  else if (key == "max_rescales") s.max_rescales = integer(v, key);
  else if (key == "min_speed") s.min_speed = number(v, key);
  else if (key == "ramp_stretch") s.ramp_stretch = number(v, key);
  else if (key == "dt") s.dt = number(v, key);
  else if (key == "vehicle_length") s.vehicle_length = number(v, key);
  else if (key == "vehicle_width") s.vehicle_width = number(v, key);
  else if (key == "seed") {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(key, "must be a non-negative integer");
    }
    s.seed = v.get<std::uint64_t>();
  } else if (key == "coordination_radius") s.coordination_radius = number(v, key);
  else if (key == "headway") s.headway = number(v, key);
  else if (key == "jam_gap") s.jam_gap = number(v, key);
  else if (key == "stop_buffer") s.stop_buffer = number(v, key);
  else if (key == "horizon") s.horizon = number(v, key);
  else fail(key, "is not a known scenario field");
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

Scenario parse_scenario(const std::string& input, const std::string& source) {
  json doc;
  try {
    doc = json::parse(input);
  } catch (const json::parse_error& e) {
    throw ScenarioError(source + ":" + std::to_string(line_of(input, e.byte)) +
                        ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ScenarioError(source + ": top level must be an object");

  Scenario s;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "geometry") {
        read_geometry(v, s.geometry);
      } else if (key == "departures") {
        if (!v.is_array()) fail(key, "must be an array");
        for (std::size_t k = 0; k < v.size(); ++k) {
          const std::string f = "departures[" + std::to_string(k) + "]";
          const auto& d = v[k];
          if (!d.is_object()) fail(f, "must be an object");
          Departure dep;
          if (!d.contains("movement")) fail(f + ".movement", "is required");
          if (!d.contains("time")) fail(f + ".time", "is required");
          for (const auto& [dk, dv] : d.items()) {
            if (dk == "movement") dep.movement = text(dv, f + ".movement");
            else if (dk == "time") dep.time = number(dv, f + ".time");
            else if (dk == "v0") dep.v0 = number(dv, f + ".v0");
            else fail(f + "." + dk, "is not a known departure field");
          }
          s.departures.push_back(dep);
        }
      } else {
        set_scalar(s, key, v);
      }
    }
    validate(s);
  } catch (const ScenarioError& e) {
    throw ScenarioError(source + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

void validate(const Scenario& s) {
  auto positive = [](double v, const char* f) {
    if (!(v > 0.0)) fail(f, "must be positive");
  };
  positive(s.dt, "dt");
  positive(s.v_min, "v_min");
  if (!(s.v_max > s.v_min)) fail("v_max", "must exceed v_min");
  positive(s.a_max, "a_max");
  if (!(s.k_rescale > 1.0)) fail("k_rescale", "must exceed 1");
  if (s.max_rescales < 1) fail("max_rescales", "must be at least 1");
  if (!(s.min_speed >= 0.0) || !(s.min_speed < s.v_min)) {
    fail("min_speed", "must lie in [0, v_min)");
  }
  if (!(s.ramp_stretch >= 1.0)) fail("ramp_stretch", "must be at least 1");
  positive(s.vehicle_length, "vehicle_length");
  positive(s.vehicle_width, "vehicle_width");
  positive(s.coordination_radius, "coordination_radius");
  if (!(s.headway >= 0.0)) fail("headway", "must be non-negative");
  if (!(s.jam_gap >= 0.0)) fail("jam_gap", "must be non-negative");
  if (!(s.stop_buffer >= 0.0)) fail("stop_buffer", "must be non-negative");
  positive(s.horizon, "horizon");
  if (!(s.v0_default >= 0.0) || s.v0_default > s.v_max) fail("v0_default", "must lie in [0, v_max]");
  if (!(s.v0_jitter >= 0.0)) fail("v0_jitter", "must be non-negative");
  if (s.geometry.safe_margin < s.geometry.enter_margin) {
    fail("geometry.safe_margin", "must be at least geometry.enter_margin");
  }

  const auto& ids = s.geometry.movements.empty() ? kDefaultMovements : s.geometry.movements;
  const std::set<std::string> known(ids.begin(), ids.end());
  std::map<std::string, double> last;
  for (std::size_t k = 0; k < s.departures.size(); ++k) {
    const auto& d = s.departures[k];
    const std::string f = "departures[" + std::to_string(k) + "]";
    if (!known.count(d.movement)) fail(f + ".movement", "names unknown movement '" + d.movement + "'");
    if (!(d.time >= 0.0)) fail(f + ".time", "must be non-negative");
    if (d.v0 && (!(*d.v0 >= 0.0) || *d.v0 > s.v_max)) fail(f + ".v0", "must lie in [0, v_max]");
    auto it = last.find(d.movement);
    if (it != last.end() && !(d.time > it->second)) {
      fail(f + ".time", "must be later than the previous departure on " + d.movement);
    }
    last[d.movement] = d.time;
  }
}

void apply_override(Scenario& s, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ScenarioError("override '" + assignment + "' must have the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare words are strings
  }
  if (key == "departures") throw ScenarioError("field 'departures' cannot be overridden");
  if (key.rfind("geometry.", 0) == 0) {
    read_geometry(json{{key.substr(9), value}}, s.geometry);
  } else {
    set_scalar(s, key, value);
  }
  validate(s);
}

std::string scenario_to_json(const Scenario& s) {
  ordered_json g;
  g["lane_width"] = s.geometry.lane_width;
  g["approach_length"] = s.geometry.approach_length;
  g["exit_length"] = s.geometry.exit_length;
  g["left_turn_radius"] = s.geometry.left_turn_radius;
  g["include_right_turns"] = s.geometry.include_right_turns;
  g["half_width"] = s.geometry.half_width;
  g["enter_margin"] = s.geometry.enter_margin;
  g["safe_margin"] = s.geometry.safe_margin;
  g["movements"] = s.geometry.movements;
  ordered_json deps = ordered_json::array();
  for (const auto& d : s.departures) {
    ordered_json o;
    o["movement"] = d.movement;
    o["time"] = d.time;
    if (d.v0) o["v0"] = *d.v0;
    deps.push_back(o);
  }
  ordered_json doc;
  doc["name"] = s.name;
  doc["geometry"] = g;
  doc["departures"] = deps;
  doc["v0_default"] = s.v0_default;
  doc["v0_jitter"] = s.v0_jitter;
  doc["v_min"] = s.v_min;
  doc["v_max"] = s.v_max;
  doc["a_max"] = s.a_max;
  doc["k_rescale"] = s.k_rescale;
  doc["max_rescales"] = s.max_rescales;
  doc["min_speed"] = s.min_speed;
  doc["ramp_stretch"] = s.ramp_stretch;
  doc["dt"] = s.dt;
  doc["vehicle_length"] = s.vehicle_length;
  doc["vehicle_width"] = s.vehicle_width;
  doc["seed"] = s.seed;
  doc["coordination_radius"] = s.coordination_radius;
  doc["headway"] = s.headway;
  doc["jam_gap"] = s.jam_gap;
  doc["stop_buffer"] = s.stop_buffer;
  doc["horizon"] = s.horizon;
  return doc.dump(2) + "\n";
}

Scenario random_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gap(1.5, 6.0);
  std::uniform_real_distribution<double> first(0.0, 5.0);
  std::uniform_real_distribution<double> speed(8.0, 20.0);
  std::uniform_int_distribution<int> count(0, 5);
  Scenario s;
  s.name = "random_" + std::to_string(seed);
  s.seed = seed;
  for (const auto& id : kDefaultMovements) {
    if (rng() % 4 == 0) continue;
    s.geometry.movements.push_back(id);
  }
  if (s.geometry.movements.empty()) s.geometry.movements.push_back("EW");
  for (const auto& id : s.geometry.movements) {
    const int n = count(rng);
    double t = first(rng);
    for (int k = 0; k < n; ++k) {
      // Round to the millisecond so the scenario survives a JSON round trip.
      Departure d{id, std::round(t * 1000.0) / 1000.0,
                  std::round(speed(rng) * 1000.0) / 1000.0};
      s.departures.push_back(d);
      t += gap(rng);
    }
  }
  std::stable_sort(s.departures.begin(), s.departures.end(),
                   [](const Departure& a, const Departure& b) { return a.time < b.time; });
  validate(s);
  return s;
}

}  // namespace intercoord
