#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "intercoord/geometry.hpp"

namespace intercoord {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Departure {
  std::string movement;
  double time = 0.0;
  std::optional<double> v0;
};

struct Scenario {
  std::string name = "scenario";
  GeometryConfig geometry;
  std::vector<Departure> departures;

  double v0_default = 15.0;
  double v0_jitter = 0.0;  // uniform +/- spread on v0_default, drawn from seed
  double v_min = 5.0;
  double v_max = 20.0;
  double a_max = 2.5;
  double k_rescale = 1.2;
  int max_rescales = 20;
  double min_speed = 1.0;
  double ramp_stretch = 1.0;  // longest pure ramp, relative to the binding ramp
  double dt = 0.1;
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;
  std::uint64_t seed = 0;

  double coordination_radius = 250.0;
  double headway = 1.0;
  double jam_gap = 2.0;
  double stop_buffer = 5.0;
  double horizon = 600.0;
};

/// Parses scenario JSON. `source` names the input in error messages.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);

/// Throws ScenarioError naming the offending field.
void validate(const Scenario& scenario);

/// Applies "key=value"; nested geometry fields use "geometry.<field>".
void apply_override(Scenario& scenario, const std::string& assignment);

std::string scenario_to_json(const Scenario& scenario);

/// A small valid scenario with random lanes, departures and speeds.
Scenario random_scenario(std::uint64_t seed);

}  // namespace intercoord
