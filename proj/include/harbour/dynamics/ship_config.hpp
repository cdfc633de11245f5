#pragma once

#include <istream>
#include <string>

#include "harbour/dynamics/ship.hpp"

namespace harbour::dynamics {

/// Reads a ship configuration file (schema in docs/ship_config.md). Derived
/// fields are filled from their documented defaults: X0' from C_T when
/// `x0` is absent, wetted surface from Denny's estimate, mass properties from
/// the slender-hull heuristics. The result is validated; parse and
/// validation failures are reported as ParseError with the line number.
ShipConfig parse_ship_config(std::istream& in, const std::string& source);
ShipConfig load_ship_config(const std::string& path);

}  // namespace harbour::dynamics
