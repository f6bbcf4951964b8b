#pragma once

#include "posner/geom.hpp"

#include <string>

namespace posner::xyzio {

/// Standard XYZ with extended comment keys `energy=<eV>` and
/// `time_fs=<fs>`; errors carry 1-based line numbers.
geom::Structure parse_xyz(const std::string& text);

/// Concatenated XYZ frames.
geom::Trajectory parse_traj(const std::string& text, double timestep_fs = 1.0,
                            double temperature_k = 0.0);

std::string write_xyz(const geom::Structure& s);
std::string write_traj(const geom::Trajectory& traj);

}  // namespace posner::xyzio
