#pragma once

// CSV and legacy-VTK writers. All numbers are written with 17 significant
// digits so files are reproducible bit-for-bit.

#include <string>
#include <utility>
#include <vector>

#include "fracvisc/solver.hpp"

namespace fracvisc {

/// node_id,x,y,<column>
void write_nodal_csv(const std::string& path, const Mesh& mesh, const Vec& values,
                     const std::string& column);

/// node_id,x,y,t,value for every (node, time) pair, time-major.
void write_field_csv(const std::string& path, const Mesh& mesh, const TimeGrid& grid,
                     const SpaceTimeField& field);

/// UNSTRUCTURED_GRID with one POINT_DATA scalar array per entry.
void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, Vec>>& point_scalars,
               const std::string& title = "fracvisc");

/// Creates `dir` (and parents) if needed.
void ensure_directory(const std::string& dir);

std::string join_path(const std::string& dir, const std::string& name);

}  // namespace fracvisc
