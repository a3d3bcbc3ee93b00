#include "fracvisc/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "fracvisc/errors.hpp"

namespace fracvisc {

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    return out;
}

void finish(std::ofstream& out, const std::string& path)
{
    out.flush();
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

}  // namespace

void ensure_directory(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name)
{
    return (std::filesystem::path(dir) / name).string();
}

void write_nodal_csv(const std::string& path, const Mesh& mesh, const Vec& values,
                     const std::string& column)
{
    if (values.size() != mesh.num_nodes())
        throw InvalidArgument("nodal values do not match the mesh");
    auto out = open_out(path);
    out << "node_id,x,y," << column << '\n';
    for (int i = 0; i < mesh.num_nodes(); ++i)
        out << i << ',' << mesh.nodes[i].x << ',' << mesh.nodes[i].y << ',' << values[i] << '\n';
    finish(out, path);
}

void write_field_csv(const std::string& path, const Mesh& mesh, const TimeGrid& grid,
                     const SpaceTimeField& field)
{
    if (field.ndof() != mesh.num_nodes() || field.steps() != grid.size())
        throw InvalidArgument("field does not match mesh and grid");
    auto out = open_out(path);
    out << "node_id,x,y,t,value\n";
    for (int n = 0; n < field.steps(); ++n)
        for (int i = 0; i < mesh.num_nodes(); ++i)
            out << i << ',' << mesh.nodes[i].x << ',' << mesh.nodes[i].y << ',' << grid.nodes[n] << ','
                << field(n, i) << '\n';
    finish(out, path);
}

void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, Vec>>& point_scalars, const std::string& title)
{
    auto out = open_out(path);
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto& p : mesh.nodes)
        out << p.x << ' ' << p.y << " 0\n";
    out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles)
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (int e = 0; e < mesh.num_triangles(); ++e)
        out << "5\n";
    if (!point_scalars.empty())
        out << "POINT_DATA " << mesh.num_nodes() << '\n';
    for (const auto& [name, values] : point_scalars) {
        if (values.size() != mesh.num_nodes())
            throw InvalidArgument("VTK scalar '" + name + "' does not match the mesh");
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int i = 0; i < values.size(); ++i)
            out << values[i] << '\n';
    }
    finish(out, path);
}

}  // namespace fracvisc
