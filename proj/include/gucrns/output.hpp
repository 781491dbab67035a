#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gucrns/scheme.hpp"
#include "gucrns/verification.hpp"

namespace gucrns {

/// I/O failure carrying the offending path.
class OutputError : public std::runtime_error {
public:
    OutputError(const std::filesystem::path& path, const std::string& what)
        : std::runtime_error(path.string() + ": " + what), path_(path) {}
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Shortest-safe formatting used in every output file: 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct NamedScalar {
    std::string name;
    std::vector<double> values;  // one per vertex
};

struct NamedVector {
    std::string name;
    std::vector<Vec2> values;  // one per vertex
};

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw OutputError(path.parent_path(), "cannot create directory: " + ec.message());
    }
    std::ofstream out(path);
    if (!out) throw OutputError(path, "cannot open for writing");
    return out;
}

/// Legacy ASCII VTK (v3.0) unstructured grid of triangles with point data.
/// Fields are written in the order given.
inline void write_vtk(const TriMesh& mesh, const std::vector<NamedScalar>& scalars,
                      const std::vector<NamedVector>& vectors, const std::filesystem::path& path,
                      const std::string& title = "gu-crns fields") {
    const auto nv = static_cast<std::size_t>(mesh.vertex_count());
    for (const auto& s : scalars)
        if (s.values.size() != nv) throw std::invalid_argument("write_vtk: scalar '" + s.name + "' has wrong length");
    for (const auto& v : vectors)
        if (v.values.size() != nv) throw std::invalid_argument("write_vtk: vector '" + v.name + "' has wrong length");

    std::ofstream out = open_for_write(path);
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n";
    for (const Vec2& x : mesh.vertices()) out << fmt17(x.x) << ' ' << fmt17(x.y) << " 0\n";
    const Index nt = mesh.triangle_count();
    out << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (Index e = 0; e < nt; ++e) {
        const auto& t = mesh.triangle(e);
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    out << "CELL_TYPES " << nt << '\n';
    for (Index e = 0; e < nt; ++e) out << "5\n";  // VTK_TRIANGLE
    if (!scalars.empty() || !vectors.empty()) out << "POINT_DATA " << nv << '\n';
    for (const auto& s : scalars) {
        out << "SCALARS " << s.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : s.values) out << fmt17(v) << '\n';
    }
    for (const auto& v : vectors) {
        out << "VECTORS " << v.name << " double\n";
        for (const Vec2& x : v.values) out << fmt17(x.x) << ' ' << fmt17(x.y) << " 0\n";
    }
    if (!out) throw OutputError(path, "write failed");
}

/// Vertex samples for visualization. The velocity combines u_hat at the
/// vertex with the area-weighted average of the (piecewise constant) gauge
/// gradient over the incident elements; this smoothing is for plots only.
inline std::vector<Vec2> vertex_velocity(const CompositeVelocity& u) {
    const TriMesh& mesh = u.hat.space().mesh();
    const auto nv = static_cast<std::size_t>(mesh.vertex_count());
    std::vector<Vec2> grad(nv);
    std::vector<double> weight(nv, 0.0);
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
        const auto& t = mesh.triangle(e);
        const double a = mesh.element(e).area;
        const Vec2 g = u.rho.gradient(e);
        for (Index v : t) {
            grad[v] += a * g;
            weight[v] += a;
        }
    }
    std::vector<Vec2> out(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        const Vec2 hat{u.hat[static_cast<Index>(2 * v)], u.hat[static_cast<Index>(2 * v + 1)]};
        out[v] = hat + (weight[v] > 0 ? (1.0 / weight[v]) * grad[v] : Vec2{});
    }
    return out;
}

inline void write_snapshot(const Level& lv, const std::filesystem::path& path) {
    std::vector<NamedScalar> scalars;
    scalars.push_back({"eta", lv.eta.coeffs()});
    if (lv.c) scalars.push_back({"c", lv.c->coeffs()});
    scalars.push_back({"p", lv.p.coeffs()});
    scalars.push_back({"s", lv.s.coeffs()});
    write_vtk(lv.eta.space().mesh(), scalars, {{"u", vertex_velocity(lv.u)}}, path);
}

inline std::string snapshot_name(int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fields_%06d.vtk", step);
    return buf;
}

/// Streams `step,time,E3` rows.
class EnergyCsv {
public:
    explicit EnergyCsv(const std::filesystem::path& path) : path_(path), out_(open_for_write(path)) {
        out_ << "step,time,E3\n";
    }
    void row(int step, double time, double e3) {
        out_ << step << ',' << fmt17(time) << ',' << fmt17(e3) << '\n';
        if (!out_) throw OutputError(path_, "write failed");
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

/// `axis,level,h,tau,var,error,rate`; rate is empty on the first level.
inline void write_errors_csv(const ErrorReport& report, const std::filesystem::path& path,
                             const std::string& axis_label = "") {
    std::ofstream out = open_for_write(path);
    out << "axis,level,h,tau,var,error,rate\n";
    const std::string axis = axis_label.empty() ? to_string(report.axis) : axis_label;
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        const auto& lv = report.levels[i];
        for (const char* var : ErrorReport::variables) {
            out << axis << ',' << lv.level << ',' << fmt17(lv.h) << ',' << fmt17(lv.tau) << ',' << var << ','
                << fmt17(ErrorReport::get(lv, var)) << ',';
            if (i > 0) out << fmt17(observed_rate(ErrorReport::get(report.levels[i - 1], var), ErrorReport::get(lv, var)));
            out << '\n';
        }
    }
    if (!out) throw OutputError(path, "write failed");
}

}  // namespace gucrns
