#include "posner/xyzio.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace posner::xyzio {

using geom::Structure;
using geom::Trajectory;

namespace {

[[noreturn]] void fail(std::size_t lineno, const std::string& what) {
    throw std::invalid_argument("XYZ line " + std::to_string(lineno) + ": " + what);
}

double parse_double(const std::string& tok, std::size_t lineno) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        fail(lineno, "malformed float '" + tok + "'");
    }
    return v;
}

// Parses one frame from `lines` starting at index `pos` (0-based).
Structure parse_frame(const std::vector<std::string>& lines, std::size_t& pos) {
    const std::size_t count_line = pos + 1;
    if (pos >= lines.size()) fail(count_line, "expected atom count");
    std::size_t n = 0;
    {
        std::istringstream in(lines[pos]);
        long long raw = -1;
        if (!(in >> raw) || raw < 1) fail(count_line, "bad atom count");
        n = static_cast<std::size_t>(raw);
    }
    ++pos;

    Structure s;
    if (pos >= lines.size()) fail(pos + 1, "missing comment line");
    {
        std::istringstream in(lines[pos]);
        std::string tok;
        std::string label;
        while (in >> tok) {
            if (tok.rfind("energy=", 0) == 0) {
                s.energy = parse_double(tok.substr(7), pos + 1);
            } else if (tok.rfind("time_fs=", 0) == 0) {
                s.time_fs = parse_double(tok.substr(8), pos + 1);
            } else {
                if (!label.empty()) label += ' ';
                label += tok;
            }
        }
        s.label = label;
    }
    ++pos;

    for (std::size_t i = 0; i < n; ++i, ++pos) {
        const std::size_t lineno = pos + 1;
        if (pos >= lines.size()) {
            fail(lineno, "expected atom row " + std::to_string(i + 1) + " of " +
                             std::to_string(n));
        }
        std::istringstream in(lines[pos]);
        std::string sym, xs, ys, zs;
        if (!(in >> sym >> xs >> ys >> zs)) {
            fail(lineno, "expected 'element x y z'");
        }
        geom::Atom atom;
        try {
            atom.element = geom::element_by_symbol(sym);
        } catch (const std::invalid_argument& e) {
            fail(lineno, e.what());
        }
        atom.position = {parse_double(xs, lineno), parse_double(ys, lineno),
                         parse_double(zs, lineno)};
        if (!atom.position.allFinite()) fail(lineno, "non-finite coordinate");
        s.atoms.push_back(std::move(atom));
    }
    return s;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

Structure parse_xyz(const std::string& text) {
    const auto lines = split_lines(text);
    std::size_t pos = 0;
    Structure s = parse_frame(lines, pos);
    for (; pos < lines.size(); ++pos) {
        if (!blank(lines[pos])) fail(pos + 1, "trailing content after frame");
    }
    return s;
}

Trajectory parse_traj(const std::string& text, double timestep_fs,
                      double temperature_k) {
    const auto lines = split_lines(text);
    Trajectory traj;
    traj.timestep_fs = timestep_fs;
    traj.temperature_k = temperature_k;
    std::size_t pos = 0;
    while (pos < lines.size()) {
        if (blank(lines[pos])) {
            ++pos;
            continue;
        }
        traj.frames.push_back(parse_frame(lines, pos));
    }
    traj.validate();
    return traj;
}

std::string write_xyz(const Structure& s) {
    std::string out = std::to_string(s.atoms.size()) + "\n";
    char buf[160];
    if (!s.label.empty()) out += s.label;
    if (s.energy) {
        std::snprintf(buf, sizeof(buf), "%senergy=%.9g", s.label.empty() ? "" : " ",
                      *s.energy);
        out += buf;
    }
    if (s.time_fs) {
        std::snprintf(buf, sizeof(buf), "%stime_fs=%.9g",
                      (s.label.empty() && !s.energy) ? "" : " ", *s.time_fs);
        out += buf;
    }
    out += "\n";
    for (const auto& a : s.atoms) {
        std::snprintf(buf, sizeof(buf), "%-2s %15.9f %15.9f %15.9f\n",
                      a.element.symbol.c_str(), a.position[0], a.position[1],
                      a.position[2]);
        out += buf;
    }
    return out;
}

std::string write_traj(const Trajectory& traj) {
    std::string out;
    for (const auto& frame : traj.frames) out += write_xyz(frame);
    return out;
}

}  // namespace posner::xyzio
