#include <pybind11/eigen.h>

#include <random>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "posner/align.hpp"
#include "posner/ffopt.hpp"
#include "posner/posnergen.hpp"
#include "posner/symdetect.hpp"
#include "posner/trajstats.hpp"
#include "posner/xyzio.hpp"

namespace py = pybind11;
using namespace posner;

namespace {

geom::Structure structure_from_arrays(const std::vector<std::string>& symbols,
                                      const Eigen::MatrixXd& positions) {
    if ((std::size_t)positions.rows() != symbols.size() || positions.cols() != 3) {
        throw std::invalid_argument("positions must be len(symbols) x 3");
    }
    geom::Structure s;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        s.atoms.push_back({geom::element_by_symbol(symbols[i]),
                           positions.row((long)i).transpose()});
    }
    return s;
}

Eigen::MatrixXd positions_of(const geom::Structure& s) {
    Eigen::MatrixXd p((long)s.size(), 3);
    for (std::size_t i = 0; i < s.size(); ++i) {
        p.row((long)i) = s.atoms[i].position.transpose();
    }
    return p;
}

std::vector<std::string> symbols_of(const geom::Structure& s) {
    std::vector<std::string> out;
    for (const auto& a : s.atoms) out.push_back(a.element.symbol);
    return out;
}

}  // namespace

PYBIND11_MODULE(_posner, m) {
    m.doc() = "Structural analysis of Ca9(PO4)6 clusters: symmetry detection, "
              "alignment, trajectory statistics, candidate generation, and "
              "classical minimization";

    py::class_<geom::Structure>(m, "Structure")
        .def(py::init(&structure_from_arrays), py::arg("symbols"),
             py::arg("positions"))
        .def_property_readonly("symbols", &symbols_of)
        .def_property_readonly("positions", &positions_of)
        .def_readwrite("label", &geom::Structure::label)
        .def_readwrite("energy", &geom::Structure::energy)
        .def_readwrite("time_fs", &geom::Structure::time_fs)
        .def("__len__", &geom::Structure::size)
        .def("__repr__", [](const geom::Structure& s) {
            return "<Structure with " + std::to_string(s.size()) + " atoms>";
        });

    py::class_<geom::Trajectory>(m, "Trajectory")
        .def(py::init<>())
        .def_readwrite("frames", &geom::Trajectory::frames)
        .def_readwrite("timestep_fs", &geom::Trajectory::timestep_fs)
        .def_readwrite("temperature_k", &geom::Trajectory::temperature_k)
        .def("__len__", &geom::Trajectory::n_frames);

    // io
    m.def("parse_xyz", &xyzio::parse_xyz, py::arg("text"));
    m.def("write_xyz", &xyzio::write_xyz, py::arg("structure"));
    m.def("parse_traj", &xyzio::parse_traj, py::arg("text"),
          py::arg("timestep_fs") = 1.0, py::arg("temperature_k") = 0.0);
    m.def("write_traj", &xyzio::write_traj, py::arg("trajectory"));

    // symmetry detection
    py::class_<symdetect::SymmetryElement>(m, "SymmetryElement")
        .def_readonly("axis", &symdetect::SymmetryElement::axis)
        .def_readonly("order", &symdetect::SymmetryElement::order)
        .def_readonly("score", &symdetect::SymmetryElement::score)
        .def_property_readonly("name", &symdetect::SymmetryElement::name);
    py::class_<symdetect::PointGroup>(m, "PointGroup")
        .def_readonly("schoenflies", &symdetect::PointGroup::schoenflies)
        .def_readonly("order", &symdetect::PointGroup::order)
        .def_readonly("elements", &symdetect::PointGroup::elements)
        .def("__repr__", [](const symdetect::PointGroup& g) {
            return "<PointGroup " + g.schoenflies + ">";
        });
    m.def(
        "detect_point_group",
        [](const geom::Structure& s, double tol) {
            return symdetect::detect_point_group(s, tol);
        },
        py::arg("structure"), py::arg("tol") = 0.1);

    // alignment
    m.def(
        "kabsch",
        [](const geom::Structure& mobile, const geom::Structure& reference) {
            const auto t = align::kabsch(mobile, reference);
            return py::make_tuple(t.rotation, t.translation);
        },
        py::arg("mobile"), py::arg("reference"),
        "Optimal proper rigid transform (rotation, translation)");
    m.def(
        "align_trajectory",
        [](const geom::Trajectory& traj, const geom::Structure& ref) {
            return align::align_trajectory(traj, ref);
        },
        py::arg("trajectory"), py::arg("reference"));
    m.def("time_average", &align::time_average, py::arg("trajectory"),
          py::arg("skip_fraction") = 0.05);
    m.def("rmsd", &geom::rmsd, py::arg("a"), py::arg("b"));

    // trajectory statistics
    m.def(
        "symmetry_timeline",
        [](const geom::Trajectory& traj, double tol, std::size_t skip) {
            py::list out;
            for (const auto& s : trajstats::symmetry_timeline(traj, tol, skip)) {
                out.append(py::dict(
                    py::arg("start_frame") = s.start_frame,
                    py::arg("end_frame") = s.end_frame,
                    py::arg("label") = s.group_label,
                    py::arg("duration_fs") = s.duration_fs));
            }
            return out;
        },
        py::arg("trajectory"), py::arg("tol") = 0.1, py::arg("skip") = 500);
    m.def(
        "pca",
        [](const geom::Trajectory& aligned, std::size_t modes) {
            const auto p = trajstats::pca(aligned);
            const std::size_t n = std::min(modes, p.eigenvalues.size());
            py::list mode_list;
            for (std::size_t i = 0; i < n; ++i) {
                const auto d = trajstats::eigenmode_displacements(p, i);
                Eigen::MatrixXd disp((long)d.displacements.size(), 3);
                for (std::size_t a = 0; a < d.displacements.size(); ++a) {
                    disp.row((long)a) = d.displacements[a].transpose();
                }
                mode_list.append(py::dict(
                    py::arg("eigenvalue") = p.eigenvalues[i],
                    py::arg("explained_fraction") = p.explained_fraction[i],
                    py::arg("displacements") = disp));
            }
            return py::dict(py::arg("mean") = p.mean,
                            py::arg("modes") = mode_list);
        },
        py::arg("aligned"), py::arg("modes") = 5);
    m.def(
        "kmeans",
        [](const geom::Trajectory& traj, std::size_t k, std::uint64_t seed) {
            const auto r = trajstats::kmeans(traj, k, seed);
            return py::dict(py::arg("k") = r.k,
                            py::arg("assignments") = r.assignments,
                            py::arg("centroids") = r.centroids,
                            py::arg("inertia") = r.inertia,
                            py::arg("silhouette") = r.silhouette);
        },
        py::arg("trajectory"), py::arg("k"), py::arg("seed") = 0);
    m.def("select_k", &trajstats::select_k, py::arg("trajectory"),
          py::arg("k_min") = 2, py::arg("k_max") = 6, py::arg("seed") = 0);
    m.def(
        "energy_stats",
        [](const geom::Trajectory& traj, std::size_t bins) {
            const auto e = trajstats::energy_stats(traj, bins);
            return py::dict(py::arg("mean") = e.mean, py::arg("stddev") = e.stddev,
                            py::arg("min") = e.min, py::arg("max") = e.max,
                            py::arg("spread") = e.spread,
                            py::arg("bin_width") = e.bin_width,
                            py::arg("histogram") = e.histogram);
        },
        py::arg("trajectory"), py::arg("bins") = 50);
    m.def(
        "formation_check",
        [](double e_cluster, double e_unit, std::size_t n_units) {
            const auto f = trajstats::formation_check(e_cluster, e_unit, n_units);
            return py::dict(py::arg("delta_ev") = f.delta_ev,
                            py::arg("more_stable") = f.more_stable);
        },
        py::arg("e_cluster_ev"), py::arg("e_unit_ev"), py::arg("n_units"));

    // candidate generation
    m.def("build_cube_seed",
          [](double diagonal) { return posnergen::build_cube_seed(diagonal); },
          py::arg("diagonal") = 9.0);
    m.def(
        "enumerate_rotated",
        [](const geom::Structure& seed, int step_deg) {
            posnergen::GenerationScheme scheme;
            scheme.rotation_step_deg = step_deg;
            return posnergen::enumerate_rotated(seed, scheme);
        },
        py::arg("seed"), py::arg("rotation_step_deg") = 30);
    m.def(
        "scale_set",
        [](const std::vector<geom::Structure>& in, std::vector<double> factors) {
            return posnergen::scale_set(in, factors);
        },
        py::arg("structures"), py::arg("factors"));
    m.def(
        "build_s6",
        [](double z_axial, const geom::Vec3& ca_orbit, const geom::Vec3& p_orbit,
           const geom::Vec3& orient) {
            posnergen::S6Params p;
            p.z_axial = z_axial;
            p.ca_orbit = ca_orbit;
            p.p_orbit = p_orbit;
            p.orient = orient;
            return posnergen::build_s6(p);
        },
        py::arg("z_axial"), py::arg("ca_orbit"), py::arg("p_orbit"),
        py::arg("orient"));
    m.def("is_posner_stoichiometry", &posnergen::is_posner_stoichiometry,
          py::arg("structure"));

    // classical energies and minimization
    m.def(
        "energy",
        [](const geom::Structure& s) {
            return ffopt::energy(s, ffopt::PairPotentialParams::posner_defaults());
        },
        py::arg("structure"), "Rigid-ion pair-potential energy, eV");
    m.def(
        "relax",
        [](const geom::Structure& s, int max_iterations) {
            ffopt::OptimizerConfig cfg;
            cfg.max_iterations = max_iterations;
            const auto r =
                ffopt::relax(s, ffopt::PairPotentialParams::posner_defaults(), cfg);
            return py::dict(py::arg("structure") = r.structure,
                            py::arg("energy") = r.energy,
                            py::arg("iterations") = r.iterations,
                            py::arg("converged") = r.converged);
        },
        py::arg("structure"), py::arg("max_iterations") = 2000);
    m.def(
        "minimize_s6",
        [](std::size_t starts, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> jitter(-0.3, 0.3);
            std::vector<posnergen::S6Params> vec;
            for (std::size_t i = 0; i < starts; ++i) {
                posnergen::S6Params p;
                if (i > 0) {
                    p.z_axial += jitter(rng);
                    for (int c = 0; c < 3; ++c) {
                        p.ca_orbit[c] += jitter(rng);
                        p.p_orbit[c] += jitter(rng);
                        p.orient[c] += jitter(rng);
                    }
                }
                vec.push_back(p);
            }
            auto params = ffopt::PairPotentialParams::posner_defaults();
            params.exclude_intra_po4 = true;
            ffopt::OptimizerConfig cfg;
            cfg.seed = seed;
            const auto r = ffopt::minimize_s6(vec, params, cfg);
            return py::dict(py::arg("structure") = r.structure,
                            py::arg("energy") = r.energy,
                            py::arg("z_axial") = r.params.z_axial);
        },
        py::arg("starts") = 4, py::arg("seed") = 0,
        "Symmetry-constrained minimization from jittered default starts");
}
