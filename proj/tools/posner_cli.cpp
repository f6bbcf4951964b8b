#include "CLI11.hpp"
#include "json.hpp"

#include "posner/align.hpp"
#include "posner/ffopt.hpp"
#include "posner/posnergen.hpp"
#include "posner/symdetect.hpp"
#include "posner/trajstats.hpp"
#include "posner/xyzio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace posner;

namespace {

constexpr const char* kVersion = "1.0.0";

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// write-temp-then-rename so partial runs never leave a corrupt file
void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

geom::Trajectory load_traj(const std::string& path, double timestep_fs) {
    try {
        return xyzio::parse_traj(slurp(path), timestep_fs);
    } catch (const std::invalid_argument& e) {
        throw DataError(path + ": " + e.what());
    }
}

geom::Structure load_structure(const std::string& path) {
    try {
        return xyzio::parse_xyz(slurp(path));
    } catch (const std::invalid_argument& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string describe(const symdetect::PointGroup& pg) {
    std::ostringstream out;
    out << pg.schoenflies << " (order ";
    if (pg.order == symdetect::kInfiniteOrder) {
        out << "inf";
    } else {
        out << pg.order;
    }
    out << ")\n";
    for (const auto& e : pg.elements) {
        out << "  " << e.name() << "  score " << e.score << "\n";
    }
    return out.str();
}

json timeline_json(const std::vector<trajstats::TimelineSegment>& tl) {
    json arr = json::array();
    for (const auto& s : tl) {
        arr.push_back({{"start_frame", s.start_frame},
                       {"end_frame", s.end_frame},
                       {"label", s.group_label},
                       {"duration_fs", s.duration_fs}});
    }
    return arr;
}

std::string timeline_csv(const std::vector<trajstats::TimelineSegment>& tl) {
    std::ostringstream out;
    out << "start_frame,end_frame,label,duration_fs\n";
    for (const auto& s : tl) {
        out << s.start_frame << "," << s.end_frame << "," << s.group_label << ","
            << s.duration_fs << "\n";
    }
    return out.str();
}

json stats_json(const trajstats::EnergyStats& es) {
    return {{"mean_ev", es.mean},     {"stddev_ev", es.stddev},
            {"min_ev", es.min},       {"max_ev", es.max},
            {"spread_ev", es.spread}, {"bin_width_ev", es.bin_width},
            {"histogram", es.histogram}};
}

geom::Trajectory drop_frames(const geom::Trajectory& traj, std::size_t skip) {
    if (skip >= traj.n_frames()) throw DataError("no frames left after skip");
    geom::Trajectory out;
    out.timestep_fs = traj.timestep_fs;
    out.temperature_k = traj.temperature_k;
    out.frames.assign(traj.frames.begin() + (long)skip, traj.frames.end());
    return out;
}

struct KRange {
    std::size_t lo = 2, hi = 6;
};

KRange parse_k_range(const std::string& text) {
    KRange r;
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw CLI::ValidationError("--k-range", "expected LO..HI");
    try {
        r.lo = std::stoul(text.substr(0, dots));
        r.hi = std::stoul(text.substr(dots + 2));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--k-range", "expected LO..HI");
    }
    if (r.lo < 2 || r.hi < r.lo) throw CLI::ValidationError("--k-range", "need 2 <= LO <= HI");
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posner cluster structural analysis"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    bool json_errors = false;
    app.add_flag("--json-errors", json_errors,
                 "emit machine-readable errors on stderr");

    // generate
    auto* gen = app.add_subcommand("generate", "enumerate candidate structures");
    double diagonal = 9.0;
    int step = 30;
    std::vector<double> scales = {0.90, 0.95, 1.00, 1.05};
    std::string gen_out = "generated";
    bool skip_structures = false;
    gen->add_option("--diagonal", diagonal, "cube body diagonal, Angstrom");
    gen->add_option("--step", step, "rotation step, degrees");
    gen->add_option("--scales", scales, "radial scale factors")->delimiter(',');
    gen->add_option("--out", gen_out, "output directory");
    gen->add_flag("--census-only", skip_structures, "write census.json only");

    // detect
    auto* det = app.add_subcommand("detect", "point-group detection");
    std::string det_file;
    double det_tol = 0.1;
    det->add_option("file", det_file, "structure XYZ")->required();
    det->add_option("--tol", det_tol, "normalized displacement tolerance");

    // timeline
    auto* tml = app.add_subcommand("timeline", "per-frame symmetry timeline");
    std::string tml_file, tml_out = ".";
    double tml_tol = 0.1, tml_dt = 0.0;
    std::size_t tml_skip = 500;
    tml->add_option("traj", tml_file, "trajectory XYZ")->required();
    tml->add_option("--tol", tml_tol, "detection tolerance");
    tml->add_option("--skip", tml_skip, "frames discarded as equilibration");
    tml->add_option("--timestep-fs", tml_dt, "frame spacing, fs")->required();
    tml->add_option("--out", tml_out, "output directory");

    // average
    auto* avg = app.add_subcommand("average", "aligned time-average structure");
    std::string avg_file, avg_out = "average.xyz";
    double avg_skip_fraction = 0.05, avg_tol = 0.1;
    long avg_ref = -1;
    avg->add_option("traj", avg_file, "trajectory XYZ")->required();
    avg->add_option("--skip-fraction", avg_skip_fraction,
                    "leading fraction discarded");
    avg->add_option("--ref", avg_ref,
                    "alignment reference frame (default first retained)");
    avg->add_option("--tol", avg_tol, "tolerance for the reported label");
    avg->add_option("--out", avg_out, "output XYZ path");

    // pca
    auto* pc = app.add_subcommand("pca", "principal component analysis");
    std::string pca_file, pca_out = ".";
    std::size_t pca_modes = 5, pca_skip = 0;
    double pca_tol = 0.1;
    pc->add_option("traj", pca_file, "trajectory XYZ")->required();
    pc->add_option("--modes", pca_modes, "modes to report");
    pc->add_option("--skip", pca_skip, "frames discarded as equilibration");
    pc->add_option("--tol", pca_tol, "tolerance for displaced-structure labels");
    pc->add_option("--out", pca_out, "output directory");

    // cluster
    auto* clu = app.add_subcommand("cluster", "k-means over frames");
    std::string clu_file, clu_k = "auto", clu_range = "2..6", clu_out = ".";
    std::size_t clu_skip = 0;
    std::uint64_t clu_seed = 0;
    double clu_tol = 0.1;
    clu->add_option("traj", clu_file, "trajectory XYZ")->required();
    clu->add_option("--k", clu_k, "cluster count or 'auto'");
    clu->add_option("--k-range", clu_range, "search range for --k auto");
    clu->add_option("--seed", clu_seed, "RNG seed");
    clu->add_option("--skip", clu_skip, "frames discarded as equilibration");
    clu->add_option("--tol", clu_tol, "tolerance for centroid labels");
    clu->add_option("--out", clu_out, "output directory");

    // energy-stats
    auto* est = app.add_subcommand("energy-stats", "per-frame energy summary");
    std::string est_file;
    std::size_t est_bins = 50;
    est->add_option("traj", est_file, "trajectory XYZ")->required();
    est->add_option("--bins", est_bins, "histogram bin count");

    // s6min
    auto* s6c = app.add_subcommand("s6min", "symmetry-constrained minimization");
    std::size_t s6_starts = 4;
    std::uint64_t s6_seed = 0;
    std::string s6_potential, s6_out = ".";
    s6c->add_option("--starts", s6_starts, "number of simplex starts")
        ->check(CLI::PositiveNumber);
    s6c->add_option("--seed", s6_seed, "RNG seed");
    s6c->add_option("--potential", s6_potential, "pair-potential config file");
    s6c->add_option("--out", s6_out, "output directory");

    // report
    auto* rep = app.add_subcommand("report", "aggregate run directory");
    std::string rep_dir, rep_out;
    rep->add_option("rundir", rep_dir, "directory with subcommand outputs")
        ->required();
    rep->add_option("--out", rep_out, "output JSON (default RUNDIR/report.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (json_errors && e.get_exit_code() != 0) {
            std::cerr << json{{"error", e.what()}, {"code", 1}}.dump() << "\n";
            return 1;
        }
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            posnergen::GenerationScheme scheme;
            scheme.rotation_step_deg = step;
            scheme.scale_factors = scales;
            const auto seed = posnergen::build_cube_seed(diagonal);
            const auto rotated = posnergen::enumerate_rotated(seed, scheme);
            const auto scaled = posnergen::scale_set(rotated, scheme.scale_factors);
            const bool defaults = diagonal == 9.0 && step == 30 &&
                                  scales == std::vector<double>{0.90, 0.95, 1.00, 1.05};
            json census = {{"diagonal", diagonal},
                           {"rotation_step_deg", step},
                           {"scale_factors", scales},
                           {"rotated_unique", rotated.size()},
                           {"scaled_total", scaled.size()}};
            if (!skip_structures) {
                geom::Trajectory rt, st;
                rt.frames = rotated;
                st.frames = scaled;
                atomic_write(fs::path(gen_out) / "rotated.xyz",
                             xyzio::write_traj(rt));
                atomic_write(fs::path(gen_out) / "scaled.xyz",
                             xyzio::write_traj(st));
            }
            atomic_write(fs::path(gen_out) / "census.json", census.dump(2) + "\n");
            std::cout << census.dump(2) << "\n";
            if (defaults && (rotated.size() < 2800 || scaled.size() < 10000)) {
                throw DataError("default generation census below expected counts");
            }
        } else if (*det) {
            const auto pg =
                symdetect::detect_point_group(load_structure(det_file), det_tol);
            std::cout << describe(pg);
        } else if (*tml) {
            const auto traj = load_traj(tml_file, tml_dt);
            const auto tl = trajstats::symmetry_timeline(traj, tml_tol, tml_skip);
            atomic_write(fs::path(tml_out) / "segments.csv", timeline_csv(tl));
            atomic_write(fs::path(tml_out) / "occurrence.json",
                         json(trajstats::occurrence_histogram(tl)).dump(2) + "\n");
            json pers;
            for (const auto& [label, st] : trajstats::persistence_stats(tl)) {
                pers[label] = {{"max_duration_fs", st.max_duration_fs},
                               {"mean_duration_fs", st.mean_duration_fs},
                               {"segment_count", st.segment_count}};
            }
            atomic_write(fs::path(tml_out) / "persistence.json",
                         pers.dump(2) + "\n");
            std::cout << "segments: " << tl.size() << "\n";
        } else if (*avg) {
            auto traj = load_traj(avg_file, 1.0);
            if (avg_skip_fraction < 0.0 || avg_skip_fraction >= 1.0) {
                throw DataError("--skip-fraction must be in [0, 1)");
            }
            const std::size_t skip = static_cast<std::size_t>(
                std::ceil(avg_skip_fraction * (double)traj.n_frames()));
            auto retained = drop_frames(traj, skip);
            std::size_t ref = avg_ref < 0 ? 0 : (std::size_t)avg_ref;
            if (ref >= retained.n_frames()) throw DataError("--ref out of range");
            const auto aligned =
                align::align_trajectory(retained, retained.frames[ref]);
            auto mean = align::time_average(aligned, 0.0);
            const auto pg = symdetect::detect_point_group(mean, avg_tol);
            atomic_write(avg_out, xyzio::write_xyz(mean));
            std::cout << "label: " << pg.schoenflies << "\n";
        } else if (*pc) {
            const auto traj = drop_frames(load_traj(pca_file, 1.0), pca_skip);
            const auto aligned = align::align_trajectory(traj, traj.frames[0]);
            const auto p = trajstats::pca(aligned);
            const std::size_t n_modes = std::min(pca_modes, p.eigenvalues.size());
            std::ostringstream ev;
            ev << "mode,eigenvalue_a2,explained_fraction\n";
            for (std::size_t m = 0; m < n_modes; ++m) {
                ev << m << "," << p.eigenvalues[m] << ","
                   << p.explained_fraction[m] << "\n";
            }
            atomic_write(fs::path(pca_out) / "eigenvalues.csv", ev.str());
            atomic_write(fs::path(pca_out) / "mean.xyz", xyzio::write_xyz(p.mean));
            for (std::size_t m = 0; m < n_modes; ++m) {
                const auto md = trajstats::eigenmode_displacements(p, m);
                std::ostringstream csv;
                csv << "atom,dx,dy,dz\n";
                for (std::size_t i = 0; i < md.displacements.size(); ++i) {
                    const auto& d = md.displacements[i];
                    csv << i << "," << d[0] << "," << d[1] << "," << d[2] << "\n";
                }
                atomic_write(fs::path(pca_out) /
                                 ("mode_" + std::to_string(m) + ".csv"),
                             csv.str());
                geom::Structure plus = p.mean, minus = p.mean;
                for (std::size_t i = 0; i < plus.size(); ++i) {
                    plus.atoms[i].position += md.displacements[i];
                    minus.atoms[i].position -= md.displacements[i];
                }
                std::cout << "mode " << m << ": eigenvalue " << p.eigenvalues[m]
                          << ", labels "
                          << symdetect::detect_point_group(plus, pca_tol).schoenflies
                          << "/"
                          << symdetect::detect_point_group(minus, pca_tol).schoenflies
                          << "\n";
            }
        } else if (*clu) {
            const auto traj = drop_frames(load_traj(clu_file, 1.0), clu_skip);
            const auto aligned = align::align_trajectory(traj, traj.frames[0]);
            std::size_t k = 0;
            json silhouettes = json::object();
            if (clu_k == "auto") {
                const KRange range = parse_k_range(clu_range);
                double best = -2.0;
                for (std::size_t kk = range.lo;
                     kk <= std::min(range.hi, aligned.n_frames()); ++kk) {
                    const double s = trajstats::kmeans(aligned, kk, clu_seed).silhouette;
                    silhouettes[std::to_string(kk)] = s;
                    if (s > best + 1e-12) {
                        best = s;
                        k = kk;
                    }
                }
                if (k == 0) throw DataError("empty k range after clamping");
            } else {
                try {
                    k = std::stoul(clu_k);
                } catch (const std::exception&) {
                    throw DataError("--k must be a count or 'auto'");
                }
            }
            const auto r = trajstats::kmeans(aligned, k, clu_seed);
            silhouettes[std::to_string(k)] = r.silhouette;
            std::ostringstream csv;
            csv << "frame,cluster\n";
            for (std::size_t f = 0; f < r.assignments.size(); ++f) {
                csv << f << "," << r.assignments[f] << "\n";
            }
            atomic_write(fs::path(clu_out) / "assignments.csv", csv.str());
            atomic_write(fs::path(clu_out) / "silhouette.json",
                         silhouettes.dump(2) + "\n");
            std::cout << "k: " << k << "\n";
            for (std::size_t c = 0; c < r.centroids.size(); ++c) {
                atomic_write(fs::path(clu_out) /
                                 ("centroid_" + std::to_string(c) + ".xyz"),
                             xyzio::write_xyz(r.centroids[c]));
                std::cout << "cluster " << c << ": "
                          << symdetect::detect_point_group(r.centroids[c], clu_tol)
                                 .schoenflies
                          << "\n";
            }
        } else if (*est) {
            const auto traj = load_traj(est_file, 1.0);
            std::cout << stats_json(trajstats::energy_stats(traj, est_bins)).dump(2)
                      << "\n";
        } else if (*s6c) {
            auto params = s6_potential.empty()
                              ? ffopt::PairPotentialParams::posner_defaults()
                              : ffopt::parse_potential_file(slurp(s6_potential));
            params.exclude_intra_po4 = true;
            std::mt19937_64 rng(s6_seed);
            std::uniform_real_distribution<double> jitter(-0.3, 0.3);
            std::vector<posnergen::S6Params> starts;
            for (std::size_t i = 0; i < s6_starts; ++i) {
                posnergen::S6Params p;
                if (i > 0) {
                    p.z_axial += jitter(rng);
                    for (int c = 0; c < 3; ++c) {
                        p.ca_orbit[c] += jitter(rng);
                        p.p_orbit[c] += jitter(rng);
                        p.orient[c] += jitter(rng);
                    }
                }
                starts.push_back(p);
            }
            ffopt::OptimizerConfig cfg;
            cfg.seed = s6_seed;
            const auto res = ffopt::minimize_s6(starts, params, cfg);
            json out = {{"energy_ev", res.energy},
                        {"params",
                         {{"z_axial", res.params.z_axial},
                          {"ca_orbit", {res.params.ca_orbit[0], res.params.ca_orbit[1],
                                        res.params.ca_orbit[2]}},
                          {"p_orbit", {res.params.p_orbit[0], res.params.p_orbit[1],
                                       res.params.p_orbit[2]}},
                          {"orient", {res.params.orient[0], res.params.orient[1],
                                      res.params.orient[2]}}}}};
            atomic_write(fs::path(s6_out) / "s6min.json", out.dump(2) + "\n");
            atomic_write(fs::path(s6_out) / "s6min.xyz",
                         xyzio::write_xyz(res.structure));
            std::cout << out.dump(2) << "\n";
            // qualitative follow-up: label of the unconstrained relaxation
            auto relax_params = params;
            const auto relaxed = ffopt::relax(res.structure, relax_params);
            std::cout << "relaxed label: "
                      << symdetect::detect_point_group(relaxed.structure, 1e-3)
                             .schoenflies
                      << "\n";
        } else if (*rep) {
            if (!fs::is_directory(rep_dir)) throw DataError(rep_dir + " is not a directory");
            json bundle = {{"tool_version", kVersion}, {"sections", json::object()}};
            const std::pair<const char*, const char*> known[] = {
                {"census", "census.json"},       {"occurrence", "occurrence.json"},
                {"persistence", "persistence.json"}, {"silhouette", "silhouette.json"},
                {"s6min", "s6min.json"},
            };
            for (const auto& [key, file] : known) {
                const fs::path p = fs::path(rep_dir) / file;
                if (fs::exists(p)) bundle["sections"][key] = json::parse(slurp(p));
            }
            for (const char* file : {"segments.csv", "assignments.csv",
                                     "eigenvalues.csv"}) {
                const fs::path p = fs::path(rep_dir) / file;
                if (fs::exists(p)) bundle["sections"][fs::path(file).stem()] = slurp(p);
            }
            const fs::path out_path =
                rep_out.empty() ? fs::path(rep_dir) / "report.json" : fs::path(rep_out);
            atomic_write(out_path, bundle.dump(2) + "\n");
            std::cout << "wrote " << out_path.string() << "\n";
        }
    } catch (const std::exception& e) {
        if (json_errors) {
            std::cerr << json{{"error", e.what()}, {"code", 2}}.dump() << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return 2;
    }
    return 0;
}
