#pragma once

#include "posner/geom.hpp"
#include "posner/posnergen.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace posner::ffopt {

struct BuckinghamTerm {
    double a = 0.0;    // eV
    double rho = 1.0;  // Angstrom
    double c = 0.0;    // eV * A^6
};

/// Rigid-ion Coulomb + Buckingham pair potential. Pairs without a
/// Buckingham entry interact through Coulomb only.
struct PairPotentialParams {
    std::map<std::string, double> charges;  // e, per element symbol
    std::map<std::pair<std::string, std::string>, BuckinghamTerm> buckingham;
    double coulomb_constant = 14.399645;  // eV * A / e^2
    bool exclude_intra_po4 = false;       // rigid-tetrahedron flag

    /// Formal-charge defaults neutralizing Ca9(PO4)6, with an
    /// illustrative Buckingham set. Not fit to any published result.
    static PairPotentialParams posner_defaults();

    const BuckinghamTerm* lookup(const std::string& e1, const std::string& e2) const;
    void set_buckingham(const std::string& e1, const std::string& e2,
                        BuckinghamTerm t);
};

/// Parse the key-value potential file: lines are
///   charge <element> <q_e>
///   buckingham <el1> <el2> <A_eV> <rho_A> <C_eVA6>
///   exclude_intra_po4 <0|1>
/// Blank lines and lines starting with '#' are ignored.
PairPotentialParams parse_potential_file(const std::string& text);

double energy(const geom::Structure& s, const PairPotentialParams& p);

/// Analytic gradient, eV/A per coordinate.
std::vector<geom::Vec3> gradient(const geom::Structure& s,
                                 const PairPotentialParams& p);

struct OptimizerConfig {
    int max_iterations = 2000;
    double gradient_tolerance = 1e-4;  // eV/A, max per-atom gradient norm
    int restarts = 1;
    double initial_step = 0.05;          // A, relax line search start
    double simplex_scale = 0.4;          // initial simplex edge
    std::vector<double> lower_bounds;    // optional box for minimize_s6
    std::vector<double> upper_bounds;
    std::uint64_t seed = 0;
};

struct RelaxResult {
    geom::Structure structure;
    double energy = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Backtracking steepest descent; energy non-increasing over accepted
/// steps. A singular geometry mid-search aborts with the last valid state.
RelaxResult relax(const geom::Structure& s, const PairPotentialParams& p,
                  const OptimizerConfig& cfg = {});

struct S6MinResult {
    posnergen::S6Params params;
    geom::Structure structure;
    double energy = 0.0;
};

/// Nelder-Mead over the 10 S6 parameters with energy(build_s6(params))
/// as the objective; orbit collisions and out-of-bounds points score +inf.
/// Returns the lowest-energy start (ties broken by start index).
S6MinResult minimize_s6(const std::vector<posnergen::S6Params>& starts,
                        const PairPotentialParams& p,
                        const OptimizerConfig& cfg = {},
                        const posnergen::PhosphateTemplate& tmpl = {});

/// 10-vector <-> S6Params packing shared by minimize_s6 and its tests.
std::array<double, 10> pack_s6(const posnergen::S6Params& p);
posnergen::S6Params unpack_s6(const std::array<double, 10>& v);

}  // namespace posner::ffopt
