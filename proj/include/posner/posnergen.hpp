#pragma once

#include "posner/geom.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace posner::posnergen {

/// Rigid PO4 unit: four O at the vertices of an exact regular
/// tetrahedron around P.
struct PhosphateTemplate {
    double po_bond = 1.55;  // Angstrom

    /// O offsets from P, unrotated.
    std::array<geom::Vec3, 4> oxygen_offsets() const;
};

/// The 10 scalars parameterizing an exactly-S6 Posner structure:
/// axial Ca height, representative orbit Ca position, representative P
/// position, PO4 orientation (ZYZ Euler angles).
struct S6Params {
    double z_axial = 3.0;
    geom::Vec3 ca_orbit{2.9, 0.4, 1.1};
    geom::Vec3 p_orbit{3.3, 0.9, -0.9};
    geom::Vec3 orient{0.3, 0.7, 1.1};  // radians
};

enum class SweepMode {
    UniformAllGroups,   // one rotation triple applied to all six PO4 groups
    PerGroupSweep,      // each group rotated through the grid, others fixed
    Combined,           // uniform + per-group + shared-rotation pair sweeps (default)
    FullProductCapped,  // lexicographic product of per-group triples, capped
};

struct GenerationScheme {
    int rotation_step_deg = 30;  // must divide 360
    SweepMode mode = SweepMode::Combined;
    std::vector<double> scale_factors{0.90, 0.95, 1.00, 1.05};
    std::size_t product_cap = 20000;  // FullProductCapped only
};

/// Index sets of the six PO4 groups (P atom + its 4 nearest O).
/// Throws if a nearest O is shared between groups.
struct Po4Group {
    std::size_t p_index;
    std::array<std::size_t, 4> o_indices;
};
std::vector<Po4Group> identify_po4_groups(const geom::Structure& s);

/// BCC Ca / face-centered PO4 cube seed. Atom order: central Ca,
/// 8 corner Ca, then six (P, 4 O) blocks.
geom::Structure build_cube_seed(double diagonal = 9.0,
                                const PhosphateTemplate& tmpl = {});

std::vector<geom::Structure> enumerate_rotated(const geom::Structure& seed,
                                               const GenerationScheme& scheme = {});

/// Radial scaling of Ca and P about the atom at center_index; each PO4
/// translates rigidly with its P.
std::vector<geom::Structure> scale_set(const std::vector<geom::Structure>& in,
                                       const std::vector<double>& factors,
                                       std::size_t center_index = 0);

enum class TemplateGroup { S6, Th, C3v, D3d };

/// Exact-symmetry Ca9(PO4)6 structure built from an asymmetric unit
/// replicated by the group's operations.
geom::Structure build_template(TemplateGroup group);

geom::Structure perturb(const geom::Structure& s, double magnitude,
                        std::uint64_t seed);

geom::Structure build_s6(const S6Params& params,
                         const PhosphateTemplate& tmpl = {});

/// True iff s has the Ca9P6O24 stoichiometry.
bool is_posner_stoichiometry(const geom::Structure& s);

/// RMSD between two same-seed candidates, minimized over O relabelings
/// within each PO4 group. Used for deduplication.
double grouped_rmsd(const geom::Structure& a, const geom::Structure& b,
                    const std::vector<Po4Group>& groups);

}  // namespace posner::posnergen
