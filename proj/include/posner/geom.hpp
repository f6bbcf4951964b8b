#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace posner::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Chemical element with the atomic mass used for inertia and
/// center-of-mass computations.
struct Element {
    std::string symbol;
    double mass = 0.0;  // amu

    bool operator==(const Element& o) const { return symbol == o.symbol; }
};

/// Look up an element by symbol. Throws std::invalid_argument for
/// symbols not in the table.
const Element& element_by_symbol(const std::string& symbol);

struct Atom {
    Element element;
    Vec3 position;  // Angstrom
};

/// An element-tagged point set. Atom order is identity-preserving:
/// index i refers to the same atom in every structure derived from
/// this one.
struct Structure {
    std::vector<Atom> atoms;
    std::optional<double> energy;   // eV
    std::optional<double> time_fs;  // frame time, when read from a trajectory
    std::string label;

    std::size_t size() const { return atoms.size(); }

    bool same_species_sequence(const Structure& other) const;
};

/// Ordered frames with a common atom count and element sequence.
struct Trajectory {
    std::vector<Structure> frames;
    double timestep_fs = 1.0;
    double temperature_k = 0.0;
    std::string label;

    std::size_t n_frames() const { return frames.size(); }

    /// Throws std::invalid_argument if any frame disagrees with frame 0
    /// in atom count or element sequence, or if there are no frames.
    void validate() const;
};

/// Proper rigid motion x -> R x + t.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    /// this ∘ other: apply `other` first, then this.
    RigidTransform compose(const RigidTransform& other) const;

    bool is_proper_orthonormal(double tol = 1e-10) const;
};

Vec3 centroid(const Structure& s);
Vec3 center_of_mass(const Structure& s);

struct InertiaResult {
    Mat3 tensor;              // about center of mass, amu * A^2
    Vec3 moments;             // descending eigenvalues
    Mat3 axes;                // columns are principal axes, orthonormal
    bool degenerate = false;  // some relative eigenvalue gap < 1e-6
};

InertiaResult inertia_tensor(const Structure& s);

/// Fixed-order RMSD, no alignment. Throws on species mismatch.
double rmsd(const Structure& a, const Structure& b);

/// Throws std::invalid_argument if t is not proper orthonormal.
Structure apply_transform(const Structure& s, const RigidTransform& t);

}  // namespace posner::geom
