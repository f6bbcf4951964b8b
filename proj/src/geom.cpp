#include "posner/geom.hpp"

#include <cmath>
#include <map>

namespace posner::geom {

const Element& element_by_symbol(const std::string& symbol) {
    static const std::map<std::string, Element> table = {
        {"H", {"H", 1.008}},   {"C", {"C", 12.011}},
        {"N", {"N", 14.007}},  {"O", {"O", 15.999}},
        {"P", {"P", 30.973762}}, {"Ca", {"Ca", 40.078}},
    };
    auto it = table.find(symbol);
    if (it == table.end()) {
        throw std::invalid_argument("unknown element symbol: " + symbol);
    }
    return it->second;
}

bool Structure::same_species_sequence(const Structure& other) const {
    if (atoms.size() != other.atoms.size()) return false;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!(atoms[i].element == other.atoms[i].element)) return false;
    }
    return true;
}

void Trajectory::validate() const {
    if (frames.empty()) throw std::invalid_argument("trajectory has no frames");
    for (std::size_t f = 1; f < frames.size(); ++f) {
        if (!frames[0].same_species_sequence(frames[f])) {
            throw std::invalid_argument(
                "trajectory frame " + std::to_string(f) +
                " differs from frame 0 in atom count or element sequence");
        }
    }
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
}

bool RigidTransform::is_proper_orthonormal(double tol) const {
    const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
}

Vec3 centroid(const Structure& s) {
    if (s.atoms.empty()) throw std::invalid_argument("empty structure");
    Vec3 sum = Vec3::Zero();
    for (const auto& a : s.atoms) sum += a.position;
    return sum / static_cast<double>(s.atoms.size());
}

Vec3 center_of_mass(const Structure& s) {
    if (s.atoms.empty()) throw std::invalid_argument("empty structure");
    Vec3 sum = Vec3::Zero();
    double total = 0.0;
    for (const auto& a : s.atoms) {
        if (a.element.mass <= 0.0) {
            throw std::invalid_argument("non-positive mass for " + a.element.symbol);
        }
        sum += a.element.mass * a.position;
        total += a.element.mass;
    }
    return sum / total;
}

InertiaResult inertia_tensor(const Structure& s) {
    if (s.atoms.size() < 2) {
        throw std::invalid_argument("inertia tensor needs at least 2 atoms");
    }
    const Vec3 com = center_of_mass(s);
    Mat3 tensor = Mat3::Zero();
    double spread = 0.0;
    for (const auto& a : s.atoms) {
        const Vec3 r = a.position - com;
        spread = std::max(spread, r.norm());
        tensor += a.element.mass * (r.squaredNorm() * Mat3::Identity() -
                                    r * r.transpose());
    }
    if (spread < 1e-12) {
        throw std::invalid_argument("all atoms coincident; inertia tensor degenerate");
    }

    Eigen::SelfAdjointEigenSolver<Mat3> solver(tensor);
    InertiaResult out;
    out.tensor = tensor;
    // SelfAdjointEigenSolver sorts ascending; report descending.
    for (int i = 0; i < 3; ++i) {
        out.moments[i] = solver.eigenvalues()[2 - i];
        out.axes.col(i) = solver.eigenvectors().col(2 - i);
    }
    const double scale = std::max(std::abs(out.moments[0]), 1e-300);
    for (int i = 0; i < 2; ++i) {
        if (std::abs(out.moments[i] - out.moments[i + 1]) / scale < 1e-6) {
            out.degenerate = true;
        }
    }
    return out;
}

double rmsd(const Structure& a, const Structure& b) {
    if (!a.same_species_sequence(b)) {
        throw std::invalid_argument("rmsd: structures differ in atom count or species");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
        acc += (a.atoms[i].position - b.atoms[i].position).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(a.atoms.size()));
}

Structure apply_transform(const Structure& s, const RigidTransform& t) {
    if (!t.is_proper_orthonormal()) {
        throw std::invalid_argument("apply_transform: rotation is not proper orthonormal");
    }
    Structure out = s;
    for (auto& a : out.atoms) {
        a.position = t.rotation * a.position + t.translation;
    }
    return out;
}

}  // namespace posner::geom
