#include "posner/posnergen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>

namespace posner::posnergen {

using geom::Atom;
using geom::Mat3;
using geom::Structure;
using geom::Vec3;

namespace {

const geom::Element& kCa = geom::element_by_symbol("Ca");
const geom::Element& kP = geom::element_by_symbol("P");
const geom::Element& kO = geom::element_by_symbol("O");

Mat3 euler_zyz(const Vec3& angles) {
    return (Eigen::AngleAxisd(angles[0], Vec3::UnitZ()) *
            Eigen::AngleAxisd(angles[1], Vec3::UnitY()) *
            Eigen::AngleAxisd(angles[2], Vec3::UnitZ()))
        .toRotationMatrix();
}

}  // namespace

std::array<Vec3, 4> PhosphateTemplate::oxygen_offsets() const {
    const double s = po_bond / std::sqrt(3.0);
    return {Vec3(s, s, s), Vec3(s, -s, -s), Vec3(-s, s, -s), Vec3(-s, -s, s)};
}

std::vector<Po4Group> identify_po4_groups(const Structure& s) {
    std::vector<std::size_t> p_atoms, o_atoms;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.atoms[i].element.symbol == "P") p_atoms.push_back(i);
        if (s.atoms[i].element.symbol == "O") o_atoms.push_back(i);
    }
    std::vector<Po4Group> groups;
    std::vector<char> claimed(s.size(), 0);
    for (std::size_t p : p_atoms) {
        std::vector<std::pair<double, std::size_t>> dist;
        for (std::size_t o : o_atoms) {
            dist.emplace_back((s.atoms[p].position - s.atoms[o].position).norm(), o);
        }
        if (dist.size() < 4) {
            throw std::invalid_argument("PO4 group identification: fewer than 4 O");
        }
        std::partial_sort(dist.begin(), dist.begin() + 4, dist.end());
        Po4Group g{p, {}};
        for (int j = 0; j < 4; ++j) {
            const std::size_t o = dist[j].second;
            if (claimed[o]) {
                throw std::invalid_argument(
                    "PO4 group identification: O atom " + std::to_string(o) +
                    " is nearest to two P atoms");
            }
            claimed[o] = 1;
            g.o_indices[j] = o;
        }
        groups.push_back(g);
    }
    return groups;
}

Structure build_cube_seed(double diagonal, const PhosphateTemplate& tmpl) {
    if (diagonal <= 0.0) throw std::invalid_argument("diagonal must be positive");
    const double edge = diagonal / std::sqrt(3.0);
    const double h = edge / 2.0;

    Structure s;
    s.label = "cube-seed";
    s.atoms.push_back({kCa, Vec3::Zero()});
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1})
                s.atoms.push_back({kCa, Vec3(sx * h, sy * h, sz * h)});

    const std::array<Vec3, 6> faces = {Vec3(h, 0, 0),  Vec3(-h, 0, 0),
                                       Vec3(0, h, 0),  Vec3(0, -h, 0),
                                       Vec3(0, 0, h),  Vec3(0, 0, -h)};
    const auto offsets = tmpl.oxygen_offsets();
    for (const Vec3& f : faces) {
        s.atoms.push_back({kP, f});
        for (const Vec3& o : offsets) s.atoms.push_back({kO, f + o});
    }
    return s;
}

namespace {

Structure rotate_groups(const Structure& seed, const std::vector<Po4Group>& groups,
                        const std::vector<Mat3>& per_group) {
    Structure out = seed;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const Vec3 p = seed.atoms[groups[g].p_index].position;
        for (std::size_t o : groups[g].o_indices) {
            out.atoms[o].position = p + per_group[g] * (seed.atoms[o].position - p);
        }
    }
    return out;
}

// Canonical key: per-group lexicographically sorted rounded O positions.
std::string dedup_key(const Structure& s, const std::vector<Po4Group>& groups) {
    std::string key;
    key.reserve(groups.size() * 4 * 24);
    char buf[64];
    for (const auto& g : groups) {
        std::array<std::array<long long, 3>, 4> rows;
        for (int j = 0; j < 4; ++j) {
            const Vec3& p = s.atoms[g.o_indices[j]].position;
            for (int c = 0; c < 3; ++c) {
                rows[j][c] = llround(p[c] * 1e6);
            }
        }
        std::sort(rows.begin(), rows.end());
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld;", r[0], r[1], r[2]);
            key += buf;
        }
    }
    return key;
}

}  // namespace

double grouped_rmsd(const Structure& a, const Structure& b,
                    const std::vector<Po4Group>& groups) {
    if (!a.same_species_sequence(b)) {
        throw std::invalid_argument("grouped_rmsd: species mismatch");
    }
    std::vector<char> in_group(a.size(), 0);
    double acc = 0.0;
    for (const auto& g : groups) {
        for (std::size_t o : g.o_indices) in_group[o] = 1;
        // Best of the 4! O relabelings within this group.
        std::array<int, 4> perm = {0, 1, 2, 3};
        double best = std::numeric_limits<double>::infinity();
        do {
            double sum = 0.0;
            for (int j = 0; j < 4; ++j) {
                sum += (a.atoms[g.o_indices[j]].position -
                        b.atoms[g.o_indices[perm[j]]].position)
                           .squaredNorm();
            }
            best = std::min(best, sum);
        } while (std::next_permutation(perm.begin(), perm.end()));
        acc += best;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!in_group[i]) {
            acc += (a.atoms[i].position - b.atoms[i].position).squaredNorm();
        }
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

std::vector<Structure> enumerate_rotated(const Structure& seed,
                                         const GenerationScheme& scheme) {
    if (scheme.rotation_step_deg <= 0 || 360 % scheme.rotation_step_deg != 0) {
        throw std::invalid_argument("rotation_step must divide 360");
    }
    const auto groups = identify_po4_groups(seed);
    const int m = 360 / scheme.rotation_step_deg;
    const double step = scheme.rotation_step_deg * std::numbers::pi / 180.0;

    std::vector<Mat3> grid;
    grid.reserve(static_cast<std::size_t>(m) * m * m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c)
                grid.push_back(euler_zyz(Vec3(a * step, b * step, c * step)));

    std::vector<Structure> out;
    std::unordered_map<std::string, std::size_t> seen;
    auto emit = [&](const std::vector<Mat3>& per_group) {
        Structure cand = rotate_groups(seed, groups, per_group);
        const std::string key = dedup_key(cand, groups);
        auto [it, fresh] = seen.try_emplace(key, out.size());
        if (fresh) {
            cand.label = "rot-" + std::to_string(out.size());
            out.push_back(std::move(cand));
        } else if (grouped_rmsd(out[it->second], cand, groups) >= 1e-6) {
            // hash collision between genuinely distinct candidates
            cand.label = "rot-" + std::to_string(out.size());
            out.push_back(std::move(cand));
        }
    };

    const std::size_t n_groups = groups.size();
    if (scheme.mode == SweepMode::UniformAllGroups ||
        scheme.mode == SweepMode::Combined) {
        for (const Mat3& r : grid) {
            emit(std::vector<Mat3>(n_groups, r));
        }
    }
    if (scheme.mode == SweepMode::PerGroupSweep ||
        scheme.mode == SweepMode::Combined) {
        for (std::size_t g = 0; g < n_groups; ++g) {
            std::vector<Mat3> per_group(n_groups, Mat3::Identity());
            for (const Mat3& r : grid) {
                per_group[g] = r;
                emit(per_group);
            }
        }
    }
    if (scheme.mode == SweepMode::Combined) {
        // Pair sweeps: each unordered pair of groups shares one rotation.
        // Single-group sweeps alone collapse heavily under the tetrahedron's
        // order-12 self-symmetry; pairs restore the candidate count.
        for (std::size_t g1 = 0; g1 < n_groups; ++g1) {
            for (std::size_t g2 = g1 + 1; g2 < n_groups; ++g2) {
                std::vector<Mat3> per_group(n_groups, Mat3::Identity());
                for (const Mat3& r : grid) {
                    per_group[g1] = r;
                    per_group[g2] = r;
                    emit(per_group);
                }
                for (std::size_t g3 = g2 + 1; g3 < n_groups; ++g3) {
                    std::vector<Mat3> trip(n_groups, Mat3::Identity());
                    for (const Mat3& r : grid) {
                        trip[g1] = r;
                        trip[g2] = r;
                        trip[g3] = r;
                        emit(trip);
                    }
                }
            }
        }
    }
    if (scheme.mode == SweepMode::FullProductCapped) {
        std::vector<std::size_t> idx(n_groups, 0);
        std::size_t emitted = 0;
        while (emitted < scheme.product_cap) {
            std::vector<Mat3> per_group(n_groups);
            for (std::size_t g = 0; g < n_groups; ++g) per_group[g] = grid[idx[g]];
            emit(per_group);
            ++emitted;
            std::size_t g = 0;
            while (g < n_groups && ++idx[g] == grid.size()) {
                idx[g] = 0;
                ++g;
            }
            if (g == n_groups) break;
        }
    }
    return out;
}

std::vector<Structure> scale_set(const std::vector<Structure>& in,
                                 const std::vector<double>& factors,
                                 std::size_t center_index) {
    for (double f : factors) {
        if (f <= 0.0) throw std::invalid_argument("scale factors must be positive");
    }
    std::vector<Structure> out;
    out.reserve(in.size() * factors.size());
    for (const auto& s : in) {
        if (center_index >= s.size()) {
            throw std::invalid_argument("center_index out of range");
        }
        const auto groups = identify_po4_groups(s);
        std::vector<char> in_group(s.size(), 0);
        for (const auto& g : groups) {
            for (std::size_t o : g.o_indices) in_group[o] = 1;
        }
        const Vec3 center = s.atoms[center_index].position;
        for (double f : factors) {
            Structure scaled = s;
            scaled.label = s.label + "-scale-" + std::to_string(f);
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (in_group[i]) continue;  // O atoms ride with their P
                scaled.atoms[i].position = center + f * (s.atoms[i].position - center);
            }
            for (const auto& g : groups) {
                const Vec3 shift = scaled.atoms[g.p_index].position -
                                   s.atoms[g.p_index].position;
                for (std::size_t o : g.o_indices) {
                    scaled.atoms[o].position = s.atoms[o].position + shift;
                }
            }
            out.push_back(std::move(scaled));
        }
    }
    return out;
}

namespace {

// Closure of the generator set; groups here are small (order <= 24).
std::vector<Mat3> group_closure(std::vector<Mat3> gens) {
    std::vector<Mat3> ops = {Mat3::Identity()};
    auto contains = [&](const Mat3& m) {
        return std::any_of(ops.begin(), ops.end(), [&](const Mat3& o) {
            return (o - m).cwiseAbs().maxCoeff() < 1e-9;
        });
    };
    bool grew = true;
    while (grew) {
        grew = false;
        const std::size_t n = ops.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (const Mat3& g : gens) {
                const Mat3 prod = g * ops[i];
                if (!contains(prod)) {
                    ops.push_back(prod);
                    grew = true;
                }
            }
        }
    }
    return ops;
}

std::vector<Vec3> orbit(const std::vector<Mat3>& ops, const Vec3& seed) {
    std::vector<Vec3> points;
    for (const Mat3& op : ops) {
        const Vec3 p = op * seed;
        const bool dup = std::any_of(points.begin(), points.end(), [&](const Vec3& q) {
            return (q - p).norm() < 1e-6;
        });
        if (!dup) points.push_back(p);
    }
    return points;
}

Mat3 rot_z(double deg) {
    return Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, Vec3::UnitZ())
        .toRotationMatrix();
}

Structure replicate(const std::vector<Mat3>& ops,
                    const std::vector<Atom>& seeds, const std::string& label) {
    Structure s;
    s.label = label;
    std::map<std::string, std::vector<Vec3>> by_species;
    for (const auto& seed : seeds) {
        for (const Vec3& p : orbit(ops, seed.position)) {
            by_species[seed.element.symbol].push_back(p);
        }
    }
    for (const Vec3& p : by_species["Ca"]) s.atoms.push_back({kCa, p});
    for (const Vec3& p : by_species["P"]) s.atoms.push_back({kP, p});
    for (const Vec3& p : by_species["O"]) s.atoms.push_back({kO, p});
    if (!is_posner_stoichiometry(s)) {
        throw std::logic_error("template seeds do not replicate to Ca9P6O24");
    }
    return s;
}

Mat3 s6_op() {
    // S6 about z: 60 degree rotation composed with the horizontal mirror.
    Mat3 sigma_h = Mat3::Identity();
    sigma_h(2, 2) = -1.0;
    return sigma_h * rot_z(60.0);
}

}  // namespace

Structure build_template(TemplateGroup group) {
    switch (group) {
        case TemplateGroup::S6:
            return build_s6(S6Params{});
        case TemplateGroup::Th: {
            // T rotations plus inversion.
            const Mat3 c2z = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitZ())
                                 .toRotationMatrix();
            const Mat3 c3 =
                Eigen::AngleAxisd(2.0 * std::numbers::pi / 3.0,
                                  Vec3(1, 1, 1).normalized())
                    .toRotationMatrix();
            const auto ops = group_closure({c2z, c3, -Mat3::Identity()});
            return replicate(ops,
                             {{kCa, Vec3::Zero()},
                              {kCa, Vec3(2.6, 2.6, 2.6)},
                              {kP, Vec3(3.2, 0.0, 0.0)},
                              {kO, Vec3(4.1, 0.85, 0.95)}},
                             "template-Th");
        }
        case TemplateGroup::C3v: {
            Mat3 sigma_xz = Mat3::Identity();
            sigma_xz(1, 1) = -1.0;
            const auto ops = group_closure({rot_z(120.0), sigma_xz});
            return replicate(ops,
                             {{kCa, Vec3(0.0, 0.0, 2.8)},
                              {kCa, Vec3(0.0, 0.0, 0.0)},
                              {kCa, Vec3(0.0, 0.0, -2.8)},
                              {kCa, Vec3(2.7, 0.0, 1.2)},
                              {kCa, Vec3(2.9, 0.0, -1.4)},
                              {kP, Vec3(3.1, 0.0, 1.8)},
                              {kP, Vec3(3.0, 0.0, -2.0)},
                              {kO, Vec3(3.9, 0.8, 2.3)},
                              {kO, Vec3(3.6, -0.9, 1.1)},
                              {kO, Vec3(3.8, 0.85, -2.6)},
                              {kO, Vec3(3.5, -0.8, -1.3)}},
                             "template-C3v");
        }
        case TemplateGroup::D3d: {
            const Mat3 c2x = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX())
                                 .toRotationMatrix();
            const auto ops = group_closure({s6_op(), c2x});
            return replicate(ops,
                             {{kCa, Vec3::Zero()},
                              {kCa, Vec3(0.0, 0.0, 3.0)},
                              {kCa, Vec3(2.9, 0.0, 0.0)},
                              {kP, Vec3(4.1, 0.0, 0.0)},
                              {kO, Vec3(4.7, 0.8, 0.7)},
                              {kO, Vec3(4.6, -0.7, -0.8)}},
                             "template-D3d");
        }
    }
    throw std::invalid_argument("unknown template group");
}

Structure perturb(const Structure& s, double magnitude, std::uint64_t seed) {
    if (magnitude < 0.0) throw std::invalid_argument("magnitude must be >= 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-magnitude, magnitude);
    Structure out = s;
    for (auto& atom : out.atoms) {
        for (int c = 0; c < 3; ++c) atom.position[c] += u(rng);
    }
    return out;
}

Structure build_s6(const S6Params& params, const PhosphateTemplate& tmpl) {
    if (params.z_axial <= 0.0 || params.ca_orbit.norm() <= 0.0 ||
        params.p_orbit.norm() <= 0.0) {
        throw std::invalid_argument("invalid S6 parameters");
    }
    std::vector<Mat3> ops;
    const Mat3 gen = s6_op();
    Mat3 acc = Mat3::Identity();
    for (int i = 0; i < 6; ++i) {
        ops.push_back(acc);
        acc = gen * acc;
    }

    Structure s;
    s.label = "s6";
    s.atoms.push_back({kCa, Vec3::Zero()});
    s.atoms.push_back({kCa, Vec3(0, 0, params.z_axial)});
    s.atoms.push_back({kCa, Vec3(0, 0, -params.z_axial)});
    for (const Mat3& op : ops) s.atoms.push_back({kCa, op * params.ca_orbit});

    const Mat3 orient = euler_zyz(params.orient);
    const auto offsets = tmpl.oxygen_offsets();
    for (const Mat3& op : ops) {
        s.atoms.push_back({kP, op * params.p_orbit});
        for (const Vec3& o : offsets) {
            s.atoms.push_back({kO, op * (params.p_orbit + orient * o)});
        }
    }

    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            if ((s.atoms[i].position - s.atoms[j].position).norm() < 0.3) {
                throw std::invalid_argument(
                    "build_s6: orbit collision, unphysical parameters");
            }
        }
    }
    return s;
}

bool is_posner_stoichiometry(const Structure& s) {
    std::map<std::string, int> census;
    for (const auto& a : s.atoms) census[a.element.symbol] += 1;
    return census.size() == 3 && census["Ca"] == 9 && census["P"] == 6 &&
           census["O"] == 24;
}

}  // namespace posner::posnergen
