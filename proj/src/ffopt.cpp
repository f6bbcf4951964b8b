#include "posner/ffopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace posner::ffopt {

using geom::Structure;
using geom::Vec3;
using posnergen::S6Params;

namespace {

std::pair<std::string, std::string> pair_key(const std::string& a,
                                             const std::string& b) {
    return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PairPotentialParams PairPotentialParams::posner_defaults() {
    PairPotentialParams p;
    // Formal Ca2+/P5+ with O chosen to neutralize: 9*2 + 6*5 - 24*2 = 0.
    p.charges = {{"Ca", 2.0}, {"P", 5.0}, {"O", -2.0}};
    // Illustrative short-range repulsion/dispersion set.
    p.set_buckingham("Ca", "O", {2152.3566, 0.309227, 0.0});
    p.set_buckingham("P", "O", {897.2648, 0.3577, 0.0});
    p.set_buckingham("O", "O", {9547.96, 0.21916, 32.0});
    p.set_buckingham("Ca", "Ca", {4000.0, 0.28, 0.0});
    p.set_buckingham("Ca", "P", {2500.0, 0.29, 0.0});
    p.set_buckingham("P", "P", {3000.0, 0.30, 0.0});
    return p;
}

const BuckinghamTerm* PairPotentialParams::lookup(const std::string& e1,
                                                  const std::string& e2) const {
    auto it = buckingham.find(pair_key(e1, e2));
    return it == buckingham.end() ? nullptr : &it->second;
}

void PairPotentialParams::set_buckingham(const std::string& e1,
                                         const std::string& e2,
                                         BuckinghamTerm t) {
    if (t.rho <= 0.0 && t.a != 0.0) {
        throw std::invalid_argument("buckingham rho must be positive");
    }
    buckingham[pair_key(e1, e2)] = t;
}

PairPotentialParams parse_potential_file(const std::string& text) {
    PairPotentialParams p;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        if (kind == "charge") {
            std::string el;
            double q;
            if (!(ls >> el >> q)) {
                throw std::invalid_argument("potential file line " +
                                            std::to_string(lineno) +
                                            ": bad charge entry");
            }
            p.charges[el] = q;
        } else if (kind == "buckingham") {
            std::string e1, e2;
            BuckinghamTerm t;
            if (!(ls >> e1 >> e2 >> t.a >> t.rho >> t.c)) {
                throw std::invalid_argument("potential file line " +
                                            std::to_string(lineno) +
                                            ": bad buckingham entry");
            }
            p.set_buckingham(e1, e2, t);
        } else if (kind == "exclude_intra_po4") {
            int flag;
            if (!(ls >> flag)) {
                throw std::invalid_argument("potential file line " +
                                            std::to_string(lineno) +
                                            ": bad flag");
            }
            p.exclude_intra_po4 = flag != 0;
        } else {
            throw std::invalid_argument("potential file line " +
                                        std::to_string(lineno) +
                                        ": unknown key '" + kind + "'");
        }
    }
    return p;
}

namespace {

// Symmetric matrix of pairs excluded under the rigid-tetrahedron flag.
std::vector<char> exclusion_mask(const Structure& s,
                                 const PairPotentialParams& p) {
    const std::size_t n = s.size();
    std::vector<char> excl(n * n, 0);
    if (!p.exclude_intra_po4) return excl;
    for (const auto& g : posnergen::identify_po4_groups(s)) {
        std::array<std::size_t, 5> members = {g.p_index, g.o_indices[0],
                                              g.o_indices[1], g.o_indices[2],
                                              g.o_indices[3]};
        for (std::size_t i : members) {
            for (std::size_t j : members) excl[i * n + j] = 1;
        }
    }
    return excl;
}

double charge_of(const PairPotentialParams& p, const std::string& el) {
    auto it = p.charges.find(el);
    if (it == p.charges.end()) {
        throw std::invalid_argument("no charge defined for element " + el);
    }
    return it->second;
}

}  // namespace

double energy(const Structure& s, const PairPotentialParams& p) {
    const std::size_t n = s.size();
    const auto excl = exclusion_mask(s, p);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double qi = charge_of(p, s.atoms[i].element.symbol);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (excl[i * n + j]) continue;
            const double r = (s.atoms[i].position - s.atoms[j].position).norm();
            if (r < 1e-6) {
                throw std::invalid_argument(
                    "energy: atoms " + std::to_string(i) + " and " +
                    std::to_string(j) + " nearly coincide");
            }
            const double qj = charge_of(p, s.atoms[j].element.symbol);
            e += p.coulomb_constant * qi * qj / r;
            if (const auto* b = p.lookup(s.atoms[i].element.symbol,
                                         s.atoms[j].element.symbol)) {
                if (b->a != 0.0) e += b->a * std::exp(-r / b->rho);
                if (b->c != 0.0) e -= b->c / std::pow(r, 6);
            }
        }
    }
    return e;
}

std::vector<Vec3> gradient(const Structure& s, const PairPotentialParams& p) {
    const std::size_t n = s.size();
    const auto excl = exclusion_mask(s, p);
    std::vector<Vec3> g(n, Vec3::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        const double qi = charge_of(p, s.atoms[i].element.symbol);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (excl[i * n + j]) continue;
            const Vec3 rij = s.atoms[i].position - s.atoms[j].position;
            const double r = rij.norm();
            if (r < 1e-6) {
                throw std::invalid_argument(
                    "gradient: atoms " + std::to_string(i) + " and " +
                    std::to_string(j) + " nearly coincide");
            }
            const double qj = charge_of(p, s.atoms[j].element.symbol);
            // dE/dr
            double de = -p.coulomb_constant * qi * qj / (r * r);
            if (const auto* b = p.lookup(s.atoms[i].element.symbol,
                                         s.atoms[j].element.symbol)) {
                if (b->a != 0.0) de += -b->a / b->rho * std::exp(-r / b->rho);
                if (b->c != 0.0) de += 6.0 * b->c / std::pow(r, 7);
            }
            const Vec3 f = de * rij / r;
            g[i] += f;
            g[j] -= f;
        }
    }
    return g;
}

RelaxResult relax(const Structure& s, const PairPotentialParams& p,
                  const OptimizerConfig& cfg) {
    RelaxResult out;
    out.structure = s;
    out.energy = energy(s, p);

    double step = cfg.initial_step;
    for (out.iterations = 0; out.iterations < cfg.max_iterations;
         ++out.iterations) {
        std::vector<Vec3> g;
        try {
            g = gradient(out.structure, p);
        } catch (const std::invalid_argument&) {
            return out;  // singular geometry: abort with last valid state
        }
        double gmax = 0.0;
        for (const auto& v : g) gmax = std::max(gmax, v.norm());
        if (gmax <= cfg.gradient_tolerance) {
            out.converged = true;
            return out;
        }

        // Backtracking line search along -g, scaled so the largest atom
        // move equals `step`.
        bool accepted = false;
        double trial_step = step;
        for (int bt = 0; bt < 40; ++bt) {
            Structure trial = out.structure;
            for (std::size_t i = 0; i < trial.size(); ++i) {
                trial.atoms[i].position -= (trial_step / gmax) * g[i];
            }
            double e_trial;
            try {
                e_trial = energy(trial, p);
            } catch (const std::invalid_argument&) {
                trial_step *= 0.5;
                continue;
            }
            if (e_trial < out.energy) {
                out.structure = std::move(trial);
                out.energy = e_trial;
                step = std::min(trial_step * 1.5, 0.5);
                accepted = true;
                break;
            }
            trial_step *= 0.5;
        }
        if (!accepted) {
            out.converged = gmax <= 10.0 * cfg.gradient_tolerance;
            return out;  // line search exhausted
        }
    }
    return out;
}

std::array<double, 10> pack_s6(const S6Params& p) {
    return {p.z_axial,    p.ca_orbit[0], p.ca_orbit[1], p.ca_orbit[2],
            p.p_orbit[0], p.p_orbit[1],  p.p_orbit[2],  p.orient[0],
            p.orient[1],  p.orient[2]};
}

S6Params unpack_s6(const std::array<double, 10>& v) {
    S6Params p;
    p.z_axial = v[0];
    p.ca_orbit = Vec3(v[1], v[2], v[3]);
    p.p_orbit = Vec3(v[4], v[5], v[6]);
    p.orient = Vec3(v[7], v[8], v[9]);
    return p;
}

namespace {

using Point = std::array<double, 10>;

double s6_objective(const Point& x, const PairPotentialParams& p,
                    const OptimizerConfig& cfg,
                    const posnergen::PhosphateTemplate& tmpl) {
    for (std::size_t d = 0; d < 10; ++d) {
        if (!cfg.lower_bounds.empty() && x[d] < cfg.lower_bounds[d]) return kInf;
        if (!cfg.upper_bounds.empty() && x[d] > cfg.upper_bounds[d]) return kInf;
    }
    try {
        return energy(posnergen::build_s6(unpack_s6(x), tmpl), p);
    } catch (const std::invalid_argument&) {
        return kInf;  // collision or unphysical parameters
    }
}

Point nelder_mead(const Point& start,
                  const std::function<double(const Point&)>& f, int max_iter,
                  double scale, double* best_value) {
    constexpr int dim = 10;
    std::vector<Point> simplex(dim + 1, start);
    std::vector<double> value(dim + 1);
    for (int d = 0; d < dim; ++d) simplex[d + 1][d] += scale;
    for (int i = 0; i <= dim; ++i) value[i] = f(simplex[i]);

    std::vector<int> order(dim + 1);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return value[a] < value[b]; });
        const int best = order[0], worst = order[dim], second = order[dim - 1];
        if (std::isfinite(value[worst]) &&
            value[worst] - value[best] < 1e-12 * (1.0 + std::abs(value[best]))) {
            break;
        }

        Point centroid{};
        for (int i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (int d = 0; d < dim; ++d) centroid[d] += simplex[i][d] / dim;
        }
        auto blend = [&](double t) {
            Point p;
            for (int d = 0; d < dim; ++d) {
                p[d] = centroid[d] + t * (centroid[d] - simplex[worst][d]);
            }
            return p;
        };

        const Point refl = blend(1.0);
        const double f_refl = f(refl);
        if (f_refl < value[best]) {
            const Point expd = blend(2.0);
            const double f_expd = f(expd);
            if (f_expd < f_refl) {
                simplex[worst] = expd;
                value[worst] = f_expd;
            } else {
                simplex[worst] = refl;
                value[worst] = f_refl;
            }
        } else if (f_refl < value[second]) {
            simplex[worst] = refl;
            value[worst] = f_refl;
        } else {
            const Point contr = blend(f_refl < value[worst] ? 0.5 : -0.5);
            const double f_contr = f(contr);
            if (f_contr < std::min(f_refl, value[worst])) {
                simplex[worst] = contr;
                value[worst] = f_contr;
            } else {
                for (int i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    for (int d = 0; d < dim; ++d) {
                        simplex[i][d] =
                            simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
                    }
                    value[i] = f(simplex[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= dim; ++i) {
        if (value[i] < value[best]) best = i;
    }
    *best_value = value[best];
    return simplex[best];
}

}  // namespace

S6MinResult minimize_s6(const std::vector<S6Params>& starts,
                        const PairPotentialParams& p, const OptimizerConfig& cfg,
                        const posnergen::PhosphateTemplate& tmpl) {
    if (starts.empty()) throw std::invalid_argument("minimize_s6: no starts");
    PairPotentialParams rigid = p;
    rigid.exclude_intra_po4 = true;  // forced on: tetrahedra are frozen

    auto objective = [&](const Point& x) {
        return s6_objective(x, rigid, cfg, tmpl);
    };

    bool found = false;
    double best_e = kInf;
    Point best_x{};
    for (const auto& start : starts) {
        double e = kInf;
        const Point x =
            nelder_mead(pack_s6(start), objective, cfg.max_iterations,
                        cfg.simplex_scale, &e);
        if (std::isfinite(e) && e < best_e) {
            best_e = e;
            best_x = x;
            found = true;
        }
    }
    if (!found) {
        throw std::runtime_error(
            "minimize_s6: every start collided or left the feasible region");
    }
    S6MinResult out;
    out.params = unpack_s6(best_x);
    out.structure = posnergen::build_s6(out.params, tmpl);
    out.energy = best_e;
    return out;
}

}  // namespace posner::ffopt
