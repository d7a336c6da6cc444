#include "mfm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mfm {

MeasureFunctionals measure_functionals(const EmpiricalMeasure& m, double p) {
    m.require_probability("measure_functionals");
    Vec mean = Vec::Zero(m.dim());
    for (const Atom& a : m.atoms()) mean += a.w * a.x;
    return MeasureFunctionals{mean, sigma_p_moment(m, p)};
}

namespace {

Vec eval_coords(const std::vector<Expression>& exprs, const EvalArgs& args) {
    Vec out(static_cast<int>(exprs.size()));
    for (std::size_t i = 0; i < exprs.size(); ++i) {
        out(static_cast<int>(i)) = exprs[i].eval(args);
    }
    return out;
}

}  // namespace

Vec DynamicsSpec::eval_f_I(double t, const Vec& x, const MeasureFunctionals& mf, const Vec& y,
                           const Vec& u) const {
    EvalArgs args;
    args.t = t;
    args.x = &x;
    args.y = &y;
    args.u = &u;
    args.mf = &mf;
    return eval_coords(f_I, args);
}

Vec DynamicsSpec::eval_f_II(double t, const Vec& x, const MeasureFunctionals& mf, const Vec& y,
                            const Vec& v) const {
    EvalArgs args;
    args.t = t;
    args.x = &x;
    args.y = &y;
    args.v = &v;
    args.mf = &mf;
    return eval_coords(f_II, args);
}

Vec DynamicsSpec::eval_g(double t, const Vec& y, const MeasureFunctionals& mf,
                         const Vec& v) const {
    EvalArgs args;
    args.t = t;
    args.y = &y;
    args.v = &v;
    args.mf = &mf;
    return eval_coords(g, args);
}

void DynamicsSpec::validate_shape() const {
    if (d < 1 || d_prime < 1) throw ValidationError("state dimensions must be at least 1");
    if (static_cast<int>(f_I.size()) != d || static_cast<int>(f_II.size()) != d) {
        throw ValidationError("f_I and f_II must supply one expression per minor coordinate");
    }
    if (static_cast<int>(g.size()) != d_prime) {
        throw ValidationError("g must supply one expression per major coordinate");
    }
    if (!(A >= 0.0) || !std::isfinite(A)) throw ValidationError("growth constant A must be finite and nonnegative");
    double prev = -1.0;
    for (const LipschitzEntry& e : lipschitz_table) {
        if (!(e.c > prev)) throw ValidationError("lipschitz table must be strictly ascending in c");
        if (e.B_I < 0 || e.B_II < 0 || e.B_prime < 0) {
            throw ValidationError("lipschitz constants must be nonnegative");
        }
        prev = e.c;
    }
}

const LipschitzEntry& DynamicsSpec::entry_for(double c) const {
    double slack = 1e-12 * std::max(1.0, std::abs(c));
    for (const LipschitzEntry& e : lipschitz_table) {
        if (e.c >= c - slack) return e;
    }
    throw ValidationError("lipschitz table covers radii up to " +
                          std::to_string(lipschitz_table.empty() ? 0.0 : lipschitz_table.back().c) +
                          " but radius " + std::to_string(c) + " is required");
}

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 1)));
    if (n <= 1) {
        out.push_back(a);
        return out;
    }
    for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
    return out;
}

Vec draw_box(std::mt19937_64& rng, int dim, double half) {
    std::uniform_real_distribution<double> unif(-half, half);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = unif(rng);
    return v;
}

Vec draw_ball(std::mt19937_64& rng, int dim, double radius) {
    Vec v = draw_box(rng, dim, std::max(radius, 0.0));
    double n = v.norm();
    if (n > radius && n > 0.0) v *= radius / n;
    return v;
}

// Random probability measure; if cap >= 0 the support is shrunk until
// sigma_p <= cap.
EmpiricalMeasure draw_measure(std::mt19937_64& rng, int dim, int count, double spread, double p,
                              double cap) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> wdist(0.2, 1.0);
    std::vector<Atom> atoms(static_cast<std::size_t>(count));
    double wsum = 0.0;
    for (Atom& a : atoms) {
        a.x = Vec(dim);
        for (int i = 0; i < dim; ++i) a.x(i) = spread * gauss(rng);
        a.w = wdist(rng);
        wsum += a.w;
    }
    for (Atom& a : atoms) a.w /= wsum;
    EmpiricalMeasure m(dim, std::move(atoms));
    if (cap >= 0.0) {
        double s = sigma_p_moment(m, p);
        if (s > cap) {
            double shrink = s > 0.0 ? cap / s : 0.0;
            m = m.map([shrink](const Vec& x) { return Vec(shrink * x); });
        }
    }
    return m;
}

struct SamplePools {
    std::vector<double> ts;
    std::vector<Vec> xs;
    std::vector<EmpiricalMeasure> ms;
    std::vector<MeasureFunctionals> mfs;
    std::vector<Vec> ys;
};

constexpr double kXScale[3] = {1.0, 4.0, 16.0};
constexpr double kSpread[3] = {0.3, 2.0, 8.0};
constexpr int kCount[3] = {1, 4, 16};

// cap < 0 leaves measures and y unconstrained (growth checks); cap >= 0 keeps
// sigma_p and ||y|| at or below it (local checks).
SamplePools make_pools(std::mt19937_64& rng, const DynamicsSpec& spec, const SamplerConfig& cfg,
                       double cap) {
    SamplePools pools;
    pools.ts = linspace(0.0, cfg.T, cfg.t_samples);
    pools.xs.reserve(static_cast<std::size_t>(cfg.x_samples));
    for (int i = 0; i < cfg.x_samples; ++i) {
        pools.xs.push_back(i == 0 ? Vec(Vec::Zero(spec.d))
                                  : draw_box(rng, spec.d, cfg.x_box * kXScale[i % 3]));
    }
    pools.ms.reserve(static_cast<std::size_t>(cfg.measure_samples));
    for (int i = 0; i < cfg.measure_samples; ++i) {
        if (i == 0) {
            pools.ms.emplace_back(spec.d, std::vector<Atom>{Atom{Vec::Zero(spec.d), 1.0}});
        } else {
            pools.ms.push_back(
                draw_measure(rng, spec.d, kCount[i % 3], kSpread[i % 3], cfg.p, cap));
        }
    }
    pools.mfs.reserve(pools.ms.size());
    for (const EmpiricalMeasure& m : pools.ms) pools.mfs.push_back(measure_functionals(m, cfg.p));
    pools.ys.reserve(static_cast<std::size_t>(cfg.y_samples));
    for (int i = 0; i < cfg.y_samples; ++i) {
        if (i == 0) {
            pools.ys.push_back(Vec::Zero(spec.d_prime));
        } else if (cap >= 0.0) {
            pools.ys.push_back(draw_ball(rng, spec.d_prime, cap));
        } else {
            pools.ys.push_back(draw_box(rng, spec.d_prime, cfg.x_box * kXScale[i % 3]));
        }
    }
    return pools;
}

// Control dimensions are not declared anywhere; recover them from the
// highest coordinate the expressions read.
void control_dims(const DynamicsSpec& spec, int& du, int& dv) {
    Expression::Refs r;
    for (const Expression& e : spec.f_I) r.absorb(e.refs());
    for (const Expression& e : spec.f_II) r.absorb(e.refs());
    for (const Expression& e : spec.g) r.absorb(e.refs());
    du = std::max(1, r.max_u + 1);
    dv = std::max(1, r.max_v + 1);
}

}  // namespace

ConstantsReport validate_dynamics_constants(const DynamicsSpec& spec, double c, const SamplerConfig& cfg) {
    spec.validate_shape();
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("radius c must be finite and nonnegative");
    const LipschitzEntry& entry = spec.entry_for(c);

    std::mt19937_64 rng(cfg.seed);
    int du = 1;
    int dv = 1;
    control_dims(spec, du, dv);

    ConstantsReport rep;

    // Growth sweep: unconstrained states and measures.
    {
        SamplePools pools = make_pools(rng, spec, cfg, -1.0);
        std::size_t k = 0;
        for (double t : pools.ts) {
            for (const Vec& x : pools.xs) {
                std::size_t mi = k % pools.ms.size();
                std::size_t yi = k % pools.ys.size();
                const MeasureFunctionals& mf = pools.mfs[mi];
                const Vec& y = pools.ys[yi];
                Vec u = draw_box(rng, du, cfg.control_box);
                Vec v = draw_box(rng, dv, cfg.control_box);
                double minor = spec.eval_f_I(t, x, mf, y, u).norm() +
                               spec.eval_f_II(t, x, mf, y, v).norm();
                double major = spec.eval_g(t, y, mf, v).norm();
                rep.growth_minor =
                    std::max(rep.growth_minor, minor / (1.0 + x.norm() + mf.sigma_p + y.norm()));
                rep.growth_major = std::max(rep.growth_major, major / (1.0 + y.norm() + mf.sigma_p));
                ++k;
            }
        }
    }

    // Difference-quotient sweep inside the radius-c region. Pair layouts
    // cycle through x-only, m-only, y-only, and fully mixed variation.
    std::vector<double> pair_ts = linspace(0.0, cfg.T, cfg.t_samples);
    for (int k = 0; k < cfg.pair_samples; ++k) {
        double t = pair_ts[static_cast<std::size_t>(k) % pair_ts.size()];
        int mask = k % 4;
        Vec x1 = draw_box(rng, spec.d, cfg.x_box * kXScale[(k / 4) % 3]);
        Vec x2 = (mask == 0 || mask == 3) ? draw_box(rng, spec.d, cfg.x_box * kXScale[(k / 4) % 3])
                                          : x1;
        EmpiricalMeasure m1 = draw_measure(rng, spec.d, kCount[k % 3], kSpread[k % 3], cfg.p, c);
        bool m_differs = (mask == 1 || mask == 3);
        EmpiricalMeasure m2 =
            m_differs ? draw_measure(rng, spec.d, kCount[(k + 1) % 3], kSpread[(k + 1) % 3], cfg.p, c)
                      : m1;
        Vec y1 = draw_ball(rng, spec.d_prime, c);
        Vec y2 = (mask == 2 || mask == 3) ? draw_ball(rng, spec.d_prime, c) : y1;
        Vec u = draw_box(rng, du, cfg.control_box);
        Vec v = draw_box(rng, dv, cfg.control_box);

        MeasureFunctionals mf1 = measure_functionals(m1, cfg.p);
        MeasureFunctionals mf2 = m_differs ? measure_functionals(m2, cfg.p) : mf1;
        double wp = m_differs ? wasserstein_p(m1, m2, cfg.p).distance : 0.0;
        double dxy = (x1 - x2).norm() + wp + (y1 - y2).norm();
        double dy = wp + (y1 - y2).norm();

        if (dxy > 1e-9) {
            double num_I = (spec.eval_f_I(t, x1, mf1, y1, u) - spec.eval_f_I(t, x2, mf2, y2, u)).norm();
            double num_II =
                (spec.eval_f_II(t, x1, mf1, y1, v) - spec.eval_f_II(t, x2, mf2, y2, v)).norm();
            rep.ratio_B_I = std::max(rep.ratio_B_I, num_I / dxy);
            rep.ratio_B_II = std::max(rep.ratio_B_II, num_II / dxy);
        }
        if (dy > 1e-9) {
            double num_g = (spec.eval_g(t, y1, mf1, v) - spec.eval_g(t, y2, mf2, v)).norm();
            rep.ratio_B_prime = std::max(rep.ratio_B_prime, num_g / dy);
        }
    }

    auto check = [&rep](const char* name, double observed, double declared) {
        if (observed > declared * (1.0 + 1e-6)) {
            rep.pass = false;
            rep.violations.push_back(ConstantsWitness{name, observed, declared});
        }
    };
    check("A (minor growth)", rep.growth_minor, spec.A);
    check("A (major growth)", rep.growth_major, spec.A);
    check("B_I", rep.ratio_B_I, entry.B_I);
    check("B_II", rep.ratio_B_II, entry.B_II);
    check("B_prime", rep.ratio_B_prime, entry.B_prime);
    return rep;
}

double dist_c(const DynamicsSpec& a, const DynamicsSpec& b, FieldChannel channel, double c,
              const ControlGrid& U, const ControlGrid& V, const SamplerConfig& cfg) {
    a.validate_shape();
    b.validate_shape();
    if (a.d != b.d || a.d_prime != b.d_prime) {
        throw ValidationError("dist_c requires matching state dimensions");
    }
    if (channel == FieldChannel::Minor && U.size() == 0) {
        throw ValidationError("dist_c over the minor fields needs a nonempty grid U");
    }
    if (V.size() == 0) throw ValidationError("dist_c needs a nonempty grid V");
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("radius c must be finite and nonnegative");

    std::mt19937_64 rng(cfg.seed);
    SamplePools pools = make_pools(rng, a, cfg, c);

    double worst = 0.0;
    if (channel == FieldChannel::Minor) {
        for (double t : pools.ts) {
            for (const Vec& x : pools.xs) {
                for (const MeasureFunctionals& mf : pools.mfs) {
                    for (const Vec& y : pools.ys) {
                        for (const Vec& u : U.points) {
                            for (const Vec& v : V.points) {
                                Vec fa = a.eval_f_I(t, x, mf, y, u) + a.eval_f_II(t, x, mf, y, v);
                                Vec fb = b.eval_f_I(t, x, mf, y, u) + b.eval_f_II(t, x, mf, y, v);
                                worst = std::max(worst, (fa - fb).norm());
                            }
                        }
                    }
                }
            }
        }
    } else {
        for (double t : pools.ts) {
            for (const MeasureFunctionals& mf : pools.mfs) {
                for (const Vec& y : pools.ys) {
                    for (const Vec& v : V.points) {
                        worst = std::max(worst,
                                         (a.eval_g(t, y, mf, v) - b.eval_g(t, y, mf, v)).norm());
                    }
                }
            }
        }
    }
    return worst;
}

double growth_envelope_value(double c1, double c2, double c3, double T) {
    return (1.0 + c1 + c2) * std::exp(2.0 * c3 * T);
}

}  // namespace mfm
