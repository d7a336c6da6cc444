#pragma once

#include "mfm/controls.hpp"
#include "mfm/expression.hpp"
#include "mfm/measures.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfm {

MeasureFunctionals measure_functionals(const EmpiricalMeasure& m, double p);

// Declared local Lipschitz constants valid on {sigma_p(m) <= c, ||y|| <= c}.
struct LipschitzEntry {
    double c = 0.0;
    double B_I = 0.0;
    double B_II = 0.0;
    double B_prime = 0.0;
};

// Right-hand sides of the coupled system
//   dx/dt = f_I(t, x, m, y, u) + f_II(t, x, m, y, v)
//   dy/dt = g(t, y, m, v)
// with declared sublinear-growth constant A and a table of local Lipschitz
// constants, one entry per radius c, ascending in c.
struct DynamicsSpec {
    int d = 1;        // minor state dimension
    int d_prime = 1;  // major state dimension
    std::vector<Expression> f_I;   // d coordinates
    std::vector<Expression> f_II;  // d coordinates
    std::vector<Expression> g;     // d_prime coordinates
    double A = 1.0;
    std::vector<LipschitzEntry> lipschitz_table;

    Vec eval_f_I(double t, const Vec& x, const MeasureFunctionals& mf, const Vec& y,
                 const Vec& u) const;
    Vec eval_f_II(double t, const Vec& x, const MeasureFunctionals& mf, const Vec& y,
                  const Vec& v) const;
    Vec eval_g(double t, const Vec& y, const MeasureFunctionals& mf, const Vec& v) const;

    // Smallest table entry with entry.c >= c. Throws if the table reaches no
    // further than c.
    const LipschitzEntry& entry_for(double c) const;
    void validate_shape() const;
};

struct SamplerConfig {
    std::uint64_t seed = 20240915;
    double T = 1.0;
    double p = 1.0;
    int t_samples = 9;
    int x_samples = 8;
    double x_box = 4.0;   // growth-check states drawn from [-x_box, x_box]^d
    int measure_samples = 9;
    int y_samples = 6;
    int pair_samples = 160;  // state pairs per Lipschitz ratio
    int control_samples = 4; // u, v draws per state tuple
    double control_box = 1.0;
};

struct ConstantsWitness {
    std::string constant;  // "A (minor)", "A (major)", "B_I", "B_II", "B_prime"
    double observed = 0.0;
    double declared = 0.0;
};

struct ConstantsReport {
    bool pass = true;
    double growth_minor = 0.0;  // worst (||f_I|| + ||f_II||) / (1 + ||x|| + sigma_p + ||y||)
    double growth_major = 0.0;  // worst ||g|| / (1 + ||y|| + sigma_p)
    double ratio_B_I = 0.0;
    double ratio_B_II = 0.0;
    double ratio_B_prime = 0.0;
    std::vector<ConstantsWitness> violations;
};

// Samples growth and difference-quotient ratios and compares them against the
// declared constants. A declared bound passes iff the observed ratio stays
// within declared * (1 + 1e-6).
ConstantsReport validate_dynamics_constants(const DynamicsSpec& spec, double c, const SamplerConfig& cfg = {});

enum class FieldChannel { Minor, Major };

// Sampled sup-distance between two right-hand sides over the radius-c region:
// Minor compares f_I + f_II over (t, x, m, y, u, v), Major compares g over
// (t, y, m, v). Control arguments run over the supplied grids.
double dist_c(const DynamicsSpec& a, const DynamicsSpec& b, FieldChannel channel, double c,
              const ControlGrid& U, const ControlGrid& V, const SamplerConfig& cfg = {});

// (1 + c1 + c2) * exp(2 * c3 * T): the envelope radius that the major state
// norm plus the measure moment stays under on [0, T].
double growth_envelope_value(double c1, double c2, double c3, double T);

}  // namespace mfm
