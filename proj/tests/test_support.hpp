#pragma once

#include "mfm/measures.hpp"

#include <random>

namespace testsup {

using mfm::EmpiricalMeasure;
using mfm::Vec;

inline Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

inline Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

inline EmpiricalMeasure dirac(const Vec& x) { return EmpiricalMeasure(static_cast<int>(x.size()), {{x, 1.0}}); }

// Random probability measure: `count` atoms, coordinates uniform in
// [-span, span]^dim, weights normalized positive.
inline EmpiricalMeasure random_measure(std::mt19937_64& rng, int dim, int count, double span,
                                       bool uniform_weights = false) {
    std::uniform_real_distribution<double> ux(-span, span);
    std::uniform_real_distribution<double> uw(0.1, 1.0);
    std::vector<mfm::Atom> atoms;
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
        Vec x(dim);
        for (int k = 0; k < dim; ++k) x[k] = ux(rng);
        const double w = uniform_weights ? 1.0 : uw(rng);
        atoms.push_back({x, w});
        total += w;
    }
    for (auto& a : atoms) a.w /= total;
    return EmpiricalMeasure(dim, std::move(atoms));
}

}  // namespace testsup
