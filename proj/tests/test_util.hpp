#pragma once

#include <cmath>
#include <random>

#include "schrolab/spectral.hpp"

namespace testutil {

inline schrolab::SpectralField random_field(const schrolab::LatticePtr& lat, std::mt19937_64& rng,
                                            double decay = 0.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    schrolab::SpectralField f(lat);
    for (std::size_t i = 0; i < lat->size(); ++i)
        f.coeffs()[static_cast<Eigen::Index>(i)] =
            schrolab::cplx(g(rng), g(rng)) * std::pow(lat->bracket2(i), -0.5 * decay);
    return f;
}

inline double max_abs_diff(const schrolab::CVec& a, const schrolab::CVec& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testutil
