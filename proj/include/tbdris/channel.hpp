// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <random>

#include "matrix.hpp"

namespace tbdris {

inline constexpr double kSpeedOfLight = 299792458.0;

// Planar array on the transmissive surface: k_x elements per column,
// k_y per row, K = k_x * k_y total.
struct ArrayGeometry {
    std::size_t k_x = 1;
    std::size_t k_y = 1;
    double element_spacing_m = 0.0;
    double carrier_hz = 0.0;

    std::size_t size() const { return k_x * k_y; }

    double wavenumber_spacing() const {
        // rho = 2 pi f_c d0 / c
        return 2.0 * M_PI * carrier_hz * element_spacing_m / kSpeedOfLight;
    }

    void validate() const {
        if (k_x < 1 || k_y < 1) throw dimension_error("ArrayGeometry: element counts must be >= 1");
        if (element_spacing_m <= 0.0) throw dimension_error("ArrayGeometry: spacing must be > 0");
        if (carrier_hz <= 0.0) throw dimension_error("ArrayGeometry: carrier must be > 0");
    }

    static ArrayGeometry half_wavelength(std::size_t kx, std::size_t ky, double carrier_hz) {
        return ArrayGeometry{kx, ky, kSpeedOfLight / (2.0 * carrier_hz), carrier_hz};
    }
};

struct LinkGeometry {
    double distance_m = 1.0;
    double elevation_rad = 0.0;     // vertical departure angle
    double azimuth_rad = 0.0;       // horizontal departure angle
    double doppler_cycles = 0.0;    // psi; cancels in every |.|^2 expression
    double pathloss_exponent = 2.0;
    double gain_scale = 1.0;        // link-budget normalization, common to both users

    void validate() const {
        if (distance_m <= 0.0) throw dimension_error("LinkGeometry: distance must be > 0");
        if (pathloss_exponent < 0.0) throw dimension_error("LinkGeometry: pathloss exponent must be >= 0");
    }
};

struct ChannelVector {
    cvec entries;
    double large_scale_gain = 0.0; // gain_scale * sqrt(g / d^alpha)

    std::size_t size() const { return entries.size(); }
    double squared_norm() const { return norm2(entries); }
};

// a_x kron a_y with a_x[m] = exp(-j rho sin(theta) cos(phi) m); unit modulus.
inline cvec steering_vector(const ArrayGeometry& geom, const LinkGeometry& link) {
    geom.validate();
    const double w = geom.wavenumber_spacing() * std::sin(link.elevation_rad) *
                     std::cos(link.azimuth_rad);
    cvec ax(geom.k_x), ay(geom.k_y);
    for (std::size_t m = 0; m < geom.k_x; ++m)
        ax[m] = std::polar(1.0, -w * static_cast<double>(m));
    for (std::size_t n = 0; n < geom.k_y; ++n)
        ay[n] = std::polar(1.0, -w * static_cast<double>(n));
    return kron(ax, ay);
}

// h = gain_scale * sqrt(g / d^alpha) * h_hat * exp(j pi psi), g exponential
// with unit mean (squared magnitude of a unit circular complex Gaussian).
inline ChannelVector generate_channel(const ArrayGeometry& geom, const LinkGeometry& link,
                                      std::mt19937_64& rng) {
    link.validate();
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    const double re = gauss(rng);
    const double im = gauss(rng);
    const double g = re * re + im * im;

    ChannelVector h;
    h.entries = steering_vector(geom, link);
    h.large_scale_gain =
        link.gain_scale * std::sqrt(g / std::pow(link.distance_m, link.pathloss_exponent));
    const cplx doppler = std::polar(1.0, M_PI * link.doppler_cycles);
    for (auto& z : h.entries) z *= h.large_scale_gain * doppler;
    return h;
}

// Effective channel gain through the surface: Tr(Phi^H h h^H Phi) = ||Phi^H h||^2.
inline double effective_gain(const ChannelVector& h, const CMatrix& phi) {
    if (phi.rows() != h.size() || phi.cols() != h.size())
        throw dimension_error("effective_gain: dimension mismatch");
    return norm2(phi.adjoint_times(h.entries));
}

} // namespace tbdris
