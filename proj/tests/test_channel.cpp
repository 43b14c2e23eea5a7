// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tbdris/channel.hpp"
#include "tbdris/eig.hpp"

using namespace tbdris;

namespace {

CMatrix random_unitary(std::size_t n, std::mt19937_64& rng) {
    // eigenvectors of a random Hermitian matrix form a unitary matrix
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = g(rng);
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx z{g(rng), g(rng)};
            m(i, j) = z;
            m(j, i) = std::conj(z);
        }
    }
    return hermitian_eig(HermitianMatrix(std::move(m))).eigenvectors;
}

} // namespace

TEST_CASE("steering_vector: single element") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(1, 1, 18e9);
    LinkGeometry link;
    link.elevation_rad = 0.7;
    link.azimuth_rad = 1.1;
    const cvec a = steering_vector(geom, link);
    REQUIRE(a.size() == 1);
    CHECK(std::abs(a[0] - cplx{1.0, 0.0}) < 1e-15);
}

TEST_CASE("steering_vector: broadside gives all ones") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(3, 4, 18e9);
    LinkGeometry link; // elevation 0 -> sin(theta) = 0 kills every phase
    const cvec a = steering_vector(geom, link);
    REQUIRE(a.size() == 12);
    for (const auto& z : a) CHECK(std::abs(z - cplx{1.0, 0.0}) < 1e-12);
}

TEST_CASE("steering_vector: 2x2 with per-element phase pi") {
    // half-wavelength spacing: rho = pi; elevation pi/2, azimuth 0 -> w = pi
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(2, 2, 18e9);
    REQUIRE(geom.wavenumber_spacing() == Catch::Approx(M_PI).epsilon(1e-12));
    LinkGeometry link;
    link.elevation_rad = M_PI / 2.0;
    link.azimuth_rad = 0.0;
    const cvec a = steering_vector(geom, link);
    REQUIRE(a.size() == 4);
    const double expected[4] = {1.0, -1.0, -1.0, 1.0};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a[i].real() == Catch::Approx(expected[i]).margin(1e-12));
        CHECK(a[i].imag() == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("steering_vector: entries unit modulus") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(4, 4, 18e9);
    LinkGeometry link;
    link.elevation_rad = 0.53;
    link.azimuth_rad = 2.4;
    const cvec a = steering_vector(geom, link);
    REQUIRE(a.size() == 16);
    for (const auto& z : a) CHECK(std::abs(z) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generate_channel: deterministic for a fixed seed") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(4, 4, 18e9);
    LinkGeometry link;
    link.distance_m = 500e3;
    link.elevation_rad = 0.2;
    std::mt19937_64 rng1(42), rng2(42);
    const ChannelVector h1 = generate_channel(geom, link, rng1);
    const ChannelVector h2 = generate_channel(geom, link, rng2);
    REQUIRE(h1.size() == h2.size());
    for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1.entries[i] == h2.entries[i]);
    CHECK(h1.large_scale_gain == h2.large_scale_gain);
}

TEST_CASE("generate_channel: entries are uniformly scaled steering phases") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(4, 2, 18e9);
    LinkGeometry link;
    link.distance_m = 2.0;
    link.pathloss_exponent = 2.0;
    link.elevation_rad = 0.9;
    link.azimuth_rad = 0.3;
    link.doppler_cycles = 0.37;
    std::mt19937_64 rng(7);
    const ChannelVector h = generate_channel(geom, link, rng);
    REQUIRE(h.size() == 8);
    // every entry has modulus = large_scale_gain (steering entries are unit modulus)
    for (const auto& z : h.entries)
        CHECK(std::abs(z) == Catch::Approx(h.large_scale_gain).epsilon(1e-12));
    // squared norm = K * large_scale_gain^2 (the d^alpha = 4 scaling folded in)
    CHECK(h.squared_norm() == Catch::Approx(8.0 * h.large_scale_gain * h.large_scale_gain)
                                  .epsilon(1e-12));
    // ratio to the bare steering vector is a common complex constant
    const cvec a = steering_vector(geom, link);
    const cplx ratio = h.entries[0] / a[0];
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK(std::abs(h.entries[i] / a[i] - ratio) < 1e-12 * std::abs(ratio));
}

TEST_CASE("generate_channel: unit scaling reduces to the steering vector") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(3, 3, 18e9);
    LinkGeometry link;
    link.distance_m = 1.0;
    link.pathloss_exponent = 0.0;
    link.doppler_cycles = 0.0;
    link.elevation_rad = 0.4;
    std::mt19937_64 rng(5);
    const ChannelVector h = generate_channel(geom, link, rng);
    const cvec a = steering_vector(geom, link);
    // h = sqrt(g) * a with g the fading draw
    for (std::size_t i = 0; i < h.size(); ++i) {
        CHECK(std::abs(std::abs(h.entries[i] / a[i]) - h.large_scale_gain) < 1e-12);
        CHECK((h.entries[i] / a[i]).imag() == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("generate_channel: fading power has unit mean") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(1, 1, 18e9);
    LinkGeometry link; // d = 1, alpha irrelevant; large_scale_gain^2 = g
    link.pathloss_exponent = 0.0;
    std::mt19937_64 rng(123);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const ChannelVector h = generate_channel(geom, link, rng);
        sum += h.large_scale_gain * h.large_scale_gain;
    }
    CHECK(sum / n == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("effective_gain: identity phase returns the squared norm") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(4, 4, 18e9);
    LinkGeometry link;
    link.elevation_rad = 0.3;
    std::mt19937_64 rng(9);
    const ChannelVector h = generate_channel(geom, link, rng);
    CHECK(effective_gain(h, CMatrix::identity(16)) ==
          Catch::Approx(h.squared_norm()).epsilon(1e-12));
}

TEST_CASE("effective_gain: dimension mismatch throws") {
    ChannelVector h;
    h.entries = cvec(4, cplx{1.0, 0.0});
    CHECK_THROWS_AS(effective_gain(h, CMatrix::identity(3)), dimension_error);
}

TEST_CASE("effective_gain: zero channel gives zero") {
    ChannelVector h;
    h.entries = cvec(4, cplx{0.0, 0.0});
    CHECK(effective_gain(h, CMatrix::identity(4)) == 0.0);
}

TEST_CASE("effective_gain: rank-1 matched projector attains K * norm^2") {
    const std::size_t k = 16;
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(4, 4, 18e9);
    LinkGeometry link;
    link.elevation_rad = 0.6;
    link.azimuth_rad = 1.9;
    std::mt19937_64 rng(21);
    const ChannelVector h = generate_channel(geom, link, rng);
    const double nn = std::sqrt(h.squared_norm());
    // Phi = sqrt(K) u u^H with u = h / ||h||
    CMatrix phi(k, k);
    const double s = std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            phi(i, j) = s * (h.entries[i] / nn) * std::conj(h.entries[j] / nn);
    CHECK(effective_gain(h, phi) ==
          Catch::Approx(k * h.squared_norm()).epsilon(1e-10));
}

TEST_CASE("effective_gain: invariant under exactly unitary phase") {
    std::mt19937_64 rng(77);
    for (std::size_t n : {4u, 9u, 16u}) {
        const CMatrix u = random_unitary(n, rng);
        ChannelVector h;
        h.entries.resize(n);
        std::normal_distribution<double> g(0.0, 1.0);
        for (auto& z : h.entries) z = cplx{g(rng), g(rng)};
        CHECK(effective_gain(h, u) == Catch::Approx(h.squared_norm()).epsilon(1e-9));
    }
}

TEST_CASE("effective_gain: matches an independent matrix-vector product") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 6;
    CMatrix phi(n, n);
    for (auto& z : phi.data()) z = cplx{g(rng), g(rng)};
    ChannelVector h;
    h.entries.resize(n);
    for (auto& z : h.entries) z = cplx{g(rng), g(rng)};

    // independent computation: sum over columns of |phi_col^H h|^2
    double ref = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        cplx dot{0.0, 0.0};
        for (std::size_t r = 0; r < n; ++r) dot += std::conj(phi(r, c)) * h.entries[r];
        ref += std::norm(dot);
    }
    CHECK(effective_gain(h, phi) == Catch::Approx(ref).epsilon(1e-10));
    CHECK(effective_gain(h, phi) >= 0.0);
}

TEST_CASE("doppler phase cancels in effective gain") {
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(3, 3, 18e9);
    LinkGeometry a;
    a.elevation_rad = 0.25;
    LinkGeometry b = a;
    b.doppler_cycles = 0.83;
    std::mt19937_64 rng1(55), rng2(55);
    const ChannelVector h0 = generate_channel(geom, a, rng1);
    const ChannelVector h1 = generate_channel(geom, b, rng2);
    CHECK(effective_gain(h0, CMatrix::identity(9)) ==
          Catch::Approx(effective_gain(h1, CMatrix::identity(9))).epsilon(1e-12));
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS((ArrayGeometry{0, 1, 0.01, 18e9}).validate(), dimension_error);
    CHECK_THROWS_AS((ArrayGeometry{1, 1, 0.0, 18e9}).validate(), dimension_error);
    CHECK_THROWS_AS((ArrayGeometry{1, 1, 0.01, 0.0}).validate(), dimension_error);
    LinkGeometry bad;
    bad.distance_m = 0.0;
    CHECK_THROWS_AS(bad.validate(), dimension_error);
    LinkGeometry bad2;
    bad2.pathloss_exponent = -1.0;
    CHECK_THROWS_AS(bad2.validate(), dimension_error);
}
