#pragma once

// Named invariant checks over the algebraic layer: displacement-operator
// properties, Hilbert-Schmidt orthogonality, Bell-basis orthonormality, the
// joint eigenvalue equation, the measurement-circuit identity, and round-trip
// state reconstruction. Each check reports its worst observed deviation so a
// failure localizes immediately; the CLI `verify` command and the acceptance
// harness both consume this suite.

#include <string>
#include <vector>

#include "quditlearn/bell.hpp"
#include "quditlearn/core.hpp"
#include "quditlearn/shadows.hpp"

namespace quditlearn {

struct CheckResult {
    std::string name;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

namespace detail {

inline CheckResult make_check(std::string name, double dev, double tol) {
    CheckResult r;
    r.name = std::move(name);
    r.max_deviation = dev;
    r.tolerance = tol;
    r.passed = dev <= tol;
    return r;
}

}  // namespace detail

// Unitarity, the adjoint rule D^dagger_{q,p} = D_{-q,-p}, integer powers
// D^k = D_{kq,kp}, the commutation phase D_{q,p} D_{u,v} = w^{up-qv} D_{u,v} D_{q,p},
// and index periodicity D_{q+d,p} = (-1)^p D_{q,p} (and its transpose), checked
// densely over every index pair.
inline CheckResult check_displacement_properties(Dimension dim) {
    const int d = dim.d;
    const Mat id = Mat::Identity(d, d);
    double dev = 0.0;
    std::vector<Mat> disp(static_cast<std::size_t>(d) * d);
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) disp[q * d + p] = displacement(dim, q, p);
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) {
            const Mat& D = disp[q * d + p];
            dev = std::max(dev, (D.adjoint() * D - id).cwiseAbs().maxCoeff());
            dev = std::max(dev, (D.adjoint() - displacement(dim, -q, -p)).cwiseAbs().maxCoeff());
            Mat power = id;
            for (int k = 1; k <= 2 * d; ++k) {
                power = power * D;
                dev = std::max(dev, (power - displacement(dim, static_cast<long long>(k) * q,
                                                          static_cast<long long>(k) * p))
                                        .cwiseAbs()
                                        .maxCoeff());
            }
            const double sign_q = p % 2 == 0 ? 1.0 : -1.0;
            const double sign_p = q % 2 == 0 ? 1.0 : -1.0;
            dev = std::max(dev,
                           (displacement(dim, q + d, p) - sign_q * D).cwiseAbs().maxCoeff());
            dev = std::max(dev,
                           (displacement(dim, q, p + d) - sign_p * D).cwiseAbs().maxCoeff());
            for (int u = 0; u < d; ++u)
                for (int v = 0; v < d; ++v) {
                    const Mat& Duv = disp[u * d + v];
                    const cplx phase = root_of_unity(
                        static_cast<long long>(u) * p - static_cast<long long>(q) * v, d);
                    dev = std::max(dev,
                                   (D * Duv - phase * (Duv * D)).cwiseAbs().maxCoeff());
                }
        }
    return detail::make_check("displacement_properties", dev, 1e-10);
}

// Tr(D^dagger_{u,v} D_{q,p}) = d * delta_{(u,v),(q,p)} over all pairs.
inline CheckResult check_hs_orthogonality(Dimension dim) {
    const int d = dim.d;
    std::vector<Mat> disp(static_cast<std::size_t>(d) * d);
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) disp[q * d + p] = displacement(dim, q, p);
    double dev = 0.0;
    for (int i = 0; i < d * d; ++i)
        for (int j = 0; j < d * d; ++j) {
            const cplx inner = disp[i].conjugate().cwiseProduct(disp[j]).sum();
            const cplx expected = i == j ? cplx(static_cast<double>(d)) : cplx(0.0);
            dev = std::max(dev, std::abs(inner - expected));
        }
    return detail::make_check("hs_orthogonality", dev, 1e-10);
}

namespace detail {

// Columns indexed by flat (a, b): the generalized Bell basis as a d^2 x d^2 matrix.
inline Mat bell_basis_matrix(Dimension dim) {
    const int d = dim.d;
    Mat basis(d * d, d * d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) basis.col(a * d + b) = bell_state(dim, a, b);
    return basis;
}

}  // namespace detail

// <Phi_{a,b} | Phi_{a',b'}> = delta over all d^4 pairs.
inline CheckResult check_bell_orthonormality(Dimension dim) {
    const Mat basis = detail::bell_basis_matrix(dim);
    const int n = static_cast<int>(basis.cols());
    const double dev =
        (basis.adjoint() * basis - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    return detail::make_check("bell_orthonormality", dev, 1e-10);
}

// (D_{q,p} x D_{-q,p}) |Phi_{a,b}> = w^{ap-bq} |Phi_{a,b}> for every (q,p) and (a,b).
inline CheckResult check_bell_eigen_equation(Dimension dim) {
    const int d = dim.d;
    const Mat basis = detail::bell_basis_matrix(dim);
    double dev = 0.0;
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) {
            const Mat op = kron(displacement(dim, q, p), displacement(dim, -q, p));
            const Mat applied = op * basis;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    const cplx eig = bell_eigenvalue(dim, DisplacementIndex(q, p, dim),
                                                     BellOutcome{a, b});
                    dev = std::max(dev, (applied.col(a * d + b) - eig * basis.col(a * d + b))
                                            .cwiseAbs()
                                            .maxCoeff());
                }
        }
    return detail::make_check("bell_eigen_equation", dev, 1e-10);
}

// (CX)^{-1} (1 x W) maps |a>|b> onto |Phi_{a,b}>; with the sign convention that
// makes that exact, the Fourier matrix conjugates W^dagger X W = Z and W Z W^dagger = X.
inline CheckResult check_circuit_identity(Dimension dim) {
    double dev = bell_circuit_check(dim);
    const auto [X, Z] = clock_shift(dim);
    const Mat W = fourier_w(dim);
    dev = std::max(dev, (W.adjoint() * X * W - Z).cwiseAbs().maxCoeff());
    dev = std::max(dev, (W * Z * W.adjoint() - X).cwiseAbs().maxCoeff());
    return detail::make_check("circuit_identity", dev, 1e-12);
}

// Amplitude tables of valid states satisfy y_{0,0} = 1 and y_{-q,-p} = conj(y_{q,p}).
inline CheckResult check_amplitude_symmetry(Dimension dim, std::uint64_t seed) {
    const DensityMatrix rho = make_test_state(dim, StateSpec::haar(), seed);
    const AmplitudeTable table = amplitudes(rho, dim);
    double dev = std::abs(table.values[0] - cplx(1.0));
    for (int q = 0; q < dim.d; ++q)
        for (int p = 0; p < dim.d; ++p) {
            const cplx y = table.values[q * dim.d + p];
            const cplx y_neg = displacement_amplitude(rho.matrix(), dim, -q, -p);
            dev = std::max(dev, std::abs(std::conj(y) - y_neg));
        }
    return detail::make_check("amplitude_symmetry", dev, 1e-10);
}

// rho = (1/d) sum_{q,p} y_{q,p} D^dagger_{q,p} reproduces the state entrywise.
inline CheckResult check_bloch_roundtrip(Dimension dim, std::uint64_t seed) {
    const DensityMatrix rho = make_test_state(dim, StateSpec::haar(), seed);
    const BlochReconstruction rec = bloch_reconstruct(amplitudes(rho, dim));
    const double dev = (rec.matrix - rho.matrix()).cwiseAbs().maxCoeff();
    return detail::make_check("bloch_roundtrip", dev, 1e-10);
}

// The measurement channel and its stated inverse compose to the identity map.
inline CheckResult check_channel_inverse(Dimension dim, std::uint64_t seed) {
    Rng rng(seed);
    Mat a(dim.d, dim.d);
    for (int i = 0; i < dim.d; ++i)
        for (int j = 0; j < dim.d; ++j) a(i, j) = rng.complex_gaussian();
    const Mat round = inverse_channel(measurement_channel(a, dim), dim);
    const double dev = (round - a).cwiseAbs().maxCoeff();
    return detail::make_check("channel_inverse", dev, 1e-10);
}

// Full named-check suite at one dimension. Deterministic given the seed.
inline std::vector<CheckResult> run_invariant_suite(Dimension dim, std::uint64_t seed = 1) {
    std::vector<CheckResult> out;
    out.push_back(check_displacement_properties(dim));
    out.push_back(check_hs_orthogonality(dim));
    out.push_back(check_bell_orthonormality(dim));
    out.push_back(check_bell_eigen_equation(dim));
    out.push_back(check_circuit_identity(dim));
    out.push_back(check_amplitude_symmetry(dim, seed));
    out.push_back(check_bloch_roundtrip(dim, seed + 1));
    out.push_back(check_channel_inverse(dim, seed + 2));
    return out;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

}  // namespace quditlearn
