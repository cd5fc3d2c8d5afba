#pragma once

#include <cstdint>
#include <vector>

#include "quditlearn/core.hpp"

namespace quditlearn {

// Outcome (a, b) of one generalized Bell measurement.
struct BellOutcome {
    int a = 0;
    int b = 0;
    bool operator==(const BellOutcome&) const = default;
};

// |Phi_{a,b}> = (1/sqrt d) sum_j e^{i 2 pi b j / d} |j+a>|-j>, flattened as |x>|y> -> x*d + y.
inline Vec bell_state(Dimension dim, int a, int b) {
    const int d = dim.d;
    a = mod_d(a, d);
    b = mod_d(b, d);
    Vec phi = Vec::Zero(d * d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (int j = 0; j < d; ++j)
        phi(mod_d(j + a, d) * d + mod_d(-j, d)) = norm * root_of_unity(static_cast<long long>(b) * j, d);
    return phi;
}

// Joint eigenvalue of D_{q,p} x D_{-q,p} on |Phi_{a,b}>: e^{i 2 pi (a p - b q)/d}.
inline cplx bell_eigenvalue(Dimension dim, DisplacementIndex idx, BellOutcome out) {
    return root_of_unity(static_cast<long long>(out.a) * idx.p -
                         static_cast<long long>(out.b) * idx.q, dim.d);
}

// Probabilities of all d^2 Bell outcomes for a joint measurement of rho x sigma.
struct BellDistribution {
    Dimension d;
    std::vector<double> probs;  // flat index a*d + b

    explicit BellDistribution(Dimension dim) : d(dim), probs(dim.d * dim.d, 0.0) {}

    double& at(BellOutcome o) { return probs[o.a * d.d + o.b]; }
    double at(BellOutcome o) const { return probs[o.a * d.d + o.b]; }
};

// P(a,b) = <Phi_{a,b}| rho x sigma |Phi_{a,b}>, contracted directly:
// (1/d) sum_{j,j'} e^{i 2 pi b (j'-j)/d} rho_{j+a, j'+a} sigma_{-j, -j'}.
// O(d^2) per outcome, O(d^4) total; the d^2 x d^2 joint matrix is never formed.
inline BellDistribution bell_distribution(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim())
        throw std::invalid_argument("bell_distribution: dimension mismatch " +
                                    std::to_string(rho.dim()) + " vs " + std::to_string(sigma.dim()));
    const Dimension dim(rho.dim());
    const int d = dim.d;
    const Mat& r = rho.matrix();
    const Mat& s = sigma.matrix();
    BellDistribution dist(dim);
    double total = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            cplx acc = 0.0;
            for (int j = 0; j < d; ++j)
                for (int jp = 0; jp < d; ++jp)
                    acc += root_of_unity(static_cast<long long>(b) * (jp - j), d) *
                           r(mod_d(j + a, d), mod_d(jp + a, d)) * s(mod_d(-j, d), mod_d(-jp, d));
            const double prob = std::max(0.0, acc.real() / d);  // clip e-16 negatives
            dist.probs[a * d + b] = prob;
            total += prob;
        }
    // Renormalize away accumulated rounding; deviation beyond 1e-10 is a bug upstream.
    if (std::abs(total - 1.0) > 1e-10)
        throw std::runtime_error("bell_distribution: probabilities sum to " + std::to_string(total));
    for (double& p : dist.probs) p /= total;
    return dist;
}

// Test-oracle path for a joint (possibly entangled) pure input on C^{d^2}.
inline BellDistribution bell_distribution_joint_pure(Dimension dim, const Vec& psi) {
    if (psi.size() != static_cast<Eigen::Index>(dim.d) * dim.d)
        throw std::invalid_argument("bell_distribution_joint_pure: wrong vector length");
    BellDistribution dist(dim);
    for (int a = 0; a < dim.d; ++a)
        for (int b = 0; b < dim.d; ++b) {
            const cplx amp = bell_state(dim, a, b).dot(psi);  // dot conjugates the left factor
            dist.probs[a * dim.d + b] = std::norm(amp);
        }
    return dist;
}

// i.i.d. Bell samples via inverse-CDF on the counter-based generator.
inline std::vector<BellOutcome> sample_bell(const BellDistribution& dist, std::size_t n,
                                            std::uint64_t seed) {
    DiscreteSampler sampler(dist.probs);
    Rng rng(seed);
    std::vector<BellOutcome> out;
    out.reserve(n);
    const int d = dist.d.d;
    for (std::size_t k = 0; k < n; ++k) {
        const int flat = static_cast<int>(sampler.sample(rng));
        out.push_back({flat / d, flat % d});
    }
    return out;
}

// Histogram variant: counts[a*d+b] of n i.i.d. samples. Same stream as sample_bell.
inline std::vector<std::uint64_t> sample_bell_counts(const BellDistribution& dist, std::size_t n,
                                                     std::uint64_t seed) {
    DiscreteSampler sampler(dist.probs);
    Rng rng(seed);
    std::vector<std::uint64_t> counts(dist.probs.size(), 0);
    for (std::size_t k = 0; k < n; ++k) ++counts[sampler.sample(rng)];
    return counts;
}

// Fourier W |b> = (1/sqrt d) sum_j e^{-i 2 pi b j / d} |j>. Note W^dagger X W = Z and
// W Z W^dagger = X; this is the sign that makes the Bell circuit identity below exact.
inline Mat fourier_w(Dimension dim) {
    const int d = dim.d;
    Mat W(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (int j = 0; j < d; ++j)
        for (int b = 0; b < d; ++b)
            W(j, b) = norm * root_of_unity(-static_cast<long long>(j) * b, d);
    return W;
}

// CX |j>|l> = |j+l>|l>.
inline Mat cx_gate(Dimension dim) {
    const int d = dim.d;
    Mat CX = Mat::Zero(d * d, d * d);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l)
            CX(mod_d(j + l, d) * d + l, j * d + l) = 1.0;
    return CX;
}

// Max deviation of (CX)^{-1} (1 x W) |a>|b> from |Phi_{a,b}> over all (a, b).
inline double bell_circuit_check(Dimension dim) {
    const int d = dim.d;
    const Mat W = fourier_w(dim);
    const Mat CXinv = cx_gate(dim).adjoint();
    Mat onexW = Mat::Zero(d * d, d * d);
    for (int j = 0; j < d; ++j)
        onexW.block(j * d, j * d, d, d) = W;
    const Mat circuit = CXinv * onexW;
    double max_dev = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            Vec in = Vec::Zero(d * d);
            in(a * d + b) = 1.0;
            max_dev = std::max(max_dev, (circuit * in - bell_state(dim, a, b)).cwiseAbs().maxCoeff());
        }
    return max_dev;
}

// --- n-subsystem variant -----------------------------------------------------
// Joint Bell measurement on n registers factorizes; probabilities for register i
// come from its own BellDistribution and the d^{2n}-entry joint table is never built.

struct BellOutcomeVec {
    std::vector<int> avec;
    std::vector<int> bvec;
};

inline std::vector<BellOutcomeVec> sample_bell_vec(const std::vector<BellDistribution>& dists,
                                                   std::size_t n, std::uint64_t seed) {
    std::vector<DiscreteSampler> samplers;
    samplers.reserve(dists.size());
    for (const auto& dist : dists) samplers.emplace_back(dist.probs);
    Rng rng(seed);
    std::vector<BellOutcomeVec> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k].avec.resize(dists.size());
        out[k].bvec.resize(dists.size());
        for (std::size_t i = 0; i < dists.size(); ++i) {
            const int d = dists[i].d.d;
            const int flat = static_cast<int>(samplers[i].sample(rng));
            out[k].avec[i] = flat / d;
            out[k].bvec[i] = flat % d;
        }
    }
    return out;
}

}  // namespace quditlearn
