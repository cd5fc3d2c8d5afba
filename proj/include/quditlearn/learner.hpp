#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "quditlearn/bell.hpp"
#include "quditlearn/core.hpp"
#include "quditlearn/rng.hpp"

namespace quditlearn {

// Sampling budget for the conjugate-pair learner. sample_multiplier scales every
// sample-count formula; 1.0 reproduces the analyzed counts, tests shrink it to
// keep runtimes small.
struct LearnerConfig {
    double epsilon = 0.1;
    double delta = 0.05;
    double sample_multiplier = 1.0;
};

inline void validate(const LearnerConfig& c) {
    if (!(c.epsilon > 0.0) || !(c.epsilon <= 1.0))
        throw std::invalid_argument("LearnerConfig: epsilon must lie in (0, 1]");
    if (!(c.delta > 0.0) || !(c.delta < 1.0))
        throw std::invalid_argument("LearnerConfig: delta must lie in (0, 1)");
    if (!(c.sample_multiplier > 0.0))
        throw std::invalid_argument("LearnerConfig: sample_multiplier must be positive");
}

// Bell-sample budget N = ceil(8 ln(4 M / delta) / eps^4) for M candidate amplitudes.
inline std::size_t bell_sample_count(const LearnerConfig& c, std::size_t M) {
    validate(c);
    if (M == 0) throw std::invalid_argument("bell_sample_count: M must be positive");
    const double n = c.sample_multiplier * 8.0 *
                     std::log(4.0 * static_cast<double>(M) / c.delta) /
                     (c.epsilon * c.epsilon * c.epsilon * c.epsilon);
    return static_cast<std::size_t>(std::ceil(std::max(1.0, n)));
}

// Single-copy budget ceil(25 / eps^2) used to resolve one amplitude's sign.
inline std::size_t sign_sample_count(const LearnerConfig& c) {
    validate(c);
    const double n = c.sample_multiplier * 25.0 / (c.epsilon * c.epsilon);
    return static_cast<std::size_t>(std::ceil(std::max(1.0, n)));
}

// Empirical Bell moments: v_hat[q*d+p] = (1/n) sum_{a,b} counts[a,b] e^{i 2 pi (a p - b q)/d}.
// Computed from the outcome histogram in O(d^4) independent of n.
inline std::vector<cplx> moments_from_counts(const std::vector<std::uint64_t>& counts,
                                             Dimension dim, std::size_t n) {
    const int d = dim.d;
    if (static_cast<int>(counts.size()) != d * d)
        throw std::invalid_argument("moments_from_counts: histogram size != d^2");
    if (n == 0) throw std::invalid_argument("moments_from_counts: empty sample");
    std::vector<cplx> v(static_cast<std::size_t>(d) * d, cplx(0.0));
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) {
            cplx acc = 0.0;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    const auto c = counts[static_cast<std::size_t>(a) * d + b];
                    if (c == 0) continue;
                    acc += static_cast<double>(c) *
                           root_of_unity(static_cast<long long>(a) * p -
                                             static_cast<long long>(b) * q,
                                         d);
                }
            v[static_cast<std::size_t>(q) * d + p] = acc / static_cast<double>(n);
        }
    return v;
}

// One tracked amplitude: index plus the magnitude-phase estimate u_hat with
// y_{q,p} ~ +-u_hat.
struct TrackedAmplitude {
    DisplacementIndex idx;
    cplx u_hat;
};

// Output of the magnitude-estimation pass (phase 1).
struct MagnitudeResult {
    Dimension d;
    std::size_t samples = 0;
    std::vector<cplx> v_hat;    // flat q*d+p
    std::vector<cplx> u_hat;    // principal square root where tracked, else 0
    std::vector<char> tracked;  // flat flags; (0,0) is never tracked

    explicit MagnitudeResult(Dimension dim)
        : d(dim),
          v_hat(static_cast<std::size_t>(dim.d) * dim.d, cplx(0.0)),
          u_hat(static_cast<std::size_t>(dim.d) * dim.d, cplx(0.0)),
          tracked(static_cast<std::size_t>(dim.d) * dim.d, 0) {}

    std::vector<TrackedAmplitude> tracked_list() const {
        std::vector<TrackedAmplitude> out;
        for (int q = 0; q < d.d; ++q)
            for (int p = 0; p < d.d; ++p) {
                const std::size_t flat = static_cast<std::size_t>(q) * d.d + p;
                if (tracked[flat]) out.push_back({DisplacementIndex(q, p, d), u_hat[flat]});
            }
        return out;
    }
};

// Phase 1: Bell-sample rho x rho^*, estimate every v_{q,p} = y_{q,p}^2 at once,
// keep the indices whose moment clears (2/3) eps^2 and take principal roots.
inline MagnitudeResult estimate_magnitudes(const DensityMatrix& rho, const LearnerConfig& cfg,
                                           std::uint64_t seed) {
    validate(cfg);
    const Dimension dim(rho.dim());
    const int d = dim.d;
    MagnitudeResult out(dim);
    const std::size_t M = static_cast<std::size_t>(d) * d - 1;
    out.samples = bell_sample_count(cfg, M);

    const auto dist = bell_distribution(rho, rho.conjugate());
    const auto counts = sample_bell_counts(dist, out.samples, seed);
    out.v_hat = moments_from_counts(counts, dim, out.samples);

    const double threshold = (2.0 / 3.0) * cfg.epsilon * cfg.epsilon;
    for (std::size_t flat = 1; flat < out.v_hat.size(); ++flat) {
        if (std::abs(out.v_hat[flat]) <= threshold) continue;
        out.tracked[flat] = 1;
        out.u_hat[flat] = std::sqrt(out.v_hat[flat]);  // principal branch, Re >= 0
    }
    return out;
}

// omega = exp(-beta S) / Tr(exp(-beta S)), evaluated in S's eigenbasis with the
// spectrum shifted so the largest exponent is zero.
inline Mat gibbs_state(const Mat& weight_sum, double beta) {
    if (weight_sum.rows() != weight_sum.cols())
        throw std::invalid_argument("gibbs_state: non-square weight sum");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (weight_sum + weight_sum.adjoint()));
    if (es.info() != Eigen::Success) throw std::runtime_error("gibbs_state: eigensolver failed");
    const Eigen::VectorXd lam = es.eigenvalues();
    Eigen::VectorXd w = (-beta * (lam.array() - lam.minCoeff())).exp();
    w /= w.sum();
    return es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

// Single-copy estimate of y = Tr(D_{q,p} rho): n projective measurements in the
// eigenbasis of the (unitary, nondegenerate) displacement, averaging the
// eigenvalues observed.
inline cplx measure_amplitude(const DensityMatrix& rho, Dimension dim, DisplacementIndex idx,
                              std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("measure_amplitude: need at least one sample");
    const int d = dim.d;
    const Mat D = displacement(dim, idx);
    Eigen::ComplexEigenSolver<Mat> es(D);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("measure_amplitude: eigensolver failed");

    std::vector<double> probs(d);
    std::vector<cplx> lambda(d);
    double total = 0.0;
    for (int k = 0; k < d; ++k) {
        const Vec v = es.eigenvectors().col(k).normalized();
        probs[k] = std::max(0.0, std::real(v.dot(rho.matrix() * v)));
        total += probs[k];
        lambda[k] = es.eigenvalues()(k) / std::abs(es.eigenvalues()(k));
    }
    if (std::abs(total - 1.0) > 1e-8)
        throw std::runtime_error("measure_amplitude: eigenbasis probabilities sum to " +
                                 std::to_string(total));
    for (double& pr : probs) pr /= total;

    DiscreteSampler sampler(probs);
    cplx acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += lambda[sampler.sample(rng)];
    return acc / static_cast<double>(n);
}

// Output of the online hypothesis search (phase 2a).
struct HypothesisState {
    Mat omega;                           // final hypothesis state
    std::size_t error_count = 0;         // multiplicative-weight updates performed
    std::size_t round_limit = 0;         // analyzed budget T = ceil(16 ln d / eps^2)
    double beta = 0.0;                   // step size sqrt(ln d / T)
    std::vector<int> sign_guesses;       // per tracked index: argmin_s |ytilde - s u_hat|
    std::vector<double> regret_witness;  // Tr(M_t (omega_t - rho)) per update
    bool theory_violation = false;       // exceeded the analyzed error budget
    bool completed = true;               // false if the hard cap stopped the loop
};

// Phase 2a: maintain a Gibbs hypothesis omega over the tracked amplitudes.
// Cycle through the tracked indices; whenever omega's amplitude disagrees with
// +-u_hat by at least epsilon, measure the true state's sign for that index and
// apply a multiplicative-weight update that pushes the offending amplitude
// toward the measured branch. Stops after a full error-free cycle.
inline HypothesisState find_hypothesis(const DensityMatrix& rho,
                                       const std::vector<TrackedAmplitude>& tracked,
                                       double epsilon, std::size_t sign_samples,
                                       std::uint64_t seed) {
    if (!(epsilon > 0.0) || !(epsilon <= 1.0))
        throw std::invalid_argument("find_hypothesis: epsilon must lie in (0, 1]");
    const Dimension dim(rho.dim());
    const int d = dim.d;

    HypothesisState out;
    out.round_limit =
        static_cast<std::size_t>(std::ceil(16.0 * std::log(static_cast<double>(d)) /
                                           (epsilon * epsilon)));
    out.beta = std::sqrt(std::log(static_cast<double>(d)) /
                         static_cast<double>(std::max<std::size_t>(out.round_limit, 1)));
    out.omega = Mat::Identity(d, d) / static_cast<double>(d);
    out.sign_guesses.assign(tracked.size(), +1);
    if (tracked.empty()) return out;

    Rng rng(seed);
    Mat weight_sum = Mat::Zero(d, d);
    // Generous hard cap so the loop always terminates even if the error budget
    // analysis is violated; the flag records any overrun.
    const std::size_t hard_cap = 2 * out.round_limit + 2;

    std::size_t since_error = 0;
    std::size_t cursor = 0;
    while (since_error < tracked.size()) {
        const TrackedAmplitude& tj = tracked[cursor];
        const cplx ytilde = displacement_amplitude(out.omega, dim, tj.idx.q, tj.idx.p);
        const double dist_plus = std::abs(ytilde - tj.u_hat);
        const double dist_minus = std::abs(ytilde + tj.u_hat);
        if (std::min(dist_plus, dist_minus) >= epsilon) {
            if (out.error_count >= hard_cap) {
                out.completed = false;
                break;
            }
            ++out.error_count;
            if (out.error_count > out.round_limit) out.theory_violation = true;

            // Resolve the true sign for this index from single-copy measurements.
            const cplx m_hat = measure_amplitude(rho, dim, tj.idx, sign_samples, rng);
            const int r =
                (std::abs(m_hat - tj.u_hat) <= std::abs(m_hat + tj.u_hat)) ? +1 : -1;

            const cplx diff = ytilde - static_cast<double>(r) * tj.u_hat;
            const double nrm = std::abs(diff);  // >= epsilon by the error condition
            const Mat D = displacement(dim, tj.idx);
            const Mat loss = (std::conj(diff) * D + diff * D.adjoint()) / (2.0 * nrm);

            const cplx ytrue =
                displacement_amplitude(rho.matrix(), dim, tj.idx.q, tj.idx.p);
            out.regret_witness.push_back(std::real(std::conj(diff) * (ytilde - ytrue)) / nrm);

            weight_sum += loss;
            out.omega = gibbs_state(weight_sum, out.beta);
            since_error = 0;
        } else {
            ++since_error;
        }
        cursor = (cursor + 1) % tracked.size();
    }

    for (std::size_t i = 0; i < tracked.size(); ++i) {
        const cplx ytilde =
            displacement_amplitude(out.omega, dim, tracked[i].idx.q, tracked[i].idx.p);
        out.sign_guesses[i] =
            (std::abs(ytilde - tracked[i].u_hat) <= std::abs(ytilde + tracked[i].u_hat)) ? +1
                                                                                         : -1;
    }
    return out;
}

// Output of the sign-determination pass (phase 2b).
struct SignResult {
    std::vector<cplx> y_hat;  // flat table; (0,0) entry fixed to 1
    std::vector<int> r_hat;   // aligned with MagnitudeResult::tracked_list()
    std::size_t samples = 0;  // phase-2 Bell samples
    HypothesisState hypothesis;
};

namespace detail {
inline double wrap_angle(double t) {
    t = std::fmod(t + kPi, 2.0 * kPi);
    if (t <= 0.0) t += 2.0 * kPi;
    return t - kPi;  // (-pi, pi]
}
}  // namespace detail

// Phase 2: build a hypothesis consistent with the magnitudes at half the target
// precision, then Bell-sample rho x hypothesis^* — the moment at (q,p) estimates
// y_{q,p} ytilde_{q,p}, whose phase relative to u_hat^2 reveals the sign of y
// relative to the hypothesis branch.
inline SignResult determine_signs(const DensityMatrix& rho, const MagnitudeResult& mag,
                                  const LearnerConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    const Dimension dim = mag.d;
    const int d = dim.d;
    if (rho.dim() != d)
        throw std::invalid_argument("determine_signs: state dimension != magnitude table");

    SignResult out;
    out.y_hat.assign(static_cast<std::size_t>(d) * d, cplx(0.0));
    out.y_hat[0] = 1.0;

    const auto tracked = mag.tracked_list();
    Rng root(seed);
    const std::uint64_t seed_hyp = root.next_u64();
    const std::uint64_t seed_bell = root.next_u64();

    out.hypothesis =
        find_hypothesis(rho, tracked, cfg.epsilon / 2.0, sign_sample_count(cfg), seed_hyp);
    if (tracked.empty()) return out;

    const DensityMatrix sigma(out.hypothesis.omega);
    out.samples = bell_sample_count(cfg, static_cast<std::size_t>(d) * d - 1);
    const auto dist = bell_distribution(rho, sigma.conjugate());
    const auto counts = sample_bell_counts(dist, out.samples, seed_bell);
    const auto v2 = moments_from_counts(counts, dim, out.samples);

    out.r_hat.reserve(tracked.size());
    for (std::size_t i = 0; i < tracked.size(); ++i) {
        const std::size_t flat = static_cast<std::size_t>(tracked[i].idx.flat(dim));
        const double gap =
            detail::wrap_angle(std::arg(v2[flat]) - 2.0 * std::arg(tracked[i].u_hat));
        const int branch = (std::abs(gap) <= kPi / 2.0) ? +1 : -1;
        const int r = branch * out.hypothesis.sign_guesses[i];
        out.r_hat.push_back(r);
        out.y_hat[flat] = static_cast<double>(r) * tracked[i].u_hat;
    }
    return out;
}

// Full pipeline: magnitudes from rho x rho^*, then signs against a learned
// hypothesis state.
struct LearnResult {
    MagnitudeResult magnitudes;
    SignResult signs;
};

inline LearnResult learn_amplitudes(const DensityMatrix& rho, const LearnerConfig& cfg,
                                    std::uint64_t seed) {
    Rng root(seed);
    const std::uint64_t seed_mag = root.next_u64();
    const std::uint64_t seed_sign = root.next_u64();
    LearnResult out{estimate_magnitudes(rho, cfg, seed_mag), {}};
    out.signs = determine_signs(rho, out.magnitudes, cfg, seed_sign);
    return out;
}

}  // namespace quditlearn
