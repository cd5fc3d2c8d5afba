#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "quditlearn/bell.hpp"
#include "quditlearn/core.hpp"
#include "quditlearn/learner.hpp"
#include "quditlearn/parallel.hpp"
#include "quditlearn/rng.hpp"
#include "quditlearn/shadows.hpp"

namespace quditlearn {

// --- distinguishing task ------------------------------------------------------

enum class ProtocolKind { conjugate_bell, single_copy_shadow, single_copy_with_conjugate };

inline const char* protocol_name(ProtocolKind p) {
    switch (p) {
        case ProtocolKind::conjugate_bell: return "conjugate_bell";
        case ProtocolKind::single_copy_shadow: return "single_copy_shadow";
        case ProtocolKind::single_copy_with_conjugate: return "single_copy_with_conjugate";
    }
    throw std::logic_error("protocol_name: unreachable");
}

inline ProtocolKind protocol_from_name(const std::string& name) {
    if (name == "conjugate_bell") return ProtocolKind::conjugate_bell;
    if (name == "single_copy_shadow") return ProtocolKind::single_copy_shadow;
    if (name == "single_copy_with_conjugate") return ProtocolKind::single_copy_with_conjugate;
    throw std::invalid_argument("unknown protocol '" + name + "'");
}

struct TrialRecord {
    int d = 0;
    double epsilon = 0.0;
    ProtocolKind protocol = ProtocolKind::conjugate_bell;
    long long n_samples = 0;
    bool decision_yes = false;
    bool truth_yes = false;
    std::uint64_t seed = 0;
};

// One trial state: rho = (1/d)(I + amp * E_spike) with canonical spike index;
// amp = 0 is the maximally mixed NO scenario.
struct SpikeState {
    DisplacementIndex spike;
    double amp = 0.0;
};

// The conjugate state of a spike is again a spike: E*_{q,p} = E_{-q,p} at
// integer indices, which is (-1)^p E at the canonical representative when q != 0.
inline SpikeState conjugate_spike(Dimension dim, const SpikeState& s) {
    if (s.amp == 0.0) return s;
    const DisplacementIndex partner(-s.spike.q, s.spike.p, dim);
    const double sign = (s.spike.q != 0 && s.spike.p % 2 == 1) ? -1.0 : 1.0;
    return {partner, s.amp * sign};
}

// Shared per-dimension caches: synthesized symplectics plus, for each symplectic
// C, the image of the vertical index line {(0,v)} together with the conjugation
// phase U_C D_{C(0,v)} U_C^dagger = phase * D_{0,v}. Shadow estimators of
// displacement observables only receive contributions on that line.
class ExperimentContext {
  public:
    struct LineTable {
        std::vector<int> index;  // flat canonical C(0,v), v = 1..d-1
        std::vector<cplx> phase;
    };

    explicit ExperimentContext(Dimension dim) : dim_(dim), synth_(dim) {}

    Dimension dim() const { return dim_; }

    const LineTable& line(const SymplecticMat2& c) {
        const int key = c.key(dim_);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = lines_.find(key);
        if (it == lines_.end()) it = lines_.emplace(key, build_line(c)).first;
        return it->second;
    }

  private:
    LineTable build_line(const SymplecticMat2& c) {
        const int d = dim_.d;
        const Mat& u = synth_.symplectic_unitary(c);
        LineTable out;
        out.index.reserve(static_cast<std::size_t>(d) - 1);
        out.phase.reserve(static_cast<std::size_t>(d) - 1);
        for (int v = 1; v < d; ++v) {
            const DisplacementIndex src = c.apply(DisplacementIndex(0, v, dim_), dim_);
            // (U D_src U^dagger)(0,0); D_{0,v}(0,0) = 1, so this is the phase.
            cplx phase = 0.0;
            for (int j = 0; j < d; ++j)
                phase += u(0, mod_d(j + src.q, d)) *
                         half_phase(static_cast<long long>(src.q + 2 * j) * src.p, d) *
                         std::conj(u(0, j));
            if (std::abs(std::abs(phase) - 1.0) > 1e-9)
                throw std::runtime_error("ExperimentContext: non-unimodular line phase");
            out.index.push_back(src.flat(dim_));
            out.phase.push_back(phase);
        }
        return out;
    }

    Dimension dim_;
    SynthesisCache synth_;
    std::mutex mutex_;
    std::unordered_map<int, LineTable> lines_;
};

namespace detail {

// Outcome distribution of one shadow measurement of a spike state under element
// (c, offset): uniform unless the spike lies on C({(0,v)}), in which case
// p(b) = (1/d)(1 + amp * 2 Re[chi * phase * w^{(b - q_off) v}]).
inline std::vector<double> line_probabilities(Dimension dim, const SpikeState& state,
                                              const ExperimentContext::LineTable& lt,
                                              DisplacementIndex offset) {
    const int d = dim.d;
    std::vector<double> probs(static_cast<std::size_t>(d), 1.0 / d);
    if (state.amp == 0.0) return probs;
    const int spike_flat = state.spike.q * d + state.spike.p;
    for (int v = 1; v < d; ++v) {
        if (lt.index[static_cast<std::size_t>(v) - 1] != spike_flat) continue;
        const cplx chi(0.5, 0.5);
        const cplx base = chi * lt.phase[static_cast<std::size_t>(v) - 1];
        double total = 0.0;
        for (int b = 0; b < d; ++b) {
            const double p =
                (1.0 + state.amp * 2.0 *
                           std::real(base * root_of_unity(
                                                static_cast<long long>(b - offset.q) * v, d))) /
                d;
            if (p < -1e-12)
                throw std::runtime_error("line_probabilities: negative probability");
            probs[static_cast<std::size_t>(b)] = std::max(0.0, p);
            total += probs[static_cast<std::size_t>(b)];
        }
        for (double& p : probs) p /= total;
        break;
    }
    return probs;
}

}  // namespace detail

struct ShadowEstimateResult {
    std::vector<double> estimate;       // flat (q,p), entry 0 unused
    std::vector<ShadowSample> samples;  // populated only when recording
};

// n shadow samples of a spike state with O(d) work per sample: the estimator of
// E_{q,p} receives per-sample contribution 2 Re[chi * (d+1) * phase * w^{(b-q_off)v}]
// exactly on the d-1 indices C(0,v); everything else averages to zero.
inline ShadowEstimateResult shadow_protocol_estimates(Dimension dim, const SpikeState& state,
                                                      long long n, Rng& rng,
                                                      ExperimentContext& ctx,
                                                      bool record = false) {
    const int d = dim.d;
    const cplx chi(0.5, 0.5);
    ShadowEstimateResult out;
    out.estimate.assign(static_cast<std::size_t>(d) * d, 0.0);
    if (record) out.samples.reserve(static_cast<std::size_t>(n));
    for (long long s = 0; s < n; ++s) {
        const SymplecticMat2 c = sample_symplectic(dim, rng);
        const DisplacementIndex offset(
            static_cast<long long>(rng.uniform_int(static_cast<std::uint64_t>(d))),
            static_cast<long long>(rng.uniform_int(static_cast<std::uint64_t>(d))), dim);
        const auto& lt = ctx.line(c);
        const auto probs = detail::line_probabilities(dim, state, lt, offset);
        DiscreteSampler sampler(probs);
        const int b = static_cast<int>(sampler.sample(rng));
        for (int v = 1; v < d; ++v) {
            const cplx o_hat = static_cast<double>(d + 1) *
                               lt.phase[static_cast<std::size_t>(v) - 1] *
                               root_of_unity(static_cast<long long>(b - offset.q) * v, d);
            out.estimate[static_cast<std::size_t>(lt.index[static_cast<std::size_t>(v) - 1])] +=
                2.0 * std::real(chi * o_hat);
        }
        if (record) out.samples.push_back({CliffordElement{dim, c, offset}, b});
    }
    if (n > 0)
        for (double& e : out.estimate) e /= static_cast<double>(n);
    return out;
}

namespace detail {

inline bool decide_conjugate_bell(Dimension dim, double eps, long long n,
                                  const SpikeState& state, Rng& rng) {
    if (n <= 0) return false;
    const int d = dim.d;
    std::vector<double> probs(static_cast<std::size_t>(d) * d, 1.0 / (d * d));
    if (state.amp != 0.0) {
        const DensityMatrix rho = make_test_state(
            dim, StateSpec::spike(state.spike, state.amp > 0 ? 1 : -1, std::abs(state.amp)),
            0);
        probs = bell_distribution(rho, rho.conjugate()).probs;
    }
    DiscreteSampler sampler(probs);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(d) * d, 0);
    for (long long s = 0; s < n; ++s) ++counts[sampler.sample(rng)];
    const auto v_hat = moments_from_counts(counts, dim, static_cast<std::size_t>(n));
    double best = 0.0;
    for (std::size_t i = 1; i < v_hat.size(); ++i) best = std::max(best, std::abs(v_hat[i]));
    // Spike states carry |y| = eps/sqrt(2), so the magnitude-test constant lands
    // at (2/3)|y|^2 = eps^2/3.
    return best > eps * eps / 3.0;
}

inline bool decide_single_copy_shadow(Dimension dim, double eps, long long n,
                                      const SpikeState& state, Rng& rng,
                                      ExperimentContext& ctx) {
    if (n <= 0) return false;
    const auto est = shadow_protocol_estimates(dim, state, n, rng, ctx);
    double best = 0.0;
    for (std::size_t i = 1; i < est.estimate.size(); ++i)
        best = std::max(best, std::abs(est.estimate[i]));
    return best > eps / 2.0;
}

inline bool decide_single_copy_with_conjugate(Dimension dim, double eps, long long n,
                                              const SpikeState& state, Rng& rng,
                                              ExperimentContext& ctx) {
    if (n <= 0) return false;
    const int d = dim.d;
    const long long n_rho = (n + 1) / 2;
    const long long n_conj = n / 2;
    const auto direct = shadow_protocol_estimates(dim, state, n_rho, rng, ctx);
    const auto mirrored =
        shadow_protocol_estimates(dim, conjugate_spike(dim, state), n_conj, rng, ctx);
    double best = 0.0;
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) {
            if (q == 0 && p == 0) continue;
            // E-estimates of rho* at the partner index realign with those of rho.
            const std::size_t i = static_cast<std::size_t>(q) * d + p;
            const std::size_t partner = static_cast<std::size_t>(mod_d(-q, d)) * d + p;
            const double sign = (q != 0 && p % 2 == 1) ? -1.0 : 1.0;
            const double w_conj = n_conj > 0 ? 1.0 : 0.0;
            const double combined =
                (direct.estimate[i] + w_conj * sign * mirrored.estimate[partner]) /
                (1.0 + w_conj);
            best = std::max(best, std::abs(combined));
        }
    return best > eps / 2.0;
}

}  // namespace detail

// One run of the many-vs-one distinguishing game: a fair coin picks the truth,
// YES draws a uniform nonzero spike index and sign, and the chosen protocol
// decides from n samples.
inline TrialRecord distinguishing_trial(Dimension dim, double eps, ProtocolKind protocol,
                                        long long n, std::uint64_t seed,
                                        ExperimentContext* ctx = nullptr) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("distinguishing_trial: eps must be in (0,1)");
    const int d = dim.d;
    Rng rng(seed);
    const bool truth = rng.uniform() < 0.5;
    SpikeState state;
    if (truth) {
        const int flat =
            1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d * d - 1)));
        state.spike = DisplacementIndex(flat / d, flat % d, dim);
        state.amp = (rng.uniform() < 0.5 ? 1.0 : -1.0) * eps;
    }

    std::optional<ExperimentContext> local;
    if (protocol != ProtocolKind::conjugate_bell && ctx == nullptr) {
        local.emplace(dim);
        ctx = &*local;
    }

    bool decision = false;
    switch (protocol) {
        case ProtocolKind::conjugate_bell:
            decision = detail::decide_conjugate_bell(dim, eps, n, state, rng);
            break;
        case ProtocolKind::single_copy_shadow:
            decision = detail::decide_single_copy_shadow(dim, eps, n, state, rng, *ctx);
            break;
        case ProtocolKind::single_copy_with_conjugate:
            decision =
                detail::decide_single_copy_with_conjugate(dim, eps, n, state, rng, *ctx);
            break;
    }
    return TrialRecord{d, eps, protocol, n, decision, truth, seed};
}

// --- sample-complexity scan -----------------------------------------------------

struct ScalingRow {
    int d = 0;
    ProtocolKind protocol = ProtocolKind::conjugate_bell;
    long long samples_to_success = -1;  // -1: not reached within the grid cap
};

struct ScalingReport {
    double epsilon = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
    double success_target = 0.9;
    long long grid_base = 8;       // geometric grid base, ratio 2
    long long grid_cap = 1 << 24;  // search gives up past this sample count
    std::vector<ScalingRow> rows;
};

// Finds, per (d, protocol), the smallest sample count on a ratio-2 geometric
// grid (bisection-refined) at which the fraction of correct trials reaches the
// target. Trial seeds are derived from (seed, d, protocol, n, t) so results do
// not depend on the search path or the worker count.
inline ScalingReport scaling_scan(const std::vector<int>& d_list, double eps,
                                  const std::vector<ProtocolKind>& protocols, int trials,
                                  std::uint64_t seed, int workers = 1, int refine_steps = 2) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("scaling_scan: eps must be in (0,1)");
    if (trials < 1) throw std::invalid_argument("scaling_scan: trials must be >= 1");

    ScalingReport report;
    report.epsilon = eps;
    report.trials = trials;
    report.seed = seed;

    Rng root(seed);
    for (int d : d_list) {
        const Dimension dim(d);
        ExperimentContext ctx(dim);
        for (ProtocolKind proto : protocols) {
            const std::uint64_t pair_seed = root.next_u64();
            const long long need =
                static_cast<long long>(std::ceil(report.success_target * trials));

            const auto success = [&](long long n) {
                std::vector<unsigned char> ok(static_cast<std::size_t>(trials), 0);
                parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t t) {
                    const std::uint64_t tseed = Rng(pair_seed)
                                                    .substream(static_cast<std::uint64_t>(n))
                                                    .substream(t)
                                                    .next_u64();
                    const auto rec = distinguishing_trial(dim, eps, proto, n, tseed, &ctx);
                    ok[t] = rec.decision_yes == rec.truth_yes ? 1 : 0;
                });
                long long total = 0;
                for (unsigned char o : ok) total += o;
                return total >= need;
            };

            ScalingRow row{d, proto, -1};
            long long lo = 0, hi = -1;
            for (long long n = report.grid_base; n <= report.grid_cap; n *= 2) {
                if (success(n)) {
                    hi = n;
                    break;
                }
                lo = n;
            }
            if (hi > 0) {
                for (int r = 0; r < refine_steps && hi - lo > 1; ++r) {
                    const long long mid = lo + (hi - lo) / 2;
                    if (success(mid))
                        hi = mid;
                    else
                        lo = mid;
                }
                row.samples_to_success = hi;
            }
            report.rows.push_back(row);
        }
    }
    return report;
}

// --- operator-norm lemmas ---------------------------------------------------------

namespace detail {

// Largest singular value; dense SVD for small matrices, power iteration on
// A^dagger A for large ones.
inline double operator_norm(const Mat& a) {
    if (a.rows() <= 700) {
        Eigen::BDCSVD<Mat> svd(a);
        return svd.singularValues()(0);
    }
    Vec v = Vec::Zero(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = cplx(1.0 + 1e-3 * static_cast<double>(i % 97), 1e-4 * static_cast<double>(i % 89));
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < 500; ++it) {
        Vec w = a.adjoint() * (a * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = std::sqrt(norm);
        w /= norm;
        const bool settled = std::abs(next - sigma) <= 1e-12 * std::max(1.0, next);
        sigma = next;
        v = std::move(w);
        if (settled && it > 8) break;
    }
    return sigma;
}

inline long long tensor_size_checked(Dimension dim, int k) {
    long long size = 1;
    for (int t = 0; t < k; ++t) {
        size *= dim.d;
        if (size > kMaxTensorDim)
            throw std::invalid_argument("tensor dimension d^k exceeds the cap " +
                                        std::to_string(kMaxTensorDim));
    }
    return size;
}

inline Mat random_state_matrix(Dimension dim, std::uint64_t seed) {
    Rng rng(seed);
    Mat g(dim.d, dim.d);
    for (int i = 0; i < dim.d; ++i)
        for (int j = 0; j < dim.d; ++j) g(i, j) = rng.complex_gaussian();
    Mat rho = g * g.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint());
}

}  // namespace detail

struct NormLemmaResult {
    double op_norm = 0.0;
    bool is_permutation = false;
};

// Builds the sum over all (q,p) of D_{q,p}^{(x)m} (x) D_{-q,-p}^{(x)(k-m)} and
// verifies it is d times a permutation with operator norm d.
inline NormLemmaResult norm_lemma_check(Dimension dim, int m, int k) {
    if (k < 2 || k % 2 != 0) throw std::invalid_argument("norm_lemma_check: k must be even");
    if (m < 1 || m > k) throw std::invalid_argument("norm_lemma_check: need 1 <= m <= k");
    if (dim.d % 2 == 0) throw std::invalid_argument("norm_lemma_check: d must be odd");
    const long long size = detail::tensor_size_checked(dim, k);

    Mat sum = Mat::Zero(size, size);
    for (int q = 0; q < dim.d; ++q)
        for (int p = 0; p < dim.d; ++p) {
            const Mat direct = displacement(dim, q, p);
            const Mat conjugated = displacement(dim, -q, -p);
            Mat term = direct;
            for (int t = 1; t < k; ++t) term = kron(term, t < m ? direct : conjugated);
            sum += term;
        }

    NormLemmaResult out;
    out.op_norm = detail::operator_norm(sum);
    out.is_permutation = true;
    const double scale = static_cast<double>(dim.d);
    for (Eigen::Index i = 0; i < size && out.is_permutation; ++i) {
        int row_ones = 0;
        for (Eigen::Index j = 0; j < size; ++j) {
            const double mag = std::abs(sum(i, j)) / scale;
            if (mag > 1e-9 && std::abs(sum(i, j) / scale - cplx(1.0)) > 1e-9) {
                out.is_permutation = false;
                break;
            }
            if (mag > 1e-9) ++row_ones;
        }
        if (row_ones != 1) out.is_permutation = false;
    }
    return out;
}

struct ENormResult {
    double op_norm = 0.0;
    bool within_conjectured_2d = false;
};

// Operator norm of the sum over all (q,p) of E_{q,p}^{(x)k}; the proved bound is
// 2^{k/2} d, with 2d conjectured tight.
inline ENormResult e_norm_check(Dimension dim, int k) {
    if (k < 2 || k % 2 != 0) throw std::invalid_argument("e_norm_check: k must be even");
    if (dim.d % 2 == 0) throw std::invalid_argument("e_norm_check: d must be odd");
    const long long size = detail::tensor_size_checked(dim, k);

    Mat sum = Mat::Zero(size, size);
    for (int q = 0; q < dim.d; ++q)
        for (int p = 0; p < dim.d; ++p) {
            const Mat e = displacement_observable(dim, q, p);
            Mat term = e;
            for (int t = 1; t < k; ++t) term = kron(term, e);
            sum += term;
        }

    ENormResult out;
    out.op_norm = detail::operator_norm(sum);
    const double proved = std::pow(2.0, k / 2.0) * dim.d;
    if (out.op_norm > proved + 1e-8)
        throw std::runtime_error("e_norm_check: proved bound violated: " +
                                 std::to_string(out.op_norm) + " > " + std::to_string(proved));
    out.within_conjectured_2d = out.op_norm <= 2.0 * dim.d + 1e-8;
    return out;
}

namespace detail {

// D_{q,p} (x) D_{-q,p} as a phased permutation on flat (j,k): one nonzero per
// column, so products and norms of the commuting-family members cost O(d^2).
struct PhasedPermutation {
    std::vector<int> to;
    std::vector<cplx> phase;
};

inline PhasedPermutation tensor_pair_permutation(Dimension dim, int q, int p) {
    const int d = dim.d;
    PhasedPermutation out;
    out.to.resize(static_cast<std::size_t>(d) * d);
    out.phase.resize(static_cast<std::size_t>(d) * d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            const std::size_t src = static_cast<std::size_t>(j) * d + k;
            out.to[src] = mod_d(j + q, d) * d + mod_d(k - q, d);
            out.phase[src] = half_phase(static_cast<long long>(q + 2 * j) * p, d) *
                             half_phase(static_cast<long long>(-q + 2 * k) * p, d);
        }
    return out;
}

inline PhasedPermutation compose(const PhasedPermutation& a, const PhasedPermutation& b) {
    PhasedPermutation out;
    const std::size_t n = b.to.size();
    out.to.resize(n);
    out.phase.resize(n);
    for (std::size_t z = 0; z < n; ++z) {
        const int mid = b.to[z];
        out.to[z] = a.to[static_cast<std::size_t>(mid)];
        out.phase[z] = a.phase[static_cast<std::size_t>(mid)] * b.phase[z];
    }
    return out;
}

inline double frobenius_difference(const PhasedPermutation& a, const PhasedPermutation& b) {
    double acc = 0.0;
    for (std::size_t z = 0; z < a.to.size(); ++z) {
        if (a.to[z] == b.to[z])
            acc += std::norm(a.phase[z] - b.phase[z]);
        else
            acc += std::norm(a.phase[z]) + std::norm(b.phase[z]);
    }
    return std::sqrt(acc);
}

}  // namespace detail

// Maximum Frobenius norm of [D_{q,p} (x) D_{-q,p}, D_{q',p'} (x) D_{-q',p'}] over
// all index pairs; also validates tr((D (x) D_{-q,p})(rho (x) rho*)) = tr(D rho)^2
// on random full-rank states.
inline double tensor_commutation_check(Dimension dim) {
    if (dim.d > 13) throw std::invalid_argument("tensor_commutation_check: d must be <= 13");
    const int d = dim.d;
    std::vector<detail::PhasedPermutation> family;
    family.reserve(static_cast<std::size_t>(d) * d);
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) family.push_back(detail::tensor_pair_permutation(dim, q, p));

    double worst = 0.0;
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = i + 1; j < family.size(); ++j)
            worst = std::max(worst,
                             detail::frobenius_difference(compose(family[i], family[j]),
                                                          compose(family[j], family[i])));

    for (std::uint64_t s = 1; s <= 3; ++s) {
        const Mat rho = detail::random_state_matrix(dim, 0xE0F1A2B3C4D5ull + s);
        const Mat rho_conj = rho.conjugate();
        for (int q = 0; q < d; ++q)
            for (int p = 0; p < d; ++p) {
                const cplx y = displacement_amplitude(rho, dim, q, p);
                const cplx lhs = displacement_amplitude(rho, dim, q, p) *
                                 displacement_amplitude(rho_conj, dim, -q, p);
                if (std::abs(lhs - y * y) > 1e-10)
                    throw std::runtime_error(
                        "tensor_commutation_check: conjugate-pair trace identity violated");
            }
    }
    return worst;
}

}  // namespace quditlearn
