#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quditlearn/bell.hpp"
#include "quditlearn/core.hpp"
#include "quditlearn/rng.hpp"

namespace quditlearn {

// --- symplectic group over Z_d ----------------------------------------------

// [[a,b],[c,e]] over Z_d with det = a e - b c = 1. Acts on displacement indices
// by (q,p) -> (a q + b p, c q + e p).
struct SymplecticMat2 {
    int a = 1, b = 0, c = 0, e = 1;

    bool operator==(const SymplecticMat2&) const = default;

    static SymplecticMat2 reduced(long long a, long long b, long long c, long long e,
                                  Dimension dim) {
        SymplecticMat2 m{mod_d(a, dim.d), mod_d(b, dim.d), mod_d(c, dim.d), mod_d(e, dim.d)};
        if (mod_d(static_cast<long long>(m.a) * m.e - static_cast<long long>(m.b) * m.c,
                  dim.d) != 1)
            throw std::invalid_argument("SymplecticMat2: determinant != 1 (mod d)");
        return m;
    }

    DisplacementIndex apply(DisplacementIndex idx, Dimension dim) const {
        return DisplacementIndex(static_cast<long long>(a) * idx.q +
                                     static_cast<long long>(b) * idx.p,
                                 static_cast<long long>(c) * idx.q +
                                     static_cast<long long>(e) * idx.p,
                                 dim);
    }

    SymplecticMat2 inverse(Dimension dim) const {
        return reduced(e, -b, -c, a, dim);
    }

    SymplecticMat2 times(const SymplecticMat2& o, Dimension dim) const {
        return reduced(static_cast<long long>(a) * o.a + static_cast<long long>(b) * o.c,
                       static_cast<long long>(a) * o.b + static_cast<long long>(b) * o.e,
                       static_cast<long long>(c) * o.a + static_cast<long long>(e) * o.c,
                       static_cast<long long>(c) * o.b + static_cast<long long>(e) * o.e, dim);
    }

    // Injective key in [0, d^4); usable as a map index.
    int key(Dimension dim) const {
        return ((a * dim.d + b) * dim.d + c) * dim.d + e;
    }
};

// Uniform over SL(2, Z_d), order d(d^2-1): draw the first column uniformly among
// the d^2 - 1 nonzero vectors, then one of the d second columns satisfying the
// determinant constraint.
inline SymplecticMat2 sample_symplectic(Dimension dim, Rng& rng) {
    const int d = dim.d;
    int a = 0, c = 0;
    do {
        a = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d)));
        c = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d)));
    } while (a == 0 && c == 0);
    int b, e;
    if (a != 0) {
        b = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d)));
        e = mod_d(static_cast<long long>(inv_mod(a, d)) * (1 + static_cast<long long>(b) * c), d);
    } else {
        b = mod_d(-static_cast<long long>(inv_mod(c, d)), d);
        e = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d)));
    }
    return SymplecticMat2::reduced(a, b, c, e, dim);
}

inline SymplecticMat2 sample_symplectic(Dimension dim, std::uint64_t seed) {
    Rng rng(seed);
    return sample_symplectic(dim, rng);
}

// Deterministic enumeration of SL(2, Z_d); the identity appears exactly once.
inline std::vector<SymplecticMat2> enumerate_symplectics(Dimension dim) {
    const int d = dim.d;
    std::vector<SymplecticMat2> out;
    out.reserve(static_cast<std::size_t>(d) * (d * d - 1));
    for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c) {
            if (a == 0 && c == 0) continue;
            if (a != 0) {
                for (int b = 0; b < d; ++b) {
                    const int e = mod_d(
                        static_cast<long long>(inv_mod(a, d)) * (1 + static_cast<long long>(b) * c),
                        d);
                    out.push_back(SymplecticMat2{a, b, c, e});
                }
            } else {
                const int b = mod_d(-static_cast<long long>(inv_mod(c, d)), d);
                for (int e = 0; e < d; ++e) out.push_back(SymplecticMat2{a, b, c, e});
            }
        }
    return out;
}

// One generalized Clifford up to global phase: Pauli offset times a symplectic
// rotation. The synthesized unitary satisfies U^dagger D_{q,p} U = phase * D_{C(q,p)}.
struct CliffordElement {
    Dimension d;
    SymplecticMat2 symplectic;
    DisplacementIndex pauli;

    bool operator==(const CliffordElement& o) const {
        return d.d == o.d.d && symplectic == o.symplectic && pauli.q == o.pauli.q &&
               pauli.p == o.pauli.p;
    }

    int key() const { return symplectic.key(d) * d.d * d.d + pauli.flat(d); }
};

// All symplectic x Pauli-offset pairs; group phases are omitted (they cancel in
// every conjugation this library performs).
inline std::vector<CliffordElement> enumerate_cliffords(Dimension dim) {
    if (dim.d > 5)
        throw std::invalid_argument("enumerate_cliffords: supported for d in {2,3,5} only");
    std::vector<CliffordElement> out;
    const auto symps = enumerate_symplectics(dim);
    out.reserve(symps.size() * static_cast<std::size_t>(dim.d) * dim.d);
    for (const auto& c : symps)
        for (int q = 0; q < dim.d; ++q)
            for (int p = 0; p < dim.d; ++p)
                out.push_back(CliffordElement{dim, c, DisplacementIndex(q, p, dim)});
    return out;
}

// --- Clifford synthesis -------------------------------------------------------

namespace detail {

// Multiply by the global phase making the first nonzero entry (row-major scan)
// real positive.
inline Mat canonical_phase(Mat u) {
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            if (std::abs(u(i, j)) > 1e-9) {
                const cplx z = u(i, j) / std::abs(u(i, j));
                u *= std::conj(z);
                return u;
            }
    throw std::runtime_error("canonical_phase: zero matrix");
}

// Quadratic phase gate diag(w^{2^{-1} c j^2}); conjugation maps (q,p) -> (q, p - c q).
inline Mat gen_quadratic(Dimension dim, int c) {
    const int d = dim.d;
    const long long half = inv_mod(2, d);
    Mat v = Mat::Zero(d, d);
    for (int j = 0; j < d; ++j)
        v(j, j) = root_of_unity(half * c % d * j % d * j, d);
    return v;
}

// Modular multiplication |j> -> |m j>; conjugation maps (q,p) -> (m^{-1} q, m p).
inline Mat gen_multiply(Dimension dim, int m) {
    const int d = dim.d;
    if (mod_d(m, d) == 0) throw std::invalid_argument("gen_multiply: m must be invertible");
    Mat u = Mat::Zero(d, d);
    for (int j = 0; j < d; ++j) u(mod_d(static_cast<long long>(m) * j, d), j) = 1.0;
    return u;
}

// d = 2 path: breadth-first search over words in {H, S}, which generate all six
// elements of SL(2, Z_2).
inline const std::map<int, Mat>& d2_symplectic_table() {
    static const std::map<int, Mat> table = [] {
        const Dimension dim(2);
        const double s = 1.0 / std::sqrt(2.0);
        Mat h(2, 2), sg(2, 2);
        h << s, s, s, -s;
        sg << 1.0, 0.0, 0.0, cplx(0.0, 1.0);
        const SymplecticMat2 ch{0, 1, 1, 0};  // H: X <-> Z
        const SymplecticMat2 cs{1, 0, 1, 1};  // S: X -> Y, Z -> Z

        std::map<int, Mat> found;
        std::vector<std::pair<Mat, SymplecticMat2>> frontier{
            {Mat::Identity(2, 2), SymplecticMat2{}}};
        found[SymplecticMat2{}.key(dim)] = Mat::Identity(2, 2);
        while (found.size() < 6 && !frontier.empty()) {
            std::vector<std::pair<Mat, SymplecticMat2>> next;
            for (const auto& [u, c] : frontier)
                for (int g = 0; g < 2; ++g) {
                    const Mat u2 = u * (g == 0 ? h : sg);
                    const SymplecticMat2 c2 = (g == 0 ? ch : cs).times(c, dim);
                    if (found.count(c2.key(dim))) continue;
                    found[c2.key(dim)] = u2;
                    next.emplace_back(u2, c2);
                }
            frontier = std::move(next);
        }
        if (found.size() != 6)
            throw std::runtime_error("d2_symplectic_table: generators failed to cover SL(2,Z_2)");
        return found;
    }();
    return table;
}

}  // namespace detail

// Unitary realizing a symplectic rotation: U^dagger D_{q,p} U = phase * D_{C(q,p)}.
// Odd prime d composes Fourier, modular-multiplication and quadratic-phase
// generators along an explicit row-reduction of C; d = 2 uses the {H, S} table.
inline Mat synthesize_symplectic(Dimension dim, const SymplecticMat2& c) {
    const int d = dim.d;
    // Defensive: reduced() re-validates the determinant.
    const SymplecticMat2 m = SymplecticMat2::reduced(c.a, c.b, c.c, c.e, dim);
    if (d == 2) return detail::canonical_phase(detail::d2_symplectic_table().at(m.key(dim)));

    Mat u;
    if (m.b != 0) {
        // C = [[1,0],[e b^{-1},1]] * [[0,b],[-b^{-1},0]] * [[1,0],[a b^{-1},1]],
        // realized right-to-left as V * (M * W) * V.
        const long long binv = inv_mod(m.b, d);
        const Mat left = detail::gen_quadratic(dim, mod_d(-static_cast<long long>(m.a) * binv, d));
        const Mat mid = detail::gen_multiply(dim, mod_d(-m.b, d)) * fourier_w(dim);
        const Mat right =
            detail::gen_quadratic(dim, mod_d(-static_cast<long long>(m.e) * binv, d));
        u = left * mid * right;
    } else {
        // C = [[1,0],[c a^{-1},1]] * diag(a, a^{-1}).
        const long long ainv = inv_mod(m.a, d);
        u = detail::gen_multiply(dim, static_cast<int>(ainv)) *
            detail::gen_quadratic(dim, mod_d(-static_cast<long long>(m.c) * ainv, d));
    }
    return detail::canonical_phase(u);
}

// Full element: Pauli offset times the symplectic unitary, phase-canonicalized.
inline Mat synthesize_clifford(const CliffordElement& elem) {
    return detail::canonical_phase(displacement(elem.d, elem.pauli) *
                                   synthesize_symplectic(elem.d, elem.symplectic));
}

// Memoized synthesis keyed by the symplectic part; safe for concurrent use.
class SynthesisCache {
  public:
    explicit SynthesisCache(Dimension dim) : dim_(dim) {}

    Mat unitary(const CliffordElement& elem) {
        if (elem.d.d != dim_.d)
            throw std::invalid_argument("SynthesisCache: dimension mismatch");
        return detail::canonical_phase(displacement(dim_, elem.pauli) *
                                       symplectic_unitary(elem.symplectic));
    }

    const Mat& symplectic_unitary(const SymplecticMat2& c) {
        const int key = c.key(dim_);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = memo_.find(key);
        if (it == memo_.end())
            it = memo_.emplace(key, synthesize_symplectic(dim_, c)).first;
        return it->second;
    }

  private:
    Dimension dim_;
    std::mutex mutex_;
    std::unordered_map<int, Mat> memo_;
};

// --- conjugation bookkeeping --------------------------------------------------

// Express P as mu * D_{u,v} (canonical representative); throws if P is not
// proportional to a displacement operator.
inline std::pair<DisplacementIndex, cplx> displacement_decompose(Dimension dim, const Mat& P) {
    const int d = dim.d;
    DisplacementIndex best(0, 0, dim);
    cplx mu = 0.0;
    for (int u = 0; u < d; ++u)
        for (int v = 0; v < d; ++v) {
            // (1/d) tr(D_{u,v}^dagger P), contracted along D's off-diagonal.
            cplx acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += std::conj(half_phase(static_cast<long long>(u + 2 * j) * v, d)) *
                       P(mod_d(j + u, d), j);
            acc /= static_cast<double>(d);
            if (std::abs(acc) > std::abs(mu)) {
                best = DisplacementIndex(u, v, dim);
                mu = acc;
            }
        }
    const Mat residual = P - mu * displacement(dim, best);
    if (residual.cwiseAbs().maxCoeff() > 1e-9 * d)
        throw std::runtime_error("displacement_decompose: input is not a displacement multiple");
    return {best, mu};
}

// Per-symplectic conjugation data: U_C D_{q,p} U_C^dagger = phase[flat] * D_{target[flat]}
// with target = C^{-1}(q,p). Drives both the twirl average and the fast shadow paths.
struct SymplecticConjugation {
    SymplecticMat2 c;
    std::vector<int> target;  // flat indices
    std::vector<cplx> phase;  // unit modulus
};

inline SymplecticConjugation conjugation_table(Dimension dim, const SymplecticMat2& c) {
    const int d = dim.d;
    const Mat u = synthesize_symplectic(dim, c);
    const SymplecticMat2 cinv = c.inverse(dim);
    SymplecticConjugation out{c, std::vector<int>(static_cast<std::size_t>(d) * d),
                              std::vector<cplx>(static_cast<std::size_t>(d) * d)};
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) {
            const DisplacementIndex idx(q, p, dim);
            const auto [tgt, mu] =
                displacement_decompose(dim, u * displacement(dim, idx) * u.adjoint());
            const DisplacementIndex expected = cinv.apply(idx, dim);
            if (tgt.q != expected.q || tgt.p != expected.p)
                throw std::runtime_error("conjugation_table: index action disagrees with C^{-1}");
            if (std::abs(std::abs(mu) - 1.0) > 1e-9)
                throw std::runtime_error("conjugation_table: non-unimodular phase");
            out.target[idx.flat(dim)] = tgt.flat(dim);
            out.phase[idx.flat(dim)] = mu / std::abs(mu);
        }
    return out;
}

// --- classical shadows --------------------------------------------------------

struct ShadowSample {
    CliffordElement clifford;
    int outcome = 0;  // b in [0,d)
};

// One measurement of rho in the basis {U^dagger |b>}: p(b) = <b| U rho U^dagger |b>.
inline int shadow_outcome(const DensityMatrix& rho, const CliffordElement& elem,
                          SynthesisCache& cache, Rng& rng) {
    const Mat u = cache.unitary(elem);
    const Mat rotated = u * rho.matrix() * u.adjoint();
    const int d = elem.d.d;
    std::vector<double> probs(d);
    double total = 0.0;
    for (int b = 0; b < d; ++b) {
        probs[b] = std::max(0.0, std::real(rotated(b, b)));
        total += probs[b];
    }
    if (std::abs(total - 1.0) > 1e-8)
        throw std::runtime_error("shadow_outcome: probabilities sum to " + std::to_string(total));
    for (double& pr : probs) pr /= total;
    DiscreteSampler sampler(probs);
    return static_cast<int>(sampler.sample(rng));
}

// n i.i.d. shadow samples: uniform Clifford (symplectic x Pauli offset), then a
// computational-basis measurement of the rotated state.
inline std::vector<ShadowSample> shadow_sample(const DensityMatrix& rho, std::size_t n,
                                               std::uint64_t seed) {
    const Dimension dim(rho.dim());
    Rng rng(seed);
    SynthesisCache cache(dim);
    std::vector<ShadowSample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        CliffordElement elem{dim, sample_symplectic(dim, rng),
                             DisplacementIndex(
                                 static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(dim.d))),
                                 static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(dim.d))),
                                 dim)};
        out.push_back({elem, shadow_outcome(rho, elem, cache, rng)});
    }
    return out;
}

// M(A) = (tr(A) I + A) / (d+1) and its inverse (d+1) A - tr(A) I.
inline Mat measurement_channel(const Mat& A, Dimension dim) {
    if (A.rows() != dim.d || A.cols() != dim.d)
        throw std::invalid_argument("measurement_channel: dimension mismatch");
    return (A.trace() * Mat::Identity(dim.d, dim.d) + A) / static_cast<double>(dim.d + 1);
}

inline Mat inverse_channel(const Mat& A, Dimension dim) {
    if (A.rows() != dim.d || A.cols() != dim.d)
        throw std::invalid_argument("inverse_channel: dimension mismatch");
    return static_cast<double>(dim.d + 1) * A - A.trace() * Mat::Identity(dim.d, dim.d);
}

struct ExpectationEstimate {
    cplx mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

// Mean and standard error of the per-sample estimator (d+1)<b|U O U^dagger|b> - tr(O).
inline ExpectationEstimate estimate_expectation(const std::vector<ShadowSample>& samples,
                                                const Mat& O) {
    if (samples.empty())
        throw std::invalid_argument("estimate_expectation: no samples");
    const Dimension dim = samples.front().clifford.d;
    if (O.rows() != dim.d || O.cols() != dim.d)
        throw std::invalid_argument("estimate_expectation: observable dimension mismatch");

    SynthesisCache cache(dim);
    const cplx trO = O.trace();
    std::vector<cplx> vals;
    vals.reserve(samples.size());
    for (const auto& s : samples) {
        const Mat u = cache.unitary(s.clifford);
        const auto row = u.row(s.outcome);
        const cplx diag = (row * O * row.adjoint())(0, 0);
        vals.push_back(static_cast<double>(dim.d + 1) * diag - trO);
    }
    ExpectationEstimate out;
    out.n = vals.size();
    for (const cplx& v : vals) out.mean += v;
    out.mean /= static_cast<double>(out.n);
    if (out.n > 1) {
        double ss = 0.0;
        for (const cplx& v : vals) ss += std::norm(v - out.mean);
        out.stderr_ = std::sqrt(ss / static_cast<double>(out.n - 1) /
                                static_cast<double>(out.n));
    }
    return out;
}

// Off-diagonal transition element <i| U^dagger rho U |j> via O = U |j><i| U^dagger.
inline ExpectationEstimate transition_estimate(const std::vector<ShadowSample>& samples,
                                               const CliffordElement& frame, int i, int j) {
    if (i == j)
        throw std::invalid_argument(
            "transition_estimate: diagonal elements are rejected — the estimator variance for "
            "|j><j| grows linearly with d; only off-diagonal transitions are supported");
    const Dimension dim = frame.d;
    if (i < 0 || j < 0 || i >= dim.d || j >= dim.d)
        throw std::invalid_argument("transition_estimate: index out of range");
    const Mat u = synthesize_clifford(frame);
    const Mat O = u.col(j) * u.col(i).adjoint();
    return estimate_expectation(samples, O);
}

// Closed-form estimator variance for one shadow sample of observable O on rho.
inline double variance_oracle(const Mat& O, const DensityMatrix& rho) {
    const Dimension dim(rho.dim());
    const int d = dim.d;
    if (O.rows() != d || O.cols() != d)
        throw std::invalid_argument("variance_oracle: dimension mismatch");

    const Mat O0 = O - (O.trace() / static_cast<double>(d)) * Mat::Identity(d, d);
    const double hs = std::real((O0.adjoint() * O0).trace());

    std::vector<Mat> disp(static_cast<std::size_t>(d) * d);
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p)
            disp[static_cast<std::size_t>(q) * d + p] =
                displacement(dim, DisplacementIndex(q, p, dim));

    cplx cross = 0.0;
    for (int k = 1; k <= d - 2; ++k)
        for (int q = 0; q < d; ++q)
            for (int p = 0; p < d; ++p) {
                if (q == 0 && p == 0) continue;
                const Mat& D1 = disp[static_cast<std::size_t>(q) * d + p];
                const DisplacementIndex kidx(static_cast<long long>(k) * q,
                                             static_cast<long long>(k) * p, dim);
                const Mat& Dk = disp[kidx.flat(dim)];
                const cplx f1 = (D1.adjoint() * O0).trace();
                const cplx f2 = (Dk.adjoint() * O0.adjoint()).trace();
                const cplx f3 = (Dk * D1 * rho.matrix()).trace();
                cross += f1 * f2 * f3;
            }

    const cplx total = static_cast<double>(d + 1) / d * hs +
                       static_cast<double>(d + 1) / (d * d) * cross -
                       std::norm((O0 * rho.matrix()).trace());
    if (std::abs(std::imag(total)) > 1e-9)
        throw std::runtime_error("variance_oracle: non-real variance (imaginary part " +
                                 std::to_string(std::imag(total)) + ")");
    return std::real(total);
}

// --- k-fold twirl channels ------------------------------------------------------

// Superoperator on the k-fold operator space, expressed in the orthonormal
// displacement basis |D_{i1}> x ... x |D_{ik}> (each D/sqrt(d), canonical
// representatives), flat index ((i1*d^2)+i2)*d^2+... .
struct SuperOperatorMatrix {
    int k = 1;
    Dimension d;
    Mat entries;
};

namespace detail {

inline void check_twirl_support(int k, Dimension dim) {
    if (k < 1 || k > 3)
        throw std::invalid_argument("twirl: k must be 1, 2 or 3");
    if (k == 3 && dim.d > 3)
        throw std::invalid_argument("twirl: k = 3 supported for d in {2,3} only");
    if (dim.d > 5)
        throw std::invalid_argument("twirl: d in {2,3,5} only");
}

}  // namespace detail

// Brute-force group average of the k-fold conjugation superoperator over the
// full Clifford enumeration. Each element acts on the displacement basis as a
// phased permutation, so the average is assembled in O(|group| d^{2k}).
inline SuperOperatorMatrix twirl_channel(int k, Dimension dim) {
    detail::check_twirl_support(k, dim);
    const int d = dim.d;
    const int dd = d * d;
    long long size = 1;
    for (int t = 0; t < k; ++t) size *= dd;

    SuperOperatorMatrix out{k, dim, Mat::Zero(size, size)};
    const auto symps = enumerate_symplectics(dim);

    std::vector<int> digits(static_cast<std::size_t>(k));
    for (const auto& c : symps) {
        const auto table = conjugation_table(dim, c);
        for (int qo = 0; qo < d; ++qo)
            for (int po = 0; po < d; ++po) {
                for (long long src = 0; src < size; ++src) {
                    long long rem = src;
                    for (int t = k - 1; t >= 0; --t) {
                        digits[static_cast<std::size_t>(t)] = static_cast<int>(rem % dd);
                        rem /= dd;
                    }
                    long long dst = 0;
                    cplx phase = 1.0;
                    for (int t = 0; t < k; ++t) {
                        const int i = digits[static_cast<std::size_t>(t)];
                        const int tgt = table.target[i];
                        // Pauli offset contributes w^{u po - v qo} on target (u,v).
                        const int u = tgt / d, v = tgt % d;
                        phase *= table.phase[i] *
                                 root_of_unity(static_cast<long long>(u) * po -
                                                   static_cast<long long>(v) * qo,
                                               d);
                        dst = dst * dd + tgt;
                    }
                    out.entries(dst, src) += phase;
                }
            }
    }
    out.entries /= static_cast<double>(symps.size()) * dd;
    return out;
}

namespace detail {

// Coefficients of D^dagger_{q,p} (canonical) in the canonical basis: a single
// entry +-1 at the negated representative.
inline std::pair<int, cplx> adjoint_in_basis(Dimension dim, DisplacementIndex idx) {
    const auto [tgt, mu] = displacement_decompose(dim, displacement(dim, idx).adjoint());
    return {tgt.flat(dim), mu};
}

// Coefficients of D^dagger_{i1} D^dagger_{i2} (canonical) in the canonical basis.
inline std::pair<int, cplx> adjoint_product_in_basis(Dimension dim, DisplacementIndex i1,
                                                     DisplacementIndex i2) {
    const auto [tgt, mu] = displacement_decompose(
        dim, displacement(dim, i1).adjoint() * displacement(dim, i2).adjoint());
    return {tgt.flat(dim), mu};
}

}  // namespace detail

// Assembles the stated fixed-space projector directly in the displacement basis.
inline SuperOperatorMatrix twirl_theory(int k, Dimension dim) {
    detail::check_twirl_support(k, dim);
    const int d = dim.d;
    const int dd = d * d;
    long long size = 1;
    for (int t = 0; t < k; ++t) size *= dd;

    SuperOperatorMatrix out{k, dim, Mat::Zero(size, size)};
    std::vector<Vec> basis;

    const auto flat3 = [dd](int i1, int i2, int i3) {
        return (static_cast<long long>(i1) * dd + i2) * dd + i3;
    };

    // |I>^{< k} — the all-identity component.
    {
        Vec v = Vec::Zero(size);
        v(0) = 1.0;
        basis.push_back(std::move(v));
    }

    if (k == 2) {
        Vec v = Vec::Zero(size);  // sum_{i != 0} |D_i> |D_i^dagger> / sqrt(d^2-1)
        for (int i = 1; i < dd; ++i) {
            const auto [nf, s] =
                detail::adjoint_in_basis(dim, DisplacementIndex(i / d, i % d, dim));
            v(static_cast<long long>(i) * dd + nf) = s;
        }
        basis.push_back(v / std::sqrt(static_cast<double>(dd - 1)));
    }

    if (k == 3) {
        const double norm_phi = std::sqrt(static_cast<double>(dd - 1));
        Vec phi1 = Vec::Zero(size), phi2 = Vec::Zero(size), phi3 = Vec::Zero(size);
        for (int i = 1; i < dd; ++i) {
            const DisplacementIndex idx(i / d, i % d, dim);
            const auto [nf, s] = detail::adjoint_in_basis(dim, idx);
            phi1(flat3(0, i, nf)) = s;
            phi2(flat3(i, 0, nf)) = s;
            phi3(flat3(i, nf, 0)) = s;
        }
        basis.push_back(phi1 / norm_phi);
        basis.push_back(phi2 / norm_phi);
        basis.push_back(phi3 / norm_phi);

        // |Psi_m> = sum_{i != 0} |D_i> |D_{m i}> |D_i^dagger D_{m i}^dagger>, m = 1..d-2.
        for (int m = 1; m <= d - 2; ++m) {
            Vec psi = Vec::Zero(size);
            for (int i = 1; i < dd; ++i) {
                const DisplacementIndex idx(i / d, i % d, dim);
                const DisplacementIndex mid(static_cast<long long>(m) * idx.q,
                                            static_cast<long long>(m) * idx.p, dim);
                const auto [tf, mu] = detail::adjoint_product_in_basis(dim, idx, mid);
                psi(flat3(i, mid.flat(dim), tf)) = mu;
            }
            basis.push_back(psi / norm_phi);
        }

        // |Upsilon_l> over index pairs with symplectic form p1 q2 - q1 p2 = l != 0.
        for (int l = 1; l <= d - 1; ++l) {
            Vec ups = Vec::Zero(size);
            for (int i1 = 1; i1 < dd; ++i1)
                for (int i2 = 1; i2 < dd; ++i2) {
                    const DisplacementIndex a(i1 / d, i1 % d, dim);
                    const DisplacementIndex b(i2 / d, i2 % d, dim);
                    if (mod_d(static_cast<long long>(a.p) * b.q -
                                  static_cast<long long>(a.q) * b.p,
                              d) != l)
                        continue;
                    const auto [tf, mu] = detail::adjoint_product_in_basis(dim, a, b);
                    ups(flat3(i1, i2, tf)) = mu;
                }
            basis.push_back(ups / std::sqrt(static_cast<double>(d) * (dd - 1)));
        }
    }

    for (const Vec& v : basis) out.entries += v * v.adjoint();
    return out;
}

}  // namespace quditlearn
