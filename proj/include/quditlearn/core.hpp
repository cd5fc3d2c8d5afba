#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quditlearn/common.hpp"
#include "quditlearn/rng.hpp"

namespace quditlearn {

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = -1e-9;  // statistical reconstructions may dip slightly negative

// omega^k = e^{i 2 pi k / d}
inline cplx root_of_unity(long long k, int d) {
    const double arg = 2.0 * kPi * static_cast<double>(mod_d(k, d)) / d;
    return {std::cos(arg), std::sin(arg)};
}

// e^{i pi t / d} evaluated with the half-angle argument as a real double, so
// d = 2 gets the same treatment as odd d.
inline cplx half_phase(long long t, int d) {
    const double arg = kPi * static_cast<double>(t) / d;
    return {std::cos(arg), std::sin(arg)};
}

// Cyclic shift X|j> = |j+1 mod d> and clock Z|j> = omega^j |j>.
inline std::pair<Mat, Mat> clock_shift(Dimension dim) {
    const int d = dim.d;
    Mat X = Mat::Zero(d, d), Z = Mat::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        X(mod_d(j + 1, d), j) = 1.0;
        Z(j, j) = root_of_unity(j, d);
    }
    return {X, Z};
}

// D_{q,p} = e^{i pi q p / d} X^q Z^p, built entrywise: <j+q|D|j> = e^{i pi (q+2j) p / d}.
//
// The integer overload evaluates the phase at the given (possibly negative or
// unreduced) indices. The family is only projectively periodic in its indices
// -- D_{q+d,p} = (-1)^p D_{q,p} -- so identities like D^dagger_{q,p} = D_{-q,-p}
// hold exactly at integer indices, while reduced representatives pin one matrix
// per class for tabulation.
inline Mat displacement(Dimension dim, long long q, long long p) {
    const int d = dim.d;
    Mat D = Mat::Zero(d, d);
    for (int j = 0; j < d; ++j)
        D(mod_d(j + q, d), j) = half_phase((q + 2 * j) * p, d);
    return D;
}

inline Mat displacement(Dimension dim, DisplacementIndex idx) {
    return displacement(dim, idx.q, idx.p);
}

// Hermitian displacement observable E_{q,p} = chi D_{q,p} + chi* D_{-q,-p}, chi = (1+i)/2.
// Built at integer indices so that D_{-q,-p} = D^dagger_{q,p} exactly and E is Hermitian.
inline Mat displacement_observable(Dimension dim, long long q, long long p) {
    const cplx chi(0.5, 0.5);
    return chi * displacement(dim, q, p) + std::conj(chi) * displacement(dim, -q, -p);
}

inline Mat displacement_observable(Dimension dim, DisplacementIndex idx) {
    return displacement_observable(dim, idx.q, idx.p);
}

// y_{q,p} = Tr(D_{q,p} rho) at integer indices, contracted along D's single
// off-diagonal in O(d).
inline cplx displacement_amplitude(const Mat& rho, Dimension dim, long long q, long long p) {
    cplx y = 0.0;
    for (int j = 0; j < dim.d; ++j)
        y += half_phase((q + 2 * j) * p, dim.d) * rho(j, mod_d(j + q, dim.d));
    return y;
}

// Validated density matrix: Hermitian, unit trace, eigenvalues >= kPsdTol.
class DensityMatrix {
  public:
    explicit DensityMatrix(Mat m, const char* what = "DensityMatrix") : m_(std::move(m)) {
        if (m_.rows() != m_.cols())
            throw std::invalid_argument(std::string(what) + ": matrix must be square");
        require_finite(m_, what);
        const double herm_dev = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
        if (herm_dev > kHermitianTol)
            throw std::invalid_argument(std::string(what) + ": not Hermitian (deviation " +
                                        std::to_string(herm_dev) + ")");
        const double trace_dev = std::abs(m_.trace() - cplx(1.0, 0.0));
        if (trace_dev > kTraceTol)
            throw std::invalid_argument(std::string(what) + ": trace != 1 (deviation " +
                                        std::to_string(trace_dev) + ")");
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m_ + m_.adjoint()),
                                              Eigen::EigenvaluesOnly);
        min_eig_ = es.eigenvalues().minCoeff();
        if (min_eig_ < kPsdTol)
            throw std::invalid_argument(std::string(what) + ": not PSD (min eigenvalue " +
                                        std::to_string(min_eig_) + ")");
    }

    const Mat& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    double min_eigenvalue() const { return min_eig_; }

    // Entrywise conjugate rho^* (also a valid state; validation skipped, spectra agree).
    DensityMatrix conjugate() const {
        DensityMatrix out = *this;
        out.m_ = m_.conjugate();
        return out;
    }

  private:
    Mat m_;
    double min_eig_ = 0.0;
};

// Displacement amplitudes y_{q,p} = Tr(D_{q,p} rho), stored flat at index q*d + p.
struct AmplitudeTable {
    Dimension d;
    std::vector<cplx> values;

    explicit AmplitudeTable(Dimension dim) : d(dim), values(dim.d * dim.d, cplx(0.0)) {}

    cplx& at(DisplacementIndex idx) { return values[idx.flat(d)]; }
    const cplx& at(DisplacementIndex idx) const { return values[idx.flat(d)]; }
};

inline AmplitudeTable amplitudes(const DensityMatrix& rho, Dimension dim) {
    if (rho.dim() != dim.d)
        throw std::invalid_argument("amplitudes: state dimension " + std::to_string(rho.dim()) +
                                    " != d = " + std::to_string(dim.d));
    AmplitudeTable table(dim);
    const Mat& m = rho.matrix();
    for (int q = 0; q < dim.d; ++q)
        for (int p = 0; p < dim.d; ++p)
            table.values[q * dim.d + p] = displacement_amplitude(m, dim, q, p);
    return table;
}

struct BlochReconstruction {
    Mat matrix;
    double min_eigenvalue;  // may be negative for noisy tables; caller decides
};

// rho = (1/d) (I + sum_{(q,p) != 0} y_{q,p} D^dagger_{q,p}); returned raw.
inline BlochReconstruction bloch_reconstruct(const AmplitudeTable& table) {
    const int d = table.d.d;
    if (static_cast<int>(table.values.size()) != d * d)
        throw std::invalid_argument("bloch_reconstruct: incomplete amplitude table");
    Mat m = Mat::Identity(d, d);
    for (int q = 0; q < d; ++q)
        for (int p = 0; p < d; ++p) {
            if (q == 0 && p == 0) continue;
            m += table.values[q * d + p] *
                 displacement(table.d, DisplacementIndex(q, p, table.d)).adjoint();
        }
    m /= static_cast<double>(d);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    return {std::move(m), es.eigenvalues().minCoeff()};
}

// Kronecker product D_{q1,p1} x ... x D_{qn,pn}.
inline Mat tensor_displacement(Dimension dim, const std::vector<int>& qvec,
                               const std::vector<int>& pvec) {
    if (qvec.size() != pvec.size())
        throw std::invalid_argument("tensor_displacement: index vectors differ in length");
    if (qvec.empty())
        throw std::invalid_argument("tensor_displacement: empty index vectors");
    long long total = 1;
    for (std::size_t i = 0; i < qvec.size(); ++i) {
        total *= dim.d;
        if (total > kMaxTensorDim)
            throw std::invalid_argument("tensor_displacement: d^n exceeds cap " +
                                        std::to_string(kMaxTensorDim));
    }
    Mat out = displacement(dim, DisplacementIndex(qvec[0], pvec[0], dim));
    for (std::size_t i = 1; i < qvec.size(); ++i)
        out = kron(out, displacement(dim, DisplacementIndex(qvec[i], pvec[i], dim)));
    return out;
}

enum class StateKind { maximally_mixed, haar_pure, spiked };

struct StateSpec {
    StateKind kind = StateKind::maximally_mixed;
    DisplacementIndex idx{};  // spiked only
    int r = +1;               // spiked only, in {+1, -1}
    double eps = 0.0;         // spiked only, in (0, 1)

    static StateSpec mixed() { return {}; }
    static StateSpec haar() { return {StateKind::haar_pure}; }
    static StateSpec spike(DisplacementIndex i, int sign, double e) {
        return {StateKind::spiked, i, sign, e};
    }
};

// Deterministic test states. The seed matters only for haar_pure.
inline DensityMatrix make_test_state(Dimension dim, const StateSpec& spec, std::uint64_t seed) {
    const int d = dim.d;
    switch (spec.kind) {
        case StateKind::maximally_mixed:
            return DensityMatrix(Mat::Identity(d, d) / static_cast<double>(d));
        case StateKind::haar_pure: {
            Rng rng(seed);
            Vec psi(d);
            for (int j = 0; j < d; ++j) psi(j) = rng.complex_gaussian();
            psi.normalize();
            return DensityMatrix(psi * psi.adjoint());
        }
        case StateKind::spiked: {
            if (spec.eps <= 0.0 || spec.eps >= 1.0)
                throw std::invalid_argument("make_test_state: spiked eps must be in (0,1)");
            if (spec.r != 1 && spec.r != -1)
                throw std::invalid_argument("make_test_state: spiked r must be +1 or -1");
            if (spec.idx.is_zero())
                throw std::invalid_argument("make_test_state: spiked index must be nonzero");
            Mat m = (Mat::Identity(d, d) +
                     (spec.r * spec.eps) * displacement_observable(dim, spec.idx)) /
                    static_cast<double>(d);
            try {
                return DensityMatrix(std::move(m), "spiked state");
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument(
                    "make_test_state: eps = " + std::to_string(spec.eps) +
                    " out of PSD-safe range for this index");
            }
        }
    }
    throw std::logic_error("make_test_state: unreachable");
}

// Optional post-step for noisy reconstructions: clip negative eigenvalues, renormalize.
inline DensityMatrix project_psd(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()));
    Eigen::VectorXd evals = es.eigenvalues().cwiseMax(0.0);
    const double total = evals.sum();
    if (total <= 0.0) throw std::invalid_argument("project_psd: matrix has no positive part");
    evals /= total;
    return DensityMatrix(es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().adjoint());
}

}  // namespace quditlearn
