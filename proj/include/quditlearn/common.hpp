#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace quditlearn {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr int kMaxSingleDim = 101;   // cap for single-system dimension
inline constexpr int kMaxTensorDim = 4096;  // cap for d^n tensor systems

inline bool is_prime(int n) {
    if (n < 2) return false;
    for (int k = 2; k * k <= n; ++k)
        if (n % k == 0) return false;
    return true;
}

// Canonical representative in [0, d).
inline int mod_d(long long x, int d) {
    long long r = x % d;
    return static_cast<int>(r < 0 ? r + d : r);
}

// Modular inverse for prime modulus (Fermat).
inline int inv_mod(int a, int d) {
    a = mod_d(a, d);
    if (a == 0) throw std::invalid_argument("inv_mod: 0 has no inverse mod " + std::to_string(d));
    long long result = 1, base = a;
    for (int e = d - 2; e > 0; e >>= 1) {
        if (e & 1) result = result * base % d;
        base = base * base % d;
    }
    return static_cast<int>(result);
}

// System dimension. Prime by contract; checked at construction.
struct Dimension {
    int d;

    explicit Dimension(int dim) : d(dim) {
        if (d < 2 || d > kMaxSingleDim)
            throw std::invalid_argument("Dimension: d must be in [2, " +
                                        std::to_string(kMaxSingleDim) + "], got " + std::to_string(d));
        if (!is_prime(d))
            throw std::invalid_argument("Dimension: d must be prime, got " + std::to_string(d));
    }

    bool operator==(const Dimension&) const = default;
};

// Phase-space point (q, p) in Z_d x Z_d; stored reduced.
struct DisplacementIndex {
    int q = 0;
    int p = 0;

    DisplacementIndex() = default;
    DisplacementIndex(long long q_, long long p_, Dimension dim)
        : q(mod_d(q_, dim.d)), p(mod_d(p_, dim.d)) {}

    bool operator==(const DisplacementIndex&) const = default;
    bool is_zero() const { return q == 0 && p == 0; }
    // Flat key for table indexing: q*d + p.
    int flat(Dimension dim) const { return q * dim.d + p; }
};

inline DisplacementIndex negate(DisplacementIndex idx, Dimension dim) {
    return DisplacementIndex(-idx.q, -idx.p, dim);
}

inline void require_finite(const Mat& m, const char* what) {
    if (!m.allFinite()) throw std::runtime_error(std::string(what) + ": non-finite entries");
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    return out;
}

// Row-major vectorization |A>> = sum_ij A_ij |i>|j>, so that (P x P^*) vec(Q) = vec(P Q P^dagger).
inline Vec vec_rowmajor(const Mat& a) {
    Vec v(a.rows() * a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            v(i * a.cols() + j) = a(i, j);
    return v;
}

inline Mat unvec_rowmajor(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    Mat a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            a(i, j) = v(i * cols + j);
    return a;
}

}  // namespace quditlearn
