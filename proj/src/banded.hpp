#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tvrate::detail {

/// Cholesky factorization of a symmetric positive definite band matrix with
/// `bw` sub-diagonals. Row i of the lower band is stored as
/// band[i*(bw+1) + d] = A(i, i-d), d = 0..bw.
template <typename T>
class BandedCholesky {
public:
    BandedCholesky() = default;
    BandedCholesky(std::size_t n, std::size_t bw, std::vector<T> band) : n_(n), bw_(bw), l_(std::move(band)) {
        factor();
    }

    std::size_t size() const { return n_; }

    template <typename U>
    void solve_in_place(std::span<U> x) const {
        const std::size_t w = bw_ + 1;
        const T* l = l_.data();
        // L w = x
        for (std::size_t i = 0; i < n_; ++i) {
            T s = static_cast<T>(x[i]);
            const std::size_t dmax = i < bw_ ? i : bw_;
            const T* row = l + i * w;
            for (std::size_t d = 1; d <= dmax; ++d) s -= row[d] * static_cast<T>(x[i - d]);
            x[i] = static_cast<U>(s * inv_diag_[i]);
        }
        // L^T x = w
        for (std::size_t ii = n_; ii-- > 0;) {
            T s = static_cast<T>(x[ii]);
            const std::size_t dmax = n_ - 1 - ii < bw_ ? n_ - 1 - ii : bw_;
            for (std::size_t d = 1; d <= dmax; ++d) s -= l[(ii + d) * w + d] * static_cast<T>(x[ii + d]);
            x[ii] = static_cast<U>(s * inv_diag_[ii]);
        }
    }

private:
    T& at(std::size_t i, std::size_t d) { return l_[i * (bw_ + 1) + d]; }
    const T& at(std::size_t i, std::size_t d) const { return l_[i * (bw_ + 1) + d]; }

    void factor() {
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t dmax = i < bw_ ? i : bw_;
            // Off-diagonal entries L(i, j), j = i - d, from left to right.
            for (std::size_t d = dmax; d >= 1; --d) {
                const std::size_t j = i - d;
                T s = at(i, d);
                // sum over m < j of L(i,m) L(j,m), with both inside the band.
                for (std::size_t e = d + 1; e <= dmax; ++e) {
                    const std::size_t m = i - e;
                    const std::size_t dj = j - m;
                    if (dj > bw_) continue;
                    s -= at(i, e) * at(j, dj);
                }
                at(i, d) = s / at(j, 0);
            }
            T s = at(i, 0);
            for (std::size_t e = 1; e <= dmax; ++e) s -= at(i, e) * at(i, e);
            if (!(s > T(0))) throw std::runtime_error("BandedCholesky: matrix not positive definite");
            at(i, 0) = std::sqrt(s);
        }
        inv_diag_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) inv_diag_[i] = T(1) / at(i, 0);
    }

    std::size_t n_ = 0;
    std::size_t bw_ = 0;
    std::vector<T> l_;
    std::vector<T> inv_diag_;
};

/// Coefficients of the kth forward difference: (Delta^k x)_i = sum_m c_m x_{i+m}.
inline std::vector<double> difference_stencil(int k) {
    std::vector<double> c{1.0};
    for (int j = 0; j < k; ++j) {
        std::vector<double> next(c.size() + 1, 0.0);
        for (std::size_t m = 0; m < c.size(); ++m) {
            next[m] -= c[m];
            next[m + 1] += c[m];
        }
        c = std::move(next);
    }
    return c;
}

/// a[d] = sum_m c_m c_{m+d}: entries of Delta^k Delta^{kT} at offset d.
inline std::vector<double> stencil_autocorrelation(const std::vector<double>& c) {
    std::vector<double> a(c.size(), 0.0);
    for (std::size_t d = 0; d < c.size(); ++d)
        for (std::size_t m = 0; m + d < c.size(); ++m) a[d] += c[m] * c[m + d];
    return a;
}

}  // namespace tvrate::detail
