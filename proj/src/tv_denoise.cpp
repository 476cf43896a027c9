#include <stdexcept>
#include <vector>

#include "tvrate/solver.hpp"

namespace tvrate {

// Forward pass: the derivative of each message is piecewise linear and
// increasing; it is stored as a list of knots x[] with slope/intercept
// increments a[], b[] growing outward from the middle of a 2n buffer.
// tm[k], tp[k] are where the k-th message derivative crosses -lambda and
// +lambda; the backward pass clips each coefficient into that window.
void tv_denoise(std::span<const double> y, double lambda, std::span<double> out) {
    const std::size_t n = y.size();
    if (out.size() != n) throw std::invalid_argument("tv_denoise: output size mismatch");
    if (lambda < 0.0) throw std::invalid_argument("tv_denoise: negative lambda");
    if (n == 0) return;
    if (n == 1 || lambda == 0.0) {
        std::copy(y.begin(), y.end(), out.begin());
        return;
    }

    std::vector<double> x(2 * n), a(2 * n), b(2 * n);
    std::vector<double> tm(n - 1), tp(n - 1);

    tm[0] = -lambda + y[0];
    tp[0] = lambda + y[0];
    std::ptrdiff_t l = static_cast<std::ptrdiff_t>(n) - 1;
    std::ptrdiff_t r = static_cast<std::ptrdiff_t>(n);
    x[l] = tm[0];
    x[r] = tp[0];
    a[l] = 1.0;
    b[l] = -y[0] + lambda;
    a[r] = -1.0;
    b[r] = y[0] + lambda;
    double afirst = 1.0, bfirst = -lambda - y[1];
    double alast = -1.0, blast = -lambda + y[1];

    for (std::size_t k = 1; k + 1 < n; ++k) {
        std::ptrdiff_t lo = l;
        while (lo <= r && afirst * x[lo] + bfirst <= -lambda) {
            afirst += a[lo];
            bfirst += b[lo];
            ++lo;
        }
        std::ptrdiff_t hi = r;
        while (hi >= lo && -alast * x[hi] - blast >= lambda) {
            alast += a[hi];
            blast += b[hi];
            --hi;
        }
        tm[k] = (-lambda - bfirst) / afirst;
        l = lo - 1;
        x[l] = tm[k];
        tp[k] = (lambda + blast) / -alast;
        r = hi + 1;
        x[r] = tp[k];

        a[l] = afirst;
        b[l] = bfirst + lambda;
        a[r] = alast;
        b[r] = blast + lambda;
        afirst = 1.0;
        bfirst = -lambda - y[k + 1];
        alast = -1.0;
        blast = -lambda + y[k + 1];
    }

    // Last coefficient: zero of the final derivative.
    std::ptrdiff_t lo = l;
    while (lo <= r && afirst * x[lo] + bfirst <= 0.0) {
        afirst += a[lo];
        bfirst += b[lo];
        ++lo;
    }
    out[n - 1] = -bfirst / afirst;

    for (std::size_t k = n - 1; k-- > 0;) {
        if (out[k + 1] > tp[k])
            out[k] = tp[k];
        else if (out[k + 1] < tm[k])
            out[k] = tm[k];
        else
            out[k] = out[k + 1];
    }
}

}  // namespace tvrate
