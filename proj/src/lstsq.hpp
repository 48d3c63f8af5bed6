#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace fdtof::detail {

/// Least-squares coefficients of y ~ sum_j c_j * basis_j(i) for a handful of
/// basis columns, via normal equations with partial pivoting. Returns false if
/// the system is singular.
template <std::size_t N, typename Basis>
bool least_squares(std::span<const double> y, Basis&& basis, std::array<double, N>& coef) {
    std::array<std::array<double, N + 1>, N> a{};
    std::array<double, N> row{};
    for (std::size_t i = 0; i < y.size(); ++i) {
        basis(i, row);
        for (std::size_t r = 0; r < N; ++r) {
            for (std::size_t c = 0; c < N; ++c) {
                a[r][c] += row[r] * row[c];
            }
            a[r][N] += row[r] * y[i];
        }
    }
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < N; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                pivot = r;
            }
        }
        if (a[pivot][col] == 0.0) {
            return false;
        }
        std::swap(a[pivot], a[col]);
        for (std::size_t r = 0; r < N; ++r) {
            if (r == col) {
                continue;
            }
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= N; ++c) {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    for (std::size_t r = 0; r < N; ++r) {
        coef[r] = a[r][N] / a[r][r];
    }
    return true;
}

} // namespace fdtof::detail
