#pragma once

// SVD-based diagnostics of channel fusion: thin SVD via one-sided Jacobi
// rotations, the exact linear-combination identity of the fused block, the
// shared-pattern approximation error, and principal angles between the left
// subspaces of the two channel groups.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "cif/errors.hpp"

namespace cif {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols) throw DimensionError("matrix: size mismatch");
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix out(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) out.at(j, i) = at(i, j);
        return out;
    }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw DimensionError("matmul: inner dimension mismatch");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double v = a.at(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += v * b.at(k, j);
        }
    return out;
}

inline double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += v * v;
    return std::sqrt(acc);
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("subtract: shape mismatch");
    Matrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
    return out;
}

// Thin SVD A = U diag(S) V^T with U: rows x r, V: cols x r, r = min(rows, cols),
// singular values nonincreasing and >= 0.
struct SvdFactors {
    Matrix u;
    std::vector<double> s;
    Matrix v;
};

namespace detail_svd {

// One-sided Jacobi on a tall matrix (rows >= cols): rotate column pairs of A
// until all columns are mutually orthogonal, accumulating the rotations in V.
// Column norms then give the singular values and normalized columns give U.
inline SvdFactors jacobi_tall(Matrix a) {
    const std::size_t m = a.rows, n = a.cols;
    Matrix v = Matrix::identity(n);
    double norm2 = 0.0;
    for (double x : a.data) norm2 += x * x;
    const double off_tol = 1e-12 * std::max(1.0, norm2);

    for (int sweep = 0; sweep < 60; ++sweep) {
        double off2 = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double xp = a.at(i, p), xq = a.at(i, q);
                    app += xp * xp;
                    aqq += xq * xq;
                    apq += xp * xq;
                }
                off2 += apq * apq;
                if (apq == 0.0) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double xp = a.at(i, p), xq = a.at(i, q);
                    a.at(i, p) = c * xp - s * xq;
                    a.at(i, q) = s * xp + c * xq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v.at(i, p), vq = v.at(i, q);
                    v.at(i, p) = c * vp - s * vq;
                    v.at(i, q) = s * vp + c * vq;
                }
            }
        }
        if (std::sqrt(off2) < off_tol) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += a.at(i, j) * a.at(i, j);
        sigma[j] = std::sqrt(acc);
    }

    // Sort singular values in nonincreasing order.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&sigma](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    const double rank_tol = 1e-13 * std::max(1.0, std::sqrt(norm2));
    SvdFactors out;
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    out.s.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = perm[j];
        for (std::size_t i = 0; i < n; ++i) out.v.at(i, j) = v.at(i, src);
        if (sigma[src] > rank_tol) {
            out.s[j] = sigma[src];
            for (std::size_t i = 0; i < m; ++i) out.u.at(i, j) = a.at(i, src) / sigma[src];
        } else {
            out.s[j] = 0.0;  // U column filled by completion below
        }
    }

    // Orthonormal completion of U columns belonging to zero singular values.
    for (std::size_t j = 0; j < n; ++j) {
        if (out.s[j] != 0.0) continue;
        for (std::size_t candidate = 0; candidate < m; ++candidate) {
            std::vector<double> col(m, 0.0);
            col[candidate] = 1.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == j) continue;
                if (out.s[k] == 0.0 && k > j) continue;  // not yet filled
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += col[i] * out.u.at(i, k);
                for (std::size_t i = 0; i < m; ++i) col[i] -= dot * out.u.at(i, k);
            }
            double nrm = 0.0;
            for (double x : col) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 0.5) {
                for (std::size_t i = 0; i < m; ++i) out.u.at(i, j) = col[i] / nrm;
                break;
            }
        }
    }

    // Sign convention: make the first nonzero entry of each U column
    // nonnegative so decompositions of proportional inputs agree.
    for (std::size_t j = 0; j < n; ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (std::fabs(out.u.at(i, j)) > 1e-12) {
                lead = out.u.at(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u.at(i, j) = -out.u.at(i, j);
            for (std::size_t i = 0; i < n; ++i) out.v.at(i, j) = -out.v.at(i, j);
        }
    }
    return out;
}

}  // namespace detail_svd

inline SvdFactors svd(const Matrix& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) throw NumericError("svd: non-finite input");
    if (a.rows == 0 || a.cols == 0) throw DimensionError("svd: empty matrix");
    if (a.rows >= a.cols) return detail_svd::jacobi_tall(a);
    SvdFactors swapped = detail_svd::jacobi_tall(a.transposed());
    // A = (A^T)^T = V S U^T of the transposed problem; re-apply the sign
    // convention on what is now the U side.
    SvdFactors out;
    out.u = std::move(swapped.v);
    out.v = std::move(swapped.u);
    out.s = std::move(swapped.s);
    for (std::size_t j = 0; j < out.u.cols; ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < out.u.rows; ++i) {
            if (std::fabs(out.u.at(i, j)) > 1e-12) {
                lead = out.u.at(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < out.u.rows; ++i) out.u.at(i, j) = -out.u.at(i, j);
            for (std::size_t i = 0; i < out.v.rows; ++i) out.v.at(i, j) = -out.v.at(i, j);
        }
    }
    return out;
}

inline Matrix reconstruct(const SvdFactors& f) {
    Matrix scaled = f.u;
    for (std::size_t j = 0; j < scaled.cols; ++j)
        for (std::size_t i = 0; i < scaled.rows; ++i) scaled.at(i, j) *= f.s[j];
    return matmul(scaled, f.v.transposed());
}

// a * X[:, :n] + b * X[:, C-n:] for a T x C matrix.
inline Matrix fuse_submatrices(const Matrix& x, std::size_t n, double a, double b) {
    if (n < 1 || 2 * n > x.cols)
        throw ConfigError("fuse_submatrices: group width must satisfy 1 <= n <= C/2");
    Matrix out(x.rows, n);
    const std::size_t back = x.cols - n;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.at(i, j) = a * x.at(i, j) + b * x.at(i, back + j);
    return out;
}

inline Matrix front_block(const Matrix& x, std::size_t n) {
    Matrix out(x.rows, n);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = x.at(i, j);
    return out;
}

inline Matrix back_block(const Matrix& x, std::size_t n) {
    Matrix out(x.rows, n);
    const std::size_t start = x.cols - n;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = x.at(i, start + j);
    return out;
}

// || (a U1 S1 V1' + b U2 S2 V2') - (a X_i + b X_j) ||_F. Exact linearity of
// the decomposition makes this a pure reconstruction-error check.
inline double linear_identity_residual(const Matrix& x, std::size_t n, double a, double b) {
    const Matrix xi = front_block(x, n);
    const Matrix xj = back_block(x, n);
    const Matrix ri = reconstruct(svd(xi));
    const Matrix rj = reconstruct(svd(xj));
    Matrix combined(x.rows, n);
    for (std::size_t i = 0; i < combined.data.size(); ++i)
        combined.data[i] = a * ri.data[i] + b * rj.data[i];
    return frobenius_norm(subtract(combined, fuse_submatrices(x, n, a, b)));
}

// Shared-pattern approximation: express the fused block in the front block's
// singular frame, U1 (a S1 + b S2~) V1', where S2~ holds the back block's
// coefficients along that frame, diag(U1' X_j V1). When the two blocks share
// temporal patterns (X_j proportional to X_i) the coefficients are exact and
// the error vanishes; for unrelated subspaces most of X_j's energy falls
// outside the frame and the error is large. Returned relative to ||X_fused||.
inline double shared_pattern_error(const Matrix& x, std::size_t n, double a, double b) {
    const Matrix xi = front_block(x, n);
    const Matrix xj = back_block(x, n);
    const Matrix fused = fuse_submatrices(x, n, a, b);
    const double fused_norm = frobenius_norm(fused);
    if (fused_norm <= 1e-300) throw NumericError("shared_pattern_error: fused block is zero");

    const SvdFactors f1 = svd(xi);
    const Matrix projected = matmul(matmul(f1.u.transposed(), xj), f1.v);
    const std::size_t r = f1.s.size();
    Matrix approx_scaled = f1.u;
    for (std::size_t j = 0; j < r; ++j) {
        const double coef = a * f1.s[j] + b * projected.at(j, j);
        for (std::size_t i = 0; i < approx_scaled.rows; ++i) approx_scaled.at(i, j) *= coef;
    }
    const Matrix approx = matmul(approx_scaled, f1.v.transposed());
    return frobenius_norm(subtract(approx, fused)) / fused_norm;
}

// Principal angles between the column spaces of two orthonormal bases:
// arccos of the singular values of U1' U2, clamped to [0, 1]. Ascending.
inline std::vector<double> principal_angles(const Matrix& u1, const Matrix& u2) {
    if (u1.rows != u2.rows) throw DimensionError("principal_angles: ambient dimension mismatch");
    const SvdFactors f = svd(matmul(u1.transposed(), u2));
    std::vector<double> angles;
    angles.reserve(f.s.size());
    for (double c : f.s) angles.push_back(std::acos(std::clamp(c, 0.0, 1.0)));
    std::sort(angles.begin(), angles.end());
    return angles;
}

}  // namespace cif
