#include "mjbd/kernels.hpp"

#include <cmath>
#include <cstdlib>

namespace mjbd::kernels {

namespace {

// All 24 orderings of four indices; tr(X_i X_j X_k X_l) is only cyclically
// invariant, so the full average is taken.
constexpr int kPerms[24][4] = {
    {0, 1, 2, 3}, {0, 1, 3, 2}, {0, 2, 1, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}, {0, 3, 2, 1},
    {1, 0, 2, 3}, {1, 0, 3, 2}, {1, 2, 0, 3}, {1, 2, 3, 0}, {1, 3, 0, 2}, {1, 3, 2, 0},
    {2, 0, 1, 3}, {2, 0, 3, 1}, {2, 1, 0, 3}, {2, 1, 3, 0}, {2, 3, 0, 1}, {2, 3, 1, 0},
    {3, 0, 1, 2}, {3, 0, 2, 1}, {3, 1, 0, 2}, {3, 1, 2, 0}, {3, 2, 0, 1}, {3, 2, 1, 0},
};

Tensor4 symmetrize(const Tensor4& raw, bool parallel) {
    const int s = raw.s;
    Tensor4 out = Tensor4::zeros(s);
    const std::size_t total = out.data.size();
#pragma omp parallel for if (parallel) schedule(static)
    for (std::size_t flat = 0; flat < total; ++flat) {
        int idx[4];
        std::size_t rest = flat;
        idx[3] = static_cast<int>(rest % s); rest /= s;
        idx[2] = static_cast<int>(rest % s); rest /= s;
        idx[1] = static_cast<int>(rest % s); rest /= s;
        idx[0] = static_cast<int>(rest);
        double acc = 0.0;
        for (const auto& perm : kPerms) {
            acc += raw(idx[perm[0]], idx[perm[1]], idx[perm[2]], idx[perm[3]]);
        }
        out.data[flat] = acc / 24.0;
    }
    return out;
}

// tr(A B) without forming the product.
double trace_product(const Matrix& A, const Matrix& B) {
    return A.cwiseProduct(B.transpose()).sum();
}

Tensor4 mode_transform4_impl(const Tensor4& T, const Matrix& W, bool parallel) {
    const int s = T.s;
    Tensor4 cur = T;
    // One mode at a time; after four passes every mode is contracted with W.
    for (int mode = 0; mode < 4; ++mode) {
        Tensor4 next = Tensor4::zeros(s);
        const std::size_t total = next.data.size();
#pragma omp parallel for if (parallel) schedule(static)
        for (std::size_t flat = 0; flat < total; ++flat) {
            int idx[4];
            std::size_t rest = flat;
            idx[3] = static_cast<int>(rest % s); rest /= s;
            idx[2] = static_cast<int>(rest % s); rest /= s;
            idx[1] = static_cast<int>(rest % s); rest /= s;
            idx[0] = static_cast<int>(rest);
            const int a = idx[mode];
            double acc = 0.0;
            int pos[4] = {idx[0], idx[1], idx[2], idx[3]};
            for (int i = 0; i < s; ++i) {
                pos[mode] = i;
                acc += W(a, i) * cur(pos[0], pos[1], pos[2], pos[3]);
            }
            next.data[flat] = acc;
        }
        cur = std::move(next);
    }
    return cur;
}

Vector tensor_apply3_impl(const Tensor4& T, const Vector& x, bool parallel) {
    const int s = T.s;
    // s^3 work per output entry; below this the fork/join overhead wins.
    parallel = parallel && s >= 24;
    Vector y(s);
#pragma omp parallel for if (parallel) schedule(static)
    for (int a = 0; a < s; ++a) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) {
            double xj = x(j);
            for (int k = 0; k < s; ++k) {
                double xjk = xj * x(k);
                const double* row = &T.data[((std::size_t(a) * s + j) * s + k) * s];
                double inner = 0.0;
                for (int l = 0; l < s; ++l) {
                    inner += row[l] * x(l);
                }
                acc += xjk * inner;
            }
        }
        y(a) = acc;
    }
    return y;
}

Matrix commutant_operator_impl(const MatrixSet& set, bool parallel) {
    const int q = set.d();
    const int q2 = q * q;
    Matrix L(static_cast<Eigen::Index>(set.m()) * q2, q2);
    // Row (c*q + u) of block i carries vec(D X - X^T D) for entry (u, c):
    //   + D(u, v) at column c*q + v   (the D X term)
    //   - D(j, c) at column u*q + j   (the X^T D term)
    // Both loops below walk rows fastest to stay close to the column-major
    // layout of L. Zeroing happens inside the loop so each thread touches
    // only its own row block.
#pragma omp parallel for if (parallel) schedule(static)
    for (int i = 0; i < set.m(); ++i) {
        const Matrix& D = set[i];
        const int base = i * q2;
        L.middleRows(base, q2).setZero();
        for (int c = 0; c < q; ++c) {
            for (int v = 0; v < q; ++v) {
                const int col = c * q + v;
                for (int u = 0; u < q; ++u) {
                    L(base + c * q + u, col) += D(u, v);
                }
            }
        }
        for (int u = 0; u < q; ++u) {
            for (int j = 0; j < q; ++j) {
                const int col = u * q + j;
                for (int c = 0; c < q; ++c) {
                    L(base + c * q + u, col) -= D(j, c);
                }
            }
        }
    }
    return L;
}

std::vector<Matrix> congruence_project_impl(const MatrixSet& set, const Matrix& V,
                                            bool parallel) {
    std::vector<Matrix> out(set.m());
#pragma omp parallel for if (parallel) schedule(static)
    for (int i = 0; i < set.m(); ++i) {
        out[i] = V.transpose() * set[i] * V;
    }
    return out;
}

double offblock_sq_sum_impl(const MatrixSet& set, const Matrix& P, const Partition& tau,
                            bool parallel) {
    std::vector<double> partial(set.m(), 0.0);
#pragma omp parallel for if (parallel) schedule(static)
    for (int i = 0; i < set.m(); ++i) {
        Matrix Y = P * set[i] * P.transpose();
        for (int j = 0; j < tau.cardinality(); ++j) {
            int off = tau.offset(j);
            int size = tau.part(j);
            Y.block(off, off, size, size).setZero();
        }
        partial[i] = Y.squaredNorm();
    }
    double total = 0.0;
    for (double value : partial) total += value;  // fixed order, thread-count independent
    return total;
}

}  // namespace

double Tensor4::abs_sum() const {
    double total = 0.0;
    for (double value : data) total += std::abs(value);
    return total;
}

double tensor_quad(const Tensor4& T, const Vector& x) {
    return x.dot(tensor_apply3_impl(T, x, false));
}

namespace serial {

Tensor4 quartic_trace_tensor(const std::vector<Matrix>& X) {
    const int s = static_cast<int>(X.size());
    Tensor4 raw = Tensor4::zeros(s);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            for (int k = 0; k < s; ++k) {
                Matrix left = X[i] * X[j] * X[k];
                for (int l = 0; l < s; ++l) {
                    raw(i, j, k, l) = trace_product(left, X[l]);
                }
            }
        }
    }
    return symmetrize(raw, false);
}

Tensor4 mode_transform4(const Tensor4& T, const Matrix& W) {
    return mode_transform4_impl(T, W, false);
}

Vector tensor_apply3(const Tensor4& T, const Vector& x) {
    return tensor_apply3_impl(T, x, false);
}

Matrix commutant_operator(const MatrixSet& set) {
    return commutant_operator_impl(set, false);
}

std::vector<Matrix> congruence_project(const MatrixSet& set, const Matrix& V) {
    return congruence_project_impl(set, V, false);
}

double offblock_sq_sum(const MatrixSet& set, const Matrix& P, const Partition& tau) {
    return offblock_sq_sum_impl(set, P, tau, false);
}

}  // namespace serial

namespace par {

Tensor4 quartic_trace_tensor(const std::vector<Matrix>& X) {
    const int s = static_cast<int>(X.size());
    // Cache pair products: tr(Xi Xj Xk Xl) = tr((Xi Xj)(Xk Xl)).
    std::vector<Matrix> pair(static_cast<std::size_t>(s) * s);
#pragma omp parallel for schedule(static)
    for (int flat = 0; flat < s * s; ++flat) {
        pair[flat] = X[flat / s] * X[flat % s];
    }
    Tensor4 raw = Tensor4::zeros(s);
    const std::size_t total = raw.data.size();
#pragma omp parallel for schedule(static)
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        const int l = static_cast<int>(rest % s); rest /= s;
        const int k = static_cast<int>(rest % s); rest /= s;
        const int j = static_cast<int>(rest % s); rest /= s;
        const int i = static_cast<int>(rest);
        raw.data[flat] = trace_product(pair[std::size_t(i) * s + j], pair[std::size_t(k) * s + l]);
    }
    return symmetrize(raw, true);
}

Tensor4 mode_transform4(const Tensor4& T, const Matrix& W) {
    return mode_transform4_impl(T, W, true);
}

Vector tensor_apply3(const Tensor4& T, const Vector& x) {
    return tensor_apply3_impl(T, x, true);
}

Matrix commutant_operator(const MatrixSet& set) {
    return commutant_operator_impl(set, true);
}

std::vector<Matrix> congruence_project(const MatrixSet& set, const Matrix& V) {
    return congruence_project_impl(set, V, true);
}

double offblock_sq_sum(const MatrixSet& set, const Matrix& P, const Partition& tau) {
    return offblock_sq_sum_impl(set, P, tau, true);
}

}  // namespace par

}  // namespace mjbd::kernels
