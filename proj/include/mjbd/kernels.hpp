#pragma once

#include <vector>

#include "mjbd/types.hpp"

namespace mjbd::kernels {

/// Dense symmetric order-4 tensor, index (i,j,k,l) -> ((i*s+j)*s+k)*s+l.
struct Tensor4 {
    int s = 0;
    std::vector<double> data;

    static Tensor4 zeros(int s) { return {s, std::vector<double>(std::size_t(s) * s * s * s, 0.0)}; }

    double& operator()(int i, int j, int k, int l) {
        return data[((std::size_t(i) * s + j) * s + k) * s + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return data[((std::size_t(i) * s + j) * s + k) * s + l];
    }

    double abs_sum() const;
};

/// Hot inner loops, provided twice: a serial reference in kernels::serial
/// and the OpenMP variants in kernels::par (which the library uses).
/// Every kernel computes each output entry independently of thread count,
/// so results never depend on the number of threads. All pairs except
/// quartic_trace_tensor run identical per-entry arithmetic and agree
/// bit-for-bit; the quartic reference evaluates the traces naively and the
/// parallel variant caches pair products, so those two agree to rounding.

namespace serial {

/// M_ijkl = tr(X_i X_j X_k X_l), symmetrized over all 24 index orders.
Tensor4 quartic_trace_tensor(const std::vector<Matrix>& X);

/// T x_1 W x_2 W x_3 W x_4 W  with (T x_n W)_{a...} = sum_i W(a,i) T_{i...}.
Tensor4 mode_transform4(const Tensor4& T, const Matrix& W);

/// y_a = sum_{jkl} T_{ajkl} x_j x_k x_l.
Vector tensor_apply3(const Tensor4& T, const Vector& x);

/// L(D): the i-th q^2-row block maps vec(X) to vec(D_i X - X^T D_i).
Matrix commutant_operator(const MatrixSet& set);

/// { V^T C_i V } for every matrix in the set.
std::vector<Matrix> congruence_project(const MatrixSet& set, const Matrix& V);

/// sum_i || OffBdiag_tau(P C_i P^T) ||_F^2.
double offblock_sq_sum(const MatrixSet& set, const Matrix& P, const Partition& tau);

}  // namespace serial

namespace par {

Tensor4 quartic_trace_tensor(const std::vector<Matrix>& X);
Tensor4 mode_transform4(const Tensor4& T, const Matrix& W);
Vector tensor_apply3(const Tensor4& T, const Vector& x);
Matrix commutant_operator(const MatrixSet& set);
std::vector<Matrix> congruence_project(const MatrixSet& set, const Matrix& V);
double offblock_sq_sum(const MatrixSet& set, const Matrix& P, const Partition& tau);

}  // namespace par

double tensor_quad(const Tensor4& T, const Vector& x);  // T x^4 = x . (T x^3)

}  // namespace mjbd::kernels
