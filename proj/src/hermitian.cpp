#include "phsm/hermitian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace phsm {

HermitianVector to_vector(const Matrix3c& t) {
    return {t(0, 0).real(), t(1, 1).real(), t(2, 2).real(),
            t(0, 1).real(), t(0, 1).imag(),
            t(0, 2).real(), t(0, 2).imag(),
            t(1, 2).real(), t(1, 2).imag()};
}

Matrix3c from_vector(const HermitianVector& v) {
    Matrix3c t;
    const Complex t12(v[3], v[4]);
    const Complex t13(v[5], v[6]);
    const Complex t23(v[7], v[8]);
    t << v[0], t12, t13,
         std::conj(t12), v[1], t23,
         std::conj(t13), std::conj(t23), v[2];
    return t;
}

double hermitian_det(const Matrix3c& t) {
    const double a = t(0, 0).real();
    const double b = t(1, 1).real();
    const double c = t(2, 2).real();
    const Complex x = t(0, 1);
    const Complex y = t(0, 2);
    const Complex z = t(1, 2);
    return a * b * c + 2.0 * (x * z * std::conj(y)).real()
           - a * std::norm(z) - b * std::norm(y) - c * std::norm(x);
}

namespace {

Matrix3c load(const Matrix3c& t, double trace_ref) {
    double scale = trace_ref >= 0.0 ? trace_ref : t.trace().real();
    scale = std::max(scale, 0.0) / 3.0;
    // A fully zero matrix still needs a positive floor to stay finite.
    if (scale <= 0.0) scale = 1.0;
    Matrix3c loaded = t;
    for (int i = 0; i < 3; ++i) loaded(i, i) += kLoadingFactor * scale;
    return loaded;
}

}  // namespace

double loaded_log_det(const Matrix3c& t, double trace_ref) {
    double det = hermitian_det(t);
    if (det > kDetFloor && std::isfinite(det)) return std::log(det);
    det = hermitian_det(load(t, trace_ref));
    if (det > kDetFloor && std::isfinite(det)) return std::log(det);
    // Pathological scale: fall back to the eigenvalues of the loaded matrix.
    Eigen::SelfAdjointEigenSolver<Matrix3c> solver(load(t, trace_ref), Eigen::EigenvaluesOnly);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += std::log(std::max(solver.eigenvalues()(i), 1e-300));
    return sum;
}

Matrix3c loaded_inverse(const Matrix3c& t) {
    const double det = hermitian_det(t);
    const Matrix3c m = (det > kDetFloor && std::isfinite(det)) ? t : load(t, -1.0);
    return m.inverse();
}

Matrix3c hermitian_part(const Matrix3c& t) {
    return (t + t.adjoint()) * 0.5;
}

bool is_hermitian(const Matrix3c& t, double rel_tol) {
    const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    return (t - t.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_psd(const Matrix3c& t, double rel_tol) {
    if (!is_hermitian(t, rel_tol)) return false;
    for (int i = 0; i < 3; ++i) {
        if (t(i, i).real() < 0.0) return false;
    }
    Eigen::SelfAdjointEigenSolver<Matrix3c> solver(hermitian_part(t), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, std::abs(t.trace().real()));
    return solver.eigenvalues().minCoeff() >= -rel_tol * scale;
}

}  // namespace phsm
