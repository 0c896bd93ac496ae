"""Inner-product kernels, the quadratic surrogate, and spectral gap tools.

The kernel matrix is K_ij = f(<x_i, x_j>/d). Its quadratic surrogate is

    K2 = a0 11' + a1 XX' + a2 (XX')^{o2} + a I

with coefficients that carry trace corrections beyond the plain Taylor
expansion of f at zero; the corrections are what make the spectral-norm
approximation work in the n ~ d^2 regime.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .datagen import CovarianceSpec, Dataset, reduced_tensor_features
from .errors import AssumptionWarning, InvalidArgumentError, NumericalFailureError

__all__ = [
    "KernelFunction",
    "QuadCoeffs",
    "quad_coeffs",
    "kernel_matrix",
    "quad_kernel_matrix",
    "cross_kernel",
    "spectral_norm_gap",
]


@dataclass(frozen=True)
class KernelFunction:
    """Scalar kernel profile f with its derivatives at zero.

    ``derivs0`` holds (f(0), f'(0), f''(0), f'''(0), f''''(0)). Builtins are
    supplied analytically; user-defined kernels must pass explicit values,
    which are validated against central finite differences.
    ``bounded_high_derivs`` records whether the ninth derivative is globally
    bounded (needed by the generalization-error formulas; exp and cosh fail
    it but stay usable at desk scale, with a warning).
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    derivs0: tuple[float, float, float, float, float]
    bounded_high_derivs: bool = True

    def eval(self, t):
        out = self.fn(np.asarray(t, dtype=np.float64))
        return float(out) if np.isscalar(t) else out

    def value_at(self, t: float) -> float:
        return float(self.fn(np.float64(t)))

    @staticmethod
    def exp() -> "KernelFunction":
        return KernelFunction("exp", np.exp, (1.0, 1.0, 1.0, 1.0, 1.0), bounded_high_derivs=False)

    @staticmethod
    def cosh() -> "KernelFunction":
        return KernelFunction("cosh", np.cosh, (1.0, 0.0, 1.0, 0.0, 1.0), bounded_high_derivs=False)

    @staticmethod
    def quartic(b0: float, b2: float, b4: float) -> "KernelFunction":
        def fn(t):
            return b0 + b2 * t**2 / 2.0 + b4 * t**4 / 24.0

        name = "quartic:%g,%g,%g" % (b0, b2, b4)
        return KernelFunction(name, fn, (float(b0), 0.0, float(b2), 0.0, float(b4)))

    @staticmethod
    def custom_poly(coeffs) -> "KernelFunction":
        """Polynomial sum_k c_k t^k from low to high degree."""
        c = [float(v) for v in coeffs]
        if not c:
            raise InvalidArgumentError("custom_poly needs at least one coefficient")

        def fn(t):
            return np.polynomial.polynomial.polyval(t, c)

        derivs = tuple(math.factorial(k) * c[k] if k < len(c) else 0.0 for k in range(5))
        return KernelFunction("custom_poly:" + ",".join("%g" % v for v in c), fn, derivs)

    @staticmethod
    def from_callable(
        name: str,
        fn: Callable,
        derivs0,
        bounded_high_derivs: bool = True,
        validate: bool = True,
    ) -> "KernelFunction":
        kernel = KernelFunction(name, fn, tuple(float(v) for v in derivs0), bounded_high_derivs)
        if validate:
            kernel.validate_derivatives()
        return kernel

    def validate_derivatives(self, rtol: float = 1e-4) -> None:
        """Check ``derivs0`` against central finite differences at zero.

        Orders up to 2 use step 1e-3. Orders 3 and 4 use step 1e-2: at step
        1e-3 the float64 rounding noise in the high-order stencils already
        exceeds the requested tolerance.
        """
        f = self.eval
        h = 1e-3
        fd = [
            float(f(0.0)),
            (f(h) - f(-h)) / (2 * h),
            (f(h) - 2 * f(0.0) + f(-h)) / h**2,
        ]
        h = 1e-2
        fd.append((f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3))
        fd.append((f(2 * h) - 4 * f(h) + 6 * f(0.0) - 4 * f(-h) + f(-2 * h)) / h**4)
        for order, (approx, claimed) in enumerate(zip(fd, self.derivs0)):
            if abs(approx - claimed) > rtol * max(1.0, abs(claimed)):
                raise InvalidArgumentError(
                    "derivative %d mismatch: claimed %r, finite difference %r" % (order, claimed, approx)
                )

    def assumption_check(self) -> tuple[str, ...]:
        """Violations of the generalization-formula requirements (empty when clean)."""
        f0, f1, f2, f3, _ = self.derivs0
        issues = []
        if f1 != 0.0:
            issues.append("f'(0) = %g must vanish" % f1)
        if f3 != 0.0:
            issues.append("f'''(0) = %g must vanish" % f3)
        if f2 <= 0.0:
            issues.append("f''(0) = %g must be positive" % f2)
        return tuple(issues)


@dataclass(frozen=True)
class QuadCoeffs:
    """Surrogate coefficients. ``a_star`` is the diagonal offset at the
    realized trace (identical to ``a``); ``a_star_limit`` evaluates the same
    expression at the limiting mean diagonal value."""

    a0: float
    a1: float
    a2: float
    a: float
    a_star: float
    a_star_limit: float


def _diag_offset(kernel: KernelFunction, tau: float) -> float:
    f0, f1, f2, _, _ = kernel.derivs0
    return kernel.value_at(tau) - f0 - f1 * tau - 0.5 * f2 * tau**2


def quad_coeffs(kernel: KernelFunction, cov: CovarianceSpec, corrected: bool = True) -> QuadCoeffs:
    """Surrogate coefficients for the given kernel and covariance.

    With ``corrected=False`` the trace correction terms are dropped and the
    plain Taylor coefficients f(0), f'(0)/d, f''(0)/(2 d^2) are returned
    (the diagonal offset ``a`` is unchanged); useful for measuring how much
    the corrections buy.
    """
    d = cov.d
    tr2 = cov.trace_square()
    f0, f1, f2, f3, f4 = kernel.derivs0
    if corrected:
        a0 = f0 - f4 * tr2**2 / (8.0 * d**4)
        a1 = f1 / d + f3 * tr2 / (2.0 * d**3)
        a2 = f2 / (2.0 * d**2) + f4 * tr2 / (4.0 * d**4)
    else:
        a0 = f0
        a1 = f1 / d
        a2 = f2 / (2.0 * d**2)
    a = _diag_offset(kernel, cov.tau())
    a_star_limit = _diag_offset(kernel, cov.tau_limit())
    if a <= 0.0:
        warnings.warn(
            "diagonal offset a_star = %g is not positive; ridge-less fits and the "
            "risk formulas assume a_star > 0" % a,
            AssumptionWarning,
            stacklevel=2,
        )
    return QuadCoeffs(a0=float(a0), a1=float(a1), a2=float(a2), a=float(a), a_star=float(a), a_star_limit=float(a_star_limit))


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.X
    return np.asarray(data, dtype=np.float64)


def kernel_matrix(data, kernel: KernelFunction) -> np.ndarray:
    """K_ij = f(<x_i, x_j>/d), symmetric, K_ii = f(|x_i|^2/d)."""
    x = _as_matrix(data)
    d = x.shape[1]
    gram = x @ x.T
    gram = (gram + gram.T) / 2.0
    return kernel.eval(gram / d)


def quad_kernel_matrix(data, coeffs: QuadCoeffs, route: str = "hadamard") -> np.ndarray:
    """Quadratic surrogate a0 11' + a1 XX' + a2 (XX')^{o2} + a I.

    ``route='hadamard'`` squares the Gram matrix entrywise (O(n^2 d));
    ``route='tensor'`` builds the same term as the Gram matrix of the
    reduced tensor features, kept as an independent cross-check.
    """
    x = _as_matrix(data)
    n, _ = x.shape
    gram = x @ x.T
    gram = (gram + gram.T) / 2.0
    if route == "hadamard":
        had = gram * gram
    elif route == "tensor":
        x2 = reduced_tensor_features(x, allow_large=True)
        had = x2 @ x2.T
        had = (had + had.T) / 2.0
    else:
        raise InvalidArgumentError("route must be 'hadamard' or 'tensor'")
    out = coeffs.a0 + coeffs.a1 * gram + coeffs.a2 * had
    out[np.diag_indices(n)] += coeffs.a
    return out


def cross_kernel(data, x_test, kernel: KernelFunction) -> np.ndarray:
    """Kernel values f(<x_test, x_i>/d) against every training row.

    ``x_test`` may be a single d-vector (returns an n-vector) or an m x d
    matrix (returns m x n).
    """
    x = _as_matrix(data)
    t = np.asarray(x_test, dtype=np.float64)
    if t.shape[-1] != x.shape[1]:
        raise InvalidArgumentError(
            "test point dimension %d does not match data dimension %d" % (t.shape[-1], x.shape[1])
        )
    return kernel.eval(t @ x.T / x.shape[1])


def _power_iteration_norm(diff: np.ndarray, tol: float, max_steps: int) -> float:
    # Deterministic seeded start; convergence certified by the eigen residual.
    rng = np.random.default_rng(0x51B)
    v = rng.standard_normal(diff.shape[0])
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_steps):
        w = diff @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v_new = w / norm_w
        theta_new = float(v_new @ (diff @ v_new))
        residual = float(np.linalg.norm(diff @ v_new - theta_new * v_new))
        if abs(abs(theta_new) - abs(theta)) <= tol * max(1.0, abs(theta_new)) and residual <= tol * max(
            1.0, abs(theta_new)
        ):
            # Two-sided: |theta| <= norm <= |theta| + residual.
            return abs(theta_new)
        v, theta = v_new, theta_new
    raise NumericalFailureError(
        "power iteration did not converge in %d steps" % max_steps, residual=residual
    )


def spectral_norm_gap(k_mat: np.ndarray, k2_mat: np.ndarray, dense_cutoff: int = 2048,
                      tol: float = 1e-8, max_steps: int = 10_000) -> float:
    """Spectral norm of K - K2 (largest absolute eigenvalue).

    Dense symmetric eigensolve up to ``dense_cutoff``; beyond that a power
    iteration on the difference with residual-certified convergence.
    """
    k_mat = np.asarray(k_mat, dtype=np.float64)
    k2_mat = np.asarray(k2_mat, dtype=np.float64)
    if k_mat.shape != k2_mat.shape or k_mat.ndim != 2 or k_mat.shape[0] != k_mat.shape[1]:
        raise InvalidArgumentError("K and K2 must be square matrices of the same shape")
    diff = k_mat - k2_mat
    diff = (diff + diff.T) / 2.0
    if diff.shape[0] <= dense_cutoff:
        eigs = np.linalg.eigvalsh(diff)
        return float(max(abs(eigs[0]), abs(eigs[-1])))
    return _power_iteration_norm(diff, tol, max_steps)
