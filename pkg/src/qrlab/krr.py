"""Kernel ridge regression: fits, empirical errors, asymptotic predictors.

The asymptotic side evaluates the quadratic-regime limits: the training
error integral against the deformed MP law, the effective regularization
lambda_* from its scalar self-consistent equation, and the variance/bias
pair (V, B) built from resolvent moments of the population tensor law.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .datagen import (
    CovarianceSpec,
    Dataset,
    MomentMatchedSampler,
    reduced_tensor_features,
    sigma2_diagonal,
    tensor_mean_vector,
)
from .errors import (
    AssumptionViolationError,
    AssumptionWarning,
    InvalidArgumentError,
    NumericalFailureError,
    SingularSystemError,
)
from .kernels import KernelFunction, QuadCoeffs, cross_kernel, kernel_matrix, quad_coeffs
from .seeding import NOISE, TEACHER, TEST, substream
from .spectra import DiscreteLaw, companion_stieltjes, law_integrals

__all__ = [
    "TeacherModel",
    "RiskPrediction",
    "LambdaStarResult",
    "make_labels",
    "RidgeFactor",
    "krr_fit",
    "training_error",
    "train_error_limit",
    "asymptotic_training_error",
    "lambda_star_solve",
    "lambda_star",
    "risk_limit",
    "asymptotic_risk",
    "empirical_risk",
    "deterministic_equivalents",
]

RISK_TEACHERS = ("pure_quadratic", "deterministic_sigma")


def _draw_g_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric matrix with independent N(0,1) entries on the upper triangle."""
    g = rng.standard_normal((d, d))
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


@dataclass(frozen=True, eq=False)
class TeacherModel:
    """Target function f_*(x) = c0 + c1 <x, beta> + (c2/d) x' G x.

    ``pure_quadratic`` uses c0 = c1 = 0, c2 = 1 with random symmetric G;
    ``deterministic_sigma`` fixes G = Sigma (so f_* = x' Sigma x / d).
    """

    kind: str
    c0: float
    c1: float
    beta: np.ndarray | None
    c2: float
    G: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.G, dtype=np.float64)
        object.__setattr__(self, "G", g)
        if not np.allclose(g, g.T, atol=1e-12 * max(1.0, float(np.abs(g).max()))):
            raise InvalidArgumentError("G must be symmetric")
        if self.beta is not None:
            beta = np.asarray(self.beta, dtype=np.float64)
            object.__setattr__(self, "beta", beta)
            if abs(float(np.linalg.norm(beta)) - 1.0) > 1e-12:
                raise InvalidArgumentError("beta must be a unit vector")

    @staticmethod
    def general(c0: float, c1: float, beta: np.ndarray, c2: float, G: np.ndarray) -> "TeacherModel":
        return TeacherModel("general", float(c0), float(c1), beta, float(c2), G)

    @staticmethod
    def pure_quadratic(G: np.ndarray) -> "TeacherModel":
        return TeacherModel("pure_quadratic", 0.0, 0.0, None, 1.0, G)

    @staticmethod
    def deterministic_sigma(cov: CovarianceSpec) -> "TeacherModel":
        return TeacherModel("deterministic_sigma", 0.0, 0.0, None, 1.0, np.diag(cov.diag))

    @staticmethod
    def draw(
        kind: str,
        cov: CovarianceSpec,
        rng: np.random.Generator,
        c0: float = 0.0,
        c1: float = 0.0,
        c2: float = 1.0,
    ) -> "TeacherModel":
        """Realize a teacher of the given kind, drawing G where it is random.

        The general kind uses the deterministic unit direction 1/sqrt(d)
        for its linear term.
        """
        if kind == "deterministic_sigma":
            return TeacherModel.deterministic_sigma(cov)
        g = _draw_g_matrix(cov.d, rng)
        if kind == "pure_quadratic":
            return TeacherModel.pure_quadratic(g)
        if kind == "general":
            beta = np.full(cov.d, 1.0 / math.sqrt(cov.d))
            return TeacherModel.general(c0, c1, beta, c2, g)
        raise InvalidArgumentError("unknown teacher kind %r" % kind)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        d = x.shape[-1]
        out = np.full(x.shape[0], self.c0) if x.ndim == 2 else self.c0
        if self.c1 != 0.0 and self.beta is not None:
            out = out + self.c1 * (x @ self.beta)
        quad = np.einsum("ij,jk,ik->i", x, self.G, x) if x.ndim == 2 else float(x @ self.G @ x)
        return out + self.c2 / d * quad


def make_labels(
    dataset: Dataset,
    teacher: TeacherModel,
    sigma_eps: float,
    seed: int,
    noise: str = "gaussian",
    replicate: int = 0,
) -> np.ndarray:
    """Noisy labels y_i = f_*(x_i) + eps_i with iid noise of variance sigma_eps^2.

    ``noise`` is 'gaussian' or 'two_point' (+-sigma_eps with probability 1/2,
    a bounded option for robustness runs).
    """
    if sigma_eps < 0:
        raise InvalidArgumentError("sigma_eps must be nonnegative")
    y = teacher.predict(dataset.X)
    if sigma_eps > 0:
        rng = substream(seed, NOISE, replicate)
        if noise == "gaussian":
            eps = sigma_eps * rng.standard_normal(dataset.n)
        elif noise == "two_point":
            eps = sigma_eps * (2.0 * rng.integers(0, 2, dataset.n) - 1.0)
        else:
            raise InvalidArgumentError("unknown noise kind %r" % noise)
        y = y + eps
    return y


class RidgeFactor:
    """Cholesky factorization of K + lambda I, reusable across label vectors."""

    def __init__(self, k_mat: np.ndarray, lam: float):
        if lam < 0:
            raise InvalidArgumentError("lambda must be nonnegative")
        k_mat = np.asarray(k_mat, dtype=np.float64)
        self.matrix = k_mat + lam * np.eye(k_mat.shape[0])
        try:
            self._factor = scipy.linalg.cho_factor(self.matrix, lower=True, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            lam_min = float(np.linalg.eigvalsh(self.matrix)[0])
            raise SingularSystemError(
                "K + lambda I is not positive definite (lambda_min about %g)" % lam_min,
                lambda_min=lam_min,
            ) from exc

    def solve(self, y: np.ndarray, refine: bool = True, rtol: float = 1e-8) -> np.ndarray:
        w = scipy.linalg.cho_solve(self._factor, y, check_finite=False)
        if refine:
            w = w + scipy.linalg.cho_solve(self._factor, y - self.matrix @ w, check_finite=False)
        residual = float(np.linalg.norm(self.matrix @ w - y))
        bound = rtol * max(float(np.linalg.norm(y)), 1e-300)
        if residual > bound:
            raise NumericalFailureError(
                "ridge solve residual %g exceeds %g" % (residual, bound), residual=residual
            )
        return w


def krr_fit(k_mat: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Representer weights (K + lambda I)^{-1} y."""
    return RidgeFactor(k_mat, lam).solve(np.asarray(y, dtype=np.float64))


def training_error(k_mat: np.ndarray, y: np.ndarray, lam: float, route: str = "resolvent") -> float:
    """Mean squared training residual of the ridge fit.

    'resolvent' evaluates (lambda^2/n) y'(K+lambda I)^{-2} y; 'residual'
    evaluates (1/n) |K (K+lambda I)^{-1} y - y|^2. The two agree to
    round-off and are kept as mutual checks.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    factor = RidgeFactor(k_mat, lam)
    w = factor.solve(y)
    if route == "resolvent":
        return float(lam**2 / n * (w @ w))
    if route == "residual":
        k_only = factor.matrix - lam * np.eye(n)
        r = k_only @ w - y
        return float((r @ r) / n)
    raise InvalidArgumentError("route must be 'resolvent' or 'residual'")


def _check_risk_kernel(kernel: KernelFunction) -> None:
    issues = kernel.assumption_check()
    if issues:
        raise AssumptionViolationError(
            "kernel %s violates the generalization assumptions: %s" % (kernel.name, "; ".join(issues)),
            detail={"issues": issues},
        )
    if not kernel.bounded_high_derivs:
        warnings.warn(
            "kernel %s has unbounded high-order derivatives; desk-scale inner products stay "
            "in a compact set, so the asymptotic formulas are still evaluated" % kernel.name,
            AssumptionWarning,
            stacklevel=3,
        )


def train_error_limit(
    alpha: float,
    nu: DiscreteLaw,
    a_star: float,
    second_deriv: float,
    lam: float,
    c2: float,
    sigma_eps: float,
) -> float:
    """Limiting training error.

    lambda^2 * integral (c2^2 x / alpha + sigma^2) /
    (f''(0) x / (4 alpha) + a_star + lambda)^2 dmu(x), evaluated through the
    companion transform at shift s = 4 alpha (a_star + lambda) / f''(0).
    """
    if second_deriv == 0:
        raise AssumptionViolationError("f''(0) must be nonzero")
    if a_star + lam <= 0:
        raise AssumptionViolationError("a_star + lambda must be positive")
    if lam == 0:
        return 0.0
    s = 4.0 * alpha * (a_star + lam) / second_deriv
    if s <= 0:
        raise AssumptionViolationError("effective shift must be positive; got s=%g" % s)
    _, i1, i2 = law_integrals(alpha, nu, s)
    scale = (4.0 * alpha / second_deriv) ** 2
    return float(lam**2 * scale * ((c2**2 / alpha) * i1 + sigma_eps**2 * i2))


def asymptotic_training_error(
    kernel: KernelFunction,
    cov: CovarianceSpec,
    alpha: float,
    lam: float,
    c2: float,
    sigma_eps: float,
) -> float:
    coeffs = quad_coeffs(kernel, cov)
    nu = sigma2_diagonal(cov).compressed()
    return train_error_limit(alpha, nu, coeffs.a_star, kernel.derivs0[2], lam, c2, sigma_eps)


@dataclass(frozen=True)
class LambdaStarResult:
    value: float
    alt_value: float
    residual: float


def lambda_star_solve(
    alpha: float,
    nu: DiscreteLaw,
    a_star: float,
    lam: float,
    second_deriv: float,
    tol: float = 1e-12,
    check_agreement: float = 1e-10,
) -> LambdaStarResult:
    """Unique positive root of the self-consistent equation

        1/alpha - 4 (a_star + lambda) / (f''(0) t) = integral x/(x+t) dnu(x).

    The left side minus right side is strictly increasing in t, so a
    bracketing search plus Newton converges to ``tol``. The independent
    route t = 1 / mt(-s) at s = 4 alpha (a_star + lambda)/f''(0) must agree
    to ``check_agreement``.
    """
    if second_deriv <= 0:
        raise AssumptionViolationError("f''(0) must be positive")
    if a_star + lam <= 0:
        raise AssumptionViolationError("a_star + lambda must be positive")
    s = 4.0 * alpha * (a_star + lam) / second_deriv
    x, w = nu.atoms, nu.weights

    def equation(t: float) -> float:
        return 1.0 / alpha - s / (alpha * t) - float(np.sum(w * x / (x + t)))

    def derivative(t: float) -> float:
        return s / (alpha * t * t) + float(np.sum(w * x / (x + t) ** 2))

    lo, hi = 1e-12 * (1.0 + s), max(1.0, s, nu.support_max)
    while equation(hi) < 0:
        hi *= 2.0
        if hi > 1e18:
            raise AssumptionViolationError(
                "no sign change found for the effective regularization",
                detail={"bracket": (lo, hi)},
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if equation(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-8 * hi:
            break
    t = 0.5 * (lo + hi)
    # The residual is resolvable only relative to the equation's own terms
    # (they blow up like 1/alpha for small aspect ratios).
    tol_eff = tol * max(1.0, 1.0 / alpha, s / (alpha * t))
    for _ in range(100):
        r = equation(t)
        if abs(r) <= tol_eff:
            break
        t_new = t - r / derivative(t)
        if not (lo / 2 <= t_new <= 2 * hi) or t_new <= 0:
            t_new = 0.5 * (lo + hi)
        t = t_new
    residual = abs(equation(t))
    if residual > tol_eff:
        raise NumericalFailureError("effective regularization root residual %g" % residual, residual=residual)
    alt = 1.0 / float(companion_stieltjes(-s, alpha, nu).m_tilde.real)
    if abs(alt - t) > check_agreement * max(1.0, abs(t)):
        raise NumericalFailureError(
            "root and Stieltjes routes disagree: %r vs %r" % (t, alt), residual=abs(alt - t)
        )
    return LambdaStarResult(value=float(t), alt_value=float(alt), residual=residual)


def lambda_star(
    kernel: KernelFunction,
    cov: CovarianceSpec,
    alpha: float,
    lam: float,
    a_star_override: float | None = None,
    asymptotic_nu: bool = False,
) -> LambdaStarResult:
    """Effective regularization for a kernel/covariance pair.

    ``asymptotic_nu`` swaps the finite-size atom law of the tensor
    covariance for its large-d limit (identity covariance: a single atom
    at 2); ``a_star_override`` substitutes the diagonal offset.
    """
    coeffs = quad_coeffs(kernel, cov)
    a_star = coeffs.a_star if a_star_override is None else float(a_star_override)
    nu = _population_law(cov, asymptotic_nu)
    return lambda_star_solve(alpha, nu, a_star, lam, kernel.derivs0[2])


def _population_law(cov: CovarianceSpec, asymptotic: bool) -> DiscreteLaw:
    if not asymptotic:
        return sigma2_diagonal(cov).compressed()
    # Large-d limit: diagonal tensor coordinates carry vanishing weight,
    # leaving the law of 2 * sigma * sigma' for independent sigma, sigma'.
    if cov.kind == "identity":
        return DiscreteLaw.delta(2.0)
    values = 2.0 * np.outer(cov.diag, cov.diag).ravel()
    return DiscreteLaw.from_values(values).compressed()


@dataclass(frozen=True)
class RiskPrediction:
    """Asymptotic risk bundle: total = sigma_eps^2 V (+ B for random teachers)."""

    lambda_star: float
    V: float
    B: float
    total: float
    route: str


def risk_limit(
    alpha: float,
    nu: DiscreteLaw,
    a_star: float,
    second_deriv: float,
    lam: float,
    sigma_eps: float,
    teacher_kind: str,
    route: str = "direct_root",
) -> RiskPrediction:
    """Variance/bias limits:

        V = alpha J2 / (1 - alpha J2),
        B = (lambda_*/(a_star + lambda))^2 J1 / (1 - alpha J2),

    with J1 = int x/(x+lambda_*)^2 dnu and J2 = int x^2/(x+lambda_*)^2 dnu.
    The bias enters the total only for the random quadratic teacher.
    """
    if teacher_kind not in RISK_TEACHERS:
        raise InvalidArgumentError("teacher_kind must be one of %r" % (RISK_TEACHERS,))
    ls = lambda_star_solve(alpha, nu, a_star, lam, second_deriv)
    t = ls.alt_value if route == "stieltjes" else ls.value
    x, w = nu.atoms, nu.weights
    j1 = float(np.sum(w * x / (x + t) ** 2))
    j2 = float(np.sum(w * x**2 / (x + t) ** 2))
    denom = 1.0 - alpha * j2
    if denom <= 1e-8:
        raise AssumptionViolationError(
            "variance denominator 1 - alpha J2 = %g is not positive" % denom,
            detail={"alpha_j2": alpha * j2},
        )
    v = alpha * j2 / denom
    b = (t / (a_star + lam)) ** 2 * j1 / denom
    if teacher_kind == "deterministic_sigma":
        total = sigma_eps**2 * v
        b_out = 0.0
    else:
        total = sigma_eps**2 * v + b
        b_out = b
    return RiskPrediction(lambda_star=t, V=v, B=b_out, total=total, route=route)


def asymptotic_risk(
    kernel: KernelFunction,
    cov: CovarianceSpec,
    alpha: float,
    lam: float,
    sigma_eps: float,
    teacher_kind: str,
    asymptotic_nu: bool = False,
) -> RiskPrediction:
    _check_risk_kernel(kernel)
    coeffs = quad_coeffs(kernel, cov)
    if coeffs.a_star <= 0:
        raise AssumptionViolationError(
            "a_star = %g must be positive for the risk formulas" % coeffs.a_star
        )
    nu = _population_law(cov, asymptotic_nu)
    return risk_limit(alpha, nu, coeffs.a_star, kernel.derivs0[2], lam, sigma_eps, teacher_kind)


def empirical_risk(
    dataset: Dataset,
    kernel: KernelFunction,
    teacher_kind: str,
    lam: float,
    sigma_eps: float,
    n_test: int,
    n_repl: int,
    seed: int,
    test_sampler: MomentMatchedSampler | None = None,
    test_points: np.ndarray | None = None,
    noise: str = "gaussian",
) -> tuple[float, float]:
    """Monte Carlo generalization error, conditioned on the training inputs.

    Each of the ``n_repl`` replicates redraws the teacher randomness (for
    the random quadratic teacher), the label noise, and a fresh batch of
    ``n_test`` test points; the replicate means are averaged and their
    spread gives the standard error. ``test_points`` overrides sampling
    (all replicates then share those points). Test points need 18 matched
    moments: gaussian or gh_discrete(m >= 10).
    """
    if teacher_kind not in RISK_TEACHERS:
        raise InvalidArgumentError("teacher_kind must be one of %r" % (RISK_TEACHERS,))
    if n_repl < 1 or (test_points is None and n_test < 1):
        raise InvalidArgumentError("need n_repl >= 1 and n_test >= 1")
    sampler = test_sampler or MomentMatchedSampler.gaussian()
    if sampler.matched_moments < 18:
        raise AssumptionViolationError(
            "test sampler matches only %d moments; 18 are required" % sampler.matched_moments
        )
    cov = dataset.covariance
    k_mat = kernel_matrix(dataset, kernel)
    factor = RidgeFactor(k_mat, lam)
    scale = np.sqrt(cov.diag)[None, :]
    means = []
    for r in range(n_repl):
        teacher = TeacherModel.draw(teacher_kind, cov, substream(seed, TEACHER, r))
        y = make_labels(dataset, teacher, sigma_eps, seed, noise=noise, replicate=r)
        w = factor.solve(y)
        if test_points is None:
            z = sampler.sample(substream(seed, TEST, r), (n_test, cov.d))
            x_test = z * scale
        else:
            x_test = np.asarray(test_points, dtype=np.float64)
        predictions = cross_kernel(dataset, x_test, kernel) @ w
        truth = teacher.predict(x_test)
        means.append(float(np.mean((predictions - truth) ** 2)))
    mean = float(np.mean(means))
    stderr = float(np.std(means, ddof=1) / math.sqrt(n_repl)) if n_repl > 1 else 0.0
    return mean, stderr


def deterministic_equivalents(
    dataset: Dataset,
    kernel: KernelFunction,
    alpha: float,
    lam: float,
) -> dict[str, tuple[float, float]]:
    """Resolvent-trace functionals of the centered tensor sample covariance
    against their deterministic limits.

    With M = a2 Xbar' Xbar + (a + lambda) I and S2 the tensor covariance
    diagonal, returns (empirical, predicted) for
      first:  a2 Tr(M^{-1} S2)            -> f''(0) lambda_* / (4 alpha (a_star+lambda)) - 1
      second: a2 (a+lambda) Tr(M^{-2} S2) -> same minus 1/(1 - alpha J2)
      bias:   (2/d^2) Tr(M^{-2} S2)       -> B(lambda_*)
    """
    cov = dataset.covariance
    coeffs: QuadCoeffs = quad_coeffs(kernel, cov)
    second_deriv = kernel.derivs0[2]
    nu = sigma2_diagonal(cov)
    x2 = reduced_tensor_features(dataset, allow_large=True)
    x2_bar = x2 - tensor_mean_vector(cov)[None, :]
    p = x2.shape[1]
    m_mat = coeffs.a2 * (x2_bar.T @ x2_bar) + (coeffs.a + lam) * np.eye(p)
    try:
        cho = scipy.linalg.cho_factor(m_mat, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystemError("tensor resolvent is not positive definite") from exc
    inv = scipy.linalg.cho_solve(cho, np.eye(p), check_finite=False)
    sig2 = nu.atoms
    first_emp = coeffs.a2 * float(np.sum(np.diag(inv) * sig2))
    second_emp = coeffs.a2 * (coeffs.a + lam) * float(np.sum((inv * inv).sum(axis=0) * sig2))
    bias_emp = 2.0 / cov.d**2 * float(np.sum((inv * inv).sum(axis=0) * sig2))

    a_star = coeffs.a_star
    ls = lambda_star_solve(alpha, nu.compressed(), a_star, lam, second_deriv)
    t = ls.value
    nu_c = nu.compressed()
    j2 = float(np.sum(nu_c.weights * nu_c.atoms**2 / (nu_c.atoms + t) ** 2))
    head = second_deriv * t / (4.0 * alpha * (a_star + lam))
    first_pred = head - 1.0
    second_pred = head - 1.0 / (1.0 - alpha * j2)
    bias_pred = risk_limit(alpha, nu_c, a_star, second_deriv, lam, 0.0, "pure_quadratic").B
    return {
        "first": (first_emp, first_pred),
        "second": (second_emp, second_pred),
        "bias": (bias_emp, bias_pred),
    }
