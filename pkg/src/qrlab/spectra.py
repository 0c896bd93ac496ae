"""Spectral laws for the quadratic regime.

Empirical spectra, the Marchenko-Pastur density, and the deformed MP law
obtained by free multiplicative convolution of the MP law with a population
law ``nu``. The deformed law is computed through the companion Stieltjes
transform ``mt`` solving the scalar fixed point

    z = -1/mt + alpha * integral x / (1 + x*mt) dnu(x),

valid for z in the upper half plane or on the negative real axis. The
density is recovered by Stieltjes inversion, densities/integrals of the law
come from ``mt`` and its derivative, and the point mass at zero (present
when ``alpha < 1``) is handled analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalFailureError

__all__ = [
    "DiscreteLaw",
    "StieltjesEval",
    "SpectralLaw",
    "GridSpec",
    "esd",
    "mp_support",
    "mp_density",
    "companion_stieltjes",
    "population_stieltjes",
    "deformed_mp_density",
    "deformed_mp_law",
    "law_integrals",
    "ks_distance",
    "law_to_csv",
]


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """Atomic probability law: finite atoms with positive weights summing to 1."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.float64).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if atoms.shape != weights.shape or atoms.size == 0:
            raise InvalidArgumentError("atoms and weights must be non-empty and congruent")
        if not np.all(np.isfinite(atoms)):
            raise InvalidArgumentError("atoms must be finite")
        if np.any(weights <= 0):
            raise InvalidArgumentError("weights must be positive")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise InvalidArgumentError("weights must sum to 1 within 1e-12, got %r" % float(weights.sum()))

    @staticmethod
    def delta(c: float) -> "DiscreteLaw":
        return DiscreteLaw(np.array([float(c)]), np.array([1.0]))

    @staticmethod
    def from_values(values: np.ndarray) -> "DiscreteLaw":
        """Uniform weights over a list of values (atom per entry, in order)."""
        values = np.asarray(values, dtype=np.float64).ravel()
        return DiscreteLaw(values, np.full(values.size, 1.0 / values.size))

    def mean(self) -> float:
        return float(self.atoms @ self.weights)

    @property
    def support_max(self) -> float:
        return float(self.atoms.max())

    def compressed(self) -> "DiscreteLaw":
        """Merge duplicate atoms; useful before dense grid sweeps."""
        vals, inv = np.unique(self.atoms, return_inverse=True)
        w = np.zeros_like(vals)
        np.add.at(w, inv, self.weights)
        return DiscreteLaw(vals, w)


@dataclass(frozen=True)
class StieltjesEval:
    """One converged companion fixed-point solve."""

    z: complex
    m_tilde: complex
    m_tilde_prime: complex
    iterations: int
    residual: float


def esd(matrix: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a (nearly) symmetric matrix.

    The input must be symmetric within 1e-10 relative to its largest entry;
    it is explicitly symmetrized before the dense solve.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError("esd expects a square matrix")
    scale = max(1.0, float(np.abs(m).max()))
    asym = float(np.abs(m - m.T).max())
    if asym > 1e-10 * scale:
        raise InvalidArgumentError("matrix is not symmetric: max|M - M^T| = %g" % asym)
    sym = (m + m.T) / 2.0
    try:
        return np.linalg.eigvalsh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericalFailureError("eigensolver failed: %s" % exc) from exc


def mp_support(gamma: float) -> tuple[float, float]:
    """Support edges ((1 - sqrt(gamma))**2, (1 + sqrt(gamma))**2)."""
    if gamma <= 0:
        raise InvalidArgumentError("gamma must be positive")
    r = math.sqrt(gamma)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_density(gamma: float, x) -> np.ndarray | float:
    """Marchenko-Pastur density sqrt((g+ - x)(x - g-)) / (2 pi gamma x).

    This is the absolutely continuous part; its total mass is 1 for
    gamma <= 1 and 1/gamma for gamma > 1.
    """
    lo, hi = mp_support(gamma)
    xv = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(xv, dtype=np.float64)
    inside = (xv > lo) & (xv < hi) & (xv > 0)
    xi = xv[inside]
    out[inside] = np.sqrt((hi - xi) * (xi - lo)) / (2.0 * math.pi * gamma * xi)
    if np.isscalar(x):
        return float(out)
    return out


def _frac_integrals(nu: DiscreteLaw, m: complex) -> tuple[complex, complex]:
    """(integral x/(1+x m) dnu, integral x^2/(1+x m)^2 dnu)."""
    den = 1.0 + nu.atoms * m
    f1 = np.sum(nu.weights * nu.atoms / den)
    f2 = np.sum(nu.weights * nu.atoms**2 / den**2)
    return complex(f1), complex(f2)


def _check_point(z: complex) -> complex:
    z = complex(z)
    if z.imag > 0:
        return z
    if z.imag == 0 and z.real < 0:
        return z
    raise InvalidArgumentError("z must lie in the upper half plane or on the negative real axis, got %r" % z)


def _solve_companion(
    z: complex,
    alpha: float,
    nu: DiscreteLaw,
    m: complex,
    budget: int,
    tol: float,
) -> tuple[complex, int, float]:
    """Damped fixed point with a residual-guarded Newton accelerator."""
    on_axis = z.imag == 0.0

    def _residual(mm: complex) -> complex:
        f1, _ = _frac_integrals(nu, mm)
        return z + 1.0 / mm - alpha * f1

    resid = math.inf
    tol_abs = tol * max(1.0, abs(z))
    for it in range(1, budget + 1):
        f1, f2 = _frac_integrals(nu, m)
        r = z + 1.0 / m - alpha * f1
        resid = abs(r)
        if resid <= tol_abs:
            return m, it, resid
        # Newton step, accepted only when it actually shrinks the residual
        # (it can diverge far from the root, e.g. near the support edge).
        stepped = False
        dr = -1.0 / m**2 + alpha * f2
        if dr != 0:
            cand = m - r / dr
            ok = np.isfinite(cand.real) and np.isfinite(cand.imag) and cand != 0
            if ok and not on_axis and cand.imag < -1e-13:
                ok = False
            if ok and on_axis and cand.real <= 0:
                ok = False
            if ok and abs(_residual(cand)) < 0.9 * resid:
                m = cand
                stepped = True
        if not stepped:
            denom = alpha * f1 - z
            if denom == 0:
                raise NumericalFailureError("degenerate fixed-point map at z=%r" % z, residual=resid)
            m = 0.5 * (m + 1.0 / denom)
            if on_axis:
                m = complex(max(m.real, 1e-300), 0.0)
    return m, budget, resid


def companion_stieltjes(
    z: complex,
    alpha: float,
    nu: DiscreteLaw,
    initial: complex | None = None,
    max_steps: int = 500,
    tol: float = 1e-12,
) -> StieltjesEval:
    """Solve z = -1/mt + alpha * int x/(1+x*mt) dnu for the companion transform.

    Damped fixed-point steps (theta = 0.5) pull the iterate into the basin;
    a Newton polish, accepted only while it shrinks the residual, drives it
    to ``tol * max(1, |z|)`` (the residual lives in z units, so it can only
    be resolved relative to |z|). Cold starts use -1/z, preceded by a short continuation
    ladder from z values at the support scale when |z| is small (the -1/z
    guess is far off there). All stages share the ``max_steps`` budget.
    The derivative comes in closed form:
    mt' = 1 / (1/mt^2 - alpha * int x^2/(1+x*mt)^2 dnu).
    """
    z = _check_point(z)
    if alpha < 0:
        raise InvalidArgumentError("alpha must be nonnegative")
    on_axis = z.imag == 0.0

    stages: list[complex] = []
    if initial is None:
        scale = nu.support_max * (1.0 + math.sqrt(max(alpha, 0.0))) ** 2
        scale = scale if scale > 0 else 1.0
        level = scale
        while level > 4.0 * (abs(z.real) if on_axis else z.imag):
            stages.append(complex(-level, 0.0) if on_axis else complex(z.real, level))
            level /= 4.0
        stages.append(z)
        m = -1.0 / stages[0]
    else:
        stages.append(z)
        m = complex(initial)
    if on_axis and m.real <= 0:
        m = -1.0 / z.real

    used = 0
    resid = math.inf
    final_tol = tol * max(1.0, abs(z))
    for stage in stages:
        stage_tol = tol if stage == z else min(1e-9, 1e-6 * abs(stage))
        m, its, resid = _solve_companion(stage, alpha, nu, m, max_steps - used, stage_tol)
        used += its
        if used >= max_steps and (stage != z or resid > final_tol):
            raise NumericalFailureError(
                "companion fixed point did not converge at z=%r (residual %.3g)" % (z, resid),
                residual=resid,
            )
    if resid > final_tol:
        raise NumericalFailureError(
            "companion fixed point did not converge at z=%r (residual %.3g)" % (z, resid),
            residual=resid,
        )

    if not on_axis and m.imag < -1e-10:
        raise NumericalFailureError("Nevanlinna violation: Im m = %g < 0 for Im z > 0" % m.imag, residual=resid)
    _, f2 = _frac_integrals(nu, m)
    dprime_den = 1.0 / m**2 - alpha * f2
    m_prime = 1.0 / dprime_den if dprime_den != 0 else complex(math.inf)
    return StieltjesEval(z=z, m_tilde=m, m_tilde_prime=m_prime, iterations=used, residual=resid)


def population_stieltjes(
    z: complex,
    alpha: float,
    nu: DiscreteLaw,
    max_steps: int = 2000,
    tol: float = 1e-13,
) -> complex:
    """Stieltjes transform m(z) of the population-side deformed MP law.

    Solves m = int dnu(x) / (x (1 - alpha - alpha z m) - z) by damped
    iteration with a Newton polish. Kept independent of
    ``companion_stieltjes`` so the identity mt = alpha m + (1-alpha)(-1/z)
    can be cross-checked between two solvers.
    """
    z = _check_point(z)

    def g(m: complex) -> complex:
        u = 1.0 - alpha - alpha * z * m
        return complex(np.sum(nu.weights / (nu.atoms * u - z)))

    m = -1.0 / z
    resid = math.inf
    for _ in range(max_steps):
        gm = g(m)
        resid = abs(gm - m)
        if resid <= tol:
            break
        # Newton on r(m) = g(m) - m once close, damped picard otherwise.
        if resid < 1e-2:
            u = 1.0 - alpha - alpha * z * m
            dg = complex(np.sum(nu.weights * nu.atoms * alpha * z / (nu.atoms * u - z) ** 2))
            if dg != 1.0:
                cand = m - (gm - m) / (dg - 1.0)
                if np.isfinite(cand.real) and np.isfinite(cand.imag):
                    m = cand
                    continue
        m = 0.5 * (m + gm)
    else:
        raise NumericalFailureError("population fixed point did not converge at z=%r" % z, residual=resid)
    return m


@dataclass(frozen=True)
class GridSpec:
    """Inversion grid controls for :func:`deformed_mp_law`.

    ``eta_scale`` sets the inversion bandwidth eta = eta_scale * s where
    s = max_atom(nu) * (1 + sqrt(alpha))^2 is the support scale; ``pad``
    stretches the grid beyond s; points are sqrt-concentrated near zero
    where the density can blow up like x^(-1/2). A hard edge at zero loses
    mass of order sqrt(eta) to the negative axis under Cauchy smearing, so
    the bandwidth must sit far below the 2e-3 normalization budget; the
    default 1e-8 * s keeps the loss near 1e-6 (1e-4 * s measurably fails).
    """

    points: int = 4000
    pad: float = 1.3
    eta_scale: float = 1e-8
    density_floor: float = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralLaw:
    """Deformed MP law: point mass at zero plus a density on a grid."""

    atom0_mass: float
    grid: np.ndarray
    density: np.ndarray
    alpha: float
    nu: DiscreteLaw

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        dens = np.asarray(self.density, dtype=np.float64)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise InvalidArgumentError("grid must be strictly increasing with at least 2 points")
        if dens.shape != grid.shape or np.any(dens < 0):
            raise InvalidArgumentError("density must be nonnegative and match the grid")
        if not 0.0 <= self.atom0_mass <= 1.0:
            raise InvalidArgumentError("atom0_mass must lie in [0, 1]")
        cum = np.concatenate([[0.0], np.cumsum(np.diff(grid) * (dens[1:] + dens[:-1]) / 2.0)])
        object.__setattr__(self, "_cumulative", cum)

    def continuous_mass(self) -> float:
        return float(self._cumulative[-1])

    def total_mass(self) -> float:
        return self.atom0_mass + self.continuous_mass()

    def cdf(self, x) -> np.ndarray | float:
        """Law CDF: atom at 0 plus cumulative trapezoid of the density.

        Eigenvalues a hair below zero (symmetric-solver round-off) still
        collect the atom, hence the small negative tolerance.
        """
        xv = np.asarray(x, dtype=np.float64)
        tol = 1e-8 * max(1.0, float(self.grid[-1]))
        out = self.atom0_mass * (xv >= -tol).astype(np.float64)
        out = out + np.interp(xv, self.grid, self._cumulative, left=0.0, right=self._cumulative[-1])
        if np.isscalar(x):
            return float(out)
        return out


def _support_scale(alpha: float, nu: DiscreteLaw) -> float:
    return nu.support_max * (1.0 + math.sqrt(alpha)) ** 2


def deformed_mp_density(
    alpha: float,
    nu: DiscreteLaw,
    x,
    eta: float | None = None,
) -> np.ndarray | float:
    """Continuous part of the deformed MP law at points ``x``.

    Stieltjes inversion density = Im mt(x + i eta) / pi, with the smeared
    contribution of the analytic atom at zero subtracted when alpha < 1.
    """
    if alpha <= 0:
        raise InvalidArgumentError("alpha must be positive")
    nu_c = nu.compressed()
    if eta is None:
        eta = 1e-8 * _support_scale(alpha, nu_c)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    # Sweep from large x (outside the support, where -1/z is an accurate
    # start) down toward the hard edge, warm-starting each solve.
    order = np.argsort(xs)[::-1]
    atom0 = max(1.0 - alpha, 0.0)
    dens = np.empty_like(xs)
    warm = None
    for idx in order:
        z = complex(xs[idx], eta)
        try:
            ev = companion_stieltjes(z, alpha, nu_c, initial=warm)
        except NumericalFailureError:
            # Near band edges a warm start can sit on the wrong side of the
            # square-root branch point; the cold continuation ladder tracks
            # the root down in eta instead.
            ev = companion_stieltjes(z, alpha, nu_c, initial=None)
        warm = ev.m_tilde
        val = ev.m_tilde.imag / math.pi
        if atom0 > 0:
            val -= atom0 * eta / (xs[idx] ** 2 + eta**2) / math.pi
        dens[idx] = max(val, 0.0)
    if np.isscalar(x):
        return float(dens[0])
    return dens


def deformed_mp_law(alpha: float, nu: DiscreteLaw, grid_spec: GridSpec | None = None) -> SpectralLaw:
    """Deformed MP law for ratio ``alpha`` and population law ``nu``.

    The returned law carries the analytic atom max(1-alpha, 0) at zero and
    the inverted density on a sqrt-concentrated grid trimmed to where the
    density exceeds ``grid_spec.density_floor``.
    """
    if alpha <= 0:
        raise InvalidArgumentError("alpha must be positive")
    gs = grid_spec or GridSpec()
    nu_c = nu.compressed()
    scale = _support_scale(alpha, nu_c)
    eta = gs.eta_scale * scale
    t = np.linspace(0.0, 1.0, gs.points)
    grid = gs.pad * scale * t**2
    grid[0] = 0.0
    try:
        dens = deformed_mp_density(alpha, nu_c, grid, eta=eta)
    except NumericalFailureError as exc:
        raise NumericalFailureError("density inversion failed: %s" % exc, residual=exc.residual) from exc
    atom0 = max(1.0 - alpha, 0.0)
    # Trim flat tails but keep one padding point on each side.
    live = np.nonzero(dens > gs.density_floor)[0]
    if live.size:
        lo = max(int(live[0]) - 1, 0)
        hi = min(int(live[-1]) + 2, grid.size)
        grid, dens = grid[lo:hi], dens[lo:hi]
    return SpectralLaw(atom0_mass=atom0, grid=grid, density=dens, alpha=float(alpha), nu=nu)


def law_integrals(alpha: float, nu: DiscreteLaw, s: float) -> tuple[float, float, float]:
    """Resolvent moments of the deformed MP law at shift ``s > 0``.

    Returns (I0, I1, I2) with
        I0 = int dmu/(x+s) = mt(-s),
        I1 = int x dmu/(x+s)^2 = I0 - s*I2,
        I2 = int dmu/(x+s)^2 = mt'(-s).
    """
    if s <= 0:
        raise InvalidArgumentError("s must be positive")
    ev = companion_stieltjes(-float(s), float(alpha), nu)
    i0 = float(ev.m_tilde.real)
    i2 = float(ev.m_tilde_prime.real)
    i1 = i0 - s * i2
    if min(i0, i2) < -1e-12 or i1 < -1e-12:
        raise NumericalFailureError("negative resolvent moment: %r" % ((i0, i1, i2),))
    return max(i0, 0.0), max(i1, 0.0), max(i2, 0.0)


def ks_distance(eigs: np.ndarray, law: SpectralLaw) -> float:
    """Kolmogorov-Smirnov distance between sorted eigenvalues and the law."""
    e = np.sort(np.asarray(eigs, dtype=np.float64).ravel())
    if e.size == 0:
        raise InvalidArgumentError("eigs must be non-empty")
    n = e.size
    f = np.asarray(law.cdf(e), dtype=np.float64)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.abs(upper - f).max(), np.abs(lower - f).max()))


def law_to_csv(law: SpectralLaw, path) -> None:
    """CSV export: comment line with the atom mass, then x,density rows."""
    with open(path, "w") as fh:
        fh.write("# atom0_mass=%r\n" % float(law.atom0_mass))
        fh.write("x,density\n")
        for x, d in zip(law.grid, law.density):
            fh.write("%r,%r\n" % (float(x), float(d)))
