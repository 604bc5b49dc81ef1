"""Observables and detectors: mass/energy, variance-virial machinery, the
convexity blow-up detector, scattering monitors, and space-time norm
accumulators.

The variance identity implemented and cross-checked here is

    f(t)  = int |x|^2 |u|^2,
    f'(t) = 4 Im int conj(u) x . grad(u),
    f''(t) = 16 E + ((4np - 16)/(p+2)) lam1 ||u||_{p+2}^{p+2}
             + 2 lam2 (gamma - 2) int (K * |u|^2) |u|^2,

with x the box-centered coordinate. All x-weighted integrals require the
field to have decayed at the periodic seam; a boundary flag is attached
instead of failing silently.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import kernels
from .dynamics import EquationParams
from .errors import InsufficientSamples, InvalidExponent
from .grid import (
    ComplexField,
    GridSpec,
    _hartree_values,
    boundary_mass_fraction,
    riesz_cell_mean,
)

__all__ = [
    "NormSpec",
    "EnergyBreakdown",
    "ObservableSeries",
    "Trajectory",
    "ThetaReport",
    "BlowupReport",
    "ScatteringReport",
    "mass",
    "energy",
    "variance",
    "virial_first",
    "virial_second_formula",
    "theta_bound",
    "theta_report",
    "blowup_detector",
    "scattering_monitor",
    "spacetime_accumulator",
    "h1_norm",
]

BOUNDARY_MASS_TOL = 1e-6

SERIES_COLUMNS = ("t", "M", "E", "kinetic", "pot_power", "pot_hartree", "f", "fprime", "fsecond_formula")


@dataclass(frozen=True)
class NormSpec:
    """A space-time norm L^q_t L^r_x. The four labeled families are

    U = (6, 6n/(3n-2)),  V = (2(n+2)/n, same),  W = (2(n+2)/(n-2), same),
    Z = (n+1, 2(n+1)/(n-1)).
    """

    q: float
    r: float
    label: str = "custom"

    def __post_init__(self):
        if self.q < 1 or self.r < 1:
            raise InvalidExponent("space-time exponents must be >= 1")

    @staticmethod
    def labeled(label: str, n: int) -> "NormSpec":
        if label == "U":
            return NormSpec(6.0, 6.0 * n / (3 * n - 2), "U")
        if label == "V":
            q = 2.0 * (n + 2) / n
            return NormSpec(q, q, "V")
        if label == "W":
            if n <= 2:
                raise InvalidExponent("W norm requires n >= 3")
            q = 2.0 * (n + 2) / (n - 2)
            return NormSpec(q, q, "W")
        if label == "Z":
            if n <= 1:
                raise InvalidExponent("Z norm requires n >= 2")
            return NormSpec(float(n + 1), 2.0 * (n + 1) / (n - 1), "Z")
        raise InvalidExponent(f"unknown norm label {label!r}")


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    kinetic: float
    pot_power: float
    pot_hartree: float


def _observables(values: np.ndarray, grid: GridSpec, params: EquationParams) -> dict:
    """All scalar observables from one spectral pass (shared transforms)."""
    dV = grid.cell_volume
    abs2 = kernels.abs2(values)
    m = float(np.sum(abs2)) * dV
    uh = sfft.fftn(values, workers=-1)
    kin_sq = float(np.sum(grid.k_squared * np.abs(uh) ** 2)) * dV / grid.size  # ||grad u||^2
    lp_pow = float(np.sum(abs2 ** (0.5 * (params.p + 2)))) * dV  # ||u||_{p+2}^{p+2}
    quart = float(np.sum(_hartree_values(abs2, grid, params.gamma) * abs2)) * dV
    pot_power = params.lam1 / (params.p + 2) * lp_pow
    pot_hartree = params.lam2 / 4.0 * quart
    e = 0.5 * kin_sq + pot_power + pot_hartree

    f = float(np.sum(grid.radius_squared * abs2)) * dV
    # f' = 4 Im sum conj(u) x.grad(u) dV, gradient spectral
    fprime = 0.0
    x = grid.axis_coordinates
    k = grid.axis_wavenumbers
    for axis in range(grid.dim):
        sh = [1] * grid.dim
        sh[axis] = grid.points
        du = sfft.ifftn(1j * k.reshape(sh) * uh, workers=-1)
        fprime += float(np.sum((np.conj(values) * x.reshape(sh) * du).imag)) * dV
    fprime *= 4.0

    n, p, gamma = params.n, params.p, params.gamma
    # The virial identity is derived for the homogeneous kernel |x|^(-gamma);
    # the spectral potential drops the k=0 Riemann cell, shifting it by
    # -c0 * M. That shift is pure gauge for the dynamics but enters the
    # identity through the gamma-weighted Hartree term, so it is restored
    # here as a counterterm (quart is mean-dropped, potential shift * M).
    c0 = riesz_cell_mean(grid, grid.dim - gamma)
    fsecond = (
        16.0 * e
        + (4.0 * n * p - 16.0) / (p + 2) * params.lam1 * lp_pow
        + 2.0 * params.lam2 * (gamma - 2.0) * quart
        + 2.0 * params.lam2 * gamma * c0 * m * m
    )
    return {
        "M": m,
        "E": e,
        "kinetic": 0.5 * kin_sq,
        "grad_sq": kin_sq,
        "pot_power": pot_power,
        "pot_hartree": pot_hartree,
        "lp_power": lp_pow,
        "quartic": quart,
        "f": f,
        "fprime": fprime,
        "fsecond_formula": fsecond,
    }


def mass(u: ComplexField) -> float:
    """M(u) = ||u||_{L^2}^2."""
    return float(np.sum(kernels.abs2(u.values))) * u.grid.cell_volume


def energy(u: ComplexField, params: EquationParams) -> EnergyBreakdown:
    """E(u) = 1/2 ||grad u||^2 + lam1/(p+2) ||u||_{p+2}^{p+2} + lam2/4 int (K*|u|^2)|u|^2."""
    obs = _observables(u.values, u.grid, params)
    return EnergyBreakdown(obs["E"], obs["kinetic"], obs["pot_power"], obs["pot_hartree"])


def variance(u: ComplexField) -> float:
    """f = int |x|^2 |u|^2, box-centered coordinates."""
    return float(np.sum(u.grid.radius_squared * kernels.abs2(u.values))) * u.grid.cell_volume


def virial_first(u: ComplexField) -> float:
    """f' = 4 Im int conj(u) x.grad(u)."""
    g = u.grid
    uh = sfft.fftn(u.values, workers=-1)
    x = g.axis_coordinates
    k = g.axis_wavenumbers
    out = 0.0
    for axis in range(g.dim):
        sh = [1] * g.dim
        sh[axis] = g.points
        du = sfft.ifftn(1j * k.reshape(sh) * uh, workers=-1)
        out += float(np.sum((np.conj(u.values) * x.reshape(sh) * du).imag))
    return 4.0 * out * g.cell_volume


def virial_second_formula(u: ComplexField, params: EquationParams) -> float:
    """Right-hand side of the variance second-derivative identity."""
    return _observables(u.values, u.grid, params)["fsecond_formula"]


def boundary_contaminated(u: ComplexField) -> bool:
    """True when the boundary shell carries more than 1e-6 of the mass,
    invalidating x-weighted integrals (x is discontinuous across the seam)."""
    return boundary_mass_fraction(u) > BOUNDARY_MASS_TOL


def h1_norm(u: ComplexField) -> float:
    """(||u||_{L^2}^2 + ||grad u||_{L^2}^2)^(1/2) via one transform."""
    g = u.grid
    uh = sfft.fftn(u.values, workers=-1)
    val = np.sum((1.0 + g.k_squared) * np.abs(uh) ** 2) * g.cell_volume / g.size
    return float(np.sqrt(val))


@dataclass
class ObservableSeries:
    """Scalar diagnostic series sampled along an evolution.

    Use as an observer callback: ``evolve(u0, params, config, [series])``.
    """

    params: EquationParams
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)
    pot_power: list = field(default_factory=list)
    pot_hartree: list = field(default_factory=list)
    variance: list = field(default_factory=list)
    virial: list = field(default_factory=list)
    fsecond_formula: list = field(default_factory=list)
    boundary_flags: list = field(default_factory=list)

    def __call__(self, t: float, u: ComplexField) -> None:
        if self.times and t <= self.times[-1]:
            return  # guard against duplicate terminal samples
        obs = _observables(u.values, u.grid, self.params)
        self.times.append(float(t))
        self.mass.append(obs["M"])
        self.energy.append(obs["E"])
        self.kinetic.append(obs["kinetic"])
        self.pot_power.append(obs["pot_power"])
        self.pot_hartree.append(obs["pot_hartree"])
        self.variance.append(obs["f"])
        self.virial.append(obs["fprime"])
        self.fsecond_formula.append(obs["fsecond_formula"])
        self.boundary_flags.append(boundary_mass_fraction(u) > BOUNDARY_MASS_TOL)

    def __len__(self) -> int:
        return len(self.times)

    def rows(self):
        """Rows in the CSV column order ``SERIES_COLUMNS``."""
        for i in range(len(self.times)):
            yield (
                self.times[i],
                self.mass[i],
                self.energy[i],
                self.kinetic[i],
                self.pot_power[i],
                self.pot_hartree[i],
                self.variance[i],
                self.virial[i],
                self.fsecond_formula[i],
            )

    def virial_closure_errors(self) -> np.ndarray:
        """Relative mismatch between the centered second difference of f and
        the formula value, at interior samples (uniform cadence assumed)."""
        if len(self.times) < 3:
            raise InsufficientSamples("need at least 3 samples for the second difference")
        t = np.asarray(self.times)
        f = np.asarray(self.variance)
        rhs = np.asarray(self.fsecond_formula)
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-8):
            raise InsufficientSamples("virial closure check requires uniform sampling")
        fd2 = (f[2:] - 2 * f[1:-1] + f[:-2]) / dt[0] ** 2
        denom = np.maximum(np.abs(rhs[1:-1]), 1.0)
        return np.abs(fd2 - rhs[1:-1]) / denom


@dataclass
class Trajectory:
    """Observer that records the scalar series plus periodic state snapshots.

    ``snapshot_stride`` counts observer invocations between stored snapshots
    (1 = every sample). Snapshots hold full-precision copies; size the stride
    to the available memory.
    """

    params: EquationParams
    snapshot_stride: int = 1
    series: ObservableSeries = None
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    termination: str = ""
    _calls: int = 0

    def __post_init__(self):
        if self.snapshot_stride < 1:
            raise InvalidExponent("snapshot_stride must be >= 1")
        if self.series is None:
            self.series = ObservableSeries(self.params)

    def __call__(self, t: float, u: ComplexField) -> None:
        self.series(t, u)
        if self._calls % self.snapshot_stride == 0:
            if not self.times or t > self.times[-1]:
                self.times.append(float(t))
                self.snapshots.append(u.values.copy())
        self._calls += 1
        self.grid = u.grid

    def snapshot_fields(self):
        for t, v in zip(self.times, self.snapshots):
            yield t, ComplexField(self.grid, v)


# ---------------------------------------------------------------------------
# Quadratic variance bound and the convexity blow-up detector


@dataclass(frozen=True)
class ThetaReport:
    """The quadratic variance majorant theta(t) = f(0) + f'(0) t + A t^2 / 2."""

    variance0: float
    virial0: float
    A: float
    attains_negative: bool
    root: float | None  # earliest positive root when it exists


def theta_bound(t: float, variance0: float, virial0: float, A: float) -> float:
    """Evaluate theta(t) = f(0) + f'(0) t + (A/2) t^2."""
    return variance0 + virial0 * t + 0.5 * A * t * t


def theta_report(variance0: float, virial0: float, A: float) -> ThetaReport:
    """Negativity analysis of theta.

    theta takes negative values iff 8 (f'(0)/4)^2 > A f(0), i.e.
    f'(0)^2 > 2 A f(0); for A < 0 this always holds and the earliest positive
    root is (-f'(0) - sqrt(f'(0)^2 - 2 A f(0))) / A.
    """
    disc = virial0 * virial0 - 2.0 * A * variance0
    negative = disc > 0.0
    root = None
    if negative:
        if A < 0.0:
            root = (-virial0 - np.sqrt(disc)) / A
        elif A > 0.0:
            r1 = (-virial0 - np.sqrt(disc)) / A
            r2 = (-virial0 + np.sqrt(disc)) / A
            pos = [r for r in (r1, r2) if r > 0]
            root = min(pos) if pos else None
            negative = root is not None
        else:  # linear: negative for large t iff slope < 0
            negative = virial0 < 0.0
            root = -variance0 / virial0 if negative else None
    return ThetaReport(variance0, virial0, A, negative, root)


@dataclass(frozen=True)
class BlowupReport:
    fired: bool
    reason: str  # "guard" | "variance-collapse" | "none"
    t_detect: float | None
    variance_decreasing_tail: bool
    variance_concave_tail: bool
    theta: ThetaReport | None
    within_theta_bound: bool | None  # t_detect <= 1.5 * theta root


def _tail_monotonicity(series: ObservableSeries) -> tuple:
    """(strictly decreasing, concave) over the last recorded quarter of f."""
    f = np.asarray(series.variance)
    if len(f) < 8:
        return False, False
    tail = f[-max(len(f) // 4, 4):]
    decreasing = bool(np.all(np.diff(tail) < 0))
    concave = bool(np.all(np.diff(tail, 2) < 0))
    return decreasing, concave


def blowup_detector(series: ObservableSeries, termination: str, A: float | None = None) -> BlowupReport:
    """Convexity-argument blow-up detection on a completed run.

    Fires when the evolution guard tripped, or when the variance collapsed
    below 1% of its initial value while its measured second difference stayed
    at or below A (within tolerance). When A is supplied the quadratic
    majorant's root gives the blow-up-time upper bound for comparison.
    """
    fired = False
    reason = "none"
    t_detect = None
    if termination == "guard_tripped":
        fired = True
        reason = "guard"
        t_detect = series.times[-1] if series.times else None
    elif len(series) >= 3:
        f = np.asarray(series.variance)
        collapsed = np.nonzero(f < 0.01 * f[0])[0]
        if collapsed.size and A is not None:
            errs_ok = True
            t = np.asarray(series.times)
            dt = t[1] - t[0]
            fd2 = (f[2:] - 2 * f[1:-1] + f[:-2]) / dt**2
            i = collapsed[0]
            if i >= 2:
                errs_ok = bool(np.all(fd2[: i - 1] <= A + 0.05 * abs(A)))
            if errs_ok:
                fired = True
                reason = "variance-collapse"
                t_detect = float(t[i])

    theta = None
    within = None
    if A is not None and len(series) >= 1:
        theta = theta_report(series.variance[0], series.virial[0], A)
        if fired and t_detect is not None and theta.root is not None:
            within = t_detect <= 1.5 * theta.root
    decreasing, concave = _tail_monotonicity(series)
    return BlowupReport(fired, reason, t_detect, decreasing, concave, theta, within)


# ---------------------------------------------------------------------------
# Scattering monitor and space-time accumulators


@dataclass(frozen=True)
class ScatteringReport:
    times: tuple
    cauchy_h1: tuple  # ||w(t_{i+1}) - w(t_i)||_{H^1}
    potential_power: tuple
    potential_hartree: tuple
    monotone_tail: bool
    potential_decay_factor: float
    scattering_consistent: bool


def scattering_monitor(traj: Trajectory) -> ScatteringReport:
    """Free-propagation Cauchy test on stored snapshots.

    Computes w(t) = exp(-it Lap) u(t) (backward free propagation) at each
    snapshot and the H^1 differences of consecutive w. Declared
    scattering-consistent when the differences decrease monotonically over
    the last half of the run and the total potential energy magnitude decays
    by at least 10x from its maximum. This is a numerical proxy for the
    existence of the asymptotic state, not a proof.
    """
    if len(traj.times) < 4:
        raise InsufficientSamples("scattering monitor needs at least 4 snapshots")
    grid = traj.grid
    params = traj.params
    diffs = []
    pot_p = []
    pot_h = []
    w_prev = None
    for t, v in zip(traj.times, traj.snapshots):
        uh = sfft.fftn(v, workers=-1)
        w_hat = uh * np.exp(1j * t * grid.k_squared)  # inverse of exp(-i t |k|^2)
        if w_prev is not None:
            d = w_hat - w_prev
            val = np.sum((1.0 + grid.k_squared) * np.abs(d) ** 2) * grid.cell_volume / grid.size
            diffs.append(float(np.sqrt(val)))
        w_prev = w_hat
        abs2 = kernels.abs2(v)
        lp_pow = float(np.sum(abs2 ** (0.5 * (params.p + 2)))) * grid.cell_volume
        quart = float(np.sum(_hartree_values(abs2, grid, params.gamma) * abs2)) * grid.cell_volume
        pot_p.append(params.lam1 / (params.p + 2) * lp_pow)
        pot_h.append(params.lam2 / 4.0 * quart)

    pot_total = np.abs(np.asarray(pot_p)) + np.abs(np.asarray(pot_h))
    decay = float(pot_total.max() / max(pot_total[-1], 1e-300))
    tail = diffs[len(diffs) // 2 :]
    monotone = bool(np.all(np.diff(tail) < 0)) if len(tail) >= 2 else False
    consistent = monotone and decay >= 10.0
    return ScatteringReport(
        tuple(traj.times),
        tuple(diffs),
        tuple(pot_p),
        tuple(pot_h),
        monotone,
        decay,
        consistent,
    )


def spacetime_accumulator(traj: Trajectory, spec: NormSpec) -> float:
    """Trapezoid estimate of ( int ||u(t)||_{L^r}^q dt )^(1/q) over the run."""
    if len(traj.times) < 10:
        raise InsufficientSamples("space-time accumulator needs at least 10 snapshots")
    grid = traj.grid
    vals = []
    for v in traj.snapshots:
        mag = np.abs(v)
        vals.append((float(np.sum(mag**spec.r)) * grid.cell_volume) ** (1.0 / spec.r))
    integrand = np.asarray(vals) ** spec.q
    from scipy.integrate import trapezoid

    return float(trapezoid(integrand, np.asarray(traj.times)) ** (1.0 / spec.q))
