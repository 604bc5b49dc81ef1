"""Rule-based regime classification: global well-posedness, scattering, and
blow-up case conditions evaluated from equation parameters, initial-datum
statistics, and ground-state constants.

Status vocabulary per case:

* ``satisfied``   — all hypotheses hold (numeric thresholds checked strictly).
* ``violated``    — the parameter ranges apply but a datum condition fails.
* ``not-applicable`` — the parameter ranges (or coupling signs) do not apply.
* ``conditional`` — the case depends on an unquantified ingredient (a small
  mass bound, an unspecified constant C(M), or a cited conjectural result);
  never reported as satisfied outright.

For the focusing-power / defocusing-Hartree quadrant the region
np/2 < gamma <= 2 + n - 4/p carries no verdict for negative-energy data in
either direction; sweeps label such cells ``indeterminate``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import ThetaReport, _observables, theta_report
from .dynamics import EquationParams
from .errors import MissingConstants, NlsLabError
from .grid import ComplexField
from .ground_state import SharpConstants

__all__ = [
    "DatumStats",
    "CaseEntry",
    "RegimeReport",
    "datum_stats",
    "radial_symmetry_check",
    "classify_gwp",
    "classify_scattering",
    "classify_blowup",
    "classify_all",
    "sweep",
    "SWEEP_COLUMNS",
]

_EQ_TOL = 1e-12  # relative tolerance for exponent equality tests (gamma = 2 etc.)


def _eq(a: float, b: float) -> bool:
    return abs(a - b) <= _EQ_TOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class DatumStats:
    """Datum statistics consumed by the classifiers.

    ``kinetic`` is ||grad u0||_{L^2}^2 (not halved). ``radial`` is a
    caller-supplied flag: True/False when known, None when unknown.
    """

    mass: float
    energy: float
    kinetic: float
    radial: bool | None = None
    variance: float | None = None
    virial: float | None = None

    def __post_init__(self):
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise NlsLabError(f"datum mass must be positive and finite, got {self.mass}")
        if not (np.isfinite(self.energy) and np.isfinite(self.kinetic)):
            raise NlsLabError("datum energy and kinetic statistics must be finite")


def radial_symmetry_check(u: ComplexField) -> bool:
    """Cheap necessary test for radiality: invariance under axis permutations
    and reflections to 1e-8 of the max. Only ever upgrades unknown to radial."""
    v = u.values
    scale = float(np.abs(v).max())
    if scale == 0.0:
        return True
    for axis in range(u.grid.dim):
        refl = np.roll(np.flip(v, axis=axis), 1, axis=axis)  # reflection about the center
        if float(np.abs(v - refl).max()) > 1e-8 * scale:
            return False
    if u.grid.dim > 1:
        perm = np.transpose(v, axes=list(range(1, u.grid.dim)) + [0])
        if float(np.abs(v - perm).max()) > 1e-8 * scale:
            return False
    return True


def datum_stats(u: ComplexField, params: EquationParams, radial: bool | None = None) -> DatumStats:
    """Evaluate the classifier's datum statistics from a field."""
    obs = _observables(u.values, u.grid, params)
    if radial is None and radial_symmetry_check(u):
        radial = True
    return DatumStats(
        mass=obs["M"],
        energy=obs["E"],
        kinetic=obs["grad_sq"],
        radial=radial,
        variance=obs["f"],
        virial=obs["fprime"],
    )


@dataclass
class CaseEntry:
    case_id: str
    theorem: str  # "gwp" | "scattering" | "blowup"
    status: str  # satisfied | violated | not-applicable | conditional
    thresholds: dict = field(default_factory=dict)
    note: str = ""
    A: float | None = None  # numeric variance-bound constant for blow-up cases

    def as_dict(self) -> dict:
        d = {
            "case": self.case_id,
            "theorem": self.theorem,
            "status": self.status,
            "note": self.note,
        }
        if self.thresholds:
            d["thresholds"] = dict(self.thresholds)
        if self.A is not None:
            d["A"] = self.A
        return d


@dataclass
class RegimeReport:
    params: EquationParams
    stats: DatumStats | None
    gwp: list
    scattering: list
    blowup: list
    A: float | None = None
    theta: ThetaReport | None = None

    def __post_init__(self):
        gwp_ok = [c.case_id for c in self.gwp if c.status == "satisfied"]
        blow_ok = [c.case_id for c in self.blowup if c.status == "satisfied" and c.A is not None]
        if gwp_ok and blow_ok:
            raise NlsLabError(
                f"inconsistent classification: global cases {gwp_ok} and "
                f"blow-up cases {blow_ok} simultaneously satisfied"
            )

    def first_satisfied(self, section: str) -> str | None:
        for c in getattr(self, section):
            if c.status == "satisfied":
                return c.case_id
        return None

    def as_dict(self) -> dict:
        d = {
            "params": {
                "n": self.params.n,
                "p": self.params.p,
                "gamma": self.params.gamma,
                "lam1": self.params.lam1,
                "lam2": self.params.lam2,
            },
            "gwp": [c.as_dict() for c in self.gwp],
            "scattering": [c.as_dict() for c in self.scattering],
            "blowup": [c.as_dict() for c in self.blowup],
        }
        if self.stats is not None:
            d["stats"] = {
                "mass": self.stats.mass,
                "energy": self.stats.energy,
                "kinetic": self.stats.kinetic,
                "radial": self.stats.radial,
            }
        if self.A is not None:
            d["A"] = self.A
        if self.theta is not None:
            d["theta"] = {
                "attains_negative": self.theta.attains_negative,
                "root": self.theta.root,
            }
        return d


def _need_constants(constants: dict | None, key: str, case_id: str) -> SharpConstants:
    if not constants or key not in constants or constants[key] is None:
        raise MissingConstants(
            f"case {case_id} needs ground-state constants for kind {key}; "
            f"compute them first (ground-state solver) and pass them in"
        )
    return constants[key]


def _strict_less(lhs: float, rhs: float, name: str, thresholds: dict) -> bool:
    """Strict datum inequality with a proximity note hook."""
    thresholds[name + "_lhs"] = lhs
    thresholds[name + "_rhs"] = rhs
    return lhs < rhs


# ---------------------------------------------------------------------------
# Global well-posedness cases


def classify_gwp(params: EquationParams, stats: DatumStats | None, constants: dict | None = None) -> list:
    """Evaluate every global-well-posedness case for the given point.

    ``constants`` maps kind ("R" / "W") to SharpConstants at the matching
    exponent; only threshold cases whose parameter ranges apply require them
    (MissingConstants otherwise). ``stats`` may be None for a parameter-plane
    scan, in which case datum-dependent cases report ``datum-dependent``.
    """
    n, p, gamma = params.n, params.p, params.gamma
    l1, l2 = params.lam1, params.lam2
    p_crit = 4.0 / (n - 2) if n >= 3 else math.inf
    at_double_critical = n >= 3 and _eq(p, p_crit) and _eq(gamma, 4.0)
    g_ok = gamma < n  # every theorem case assumes the strict range gamma < n
    entries = []

    def add(case_id, applies, datum=None, note="", thresholds=None):
        """datum: None (no datum condition), True/False, or 'unknown'."""
        if not applies:
            status = "not-applicable"
        elif datum is None:
            status = "satisfied"
        elif datum == "unknown":
            status = "datum-dependent"
        else:
            status = "satisfied" if datum else "violated"
        entries.append(CaseEntry(case_id, "gwp", status, thresholds or {}, note))

    # case 1: both defocusing
    add(
        "1",
        l1 > 0 and l2 > 0 and g_ok and not at_double_critical,
        note="" if not at_double_critical else "excluded point (p, gamma) = (4/(n-2), 4)",
    )

    # case 2: focusing Hartree (lam1 > 0 > lam2)
    sign2 = l1 > 0 and l2 < 0 and g_ok
    add("2.1", sign2 and gamma < min(n, n * p / 2.0))
    add("2.2", sign2 and n * p / 2.0 <= gamma < 2.0)

    applies_23 = sign2 and n * p / 2.0 <= gamma and _eq(gamma, 2.0)
    if applies_23:
        if stats is None:
            add("2.3", True, "unknown", note="mass threshold M < ||W||^2/|lam2|")
        else:
            cw = _need_constants(constants, "W", "2.3")
            th = {}
            ok = _strict_less(stats.mass, cw.l2**2 / abs(l2), "mass", th)
            add("2.3", True, ok, thresholds=th)
    else:
        add("2.3", False)

    applies_24 = (
        sign2 and n * p / 2.0 <= gamma and _eq(gamma, 4.0) and n > 4 and not at_double_critical
    )
    if applies_24:
        if stats is None:
            add("2.4", True, "unknown", note="energy/kinetic thresholds and radial datum")
        else:
            cw = _need_constants(constants, "W", "2.4")
            th = {}
            ok = _strict_less(stats.energy, cw.e_tilde / abs(l2), "energy", th)
            ok &= _strict_less(stats.kinetic, cw.grad_l2**2 / abs(l2), "kinetic", th)
            if ok and stats.radial is None:
                entries.append(CaseEntry("2.4", "gwp", "conditional", th, "thresholds hold; radiality unknown"))
            else:
                add("2.4", True, ok and stats.radial is True, thresholds=th)
    else:
        add("2.4", False)

    applies_25 = sign2 and n * p / 2.0 <= gamma and 2.0 < gamma < min(4.0, float(n))
    if applies_25:
        if stats is None:
            add("2.5", True, "unknown", note="scale-invariant product thresholds")
        else:
            cw = _need_constants(constants, "W", "2.5")
            ex = (4.0 - gamma) / (gamma - 2.0)
            th = {}
            rhs_e = (0.5 - 1.0 / gamma) * (2.0 * gamma * cw.e_tilde / (abs(l2) * (gamma - 2.0))) ** (
                2.0 / (gamma - 2.0)
            )
            rhs_k = (cw.grad_l2**2 / abs(l2)) ** (2.0 / (gamma - 2.0))
            ok = _strict_less(stats.energy * stats.mass**ex, rhs_e, "energy_product", th)
            ok &= _strict_less(stats.kinetic * stats.mass**ex, rhs_k, "kinetic_product", th)
            add("2.5", True, ok, thresholds=th)
    else:
        add("2.5", False)

    # case 3: focusing power (lam1 < 0 < lam2)
    sign3 = l1 < 0 and l2 > 0 and g_ok
    add("3.1", sign3 and p < max(4.0 / n, 4.0 / (2.0 + n - gamma)))

    applies_32 = sign3 and _eq(p, 4.0 / n) and p >= 4.0 / (2.0 + n - gamma)
    if applies_32:
        if stats is None:
            add("3.2", True, "unknown", note="mass threshold ||u0|| < |lam1|^(-n/4) ||R||")
        else:
            cr = _need_constants(constants, "R", "3.2")
            th = {}
            ok = _strict_less(math.sqrt(stats.mass), abs(l1) ** (-n / 4.0) * cr.l2, "l2_norm", th)
            add("3.2", True, ok, thresholds=th)
    else:
        add("3.2", False)

    applies_33 = (
        sign3
        and n >= 3
        and _eq(p, p_crit)
        and 4.0 / (2.0 + n - gamma) <= p
        and not at_double_critical
    )
    if applies_33:
        if n >= 5:
            if stats is None:
                add("3.3", True, "unknown", note="energy/kinetic thresholds")
            else:
                cr = _need_constants(constants, "R", "3.3")
                scale = abs(l1) ** ((2.0 - n) / 2.0)
                th = {}
                ok = _strict_less(stats.energy, scale * cr.e_tilde, "energy", th)
                ok &= _strict_less(stats.kinetic, scale * cr.grad_l2**2, "kinetic", th)
                add("3.3", True, ok, thresholds=th)
        else:  # n = 3, 4: the radial condition carries the case
            if stats is None:
                add("3.3", True, "unknown", note="radial datum required")
            elif stats.radial is None:
                entries.append(CaseEntry("3.3", "gwp", "conditional", {}, "radiality unknown"))
            else:
                add("3.3", True, stats.radial is True, note="radial datum required")
    else:
        add("3.3", False)

    applies_34 = sign3 and 4.0 / n < p < p_crit and 4.0 / (2.0 + n - gamma) <= p
    if applies_34:
        if stats is None:
            add("3.4", True, "unknown", note="scale-invariant product thresholds")
        else:
            cr = _need_constants(constants, "R", "3.4")
            sig = (4.0 - (n - 2) * p) / (n * p - 4.0)
            th = {}
            lam_fac = abs(l1) ** (4.0 / (4.0 - n * p))
            rhs_e = lam_fac * (2.0 * n * p / (n * p - 4.0)) ** sig * cr.e_tilde ** (2.0 * p / (n * p - 4.0))
            rhs_k = lam_fac * cr.grad_l2 ** (4.0 * p / (n * p - 4.0))
            ok = _strict_less(stats.energy * stats.mass**sig, rhs_e, "energy_product", th)
            ok &= _strict_less(stats.kinetic * stats.mass**sig, rhs_k, "kinetic_product", th)
            add("3.4", True, ok, thresholds=th)
    else:
        add("3.4", False)

    # case 4: both focusing, doubly subcritical
    add("4", l1 < 0 and l2 < 0 and g_ok and p < 4.0 / n and gamma < 2.0)
    return entries


# ---------------------------------------------------------------------------
# Scattering cases


def classify_scattering(params: EquationParams, stats: DatumStats | None = None) -> list:
    """Scattering case conditions. Sub-cases resting on unquantified small-mass
    bounds or on the cited conjectural global results are reported
    ``conditional`` with the dependency spelled out, never ``satisfied``."""
    n, p, gamma = params.n, params.p, params.gamma
    l1, l2 = params.lam1, params.lam2
    p_crit = 4.0 / (n - 2) if n >= 3 else math.inf
    at_double_critical = n >= 3 and _eq(p, p_crit) and _eq(gamma, 4.0)
    in_range = 4.0 / n <= p and (n < 3 or p <= p_crit) and 2.0 <= gamma <= 4.0 and gamma < n
    entries = []

    deps = []
    if _eq(p, 4.0 / n):
        deps.append("mass-critical power endpoint: requires the cited global result for the pure power problem")
    if _eq(gamma, 2.0):
        deps.append("mass-critical Hartree endpoint: requires the cited global result for the pure Hartree problem")

    applies_1 = l1 > 0 and l2 > 0 and in_range and not at_double_critical
    if not applies_1:
        entries.append(CaseEntry("1", "scattering", "not-applicable"))
    else:
        notes = list(deps)
        if _eq(p, 4.0 / n) and _eq(gamma, 2.0):
            notes.append("doubly mass-critical point: small mass condition (unquantified)")
        if notes:
            entries.append(CaseEntry("1", "scattering", "conditional", {}, "; ".join(notes)))
        else:
            entries.append(
                CaseEntry("1", "scattering", "satisfied", {}, "assumes the matching global case holds")
            )

    applies_2 = l1 * l2 < 0 and in_range and not at_double_critical
    if not applies_2:
        entries.append(CaseEntry("2", "scattering", "not-applicable"))
    else:
        notes = ["small mass condition (unquantified)"] + deps
        entries.append(CaseEntry("2", "scattering", "conditional", {}, "; ".join(notes)))
    return entries


# ---------------------------------------------------------------------------
# Blow-up cases


def classify_blowup(params: EquationParams, stats: DatumStats | None) -> list:
    """Blow-up case conditions with the variance-bound constant A.

    Numeric A values: 8*gamma*E for the focusing-Hartree quadrant,
    4*n*p*E for the focusing-power quadrant, and the smaller applicable bound
    in the doubly focusing range. The two C(M) sub-cases carry unspecified
    constants and are only ever ``conditional``.
    """
    n, p, gamma = params.n, params.p, params.gamma
    l1, l2 = params.lam1, params.lam2
    p_crit = 4.0 / (n - 2) if n >= 3 else math.inf
    g_ok = gamma < n  # theorem range
    E = stats.energy if stats is not None else None
    entries = []

    def numeric_case(case_id, applies, a_value, note=""):
        if not applies:
            entries.append(CaseEntry(case_id, "blowup", "not-applicable"))
        elif E is None:
            entries.append(CaseEntry(case_id, "blowup", "datum-dependent", {}, "requires E < 0"))
        elif E < 0:
            entries.append(CaseEntry(case_id, "blowup", "satisfied", {"energy": E}, note, A=a_value))
        else:
            entries.append(CaseEntry(case_id, "blowup", "violated", {"energy": E}, "requires E < 0"))

    applies_1 = l1 > 0 and l2 < 0 and g_ok and 2.0 <= gamma <= 4.0 and p <= p_crit and gamma >= n * p / 2.0
    numeric_case("1", applies_1, 8.0 * gamma * E if E is not None else None)

    applies_2 = l1 < 0 and l2 > 0 and g_ok and 4.0 / n <= p <= p_crit and gamma <= n * p / 2.0
    numeric_case("2", applies_2, 4.0 * n * p * E if E is not None else None)

    both = l1 < 0 and l2 < 0 and g_ok
    applies_3a = both and 4.0 / n < p <= p_crit and gamma < 2.0
    if applies_3a:
        entries.append(
            CaseEntry("3a", "blowup", "conditional", {}, "requires 4npE + C(M) < 0 with C(M) unspecified")
        )
    else:
        entries.append(CaseEntry("3a", "blowup", "not-applicable"))

    applies_3b = both and p < 4.0 / n and 2.0 < gamma <= 4.0
    if applies_3b:
        entries.append(
            CaseEntry("3b", "blowup", "conditional", {}, "requires 8*gamma*E + C(M) < 0 with C(M) unspecified")
        )
    else:
        entries.append(CaseEntry("3b", "blowup", "not-applicable"))

    applies_3c = both and 4.0 / n <= p <= p_crit and 2.0 <= gamma <= 4.0
    if applies_3c and E is not None and E < 0:
        a_val = 4.0 * n * p * E if gamma >= n * p / 2.0 else 8.0 * gamma * E
        note = "variance bound 4npE" if gamma >= n * p / 2.0 else "variance bound 8*gamma*E"
        entries.append(CaseEntry("3c", "blowup", "satisfied", {"energy": E}, note, A=a_val))
    else:
        numeric_case("3c", applies_3c, None)
    return entries


def classify_all(
    params: EquationParams,
    stats: DatumStats | None = None,
    constants: dict | None = None,
) -> RegimeReport:
    """Full regime report across all three theorems, with the quadratic
    variance-bound analysis attached when a numeric A and datum moments exist."""
    gwp = classify_gwp(params, stats, constants)
    scat = classify_scattering(params, stats)
    blow = classify_blowup(params, stats)
    a_values = [c.A for c in blow if c.status == "satisfied" and c.A is not None]
    a_num = min(a_values) if a_values else None  # most negative bound is sharpest
    theta = None
    if a_num is not None and stats is not None and stats.variance is not None and stats.virial is not None:
        theta = theta_report(stats.variance, stats.virial, a_num)
    return RegimeReport(params, stats, gwp, scat, blow, a_num, theta)


# ---------------------------------------------------------------------------
# Parameter-plane sweeps

SWEEP_COLUMNS = ("p", "gamma", "gwp_case", "scattering_case", "blowup_case", "A", "regime", "notes")


def _cell_label(entries: list) -> str:
    for c in entries:
        if c.status == "satisfied":
            return c.case_id
    dd = [c.case_id for c in entries if c.status in ("datum-dependent", "conditional")]
    return "?" + ",".join(dd) if dd else "none"


def sweep(
    n: int,
    lam1: float,
    lam2: float,
    p_values,
    gamma_values,
    stats: DatumStats | None = None,
    stats_for=None,
    constants_for=None,
) -> list:
    """Classify every (p, gamma) cell; per-cell failures are captured in the
    notes column and never abort the sweep.

    ``stats_for(params) -> DatumStats`` supplies per-cell datum statistics
    (overrides ``stats``); ``constants_for(params) -> dict`` supplies
    ground-state constants for threshold cases.

    Cell regime: ``gwp`` when an unconditional global case is satisfied,
    ``blowup`` when a blow-up case holds with numeric A, ``threshold`` when
    only conditional / datum-dependent cases apply, else ``indeterminate``.
    """
    rows = []
    for p in p_values:
        for gamma in gamma_values:
            row = {"p": float(p), "gamma": float(gamma), "gwp_case": "none",
                   "scattering_case": "none", "blowup_case": "none", "A": "", "regime": "", "notes": ""}
            try:
                params = EquationParams(n=n, p=float(p), gamma=float(gamma), lam1=lam1, lam2=lam2)
                cell_stats = stats_for(params) if stats_for is not None else stats
                consts = constants_for(params) if constants_for is not None else None
                report = classify_all(params, cell_stats, consts)
                row["gwp_case"] = _cell_label(report.gwp)
                row["scattering_case"] = _cell_label(report.scattering)
                row["blowup_case"] = _cell_label(report.blowup)
                if report.A is not None:
                    row["A"] = report.A
                if report.first_satisfied("gwp"):
                    row["regime"] = "gwp"
                elif report.A is not None:
                    row["regime"] = "blowup"
                elif any(c.status in ("conditional", "datum-dependent") for c in report.gwp + report.blowup):
                    row["regime"] = "threshold"
                else:
                    row["regime"] = "indeterminate"
            except Exception as exc:  # per-cell capture
                row["regime"] = "error"
                row["notes"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows
