"""Numerical integration of the derived systems and residual evaluation.

Solvers are deliberately plain: characteristics with Newton root-finding
for the scalar flow, first-order upwind with three-stage strong-stability
time stepping for diagonal systems (so the maximum principle is exact up
to roundoff), and centered method-of-lines for the coupled systems as a
cross-check scheme.  Gradient blow-up is detected from the growth of the
max spatial derivative and the breaking time estimated from the linear
decay of its reciprocal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flows import DiagonalSystem, HydroSystem, deriv_symbol
from .geometry import CurveCoeffs, moduli_and_discriminant


class CFLViolationError(ValueError):
    pass


class PastCatastropheError(ValueError):
    def __init__(self, t_c: float):
        super().__init__(f"requested time is at or beyond the breaking time {t_c}")
        self.t_c = t_c


class RootFindDivergedError(RuntimeError):
    pass


class VacuumStateError(RuntimeError):
    pass


class NoBlowupDetectedError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


class CatastropheSignal(RuntimeError):
    """Raised when the max gradient exceeds the reporting threshold.

    Carries whatever was computed up to the signal; values before the
    threshold are unaffected by the detection.
    """

    def __init__(self, report: "CatastropheReport", state=None, t: float | None = None):
        super().__init__("gradient grew past the catastrophe threshold")
        self.report = report
        self.state = state
        self.t = t


@dataclass(frozen=True)
class Grid1D:
    x0: float
    dx: float
    n: int
    boundary: str = "periodic"

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("need at least 8 grid points")
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        if self.boundary not in ("periodic", "extrapolate"):
            raise ValueError("boundary must be 'periodic' or 'extrapolate'")

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.dx * self.n


@dataclass
class Field1D:
    grid: Grid1D
    values: np.ndarray
    label: str = ""
    gradient: np.ndarray | None = None  # exact pointwise d/dx when the solver knows it

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ShapeMismatchError(
                f"field has shape {self.values.shape}, grid has {self.grid.n} points")
        if not np.all(np.isfinite(self.values)):
            raise CatastropheSignal(
                CatastropheReport(t_estimate=math.nan, max_gradient_trace=np.zeros((0, 2)),
                                  method="extrapolated"))


@dataclass
class CatastropheReport:
    t_estimate: float
    max_gradient_trace: np.ndarray  # rows (t, max |d/dx|)
    method: str  # "characteristic-exact" or "extrapolated"
    fit: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# finite differences


def derivative(values: np.ndarray, dx: float, boundary: str = "periodic") -> np.ndarray:
    """Fourth-order centered first derivative."""
    v = np.asarray(values, dtype=float)
    if boundary == "periodic":
        return (-np.roll(v, -2) + 8 * np.roll(v, -1) - 8 * np.roll(v, 1) + np.roll(v, 2)) / (12 * dx)
    out = np.gradient(v, dx, edge_order=2)
    interior = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * dx)
    out[2:-2] = interior
    return out


def second_derivative(values: np.ndarray, dx: float, boundary: str = "periodic") -> np.ndarray:
    """Fourth-order centered second derivative."""
    v = np.asarray(values, dtype=float)
    if boundary == "periodic":
        return (-np.roll(v, -2) + 16 * np.roll(v, -1) - 30 * v
                + 16 * np.roll(v, 1) - np.roll(v, 2)) / (12 * dx * dx)
    out = np.empty_like(v)
    out[2:-2] = (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12 * dx * dx)
    # one-sided second-order fallback near the edges
    out[:2] = (v[:2] - 2 * v[1:3] + v[2:4]) / (dx * dx)
    out[-2:] = (v[-4:-2] - 2 * v[-3:-1] + v[-2:]) / (dx * dx)
    return out


def max_gradient(f: Field1D) -> float:
    return float(np.max(np.abs(derivative(f.values, f.grid.dx, f.grid.boundary))))


# ---------------------------------------------------------------------------
# scalar flow by characteristics


def _interp(grid: Grid1D, values: np.ndarray, xq: np.ndarray):
    """Piecewise-linear sample values and slopes at query points."""
    if grid.boundary == "periodic":
        rel = (xq - grid.x0) / grid.dx
        idx = np.floor(rel).astype(int)
        frac = rel - idx
        i0 = np.mod(idx, grid.n)
        i1 = np.mod(idx + 1, grid.n)
        slope = (values[i1] - values[i0]) / grid.dx
        return values[i0] + frac * grid.dx * slope, slope
    rel = (xq - grid.x0) / grid.dx
    idx = np.clip(np.floor(rel).astype(int), 0, grid.n - 2)
    frac = rel - idx
    slope = (values[idx + 1] - values[idx]) / grid.dx
    return values[idx] + frac * grid.dx * slope, slope


def scalar_breaking_time(f0: Field1D, speed: float = 3.0) -> float:
    """Exact breaking time of du/dt + speed * u du/dx = 0: 1/max(-speed f0')."""
    slopes = derivative(f0.values, f0.grid.dx, f0.grid.boundary)
    worst = float(np.max(-speed * slopes))
    return math.inf if worst <= 0 else 1.0 / worst


def solve_scalar_characteristics(f0: Field1D, t: float, speed: float = 3.0,
                                 tol: float = 1e-13, max_iter: int = 60):
    """Solve du/dt + speed * u du/dx = 0 by per-point characteristic inversion.

    u(x, t) = f0(xi) with x = xi + speed * f0(xi) * t, solved by Newton with
    a bisection fallback per grid node.  Fails fast past the breaking time.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    t_c = scalar_breaking_time(f0, speed)
    if t >= t_c:
        raise PastCatastropheError(t_c)
    grid = f0.grid
    x = grid.x
    xi = x.copy()
    # the departure point lies within the maximal characteristic excursion
    span = abs(speed) * t * float(np.max(np.abs(f0.values))) + grid.dx
    converged = np.zeros(grid.n, dtype=bool)
    for _ in range(max_iter):
        val, slope = _interp(grid, f0.values, xi)
        gval = xi + speed * val * t - x
        converged = np.abs(gval) <= tol * (1.0 + np.abs(x))
        if np.all(converged):
            break
        jac = 1.0 + speed * slope * t
        bad = np.abs(jac) <= 1e-12
        step = np.where(converged | bad, 0.0, gval / np.where(bad, 1.0, jac))
        xi = np.clip(xi - step, x - span, x + span)
    else:
        # Newton stalled somewhere; bisect those nodes on a bracketing interval
        xi = _bisect_characteristics(f0, x, t, speed, xi, converged, tol)
    val, slope = _interp(grid, f0.values, xi)
    ux = slope / (1.0 + speed * slope * t)
    u = Field1D(grid, val, label=f"u@t={t}", gradient=ux)
    report = CatastropheReport(
        t_estimate=t_c,
        max_gradient_trace=np.array([[t, float(np.max(np.abs(ux)))]]),
        method="characteristic-exact",
    )
    return u, report


def _bisect_characteristics(f0, x, t, speed, xi, converged, tol):
    grid = f0.grid
    span = max(speed * t * float(np.max(np.abs(f0.values))), grid.dx) + grid.dx
    lo = x - span
    hi = x + span

    def g(q):
        val, _ = _interp(grid, f0.values, q)
        return q + speed * val * t - x

    glo, ghi = g(lo), g(hi)
    if np.any((glo > 0) | (ghi < 0)):
        raise RootFindDivergedError("characteristic root not bracketed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        take_lo = gm > 0
        hi = np.where(take_lo, mid, hi)
        lo = np.where(take_lo, lo, mid)
        if float(np.max(hi - lo)) < tol:
            break
    return np.where(converged, xi, 0.5 * (lo + hi))


def characteristic_state(f0: Field1D, t: float, speed: float = 3.0):
    """Solution and its exact gradient, parametrized by the departure points.

    Along each characteristic u keeps its initial value while the gradient
    contracts by the Jacobian of the characteristic map, so (u, u_x) =
    (f0(xi), f0'(xi) / (1 + speed f0'(xi) t)) sampled over the whole grid
    of departure points covers the solution without inverting the map.
    This is what the blow-up traces use: the sup over the domain is
    parametrization-independent and never undersamples the focusing region.
    """
    t_c = scalar_breaking_time(f0, speed)
    if t >= t_c:
        raise PastCatastropheError(t_c)
    slope = derivative(f0.values, f0.grid.dx, f0.grid.boundary)
    return f0.values.copy(), slope / (1.0 + speed * slope * t)


def scalar_gradient_trace(f0: Field1D, times, speed: float = 3.0) -> np.ndarray:
    """(t, max |u_x|) rows along a characteristic run at the given times."""
    rows = []
    for t in times:
        _, ux = characteristic_state(f0, float(t), speed)
        rows.append((float(t), float(np.max(np.abs(ux)))))
    return np.array(rows)


# ---------------------------------------------------------------------------
# diagonal systems: first-order upwind + SSP 3-stage time stepping


GRADIENT_THRESHOLD_FACTOR = 1e3


@dataclass
class DiagonalRunResult:
    fields: list
    trace: np.ndarray
    report: CatastropheReport
    times: np.ndarray
    snapshots: dict


def _upwind_rhs(values: list, speeds: list, dx: float) -> list:
    out = []
    for v, s in zip(values, speeds):
        # advection form v_t + a v_x = 0 with a = -speed
        a = -s
        dminus = (v - np.roll(v, 1)) / dx
        dplus = (np.roll(v, -1) - v) / dx
        out.append(-a * np.where(a > 0, dminus, dplus))
    return out


def solve_diagonal(sys: DiagonalSystem, init: list, t_end: float, cfl: float,
                   record_times=None) -> DiagonalRunResult:
    """Advance a strictly diagonal system with monotone upwinding.

    The convention matches the derived flows: d(gamma)/dt = speed *
    d(gamma)/dx, i.e. advection velocity -speed.  Stops with
    :class:`CatastropheSignal` when the max gradient passes the reporting
    threshold (values computed before the signal are unaffected).
    """
    if not (0 < cfl <= 1):
        raise CFLViolationError("cfl must lie in (0, 1]")
    grid = init[0].grid
    if grid.boundary != "periodic":
        raise ValueError("the diagonal solver is periodic-domain only")
    values = [f.values.copy() for f in init]
    t = 0.0
    initial_grad = max(max(max_gradient(f) for f in init), 1e-12)
    threshold = GRADIENT_THRESHOLD_FACTOR * initial_grad
    trace_rows = [(0.0, max(max_gradient(f) for f in init))]
    want = sorted(float(s) for s in (record_times or []))
    snapshots: dict[float, list] = {}

    def grad_now(vals) -> float:
        return max(float(np.max(np.abs(derivative(v, grid.dx)))) for v in vals)

    while t < t_end - 1e-15:
        speeds = sys.speed_values(values)
        smax = max(float(np.max(np.abs(s))) for s in speeds)
        dt = t_end - t if smax == 0 else min(cfl * grid.dx / smax, t_end - t)

        def L(vals):
            return _upwind_rhs(vals, sys.speed_values(vals), grid.dx)

        k1 = L(values)
        s1 = [v + dt * r for v, r in zip(values, k1)]
        k2 = L(s1)
        s2 = [0.75 * v + 0.25 * (w + dt * r) for v, w, r in zip(values, s1, k2)]
        k3 = L(s2)
        values = [v / 3.0 + 2.0 / 3.0 * (w + dt * r) for v, w, r in zip(values, s2, k3)]
        t += dt
        gnow = grad_now(values)
        trace_rows.append((t, gnow))
        while want and t >= want[0] - 1e-12:
            snapshots[want.pop(0)] = [v.copy() for v in values]
        if gnow > threshold:
            trace = np.array(trace_rows)
            report = CatastropheReport(t_estimate=math.nan, max_gradient_trace=trace,
                                       method="extrapolated")
            try:
                report.t_estimate, report.fit = catastrophe_estimate(trace)
            except NoBlowupDetectedError:
                pass
            raise CatastropheSignal(report, state=values, t=t)
    trace = np.array(trace_rows)
    report = CatastropheReport(t_estimate=math.nan, max_gradient_trace=trace,
                               method="extrapolated")
    fields = [Field1D(grid, v, label=name) for v, name in zip(values, sys.invariants)]
    return DiagonalRunResult(fields=fields, trace=trace, report=report,
                             times=np.array([t]), snapshots=snapshots)


# ---------------------------------------------------------------------------
# generic method-of-lines solver for the coupled systems (cross-check scheme)


def _compile_rhs(sys: HydroSystem):
    dsyms = sys.deriv_symbols()

    def rhs(values: list, dx: float) -> list:
        env = {name: v for name, v in zip(sys.fields, values)}
        for fname, dname in zip(sys.fields, dsyms):
            env[dname] = derivative(env[fname], dx)
        return [poly.eval_num(env) for poly in sys.rhs]

    return rhs


def solve_hydro_mol(sys: HydroSystem, init: list, t_end: float, cfl: float = 0.4,
                    speed_scale: float | None = None) -> list:
    """Method of lines: 4th-order centered space, classical RK4 in time.

    Suitable for smooth solutions before breaking; used as the independent
    scheme against the diagonal solver.
    """
    grid = init[0].grid
    if grid.boundary != "periodic":
        raise ValueError("the MOL solver is periodic-domain only")
    values = [f.values.copy() for f in init]
    rhs = _compile_rhs(sys)
    if speed_scale is None:
        env = {name: f.values for name, f in zip(sys.fields, init)}
        speed_scale = max(
            (float(np.max(np.abs(np.asarray(entry.eval_num(env)))))
             for row in sys.velocity_matrix() for entry in row if not entry.is_zero),
            default=1.0)
        speed_scale = max(speed_scale, 1e-8)
    dt = cfl * grid.dx / speed_scale
    t = 0.0
    while t < t_end - 1e-15:
        step = min(dt, t_end - t)
        k1 = rhs(values, grid.dx)
        k2 = rhs([v + 0.5 * step * k for v, k in zip(values, k1)], grid.dx)
        k3 = rhs([v + 0.5 * step * k for v, k in zip(values, k2)], grid.dx)
        k4 = rhs([v + step * k for v, k in zip(values, k3)], grid.dx)
        values = [v + step / 6.0 * (a + 2 * b + 2 * c + d)
                  for v, a, b, c, d in zip(values, k1, k2, k3, k4)]
        t += step
        for v in values:
            if not np.all(np.isfinite(v)):
                raise CatastropheSignal(CatastropheReport(math.nan, np.zeros((0, 2)),
                                                          "extrapolated"), state=values, t=t)
    return [Field1D(grid, v, label=name) for v, name in zip(values, sys.fields)]


# ---------------------------------------------------------------------------
# shallow-water runs with curve-moduli tracing


@dataclass
class BenneyRunResult:
    u: Field1D
    v: Field1D
    trace: np.ndarray        # rows (t, max_grad, delta, g2, g3)
    report: CatastropheReport
    snapshots: dict


def _benney_moduli_row(u: np.ndarray, v: np.ndarray):
    """Discriminant and moduli at the point of closest curve degeneration."""
    u2 = -u
    u1 = 0.25 * u2 ** 2 - v
    third = 1.0 / 3.0
    g2 = u1 - u2 ** 2 * third
    g3 = u2 ** 3 * (2.0 / 27.0) - u1 * u2 * third
    delta = 16.0 * u1 ** 2 * (u2 ** 2 - 4.0 * u1)
    i = int(np.argmin(np.abs(delta)))
    return float(delta[i]), float(g2[i]), float(g3[i])


def solve_benney(u0: Field1D, v0: Field1D, t_end: float, cfl: float,
                 record_times=None, trace_stride: int = 1) -> BenneyRunResult:
    """Evolve the two-field shallow-water system via its Riemann invariants.

    Hyperbolicity demands v > 0 pointwise; the run traces the gradient and
    the genus-one curve data (discriminant closest to degeneration).
    """
    from .flows import benney_reduction

    if np.any(v0.values <= 0):
        raise VacuumStateError("v must stay positive for hyperbolicity")
    grid = u0.grid
    sysd = benney_reduction().riemann
    rp = Field1D(grid, u0.values + 2.0 * np.sqrt(v0.values), "r[+]")
    rm = Field1D(grid, u0.values - 2.0 * np.sqrt(v0.values), "r[-]")

    # re-run the diagonal stepper but harvest the moduli at each record
    if not (0 < cfl <= 1):
        raise CFLViolationError("cfl must lie in (0, 1]")
    values = [rp.values.copy(), rm.values.copy()]
    t = 0.0
    initial_grad = max(max_gradient(rp), max_gradient(rm), 1e-12)
    threshold = GRADIENT_THRESHOLD_FACTOR * initial_grad
    rows = []
    want = sorted(float(s) for s in (record_times or []))
    snapshots: dict[float, tuple] = {}

    def harvest(tnow, vals):
        u = 0.5 * (vals[0] + vals[1])
        root_v = (vals[0] - vals[1]) / 4.0
        v = root_v ** 2
        if np.any(vals[0] - vals[1] <= 0):
            raise VacuumStateError("invariants crossed: vacuum reached")
        gmax = max(float(np.max(np.abs(derivative(w, grid.dx)))) for w in vals)
        delta, g2v, g3v = _benney_moduli_row(u, v)
        rows.append((tnow, gmax, delta, g2v, g3v))
        return gmax

    harvest(0.0, values)
    step_count = 0
    while t < t_end - 1e-15:
        speeds = sysd.speed_values(values)
        smax = max(float(np.max(np.abs(s))) for s in speeds)
        dt = t_end - t if smax == 0 else min(cfl * grid.dx / smax, t_end - t)

        def L(vals):
            return _upwind_rhs(vals, sysd.speed_values(vals), grid.dx)

        k1 = L(values)
        s1 = [v + dt * r for v, r in zip(values, k1)]
        k2 = L(s1)
        s2 = [0.75 * v + 0.25 * (w + dt * r) for v, w, r in zip(values, s1, k2)]
        k3 = L(s2)
        values = [v / 3.0 + 2.0 / 3.0 * (w + dt * r) for v, w, r in zip(values, s2, k3)]
        t += dt
        step_count += 1
        gnow = harvest(t, values) if step_count % trace_stride == 0 else None
        while want and t >= want[0] - 1e-12:
            u = 0.5 * (values[0] + values[1])
            v = ((values[0] - values[1]) / 4.0) ** 2
            snapshots[want.pop(0)] = (u.copy(), v.copy())
        if gnow is not None and gnow > threshold:
            trace = np.array(rows)
            report = CatastropheReport(math.nan, trace[:, :2], "extrapolated")
            try:
                report.t_estimate, report.fit = catastrophe_estimate(trace[:, :2])
            except NoBlowupDetectedError:
                pass
            raise CatastropheSignal(report, state=values, t=t)
    trace = np.array(rows)
    u = 0.5 * (values[0] + values[1])
    v = ((values[0] - values[1]) / 4.0) ** 2
    report = CatastropheReport(math.nan, trace[:, :2], "extrapolated")
    return BenneyRunResult(
        u=Field1D(grid, u, "u"), v=Field1D(grid, v, "v"),
        trace=trace, report=report, snapshots=snapshots)


# ---------------------------------------------------------------------------
# bilinear residuals


def hirota_residual(phi: np.ndarray, dx3: float, dx5: float,
                    mode: str = "dnls") -> np.ndarray:
    """Pointwise residual of the bilinear equation on the valid interior.

    mode "dnls":  phi_33 phi_55 - phi_35^2 + phi_33^3
    mode "bh13":  F_13 - 3/2 F_11^2   (axes: x1 first, x3 second)
    mode "bh15":  F_15 + 5/2 F_11^3   (axes: x1 first, x5 second)
    Stencils are 4th-order centered; the array must be at least 5x5.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[0] < 5 or phi.shape[1] < 5:
        raise ShapeMismatchError("need a 2-D sample array of at least 5x5")

    def d1(a, dx, axis):
        return (-np.roll(a, -2, axis) + 8 * np.roll(a, -1, axis)
                - 8 * np.roll(a, 1, axis) + np.roll(a, 2, axis)) / (12 * dx)

    def d2(a, dx, axis):
        return (-np.roll(a, -2, axis) + 16 * np.roll(a, -1, axis) - 30 * a
                + 16 * np.roll(a, 1, axis) - np.roll(a, 2, axis)) / (12 * dx * dx)

    if mode == "dnls":
        p33 = d2(phi, dx3, 0)
        p55 = d2(phi, dx5, 1)
        p35 = d1(d1(phi, dx3, 0), dx5, 1)
        res = p33 * p55 - p35 ** 2 + p33 ** 3
    elif mode in ("bh13", "bh15"):
        f11 = d2(phi, dx3, 0)
        f1t = d1(d1(phi, dx3, 0), dx5, 1)
        res = f1t - 1.5 * f11 ** 2 if mode == "bh13" else f1t + 2.5 * f11 ** 3
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return res[2:-2, 2:-2]


def selfsimilar_phi(x3, x5):
    """The monomial self-similar solution of the bilinear equation."""
    return -(x3 ** 4) / (216.0 * x5 ** 2)


def selfsimilar_ode_check(varphi, ygrid):
    """Residual of y^2 f f' + 4 (f + 2 y f')^3 on the given grid.

    Works elementwise on floats or exact scalars; the derivative is the
    4th-order centered stencil on the (uniform) grid, second-order one-sided
    at the edges.
    """
    f = list(varphi)
    y = list(ygrid)
    n = len(f)
    if n < 5:
        raise ShapeMismatchError("need at least 5 samples")
    h = y[1] - y[0]
    df = [None] * n
    for i in range(2, n - 2):
        df[i] = (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) / (12 * h)
    df[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    df[1] = (f[2] - f[0]) / (2 * h)
    df[n - 2] = (f[n - 1] - f[n - 3]) / (2 * h)
    df[n - 1] = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h)
    out = []
    for yi, fi, dfi in zip(y, f, df):
        out.append(yi * yi * fi * dfi + 4 * (fi + 2 * yi * dfi) ** 3)
    return out


def degenerate_curve_from_monomial(x3: float, x5: float) -> CurveCoeffs:
    """Curve coefficients along the monomial self-similar solution.

    The quadratic coefficient is 2*x3/(3*x5) and the lower two vanish,
    which is the degenerate-curve family the solution traces out.
    """
    h3m1 = x3 / (3.0 * x5)
    h31 = -(x3 ** 2) / (18.0 * x5 ** 2)
    u2 = 2.0 * h3m1
    u1 = 2.0 * h31 + h3m1 ** 2
    u0 = 0.0
    return CurveCoeffs(1, [u0, u1, u2])


# ---------------------------------------------------------------------------
# breaking-time estimation


def catastrophe_estimate(trace: np.ndarray):
    """Breaking time from the final third of a (t, max-gradient) trace.

    1/max-gradient decays linearly toward zero for genuinely breaking data;
    the zero crossing of a least-squares line through the last third is the
    estimate.  Raises :class:`NoBlowupDetectedError` when the gradient is
    not growing or the fitted slope is non-negative.
    """
    trace = np.asarray(trace, dtype=float)
    if trace.ndim != 2 or trace.shape[0] < 5:
        raise NoBlowupDetectedError("need at least 5 trace samples")
    t = trace[:, 0]
    grad = trace[:, 1]
    if grad[-1] <= 1.05 * grad[0] or grad[-1] <= 0:
        raise NoBlowupDetectedError("max gradient is not growing")
    k = max(trace.shape[0] // 3, 3)
    tt = t[-k:]
    yy = 1.0 / grad[-k:]
    slope, intercept = np.polyfit(tt, yy, 1)
    if slope >= 0:
        raise NoBlowupDetectedError("reciprocal gradient is not decaying")
    t_c = -intercept / slope
    resid = yy - (slope * tt + intercept)
    ss_tot = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(t_c), {"slope": float(slope), "intercept": float(intercept),
                        "r_squared": r2, "points": int(k)}
