"""Sampling-pattern matrix elements in the photon-number basis.

Each element f_nm(x) pairs the regular (normalizable) oscillator solution of
the lower order with the irregular (unnormalizable) second solution of the
higher order: f_nm = d/dx [psi_n(x) chi_m(x)], m >= n.  Three routes are
provided:

* ``pattern_integral`` -- adaptive quadrature of the operator-kernel matrix
  element in closed form (Gaussian times generalized Laguerre).  No free
  normalization; it is the oracle the fast route is calibrated against.
* ``pattern_product`` -- the product-derivative formula.  The irregular
  solutions are generated per order by outward Numerov integration in x (the
  growth direction, which is the stable one) with the Wronskian fixed to
  2/pi; a single calibration factor against the oracle at n = m = 0 absorbs
  any residual normalization freedom.
* ``pattern_wkb`` -- the semiclassical approximation for large orders inside
  the classically allowed region.

Numerical caution: generating the irregular solutions by an upward recurrence
in the order is catastrophically unstable once |x| exceeds the turning point
(regular-solution contamination is amplified by ~e^{x^2}); the outward-in-x
scheme used here is stable everywhere on the table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special

from ._util import atomic_write_bytes, cache_dir, canonical_json, checksum_of, ordered_map
from .errors import (
    NumericalInstability,
    OutsideAllowedRegion,
    QuadratureNotConverged,
    TableMismatch,
    UnsupportedS,
)
from .fock import QuadratureGrid, wavefunction_table

TABLE_FORMAT_VERSION = 1
WRONSKIAN_TARGET = 2.0 / math.pi
WRONSKIAN_TOLERANCE = 1e-6
NUMEROV_STEP = 5e-4
ORACLE_ABS_TOL = 1e-9
MAX_TABLE_HALF_WIDTH = 36.0  # e^{x^2/2} must stay representable in float64
DEFAULT_GRID_STEP = 0.011


# ---------------------------------------------------------------------------
# oracle route


def pattern_integral(n: int, m: int, x: float, s: float = 0.0) -> float:
    """Pattern element by adaptive quadrature of the kernel matrix element.

    Only perfect detection is meaningful here: s < 0 makes the integrand
    diverge and s > 0 is not a physical detection parameter.
    """
    if s != 0.0:
        raise UnsupportedS(f"only s = 0 kernels are supported, got s = {s}")
    if n < 0 or m < 0:
        raise ValueError("orders must be non-negative")
    if m > n:
        n, m = m, n
    d = n - m
    x = float(x)
    prefactor = math.exp(0.5 * (special.gammaln(m + 1) - special.gammaln(n + 1))) * 2.0 ** (-d / 2.0)
    sign = (-1.0) ** (d // 2)
    trig = np.cos if d % 2 == 0 else np.sin

    def integrand(y):
        return y ** (d + 1) * np.exp(-0.25 * y * y) * special.eval_genlaguerre(m, d, 0.5 * y * y) * trig(y * x)

    y_cut = math.sqrt(4.0 * (n + m + 1.0)) + 20.0
    val, err = integrate.quad(integrand, 0.0, y_cut, limit=4000, epsabs=1e-12, epsrel=1e-12)
    # the self-reported estimate is cancellation-dominated and grows with the
    # oscillation count, so the gate scales mildly with the order
    tol = ORACLE_ABS_TOL * max(1.0, float(n + m))
    if err > tol:
        raise QuadratureNotConverged(
            f"pattern_integral(n={n}, m={m}, x={x}): estimated error {err:.2e} > {tol:.2e}"
        )
    return prefactor * sign * val / math.pi


# ---------------------------------------------------------------------------
# wavefunction pair tables (regular + irregular solutions and derivatives)


def _parity_start(n: int) -> tuple[float, float]:
    """Value and slope of the irregular solution at x = 0 (opposite parity to psi_n, Wronskian 2/pi)."""
    if n % 2 == 0:
        k = n // 2
        ln = 0.5 * special.gammaln(n + 1) - 0.5 * n * math.log(2.0) - special.gammaln(k + 1)
        psi0 = np.pi ** -0.25 * (-1.0) ** k * math.exp(ln)
        return 0.0, WRONSKIAN_TARGET / psi0
    k = (n - 1) // 2
    ln = 0.5 * special.gammaln(n) - 0.5 * (n - 1) * math.log(2.0) - special.gammaln(k + 1)
    dpsi0 = math.sqrt(2.0 * n) * np.pi ** -0.25 * (-1.0) ** k * math.exp(ln)
    return -WRONSKIAN_TARGET / dpsi0, 0.0


def _series_eval(n: int, u0: float, du0: float, x: float) -> float:
    """Power-series solution of u'' = (x^2 - 2n - 1) u near the origin."""
    terms = 40
    a = np.zeros(terms + 3)
    a[0], a[1] = u0, du0
    for k in range(terms):
        am2 = a[k - 2] if k >= 2 else 0.0
        a[k + 2] = (-(2 * n + 1) * a[k] + am2) / ((k + 1) * (k + 2))
    val = 0.0
    for k in range(terms + 2, -1, -1):
        val = val * x + a[k]
    return val


def _irregular_table(n_max: int, xg: np.ndarray, step: float) -> np.ndarray:
    """Irregular solutions on a symmetric uniform grid by outward Numerov integration."""
    nx = xg.size
    mid = nx // 2
    h_grid = xg[1] - xg[0]
    substep = max(1, int(math.ceil(h_grid / step)))
    h = h_grid / substep
    ns = np.arange(n_max + 1)
    out = np.zeros((n_max + 1, nx))

    u0 = np.zeros(n_max + 1)
    u1 = np.zeros(n_max + 1)
    for n in ns:
        v0, dv0 = _parity_start(n)
        u0[n] = v0
        u1[n] = _series_eval(n, v0, dv0, h)
    out[:, mid] = u0

    def fac(xx):
        return 1.0 - (h * h / 12.0) * (xx * xx - (2.0 * ns + 1.0))

    um, uc = u0.copy(), u1
    fm, fc = fac(0.0), fac(h)
    xc = h
    step_idx = 1
    for j in range(1, nx - mid):
        target = j * substep
        while step_idx < target:
            xn = xc + h
            fn = fac(xn)
            un = ((12.0 - 10.0 * fc) * uc - fm * um) / fn
            um, uc = uc, un
            fm, fc = fc, fn
            xc = xn
            step_idx += 1
        out[:, mid + j] = uc
    parity = (-1.0) ** (ns + 1)
    out[:, :mid] = parity[:, None] * out[:, mid + 1 :][:, ::-1]
    return out


@dataclass(frozen=True)
class WavefunctionTables:
    """Regular/irregular solutions and their derivatives on a uniform symmetric grid."""

    x: np.ndarray
    psi: np.ndarray
    chi: np.ndarray
    dpsi: np.ndarray
    dchi: np.ndarray

    def __post_init__(self):
        for name in ("x", "psi", "chi", "dpsi", "dchi"):
            a = getattr(self, name)
            a.setflags(write=False)

    @property
    def n_max(self) -> int:
        return self.psi.shape[0] - 1

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    def curvature_factor(self) -> np.ndarray:
        """g(n, x) = x^2 - (2n + 1); second derivative of either solution is g * u."""
        n = np.arange(self.n_max + 1)
        return (self.x**2)[None, :] - (2 * n + 1)[:, None]

    def interpolate(self, targets: np.ndarray) -> "WavefunctionTables":
        """Cubic Hermite evaluation of all four tables at arbitrary points.

        Node derivatives are exact (ladder relations and the defining equation),
        so the interpolation error scales like (local wavenumber * spacing)^4.
        """
        t = np.asarray(targets, dtype=float)
        if t.size and (t.min() < self.x[0] or t.max() > self.x[-1]):
            raise TableMismatch(
                f"points [{t.min():.3f}, {t.max():.3f}] outside table range "
                f"[{self.x[0]:.3f}, {self.x[-1]:.3f}]"
            )
        h = self.spacing
        i0 = np.clip(np.searchsorted(self.x, t) - 1, 0, self.x.size - 2)
        u = (t - self.x[i0]) / h
        h00 = (1.0 + 2.0 * u) * (1.0 - u) ** 2
        h10 = u * (1.0 - u) ** 2
        h01 = u * u * (3.0 - 2.0 * u)
        h11 = u * u * (u - 1.0)

        def hermite(values, derivs):
            return (
                h00 * values[:, i0]
                + h01 * values[:, i0 + 1]
                + h * (h10 * derivs[:, i0] + h11 * derivs[:, i0 + 1])
            )

        g = self.curvature_factor()
        return WavefunctionTables(
            x=t,
            psi=hermite(self.psi, self.dpsi),
            chi=hermite(self.chi, self.dchi),
            dpsi=hermite(self.dpsi, g * self.psi),
            dchi=hermite(self.dchi, g * self.chi),
        )

    def band(self, d: int) -> np.ndarray:
        """f_{n, n+d}(x) for all n, as an array of shape (n_max + 1 - d, len(x))."""
        nn = np.arange(0, self.n_max + 1 - d)
        return self.dpsi[nn] * self.chi[nn + d] + self.psi[nn] * self.dchi[nn + d]

    def element(self, n: int, m: int) -> np.ndarray:
        n, m = (n, m) if n <= m else (m, n)
        if m > self.n_max:
            raise TableMismatch(f"order {m} beyond table n_max {self.n_max}")
        return self.dpsi[n] * self.chi[m] + self.psi[n] * self.dchi[m]


def build_wavefunction_tables(
    n_max: int, x: np.ndarray, step: float = NUMEROV_STEP, calibration: float | None = None
) -> WavefunctionTables:
    """Build all solution tables on a symmetric uniform grid and validate the Wronskian."""
    xg = np.asarray(x, dtype=float)
    if xg.ndim != 1 or xg.size < 3 or xg.size % 2 == 0:
        raise ValueError("grid must be 1-D with an odd number of points")
    if abs(xg[0] + xg[-1]) > 1e-12 * max(1.0, abs(xg[-1])):
        raise ValueError("grid must be symmetric about 0")
    if xg[-1] > MAX_TABLE_HALF_WIDTH:
        raise NumericalInstability(
            f"half-width {xg[-1]:.1f} would overflow the irregular solutions"
        )
    psi = wavefunction_table(n_max, xg)
    chi = _irregular_table(n_max, xg, step)
    if calibration is None:
        calibration = _calibration_factor()
    chi = chi * calibration

    dpsi = np.empty_like(psi)
    dchi = np.empty_like(chi)
    dpsi[0] = -xg * psi[0]
    dawson = special.dawsn(xg)
    dchi[0] = calibration * (2.0 / math.sqrt(math.pi)) * np.pi ** -0.25 * np.exp(0.5 * xg * xg) * (
        1.0 - xg * dawson
    )
    for k in range(1, n_max + 1):
        dpsi[k] = math.sqrt(2.0 * k) * psi[k - 1] - xg * psi[k]
        dchi[k] = math.sqrt(2.0 * k) * chi[k - 1] - xg * chi[k]

    tables = WavefunctionTables(x=xg, psi=psi, chi=chi, dpsi=dpsi, dchi=dchi)
    _check_wronskian(tables)
    return tables


def _check_wronskian(tables: WavefunctionTables) -> None:
    # spot-check the largest order; drift grows with order and x, so this bounds the rest
    n = tables.n_max
    w = tables.psi[n] * tables.dchi[n] - tables.dpsi[n] * tables.chi[n]
    drift = float(np.max(np.abs(w / WRONSKIAN_TARGET - 1.0)))
    if drift > WRONSKIAN_TOLERANCE:
        raise NumericalInstability(f"Wronskian drift {drift:.2e} exceeds {WRONSKIAN_TOLERANCE:.0e}")


_CALIBRATION: float | None = None


def _calibration_factor() -> float:
    """Scale fixing the irregular-solution normalization against the oracle at n = m = 0, x = 0.

    The Wronskian-2/pi construction already matches the oracle analytically;
    the measured factor (one ulp-level away from 1) is retained so that the
    fast route inherits the oracle normalization by construction.
    """
    global _CALIBRATION
    if _CALIBRATION is None:
        oracle = pattern_integral(0, 0, 0.0)
        # raw product value at x = 0 with Wronskian 2/pi equals d/dx[psi_0 chi_0](0) = 2/pi
        raw = WRONSKIAN_TARGET
        _CALIBRATION = oracle / raw
    return _CALIBRATION


# ---------------------------------------------------------------------------
# fast product route and semiclassical route


def pattern_product(n: int, m: int, x, tables: WavefunctionTables | None = None) -> np.ndarray:
    """Pattern element via the product-derivative formula (vectorized over x)."""
    if n < 0 or m < 0:
        raise ValueError("orders must be non-negative")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    order = max(n, m)
    if tables is None:
        half = math.sqrt(2.0 * order + 1.0) + 6.0
        half = max(half, float(np.max(np.abs(xs))) + 1e-9)
        npts = 2 * int(math.ceil(half / 0.005)) + 1
        tables = build_wavefunction_tables(order, np.linspace(-half, half, npts))
    local = tables.interpolate(xs)
    out = local.element(n, m)
    return out if np.ndim(x) else float(out[0])


def classical_turning_point(n: int) -> float:
    return math.sqrt(2.0 * n + 1.0)


def classical_momentum(n: int, x) -> np.ndarray:
    """sqrt(2n + 1 - x^2), real only inside the allowed region."""
    return np.sqrt(2.0 * n + 1.0 - np.asarray(x, dtype=float) ** 2)


def classical_action(n: int, x) -> np.ndarray:
    """Closed-form integral of the momentum from the turning point down to x (negative inside)."""
    xs = np.asarray(x, dtype=float)
    a2 = 2.0 * n + 1.0
    p = classical_momentum(n, xs)
    return 0.5 * (xs * p + a2 * (np.arcsin(xs / math.sqrt(a2)) - 0.5 * math.pi))


def pattern_wkb(n: int, m: int, x) -> np.ndarray:
    """Semiclassical pattern element, valid inside the allowed region of the lower order."""
    if n < 0 or m < 0:
        raise ValueError("orders must be non-negative")
    if m < n:
        n, m = m, n
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    a_n = classical_turning_point(n)
    if np.any(np.abs(xs) >= a_n):
        raise OutsideAllowedRegion(
            f"|x| must stay below the turning point {a_n:.4f} of order {n}"
        )
    p_n = classical_momentum(n, xs)
    p_m = classical_momentum(m, xs)
    s_n = classical_action(n, xs) + 0.25 * math.pi
    s_m = classical_action(m, xs) + 0.25 * math.pi
    out = (2.0 / math.pi) / np.sqrt(p_n * p_m) * (
        p_m * np.cos(s_n) * np.cos(s_m) - p_n * np.sin(s_n) * np.sin(s_m)
    )
    return out if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------------------
# table artifact


@dataclass(frozen=True)
class PatternTable:
    """Pattern elements for 0 <= n, m <= n_max on a quadrature grid.

    Elements are materialized on demand from the compact wavefunction backing;
    the (n, m) <-> (m, n) symmetry holds exactly because both orders resolve
    to the same canonically ordered pair.
    """

    n_max: int
    grid: QuadratureGrid
    tables: WavefunctionTables
    s: float = 0.0
    wkb_threshold: int | None = None
    calibration: float = 1.0
    checksum: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def header(self) -> dict:
        return {
            "format_version": TABLE_FORMAT_VERSION,
            "n_max": self.n_max,
            "grid": self.grid.as_dict(),
            "s": self.s,
            "wkb_threshold": self.wkb_threshold,
            "calibration": self.calibration,
            "algorithm": "product+wkb" if self.wkb_threshold is not None else "product",
        }

    def algorithm_for(self, n: int, m: int) -> str:
        if self.wkb_threshold is not None and min(n, m) >= self.wkb_threshold:
            return "wkb"
        return "product"

    def element(self, n: int, m: int) -> np.ndarray:
        n, m = (n, m) if n <= m else (m, n)
        if m > self.n_max:
            raise TableMismatch(f"order {m} beyond table n_max {self.n_max}")
        if self.algorithm_for(n, m) == "wkb":
            return self._wkb_element(n, m)
        return self.tables.element(n, m)

    def band(self, d: int) -> np.ndarray:
        """All elements with m - n = d, stacked; mixes algorithms at the threshold."""
        if self.wkb_threshold is None or self.wkb_threshold > self.n_max - d:
            return self.tables.band(d)
        rows = [self.element(n, n + d) for n in range(0, self.n_max + 1 - d)]
        return np.stack(rows)

    def _wkb_element(self, n: int, m: int) -> np.ndarray:
        x = self.grid.values
        out = np.zeros_like(x)
        inside = np.abs(x) < classical_turning_point(n)
        if np.any(inside):
            out[inside] = pattern_wkb(n, m, x[inside])
        return out  # exponentially small outside the allowed region

    @property
    def values(self) -> np.ndarray:
        """Full mirrored tensor f[n, m, x]; O(n_max^2 * len(grid)) memory."""
        nx = self.grid.n_points
        out = np.empty((self.n_max + 1, self.n_max + 1, nx))
        for n in range(self.n_max + 1):
            for m in range(n, self.n_max + 1):
                row = self.element(n, m)
                out[n, m] = row
                out[m, n] = row
        return out


def build_pattern_table(
    n_max: int,
    grid: QuadratureGrid | None = None,
    wkb_threshold: int | None = None,
    step: float = NUMEROV_STEP,
) -> PatternTable:
    """Build a pattern table; the irregular normalization is calibrated against the oracle."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if grid is None:
        half = math.sqrt(2.0 * n_max + 1.0) + 6.0
        npts = 2 * int(math.ceil(half / DEFAULT_GRID_STEP)) + 1
        grid = QuadratureGrid.symmetric(half, npts)
    xg = grid.values
    if grid.n_points % 2 == 0 or abs(xg[0] + xg[-1]) > 1e-12 * max(1.0, abs(xg[-1])):
        # wavefunction backing needs a symmetric odd grid; widen minimally
        half = float(np.max(np.abs(xg)))
        npts = grid.n_points + 1 - grid.n_points % 2
        grid = QuadratureGrid.symmetric(half, max(npts, 3))
        xg = grid.values
    calibration = _calibration_factor()
    tables = build_wavefunction_tables(max(n_max, 1), xg, step=step, calibration=calibration)
    header = {
        "format_version": TABLE_FORMAT_VERSION,
        "n_max": n_max,
        "grid": grid.as_dict(),
        "s": 0.0,
        "wkb_threshold": wkb_threshold,
        "calibration": calibration,
    }
    digest = checksum_of(header, tables.psi, tables.chi, tables.dpsi, tables.dchi)
    return PatternTable(
        n_max=n_max,
        grid=grid,
        tables=tables,
        s=0.0,
        wkb_threshold=wkb_threshold,
        calibration=calibration,
        checksum=digest,
    )


def save_pattern_table(table: PatternTable, path: str | Path) -> None:
    import io

    buf = io.BytesIO()
    np.savez_compressed(
        buf,
        header=np.frombuffer(canonical_json({**table.header(), "checksum": table.checksum}).encode(), dtype=np.uint8),
        x=table.tables.x,
        psi=table.tables.psi,
        chi=table.tables.chi,
        dpsi=table.tables.dpsi,
        dchi=table.tables.dchi,
    )
    atomic_write_bytes(path, buf.getvalue())


def load_pattern_table(path: str | Path, expected_header: dict | None = None) -> PatternTable:
    import json as _json

    with np.load(path) as data:
        header = _json.loads(bytes(data["header"]).decode())
        arrays = {k: data[k] for k in ("x", "psi", "chi", "dpsi", "dchi")}
    stored_checksum = header.pop("checksum")
    digest = checksum_of(header, arrays["psi"], arrays["chi"], arrays["dpsi"], arrays["dchi"])
    if digest != stored_checksum:
        raise TableMismatch(f"checksum mismatch for {path}")
    if expected_header is not None:
        probe = dict(header)
        for key, val in expected_header.items():
            if probe.get(key) != val:
                raise TableMismatch(f"cached table field {key!r}: {probe.get(key)!r} != {val!r}")
    grid = QuadratureGrid(**header["grid"])
    tables = WavefunctionTables(
        x=arrays["x"], psi=arrays["psi"], chi=arrays["chi"], dpsi=arrays["dpsi"], dchi=arrays["dchi"]
    )
    return PatternTable(
        n_max=header["n_max"],
        grid=grid,
        tables=tables,
        s=header["s"],
        wkb_threshold=header["wkb_threshold"],
        calibration=header["calibration"],
        checksum=stored_checksum,
    )


_MEMORY_CACHE: dict[str, PatternTable] = {}


def get_pattern_table(
    n_max: int,
    grid: QuadratureGrid | None = None,
    wkb_threshold: int | None = None,
    directory: str | Path | None = None,
    no_cache: bool = False,
) -> PatternTable:
    """Fetch a pattern table through the in-memory and on-disk caches."""
    if grid is None:
        half = math.sqrt(2.0 * n_max + 1.0) + 6.0
        npts = 2 * int(math.ceil(half / DEFAULT_GRID_STEP)) + 1
        grid = QuadratureGrid.symmetric(half, npts)
    key = canonical_json(
        {"n_max": n_max, "grid": grid.as_dict(), "wkb_threshold": wkb_threshold, "v": TABLE_FORMAT_VERSION}
    )
    if not no_cache and key in _MEMORY_CACHE:
        return _MEMORY_CACHE[key]
    directory = Path(directory) if directory is not None else cache_dir()
    import hashlib

    fname = directory / f"pattern_{hashlib.sha256(key.encode()).hexdigest()[:16]}.npz"
    table = None
    if not no_cache and fname.exists():
        try:
            table = load_pattern_table(
                fname, expected_header={"n_max": n_max, "grid": grid.as_dict(), "wkb_threshold": wkb_threshold}
            )
        except (TableMismatch, OSError, KeyError, ValueError):
            table = None
    if table is None:
        table = build_pattern_table(n_max, grid, wkb_threshold=wkb_threshold)
        try:
            save_pattern_table(table, fname)
        except OSError:
            pass  # cache is an optimization only
    _MEMORY_CACHE[key] = table
    return table
