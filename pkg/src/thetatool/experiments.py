"""Reproducible desk-scale experiments: growth, height tails and flowed-height probes.

Every experiment derives its randomness from one integer seed through
``numpy.random.SeedSequence``; each sample gets its own Philox stream so
results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib.resources import files
import csv
import io
import json
import math

import numpy as np

from .exceptions import BudgetExceededError, ConfigError
from .haar import haar_batch, tail_fit
from .height import HeightParams, PsiSpec, gscript_threshold, s_grid
from .reduction import jacobi_reduce_batch_n1
from .theta import LATTICE_BUDGET, ThetaRequest, theta_box, theta_terms

GROWTH_LIMITS = {1: 1 << 16, 2: 1 << 10}
SLOPE_FROM = 64.0
CROSSCHECK_POINTS = 5
CROSSCHECK_TOL = 1e-9


def stream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the child ``path`` of ``seed``."""
    ss = np.random.SeedSequence(seed)
    for k in path:
        ss = ss.spawn(k + 1)[k]
    return np.random.Generator(np.random.Philox(ss))


def loglog_slope(M, S, start: float = SLOPE_FROM) -> float:
    M = np.asarray(M, dtype=float)
    S = np.asarray(S, dtype=float)
    keep = (M >= start) & (S > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(M[keep]), np.log(S[keep]), 1)[0])


# --------------------------------------------------------------- growth


@dataclass(frozen=True)
class GrowthConfig:
    n: int = 1
    M_max: float = 1 << 14
    samples: int = 100
    seed: int = 0
    X_mode: str = "random"
    y_mode: str = "random"
    x: tuple = None
    b: tuple = None
    X_fixed: tuple = None
    y_fixed: tuple = None
    psi_eps: float = 0.01
    extra_per_decade: int = 16
    M_grid: tuple = None
    workers: int = 1

    def __post_init__(self):
        if self.n not in GROWTH_LIMITS:
            raise ConfigError("growth experiments support n in {1, 2}")
        if self.M_max > GROWTH_LIMITS[self.n]:
            raise BudgetExceededError(f"M_max={self.M_max} exceeds {GROWTH_LIMITS[self.n]} for n={self.n}")
        if self.M_max < 2 or self.samples < 1:
            raise ConfigError("need M_max >= 2 and samples >= 1")
        if self.X_mode not in ("random", "rational", "fixed") or self.y_mode not in ("random", "fixed"):
            raise ConfigError(f"bad modes X_mode={self.X_mode!r} y_mode={self.y_mode!r}")
        if self.X_mode == "fixed" and self.X_fixed is None:
            raise ConfigError("X_mode=fixed needs X_fixed")
        if self.y_mode == "fixed" and self.y_fixed is None:
            raise ConfigError("y_mode=fixed needs y_fixed")

    @property
    def xv(self) -> np.ndarray:
        return np.zeros(self.n) if self.x is None else np.asarray(self.x, dtype=float)

    @property
    def bv(self) -> np.ndarray:
        return np.ones(self.n) if self.b is None else np.asarray(self.b, dtype=float)

    @property
    def psi(self) -> PsiSpec:
        return PsiSpec(self.n, self.psi_eps)

    def grid(self) -> np.ndarray:
        if self.M_grid is not None:
            return np.unique(np.asarray(self.M_grid, dtype=float))
        dyadic = 2.0 ** np.arange(1, int(math.floor(math.log2(self.M_max))) + 1)
        decades = math.log10(self.M_max / 2.0)
        count = int(math.ceil(self.extra_per_decade * decades))
        rng = stream(self.seed, 0)
        extra = np.exp(rng.uniform(math.log(2.0), math.log(self.M_max), count))
        return np.unique(np.concatenate([dyadic, extra]))


def _draw_point(cfg: GrowthConfig, rng):
    n = cfg.n
    if cfg.X_mode == "random":
        X = rng.uniform(0.0, 1.0, (n, n))
        X = np.triu(X) + np.triu(X, 1).T
        X[np.diag_indices(n)] *= 2.0
    elif cfg.X_mode == "rational":
        X = np.zeros((n, n))
    else:
        X = np.asarray(cfg.X_fixed, dtype=float).reshape(n, n)
    if cfg.y_mode == "random" and cfg.X_mode != "rational":
        y = rng.uniform(0.0, 1.0, n)
    elif cfg.y_mode == "fixed":
        y = np.asarray(cfg.y_fixed, dtype=float)
    else:
        y = np.zeros(n)
    return X, y


def _prefix_values(req: ThetaRequest, grid: np.ndarray):
    """``|theta|`` on ``grid`` and the running sup over every ``M' <= M``.

    The sum only changes when ``M`` crosses ``(m_i + x_i) / b_i``; the running
    sup is taken over all those states, not just over the grid.
    """
    lo, terms = theta_terms(req)
    n = req.n
    P = terms
    for ax in range(n):
        P = np.cumsum(P, axis=ax)
    thr = [(np.arange(lo[i], lo[i] + terms.shape[i]) + req.x[i]) / req.b[i] for i in range(n)]

    def state(points, side):
        counts = np.stack([np.searchsorted(t, points, side=side) for t in thr])
        filled = np.all(counts > 0, axis=0)
        vals = np.zeros(points.shape, dtype=complex)
        if filled.any():
            idx = tuple(c[filled] - 1 for c in counts)
            vals[filled] = P[idx]
        return vals

    events = np.unique(np.concatenate(thr)) if terms.size else np.zeros(0)
    sup_events = np.maximum.accumulate(np.abs(state(events, "right"))) if events.size else events
    at_grid = state(grid, "left")
    k = np.searchsorted(events, grid, side="left") - 1
    running = np.where(k >= 0, sup_events[np.maximum(k, 0)] if events.size else 0.0, 0.0)
    return at_grid, np.maximum(running, np.abs(at_grid))


def _growth_sample(args):
    cfg, sample_id, grid = args
    rng = stream(cfg.seed, 1, sample_id)
    X, y = _draw_point(cfg, rng)
    req = ThetaRequest(cfg.M_max, X, cfg.xv, y, cfg.bv)
    vals, running = _prefix_values(req, grid)
    absval = np.abs(vals)
    norm = grid ** (cfg.n / 2.0) * cfg.psi(np.log(grid))
    ratio = absval / norm
    picks = rng.choice(grid.size, size=min(CROSSCHECK_POINTS, grid.size), replace=False)
    err = 0.0
    for p in np.sort(picks):
        full = theta_box(ThetaRequest(grid[p], X, cfg.xv, y, cfg.bv), kernel="rotor").value
        err = max(err, abs(full - vals[p]) / max(abs(full), 1.0))
    return {
        "absval": absval,
        "ratio": ratio,
        "running": running,
        "slope": loglog_slope(grid, running),
        "crosscheck": err,
    }


def _map(fn, items, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


@dataclass
class GrowthResult:
    config: GrowthConfig
    grid: np.ndarray
    samples: list
    control: dict
    summary: dict = field(default_factory=dict)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seed", "sample_id", "M", "abs_theta", "ratio", "running_sup", "running_sup_ratio"])
        rows = [(str(k), s) for k, s in enumerate(self.samples)] + [("control", self.control)]
        for sid, s in rows:
            sup_ratio = np.maximum.accumulate(s["ratio"])
            for M, a, r, run, sr in zip(self.grid, s["absval"], s["ratio"], s["running"], sup_ratio):
                w.writerow([self.config.seed, sid, repr(float(M)), repr(float(a)), repr(float(r)),
                            repr(float(run)), repr(float(sr))])
        return buf.getvalue()


def run_growth(cfg: GrowthConfig) -> GrowthResult:
    grid = cfg.grid()
    if cfg.M_max * float(np.max(cfg.bv)) > LATTICE_BUDGET:
        raise BudgetExceededError("growth grid exceeds the lattice budget")
    samples = _map(_growth_sample, [(cfg, k, grid) for k in range(cfg.samples)], cfg.workers)
    control_cfg = GrowthConfig(**{**asdict(cfg), "X_mode": "rational", "y_mode": "random", "samples": 1})
    control = _growth_sample((control_cfg, 0, grid))
    slopes = np.array([s["slope"] for s in samples])
    sups = np.array([np.max(s["ratio"]) for s in samples])
    med = float(np.median(sups))
    summary = {
        "n": cfg.n,
        "M_max": cfg.M_max,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "grid_size": int(grid.size),
        "slope_median": float(np.median(slopes)),
        "slope_quantiles": [float(q) for q in np.quantile(slopes, [0.1, 0.25, 0.75, 0.9])],
        "control_slope": control["slope"],
        "sup_ratio_median": med,
        "sup_ratio_max": float(np.max(sups)),
        "sup_ratio_over_50x_median": int(np.sum(sups > 50.0 * med)),
        "crosscheck_max_error": float(max(s["crosscheck"] for s in samples + [control])),
        "target_slope": cfg.n / 2.0,
    }
    return GrowthResult(cfg, grid, samples, control, summary)


# ----------------------------------------------------------------- tail


@dataclass
class TailResult:
    seed: int
    D: np.ndarray
    fit: object
    acceptance_rate: float

    @property
    def summary(self) -> dict:
        return {
            "fitted_exponent": self.fit.exponent,
            "stderr": self.fit.stderr,
            "acceptance_rate": self.acceptance_rate,
            "samples": int(self.D.size),
            "seed": self.seed,
            "R_used": [float(r) for r in self.fit.R],
        }

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "D"])
        for k, d in enumerate(self.D):
            w.writerow([k, repr(float(d))])
        return buf.getvalue()


def default_tail_grid(n: int) -> np.ndarray:
    """Log-spaced thresholds over the range where the power law is visible."""
    lo, hi = {1: (4.0, 400.0), 2: (5.0, 60.0)}[n]
    return np.geomspace(lo, hi, 12)


def run_tail(n: int, samples: int, seed: int, R_grid=None, params: HeightParams = HeightParams(),
             min_count: int = 50) -> TailResult:
    batch = haar_batch(n, samples, stream(seed, 0))
    D = batch.heights(params)
    grid = default_tail_grid(n) if R_grid is None else np.asarray(R_grid, dtype=float)
    return TailResult(seed, D, tail_fit(D, grid, min_count), batch.acceptance_rate)


# -------------------------------------------------------------- gscript


def flowed_heights_n1(batch, s_values, jv: int, mirrored: bool, A: float) -> np.ndarray:
    """Heights of every rank-1 sample flowed to every time in ``s_values``.

    Uses that Haar samples carry ``k = I``: the flow only rescales ``y`` and,
    for the mirrored piece, shifts the Heisenberg part.  Returns ``(N, S)``.
    """
    x = batch.X[:, 0, 0][:, None]
    y = batch.Y[:, 0, 0][:, None]
    hx = batch.hx[:, 0][:, None]
    hy = batch.hy[:, 0][:, None]
    s = np.asarray(s_values, dtype=float)[None, :]
    scale = math.ldexp(1.0, -jv)
    y2 = y * np.exp(-2.0 * s) / scale**2
    if mirrored:
        # the shift is acted on by the inverse of the flowed, unscaled g
        delta = np.exp(s) / np.sqrt(y)
        hx2, hy2 = hx - delta, hy + x * delta
    else:
        hx2, hy2 = hx + 0 * s, hy + 0 * s
    shape = y2.shape
    px, _, _, yr = jacobi_reduce_batch_n1(hx2.ravel(), hy2.ravel(), (x + 0 * s).ravel(), y2.ravel())
    return (yr * (1.0 + px * px * yr) ** (-A)).reshape(shape)


def gscript_thresholds(n: int, samples: int, seed: int, jvec, psi: PsiSpec, s_max: float = 3.0, K: int = 8,
                       params: HeightParams = HeightParams()) -> np.ndarray:
    """Per-sample smallest admissible ``C`` for the flowed-height test."""
    jvec = tuple(int(v) for v in jvec)
    if len(jvec) != n:
        raise ConfigError("jvec length must equal n")
    batch = haar_batch(n, samples, stream(seed, 0))
    grid = s_grid(jvec, s_max, K)
    A = params.exponent(n)
    if n == 1:
        worst = np.zeros(samples)
        for mirrored in (False, True):
            D = flowed_heights_n1(batch, grid, jvec[0], mirrored, A)
            worst = np.maximum(worst, np.max(D**0.25 / psi(grid)[None, :], axis=1))
        return worst
    return np.array([gscript_threshold(batch.jacobi(k), psi, jvec, grid, params) for k in range(samples)])


@dataclass
class GscriptResult:
    C_grid: np.ndarray
    complement: dict
    fits: dict
    summary: dict


def run_gscript_probe(n: int, samples: int, seed: int, jvecs, C_grid=None, psi_eps: float = 0.01,
                      s_max: float = 3.0, K: int = 8, params: HeightParams = HeightParams(),
                      min_count: int = 20) -> GscriptResult:
    if n not in (1, 2):
        raise ConfigError("the probe supports n in {1, 2}")
    psi = PsiSpec(n, psi_eps)
    C_grid = np.geomspace(1.5, 4.0, 12) if C_grid is None else np.asarray(C_grid, dtype=float)
    complement, fits = {}, {}
    for jvec in jvecs:
        key = ",".join(str(int(v)) for v in jvec)
        th = np.sort(gscript_thresholds(n, samples, seed, jvec, psi, s_max, K, params))
        complement[key] = (th.size - np.searchsorted(th, C_grid, side="right")) / th.size
        try:
            f = tail_fit(th, C_grid, min_count)
            fits[key] = {"exponent": f.exponent, "stderr": f.stderr}
        except ValueError as exc:
            fits[key] = {"exponent": None, "stderr": None, "note": str(exc)}
    summary = {
        "n": n,
        "samples": samples,
        "seed": seed,
        "reference_exponent": -(2 * n + 4),
        "C_psi": psi.C_psi,
        "fits": fits,
        "complement_monotone_in_C": {k: bool(np.all(np.diff(v) <= 0)) for k, v in complement.items()},
    }
    return GscriptResult(C_grid, complement, fits, summary)


def gnuplot_script(csv_name: str, kind: str) -> str:
    """Plain-text plot script over an experiment CSV."""
    if kind == "growth":
        return (
            "set datafile separator ','\nset logscale xy\nset xlabel 'M'\nset ylabel 'running sup |theta|'\n"
            f"plot '{csv_name}' every ::1 using 3:6 with dots title 'samples'\n"
        )
    if kind == "tail":
        return (
            "set datafile separator ','\nset logscale y\nset xlabel 'sample'\nset ylabel 'D'\n"
            f"plot '{csv_name}' every ::1 using 1:2 with dots title 'height'\n"
        )
    if kind == "gscript":
        return (
            "set datafile separator ','\nset logscale xy\nset xlabel 'C'\nset ylabel 'complement'\n"
            f"plot for [col=2:*] '{csv_name}' every ::1 using 1:col with linespoints title columnhead(col)\n"
        )
    raise ConfigError(f"no plot template for {kind!r}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = [
    "GrowthConfig", "GrowthResult", "run_growth", "TailResult", "run_tail", "default_tail_grid",
    "GscriptResult", "run_gscript_probe", "gscript_thresholds", "flowed_heights_n1", "stream",
    "loglog_slope", "gnuplot_script", "write_json",
]


def load_expectations() -> dict:
    """Versioned pilot-calibrated thresholds shipped with the package."""
    return json.loads(files("thetatool").joinpath("data/expectations.json").read_text())
