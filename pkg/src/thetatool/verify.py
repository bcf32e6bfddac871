"""Seeded invariant suites behind the ``verify`` subcommand.

Each check reports a metric and the tolerance it must stay under.  The
``tol_scale`` knob multiplies every tolerance, and the reduction membership
slack with it; a negative scale is the intended negative control.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
import time

import numpy as np

from .cutoff import chi_box_decomp, f1, levels_needed, psi
from .decompose import iwasawa, partial, random_element, recompose, uvu_factor
from .groups import (
    Heisenberg,
    Jacobi,
    JacobiLatticeElement,
    random_word,
    sympl_check,
    sympl_inverse,
    to_float,
)
from .haar import haar_batch, tail_fit
from .height import HeightParams, height
from .kernels import KERNELS
from .reduction import (
    MEMBER_SLACK,
    dn_member,
    dn_reduce,
    domain_margin,
    grenier_member,
    grenier_reduce,
    jacobi_reduce,
)
from .theta import ThetaRequest, automorphy_defect, big_theta_gaussian, theta_box, theta_box_via_dyadic

SUITES = ("group", "decompose", "reduce", "theta", "cutoff", "height")


@dataclass
class Check:
    suite: str
    name: str
    metric: float
    tolerance: float
    passed: bool
    seconds: float


class _Recorder:
    def __init__(self, suite, scale):
        self.suite, self.scale, self.checks = suite, scale, []

    def __call__(self, name, fn, tolerance):
        t0 = time.perf_counter()
        metric = float(fn())
        tol = tolerance * self.scale
        self.checks.append(Check(self.suite, name, metric, tol, bool(metric <= tol), time.perf_counter() - t0))


def _random_heisenberg(n, rng):
    return Heisenberg(rng.normal(size=n), rng.normal(size=n), rng.normal())


def _group(rec, rng):
    def heis_assoc():
        err = 0.0
        for _ in range(200):
            n = int(rng.integers(1, 4))
            a, b, c = (_random_heisenberg(n, rng) for _ in range(3))
            l, r = (a * b) * c, a * (b * c)
            err = max(err, np.max(np.abs(l.x - r.x)), np.max(np.abs(l.y - r.y)), abs(l.t - r.t))
        return err

    def jacobi_assoc():
        err = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 3))
            a, b, c = (Jacobi(_random_heisenberg(n, rng), random_element(n, rng, 0.5)) for _ in range(3))
            l, r = (a * b) * c, a * (b * c)
            err = max(err, np.max(np.abs(l.g - r.g)), np.max(np.abs(l.h.x - r.h.x)), abs(l.h.t - r.h.t))
        return err

    def exact_words():
        worst = 0
        for _ in range(50):
            n = int(rng.integers(1, 4))
            w = random_word(n, 40, rng)
            worst = max(worst, sympl_check(w), sympl_check(w.dot(sympl_inverse(w))))
        return worst

    rec("heisenberg associativity", heis_assoc, 1e-10)
    rec("jacobi associativity", jacobi_assoc, 1e-10)
    rec("exact word closure", exact_words, 0.0)


def _decompose(rec, rng):
    def iwasawa_roundtrip():
        return max(
            np.max(np.abs(recompose(iwasawa(g)) - g)) for g in (random_element(int(rng.integers(1, 4)), rng) for _ in range(200))
        )

    def partial_roundtrip():
        err = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 4))
            g = random_element(n, rng)
            for l in range(1, n + 1):
                err = max(err, np.max(np.abs(partial(g, l).recompose() - g)))
        return err

    def uvu():
        err = 0.0
        for _ in range(200):
            n = int(rng.integers(1, 5))
            B = rng.normal(size=(n, n))
            Y = B @ B.T + 0.1 * np.eye(n)
            U, v = uvu_factor(Y)
            err = max(err, np.max(np.abs((U * v) @ U.T - Y)) / np.max(np.abs(Y)))
        return err

    rec("iwasawa round trip", iwasawa_roundtrip, 1e-10)
    rec("partial round trip", partial_roundtrip, 1e-10)
    rec("UVU factorization", uvu, 1e-12)


def _reduce(rec, rng, slack):
    def membership():
        fails = 0
        for _ in range(60):
            n = int(rng.integers(1, 3))
            fails += not dn_member(dn_reduce(random_element(n, rng)).reduced, slack)
        return fails

    def height_chain():
        worst = 0.0
        for _ in range(60):
            n = int(rng.integers(1, 3))
            v = dn_reduce(random_element(n, rng, 1.5)).coords.v
            worst = max(worst, np.sqrt(3) / 2 - v[-1], *(0.75 * v[1:] - v[:-1]))
        return worst

    def orbit():
        worst = 0.0
        for _ in range(40):
            n = int(rng.integers(1, 3))
            g = random_element(n, rng)
            red = dn_reduce(g)
            if domain_margin(red.reduced) < 1e-6:
                continue
            moved = dn_reduce(to_float(random_word(n, 4, rng)) @ g)
            worst = max(worst, np.max(np.abs(red.coords.X - moved.coords.X)), np.max(np.abs(red.coords.Y - moved.coords.Y)))
        return worst

    def grenier():
        fails = 0
        for _ in range(40):
            l = int(rng.integers(2, 4))
            B = rng.normal(size=(l, l))
            fails += not grenier_member(grenier_reduce(B @ B.T + 0.05 * np.eye(l)).Y_reduced, slack)
        return fails

    rec("reduced points are members", membership, 0.0)
    rec("height chain inequalities", height_chain, 1e-12)
    rec("orbit invariance", orbit, 1e-8)
    rec("grenier reduction lands in domain", grenier, 0.0)


def _theta(rec, rng):
    def kernels():
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 3))
            M = float(rng.uniform(2, 300 if n == 1 else 40))
            X = rng.normal(size=(n, n))
            req = ThetaRequest(M, X + X.T, rng.uniform(-1, 1, n), rng.normal(size=n))
            vals = [theta_box(req, kernel=k).value for k in KERNELS]
            worst = max(worst, max(abs(a - vals[0]) / max(abs(vals[0]), 1.0) for a in vals[1:]))
        return worst

    def automorphy():
        worst = 0.0
        for _ in range(30):
            n = int(rng.integers(1, 3))
            j = Jacobi(Heisenberg(rng.uniform(-0.5, 0.5, n), rng.uniform(-0.5, 0.5, n), 0.0),
                       dn_reduce(random_element(n, rng, 0.5)).reduced)
            if abs(big_theta_gaussian(j).value) < 1e-6:
                continue
            word = JacobiLatticeElement(rng.integers(-2, 3, n), rng.integers(-2, 3, n), float(rng.normal()),
                                        random_word(n, 4, rng))
            worst = max(worst, automorphy_defect(j, word))
        return worst

    def dyadic():
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(1, 3))
            X = rng.normal(size=(n, n))
            req = ThetaRequest(float(rng.uniform(2, 64)), X + X.T, rng.uniform(-1, 1, n), rng.normal(size=n))
            a, b = theta_box_via_dyadic(req).value, theta_box(req).value
            worst = max(worst, abs(a - b) / max(abs(b), 1.0))
        return worst

    rec("kernel equivalence", kernels, 1e-10)
    rec("modulus automorphy", automorphy, 1e-8)
    rec("dyadic reconstruction of box sums", dyadic, 1e-9)


def _cutoff(rec, rng):
    delta = 2.0**-10

    def unity():
        x = rng.uniform(delta, 1 - delta, 10_000)
        return np.max(np.abs(chi_box_decomp(x[:, None], np.ones(1), 12) - 1.0))

    def outside():
        x = np.concatenate([rng.uniform(-2, 0, 1000), rng.uniform(1, 3, 1000)])
        return np.max(np.abs(chi_box_decomp(x[:, None], np.ones(1), 12)))

    def symmetry():
        x = rng.uniform(-0.5, 1.5, 10_000)
        return np.max(np.abs(psi(x) + psi(1 - x) - 1.0))

    def support():
        x = np.concatenate([rng.uniform(-1, 0.125, 1000), rng.uniform(0.75, 2, 1000)])
        return np.max(np.abs(f1(x)))

    rec("partition of unity in the interior", unity, 1e-12)
    rec("vanishes outside the interval", outside, 0.0)
    rec("ramp symmetry", symmetry, 1e-15)
    rec("dyadic piece support", support, 0.0)
    def level_count():
        J = levels_needed(delta)
        x = np.array([[delta], [1 - delta]])
        exact = np.max(np.abs(chi_box_decomp(x, np.ones(1), J) - 1.0))
        short = np.max(np.abs(chi_box_decomp(x, np.ones(1), J - 1) - 1.0))
        return exact if short > 1e-3 else np.inf

    rec("level count is exact and minimal", level_count, 1e-12)


def _height(rec, rng):
    def known_value():
        j = Jacobi(Heisenberg([0.0], [0.0], 0.0), np.diag([2.0, 0.5]))
        return abs(height(j) - 4.0)

    def invariance():
        worst = 0.0
        for _ in range(40):
            n = int(rng.integers(1, 3))
            j = Jacobi(_random_heisenberg(n, rng), random_element(n, rng))
            word = JacobiLatticeElement(rng.integers(-3, 4, n), rng.integers(-3, 4, n), 0.0, random_word(n, 4, rng))
            red = jacobi_reduce(j).reduced
            if domain_margin(red.g) < 1e-6 or np.max(np.abs(red.h.x)) > 0.5 - 1e-6:
                continue
            a, b = height(j), height(word * j)
            worst = max(worst, abs(a - b) / a)
        return worst

    def tail():
        D = haar_batch(1, 200_000, np.random.default_rng(2024)).heights(HeightParams())
        return abs(tail_fit(D, np.geomspace(4, 200, 10)).exponent + 1.5)

    rec("height of a diagonal point", known_value, 1e-12)
    rec("height is a quotient function", invariance, 1e-8)
    rec("rank-1 tail exponent distance to 3/2", tail, 0.15)


def run_suite(suite: str, seed: int = 20240101, tol_scale: float = 1.0) -> list:
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
        rec = _Recorder(name, tol_scale)
        rng = np.random.default_rng([seed, SUITES.index(name)])
        if name == "group":
            _group(rec, rng)
        elif name == "decompose":
            _decompose(rec, rng)
        elif name == "reduce":
            _reduce(rec, rng, MEMBER_SLACK * tol_scale)
        elif name == "theta":
            _theta(rec, rng)
        elif name == "cutoff":
            _cutoff(rec, rng)
        else:
            _height(rec, rng)
        out.extend(rec.checks)
    return out


def report(checks) -> dict:
    return {
        "passed": all(c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }
