"""Potentials, nonlinearities, hypothesis validators and the penalized nonlinearity.

Coordinates handed to a :class:`Potential` or a :class:`Region` are physical
(``x``); the energy module converts from the scaled variable ``y = x / eps``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

ArrayFunc = Callable[[np.ndarray], np.ndarray]


class ModelError(ValueError):
    """An inadmissible model (bad constants, missing crossing, ...)."""


class HypothesisError(ModelError):
    def __init__(self, name: str, message: str, witness=None):
        super().__init__(f"({name}) {message}")
        self.name = name
        self.witness = witness


# --------------------------------------------------------------------- regions


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    kind = "ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise ModelError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, x: np.ndarray) -> np.ndarray:
        # nodes exactly on the sphere count as inside
        d = np.sqrt(np.sum((np.asarray(x) - np.asarray(self.center)) ** 2, axis=-1))
        return d <= self.radius * (1 + 1e-14)

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        d = np.sqrt(np.sum((np.asarray(x) - np.asarray(self.center)) ** 2, axis=-1))
        return np.abs(d - self.radius)

    def scaled(self, factor: float) -> "Ball":
        return Ball(tuple(c * factor for c in self.center), self.radius * factor)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    def sample_boundary(self, n: int, rng: np.random.Generator) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        if self.dim == 1:
            return np.array([[c[0] - self.radius], [c[0] + self.radius]])
        if self.dim == 2:
            t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
            return c + self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
        v = rng.standard_normal((n, self.dim))
        return c + self.radius * v / np.linalg.norm(v, axis=1, keepdims=True)

    def describe(self) -> dict:
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    kind = "box"

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or any(
            lo >= hi for lo, hi in zip(self.lower, self.upper)
        ):
            raise ModelError("box corners must satisfy lower < upper per axis")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        tol = 1e-14 * np.maximum(1.0, np.abs(hi - lo))
        return np.all((x >= lo - tol) & (x <= hi + tol), axis=-1)

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        outside = np.sqrt(np.sum(np.maximum(np.maximum(lo - x, x - hi), 0.0) ** 2, axis=-1))
        inside = np.min(np.minimum(x - lo, hi - x), axis=-1)
        return np.where(self.contains(x), np.abs(inside), outside)

    def scaled(self, factor: float) -> "Box":
        return Box(tuple(v * factor for v in self.lower), tuple(v * factor for v in self.upper))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.bounds()
        return lo + (hi - lo) * rng.random((n, self.dim))

    def sample_boundary(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.bounds()
        if self.dim == 1:
            return np.array([[lo[0]], [hi[0]]])
        pts = self.sample(n, rng)
        axis = rng.integers(0, self.dim, n)
        side = rng.integers(0, 2, n)
        pts[np.arange(n), axis] = np.where(side == 0, lo[axis], hi[axis])
        return pts

    def describe(self) -> dict:
        return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}


Region = Ball | Box


def region_from_dict(spec: dict, dim: int) -> Region:
    kind = spec.get("kind")
    if kind == "ball":
        center = spec.get("center", [0.0] * dim)
        region = Ball(tuple(float(c) for c in center), float(spec["radius"]))
    elif kind == "box":
        region = Box(tuple(float(v) for v in spec["lower"]),
                     tuple(float(v) for v in spec["upper"]))
    else:
        raise ModelError(f"unknown region kind {kind!r}")
    if region.dim != dim:
        raise ModelError(f"region dimension {region.dim} != model dimension {dim}")
    return region


# ------------------------------------------------------------------ potentials


@dataclass(frozen=True)
class Potential:
    """V with its gradient, floor ``v0``, sup ``v_inf`` and class tag.

    ``class_tag`` is 1 (Palais-Smale class, user declared) or 2 (no critical
    point of V on the boundary of the bounded region ``lam``).
    """

    evaluate: ArrayFunc
    gradient: ArrayFunc
    v0: float
    v_inf: float
    dim: int
    class_tag: int
    lam: Region | None = None
    argmin: tuple[float, ...] | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    sampled_max: float | None = None

    def __post_init__(self):
        if self.class_tag not in (1, 2):
            raise ModelError(f"class_tag must be 1 or 2, got {self.class_tag}")
        if self.class_tag == 2 and self.lam is None:
            raise ModelError("a class 2 potential needs the region Lambda")
        if not self.v0 > 0:
            raise ModelError(f"V0 must be positive, got {self.v0}")

    def center(self) -> np.ndarray:
        """Point the initial bump sits on: minimizer of V in Lambda, or the origin."""
        if self.class_tag == 1:
            return np.zeros(self.dim)
        if self.argmin is not None:
            return np.asarray(self.argmin, dtype=float)
        return _argmin_in_region(self, self.lam)


def _argmin_in_region(potential: Potential, region: Region, n: int = 4001) -> np.ndarray:
    lo, hi = region.bounds()
    if potential.dim == 1:
        pts = np.linspace(lo[0], hi[0], n)[:, None]
    else:
        m = int(math.isqrt(n)) + 1
        ax = [np.linspace(lo[i], hi[i], m) for i in range(potential.dim)]
        pts = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1).reshape(-1, potential.dim)
    pts = pts[region.contains(pts)]
    return pts[np.argmin(potential.evaluate(pts))]


def _sq(x: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)


def catalog_potential(dim: int, lam: Region | None = None, class_tag: int = 2) -> Potential:
    """``V(x) = 2 - 1/(1 + |x|^2)``: V0 = 1 at the origin, sup V = 2."""
    lam = lam if lam is not None else Ball((0.0,) * dim, 1.0)

    def evaluate(x):
        return 2.0 - 1.0 / (1.0 + _sq(x))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x / (1.0 + _sq(x))[..., None] ** 2

    return Potential(evaluate, gradient, v0=1.0, v_inf=2.0, dim=dim,
                     class_tag=class_tag, lam=lam if class_tag == 2 else None,
                     argmin=(0.0,) * dim, name="catalog")


def constant_potential(value: float, dim: int, class_tag: int = 1,
                       lam: Region | None = None) -> Potential:
    def evaluate(x):
        return np.full(np.shape(x)[:-1], float(value))

    def gradient(x):
        return np.zeros(np.shape(x))

    return Potential(evaluate, gradient, v0=float(value), v_inf=float(value), dim=dim,
                     class_tag=class_tag, lam=lam, argmin=(0.0,) * dim,
                     name="constant", params={"value": value})


def gaussian_well(depth: float, top: float, width: float, dim: int, class_tag: int = 1,
                  lam: Region | None = None) -> Potential:
    """``V(x) = top - depth * exp(-|x|^2 / width^2)`` with ``0 < depth < top``."""
    if not 0 < depth < top:
        raise ModelError("gaussian well needs 0 < depth < top")

    def evaluate(x):
        return top - depth * np.exp(-_sq(x) / width**2)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return (2.0 * depth / width**2) * np.exp(-_sq(x) / width**2)[..., None] * x

    return Potential(evaluate, gradient, v0=top - depth, v_inf=top, dim=dim,
                     class_tag=class_tag, lam=lam, argmin=(0.0,) * dim,
                     name="gaussian", params={"depth": depth, "top": top, "width": width})


def with_sampled_sup(potential: Potential, box: Box, n: int = 20001) -> Potential:
    """Record the max of V over ``box``; ``v_inf`` becomes max(declared sup, sampled max)."""
    rng = np.random.default_rng(0)
    pts = np.concatenate([box.sample(n, rng), _box_corners(box)])
    vmax = float(np.max(potential.evaluate(pts)))
    return replace(potential, sampled_max=vmax, v_inf=max(potential.v_inf, vmax))


def _box_corners(box: Box) -> np.ndarray:
    lo, hi = box.bounds()
    grids = np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, box.dim)


# --------------------------------------------------------------- nonlinearity


@dataclass(frozen=True)
class Nonlinearity:
    f: ArrayFunc
    F: ArrayFunc
    theta: float
    p: float
    name: str = "custom"
    power_exponent: float | None = None


def power_nonlinearity(p: float, theta: float | None = None) -> Nonlinearity:
    """``f(s) = (s+)^(p-1)``, ``F(s) = (s+)^p / p``; theta defaults to p."""
    p = float(p)

    def f(s):
        return np.maximum(s, 0.0) ** (p - 1.0)

    def F(s):
        return np.maximum(s, 0.0) ** p / p

    return Nonlinearity(f, F, theta=float(p if theta is None else theta), p=p,
                        name="power", power_exponent=p)


# ----------------------------------------------------------------- penalization


def compute_k(theta: float) -> float:
    if not theta > 2:
        raise ModelError(f"(f3) needs theta > 2 for k = 2 theta/(theta - 2); got theta = {theta}")
    return 2.0 * theta / (theta - 2.0)


@dataclass(frozen=True)
class Threshold:
    a: float
    crossings: int


def truncation_threshold(nonlinearity: Nonlinearity, v0: float, k: float,
                         s_max: float = 1.0, cap: float = 1e8,
                         rtol: float = 1e-12) -> float:
    """Smallest ``a > 0`` with ``f(a)/a = V0/k``."""
    return find_threshold(nonlinearity, v0, k, s_max, cap, rtol).a


def find_threshold(nonlinearity: Nonlinearity, v0: float, k: float,
                   s_max: float = 1.0, cap: float = 1e8,
                   rtol: float = 1e-12) -> Threshold:
    level = v0 / k
    q = nonlinearity.power_exponent
    if q is not None:
        return Threshold(level ** (1.0 / (q - 2.0)), 1)

    def phi(s):
        s = np.asarray(s, dtype=float)
        return nonlinearity.f(s) / s - level

    while True:
        s = np.geomspace(s_max * 1e-9, s_max, 4001)
        vals = phi(s)
        sign_change = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
        if len(sign_change) or s_max >= cap:
            break
        s_max *= 2.0
    if not len(sign_change):
        raise ModelError(f"no crossing of f(s)/s = V0/k = {level:g} found below s = {cap:g}")
    crossings = int(np.count_nonzero(np.diff(np.sign(vals)) != 0))
    i = sign_change[0]
    lo, hi = float(s[i]), float(s[i + 1])
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if phi(mid) < 0:
            lo = mid
        else:
            hi = mid
    return Threshold(0.5 * (lo + hi), crossings)


@dataclass(frozen=True)
class Penalization:
    """The modified nonlinearity ``g(x, s) = chi_Omega(x) f(s) + (1 - chi_Omega(x)) f~(s)``."""

    omega: Region
    k: float
    a: float
    v0: float
    nonlinearity: Nonlinearity
    crossings: int = 1

    @property
    def slope(self) -> float:
        return self.v0 / self.k

    def f_tilde(self, s):
        s = np.asarray(s, dtype=float)
        f = self.nonlinearity.f(np.minimum(s, self.a))
        return np.where(s <= 0, 0.0, np.where(s <= self.a, f, self.slope * s))

    def F_tilde(self, s):
        s = np.asarray(s, dtype=float)
        sp = np.maximum(s, 0.0)
        low = self.nonlinearity.F(np.minimum(sp, self.a))
        return low + 0.5 * self.slope * np.maximum(sp**2 - self.a**2, 0.0)

    def g_masked(self, inside: np.ndarray, s):
        """g at nodes whose Omega membership is already known."""
        return np.where(inside, self.nonlinearity.f(s), self.f_tilde(s))

    def G_masked(self, inside: np.ndarray, s):
        return np.where(inside, self.nonlinearity.F(s), self.F_tilde(s))

    def g(self, x, s):
        return self.g_masked(self.omega.contains(x), s)

    def G(self, x, s):
        return self.G_masked(self.omega.contains(x), s)


def f_tilde(pen: Penalization, s):
    return pen.f_tilde(s)


def penalized_g(pen: Penalization, x, s):
    return pen.g(x, s)


def penalized_G(pen: Penalization, x, s):
    return pen.G(x, s)


def make_penalization(potential: Potential, nonlinearity: Nonlinearity,
                      eps: float | None = None) -> Penalization:
    """Omega is Lambda for class 2 and the physical ball of radius 1/eps for class 1."""
    k = compute_k(nonlinearity.theta)
    thr = find_threshold(nonlinearity, potential.v0, k)
    if thr.crossings > 1:
        warnings.warn(f"f(s)/s crosses V0/k {thr.crossings} times; using the smallest crossing")
    if potential.class_tag == 2:
        omega = potential.lam
    else:
        if eps is None:
            raise ModelError("class 1 penalization needs eps (Omega = B_{1/eps}(0))")
        omega = Ball((0.0,) * potential.dim, 1.0 / eps)
    return Penalization(omega, k, thr.a, potential.v0, nonlinearity, thr.crossings)


# ------------------------------------------------------------------ validation


@dataclass
class HypothesisResult:
    name: str
    status: str  # "pass", "fail", "declared", "n/a"
    witness: dict = field(default_factory=dict)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass
class ValidationReport:
    results: list[HypothesisResult]
    notes: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> HypothesisResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def failures(self) -> list[HypothesisResult]:
        return [r for r in self.results if not r.ok]

    def raise_on_failure(self) -> None:
        for r in self.failures:
            raise HypothesisError(r.name, r.message, r.witness)


def validate_hypotheses(potential: Potential, nonlinearity: Nonlinearity,
                        sample_box: Box, n_samples: int = 4000,
                        seed: int = 0) -> ValidationReport:
    """Check (A0)-(A3) and (f1)-(f3) on samples; (A2) cannot be checked."""
    if n_samples < 1000:
        raise ModelError("n_samples must be at least 1000")
    if sample_box.dim != potential.dim:
        raise ModelError("sample box dimension does not match the potential")
    rng = np.random.default_rng(seed)
    pts = np.concatenate([sample_box.sample(n_samples, rng), _box_corners(sample_box),
                          potential.center()[None, :]])
    results = [
        _check_a0(potential, pts),
        _check_a1(potential, pts),
        _check_a2(potential),
        _check_a3(potential, n_samples, rng),
        _check_f1(nonlinearity),
        _check_f2(nonlinearity, potential.dim),
        _check_f3(nonlinearity),
    ]
    notes = []
    if potential.class_tag == 1:
        notes.append("class 1 membership (Palais-Smale for V) is user declared, not verified")
    vmax = float(np.max(potential.evaluate(pts)))
    notes.append(f"V_inf = {potential.v_inf!r}; sampled max over box = {vmax!r}")
    return ValidationReport(results, notes)


def _check_a0(potential, pts):
    values = potential.evaluate(pts)
    i = int(np.argmin(values))
    vmin = float(values[i])
    witness = {"min_V": vmin, "at": pts[i].tolist(), "V0": potential.v0}
    if potential.v0 > 0 and vmin >= potential.v0 * (1 - 1e-12):
        return HypothesisResult("A0", "pass", witness)
    return HypothesisResult("A0", "fail", witness,
                            f"V = {vmin:.6g} < V0 = {potential.v0:.6g} at {pts[i].tolist()}")


def _check_a1(potential, pts, step: float = 1e-4):
    v = potential.evaluate(pts)
    grad = potential.gradient(pts)
    dim = potential.dim
    hess = np.zeros((len(pts), dim, dim))
    fd_grad_err = 0.0
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = step
        hess[:, :, i] = (potential.gradient(pts + e) - potential.gradient(pts - e)) / (2 * step)
        fd = (potential.evaluate(pts + e) - potential.evaluate(pts - e)) / (2 * step)
        fd_grad_err = max(fd_grad_err, float(np.max(np.abs(fd - grad[:, i]))))
    witness = {
        "max_abs_V": float(np.max(np.abs(v))),
        "max_abs_grad": float(np.max(np.abs(grad))),
        "max_abs_hessian_fd": float(np.max(np.abs(hess))),
        "gradient_fd_mismatch": fd_grad_err,
    }
    finite = all(math.isfinite(val) for val in witness.values())
    scale = max(1.0, witness["max_abs_grad"])
    if finite and fd_grad_err <= 1e-5 * scale:
        return HypothesisResult("A1", "pass", witness)
    return HypothesisResult("A1", "fail", witness,
                            "V or its derivatives are not bounded/consistent on the sample box")


def _check_a2(potential):
    if potential.class_tag == 1:
        return HypothesisResult("A2", "declared", {},
                                "Palais-Smale condition for V is declared, not checkable")
    return HypothesisResult("A2", "n/a", {}, "not required for class 2")


def _check_a3(potential, n_samples, rng):
    if potential.class_tag != 2:
        return HypothesisResult("A3", "n/a", {}, "not required for class 1")
    pts = potential.lam.sample_boundary(n_samples, rng)
    norms = np.linalg.norm(potential.gradient(pts), axis=-1)
    i = int(np.argmin(norms))
    witness = {"min_abs_grad_on_boundary": float(norms[i]), "at": pts[i].tolist()}
    if norms[i] > 1e-8:
        return HypothesisResult("A3", "pass", witness)
    return HypothesisResult("A3", "fail", witness,
                            f"grad V vanishes on the boundary of Lambda at {pts[i].tolist()}")


def _check_f1(nl):
    s = np.geomspace(1e-1, 1e-8, 8)
    ratio = nl.f(s) / s
    neg = nl.f(-np.geomspace(1e-8, 1e3, 12))
    witness = {"f_over_s_at_1e-8": float(ratio[-1]), "max_abs_f_negative": float(np.max(np.abs(neg)))}
    if np.all(neg == 0) and ratio[-1] <= 1e-6 and np.all(np.diff(ratio[-4:]) <= 0):
        return HypothesisResult("f1", "pass", witness)
    return HypothesisResult("f1", "fail", witness,
                            "f(s)/s does not vanish as s -> 0+ (or f != 0 for s <= 0)")


def _check_f2(nl, dim):
    # 2* is infinite for dim <= 2, so any exponent q > 2 is admissible; take q = p + 1
    q = nl.p + 1.0 if dim <= 2 else None
    s = np.geomspace(1e1, 1e8, 8)
    witness = {"p_declared": nl.p,
               "finite_limsup_ratio": float(np.max(nl.f(s) / s ** (nl.p - 1.0)))}
    if q is None:
        return HypothesisResult("f2", "fail", witness, "only dim <= 2 is supported")
    ratio = nl.f(s) / s ** (q - 1.0)
    witness.update({"exponent_used": q, "ratio_at_1e8": float(ratio[-1])})
    # the literal condition (limsup = 0) fails at q = p for pure powers; reported above
    if ratio[-1] <= 1e-6 and np.all(np.diff(ratio[-4:]) <= 0):
        return HypothesisResult("f2", "pass", witness)
    return HypothesisResult("f2", "fail", witness, f"f(s)/s^(q-1) does not vanish for q = {q}")


def _check_f3(nl):
    witness = {"theta": nl.theta}
    if not nl.theta > 2:
        return HypothesisResult("f3", "fail", witness,
                                f"theta = {nl.theta} must exceed 2 (k = 2 theta/(theta-2) undefined)")
    s = np.geomspace(1e-6, 1e6, 2001)
    F = nl.F(s)
    sf = s * nl.f(s)
    slack = sf - nl.theta * F
    i = int(np.argmin(slack / np.maximum(sf, 1e-300)))
    witness.update({"min_F": float(np.min(F)), "min_relative_slack": float(slack[i] / sf[i]),
                    "at": float(s[i])})
    if np.all(F > 0) and np.all(slack >= -1e-12 * np.abs(sf)):
        return HypothesisResult("f3", "pass", witness)
    return HypothesisResult("f3", "fail", witness,
                            f"0 < theta F(s) <= s f(s) violated at s = {s[i]:.6g}")
