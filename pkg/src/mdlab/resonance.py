"""Phase interactions of the coupled system and empirical resonance bounds.

For signs ``Theta = (th, th1, th2)``::

    p(xi, eta) = th <xi> - th1 <xi - eta> + th2 |eta|          (dirac)
    q(xi, eta) = -th |xi| + th1 <eta> - th2 <xi + eta>         (maxwell)

with ``<v> = (m^2 + |v|^2)^(1/2)``.  All functions accept stacks of
vectors ``(..., 3)``.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import ContractError

KINDS = ("dirac", "maxwell")
SIGN_TRIPLES = tuple(itertools.product((1, -1), repeat=3))
GRAD_EXCLUSION = 1e-12


def _jp(v, mass=1.0):
    return np.sqrt(mass ** 2 + np.sum(np.asarray(v) ** 2, axis=-1))


def _abs(v):
    return np.sqrt(np.sum(np.asarray(v) ** 2, axis=-1))


def _check(kind, signs):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if len(signs) != 3 or any(s not in (1, -1) for s in signs):
        raise ValueError(f"signs must be three entries of +-1, got {signs}")


def phase(kind: str, signs, xi, eta, mass: float = 1.0):
    _check(kind, signs)
    th, th1, th2 = signs
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if kind == "dirac":
        return th * _jp(xi, mass) - th1 * _jp(xi - eta, mass) + th2 * _abs(eta)
    return -th * _abs(xi) + th1 * _jp(eta, mass) - th2 * _jp(xi + eta, mass)


def grad_eta(kind: str, signs, xi, eta, mass: float = 1.0):
    """Exact eta-gradient of ``phase``.

    Raises ``ContractError`` for the dirac kind at ``|eta| < 1e-12``.
    """
    _check(kind, signs)
    _, th1, th2 = signs
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if kind == "dirac":
        a = _abs(eta)
        if np.any(a < GRAD_EXCLUSION):
            raise ContractError("grad_eta of the dirac phase is undefined at eta = 0")
        d = xi - eta
        return th1 * d / _jp(d, mass)[..., None] + th2 * eta / a[..., None]
    s = xi + eta
    return th1 * eta / _jp(eta, mass)[..., None] - th2 * s / _jp(s, mass)[..., None]


# ---------------------------------------------------------------------------
# bounds


def _bound_table(kind, signs, mass):
    """``[(name, fn(xi, eta) -> ratio, raw fn, set label)]`` for ``(kind, signs)``.

    Each ratio is ``|LHS| / comparator``; its infimum estimates the implicit
    constant of the corresponding lower bound.
    """
    th, th1, th2 = signs
    jp = lambda v: _jp(v, mass)
    P = lambda x, e: np.abs(phase(kind, signs, x, e, mass))
    G = lambda x, e: _abs(grad_eta(kind, signs, x, e, mass))
    out = []
    if kind == "dirac":
        if th == th1:
            out.append(("time", lambda x, e: P(x, e) * jp(x) * (jp(x) + jp(x - e) + jp(e)) / _abs(e), P))
        else:
            out.append(("time", lambda x, e: P(x, e) * jp(x), P))
        out.append(("space", lambda x, e: G(x, e) * jp(x - e) ** 2, G))
    else:
        if th1 == th2:
            out.append(("time", lambda x, e: P(x, e) * jp(e) * (jp(x) + jp(x - e) + jp(e)) / _abs(x), P))
            out.append(("space", lambda x, e: G(x, e) * jp(x + e) ** 3 / _abs(x), G))
        else:
            out.append(("time", lambda x, e: P(x, e) * jp(e), P))
            out.append(("space", lambda x, e: G(x, e) / _abs(e / jp(e)[..., None] + (x + e) / jp(x + e)[..., None]), G))
    return out


@dataclass
class SampleSpec:
    n_samples: int = 100_000
    log2_min: float = -10.0
    log2_max: float = 10.0
    n_targeted: int = 20_000
    seed: int = 0


def _sphere(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_points(kind, signs, spec: SampleSpec):
    """Log-uniform radii and uniform directions, plus targeted samples near
    each candidate resonant set and along (anti)aligned configurations."""
    rng = np.random.default_rng([spec.seed, KINDS.index(kind)] + [(s + 1) // 2 for s in signs])
    lo, hi = spec.log2_min, spec.log2_max
    n = spec.n_samples
    r1 = 2.0 ** rng.uniform(lo, hi, n)
    r2 = 2.0 ** rng.uniform(lo, hi, n)
    xi = r1[:, None] * _sphere(rng, n)
    eta = r2[:, None] * _sphere(rng, n)
    m = spec.n_targeted // 4
    # aligned and anti-aligned pairs
    u = _sphere(rng, m)
    a = 2.0 ** rng.uniform(lo, hi, m)
    b = 2.0 ** rng.uniform(lo, hi, m) * rng.choice([-1.0, 1.0], m)
    t_xi = [a[:, None] * u]
    t_eta = [b[:, None] * u]
    # near eta = 0 and near xi = 0
    small = 2.0 ** rng.uniform(lo, lo + 4, m)
    big = 2.0 ** rng.uniform(lo, hi, m)
    t_xi += [big[:, None] * _sphere(rng, m), small[:, None] * _sphere(rng, m)]
    t_eta += [small[:, None] * _sphere(rng, m), big[:, None] * _sphere(rng, m)]
    # near xi = -2 eta
    e = big[:, None] * _sphere(rng, m)
    t_xi.append(-2.0 * e + small[:, None] * _sphere(rng, m))
    t_eta.append(e)
    xi = np.concatenate([xi] + t_xi)
    eta = np.concatenate([eta] + t_eta)
    keep = _abs(eta) >= GRAD_EXCLUSION
    keep &= _abs(xi) >= GRAD_EXCLUSION
    return xi[keep], eta[keep]


@dataclass
class BoundResult:
    kind: str
    signs: tuple
    bound: str
    min_ratio: float
    argmin_xi: list
    argmin_eta: list
    raw_min: float
    raw_argmin_xi: list
    raw_argmin_eta: list
    n_samples: int

    def as_dict(self):
        return asdict(self)


def scan_lower_bounds(kind: str, signs, spec: SampleSpec = SampleSpec(), mass: float = 1.0):
    """Empirical infimum of every bound ratio for ``(kind, signs)``."""
    _check(kind, signs)
    xi, eta = sample_points(kind, signs, spec)
    out = []
    for name, ratio, raw in _bound_table(kind, tuple(signs), mass):
        r = ratio(xi, eta)
        i = int(np.argmin(r))
        v = raw(xi, eta)
        j = int(np.argmin(v))
        out.append(BoundResult(kind, tuple(signs), name, float(r[i]), xi[i].tolist(), eta[i].tolist(),
                               float(v[j]), xi[j].tolist(), eta[j].tolist(), len(r)))
    return out


# ---------------------------------------------------------------------------
# resonant sets

EMPTY = "empty"
ETA_ZERO = "eta=0"
XI_ZERO = "xi=0"
XI_MINUS_2ETA = "xi=-2eta"


def classify_sets(kind: str, signs) -> dict:
    """Symbolic time / space / space-time resonant sets."""
    _check(kind, signs)
    th, th1, th2 = signs
    if kind == "dirac":
        T = ETA_ZERO if th == th1 else EMPTY
        return {"T": T, "S": EMPTY, "R": EMPTY}
    if th1 == th2:
        return {"T": XI_ZERO, "S": XI_ZERO, "R": XI_ZERO}
    return {"T": EMPTY, "S": XI_MINUS_2ETA, "R": EMPTY}


def distance_to_set(label, xi, eta):
    """Distance of sample points to a resonant set, damped at large scales."""
    if label == ETA_ZERO:
        return _abs(eta) / (1.0 + _abs(xi))
    if label == XI_ZERO:
        return _abs(xi) / (1.0 + _abs(eta))
    if label == XI_MINUS_2ETA:
        return _abs(xi + 2.0 * eta) / (1.0 + _abs(xi) + _abs(eta))
    raise ValueError(label)


@dataclass
class ClassificationCheck:
    kind: str
    signs: tuple
    sets: dict
    consistent: bool
    details: dict = field(default_factory=dict)


def check_classification(kind: str, signs, spec: SampleSpec = SampleSpec(),
                         quantile: float = 0.01, window: float = 2.0, far: float = 0.05,
                         separation: float = 1e-2, mass: float = 1.0) -> ClassificationCheck:
    """Cross-check ``classify_sets`` against sampled values.

    For a nonempty set the raw quantity (``|phase|`` for T, ``|grad|`` for
    S, their sum for R) must get much smaller on the ``quantile`` fraction
    of samples closest to the set than anywhere at distance ``>= far``:
    ``min(near) <= separation * min(far)``.  Only samples with
    ``|xi|, |eta| <= window`` count, since the gradients also decay along
    antiparallel directions at infinity.  For an empty set the matching
    bound ratio must have a positive infimum.
    """
    _check(kind, signs)
    sets = classify_sets(kind, signs)
    xi, eta = sample_points(kind, signs, spec)
    P = np.abs(phase(kind, signs, xi, eta, mass))
    G = _abs(grad_eta(kind, signs, xi, eta, mass))
    raw = {"T": P, "S": G, "R": P + G}
    ratios = {name: fn(xi, eta) for name, fn, _ in _bound_table(kind, tuple(signs), mass)}
    ok = True
    details = {}
    for key, label in sets.items():
        if label == EMPTY:
            name = {"T": "time", "S": "space", "R": None}[key]
            if name is None:
                # empty R follows from an empty T or S
                good = sets["T"] == EMPTY or sets["S"] == EMPTY
                details[key] = {"label": label, "ok": good}
            else:
                m = float(ratios[name].min())
                good = bool(m > 0 and np.isfinite(m))
                details[key] = {"label": label, "min_ratio": m, "ok": good}
        else:
            inside = (_abs(xi) <= window) & (_abs(eta) <= window)
            d = distance_to_set(label, xi[inside], eta[inside])
            v = raw[key][inside]
            cut = float(np.quantile(d, quantile))
            near_min = float(v[d <= cut].min())
            far_min = float(v[d >= far].min())
            good = near_min <= separation * far_min
            details[key] = {"label": label, "near_min": near_min, "far_min": far_min,
                            "near_cut": cut, "ok": good}
        ok &= details[key]["ok"]
    return ClassificationCheck(kind, tuple(signs), sets, bool(ok), details)


# ---------------------------------------------------------------------------
# phase approximation


def phase_approximation_scan(n_samples: int = 200_000, xi_max: float = 8.0, eta_max: float = 1.0,
                             seed: int = 0, mass: float = 1.0) -> dict:
    """Max of ``|<xi> - <xi - eta> - xi.eta/<xi>| / |eta|^2`` over balls.

    Radii are drawn uniformly in volume plus a log-uniform shell of small
    ``|eta|`` where the quotient is least stable.
    """
    rng = np.random.default_rng(seed)
    n1 = n_samples // 2
    n2 = n_samples - n1
    rx = xi_max * rng.uniform(0, 1, n_samples) ** (1 / 3)
    re = np.concatenate([eta_max * rng.uniform(0, 1, n1) ** (1 / 3),
                         eta_max * 2.0 ** rng.uniform(-20, 0, n2)])
    xi = rx[:, None] * _sphere(rng, n_samples)
    eta = re[:, None] * _sphere(rng, n_samples)
    keep = _abs(eta) > 0
    xi, eta = xi[keep], eta[keep]
    jx = _jp(xi, mass)
    # <xi> - <xi-eta> = (2 xi.eta - |eta|^2) / (<xi> + <xi-eta>) avoids cancellation
    diff = (2 * np.sum(xi * eta, axis=-1) - np.sum(eta ** 2, axis=-1)) / (jx + _jp(xi - eta, mass))
    res = np.abs(diff - np.sum(xi * eta, axis=-1) / jx) / np.sum(eta ** 2, axis=-1)
    i = int(np.argmax(res))
    return {"max_constant": float(res[i]), "argmax_xi": xi[i].tolist(), "argmax_eta": eta[i].tolist(),
            "n_samples": int(len(res))}


def full_scan(spec: SampleSpec = SampleSpec()) -> dict:
    """Every bound and classification check over all sign triples."""
    bounds, checks = [], []
    for kind in KINDS:
        for signs in SIGN_TRIPLES:
            bounds += [b.as_dict() for b in scan_lower_bounds(kind, signs, spec)]
            c = check_classification(kind, signs, spec)
            checks.append(asdict(c))
    return {"bounds": bounds, "classification": checks}
