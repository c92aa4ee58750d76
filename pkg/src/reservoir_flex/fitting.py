"""Induction-furnace parameter estimation from measured heats.

Each sample is one furnace run: batch mass, initial temperature, an hourly
power curve and the measured terminal energy.  The model predicts

    E_hat = alpha * mass * T0 + beta_s * sum(power) - delta * H

and the fit minimizes the squared energy errors subject to nonnegativity,
a shared-mean link for the per-sample betas, and a ball limiting their
variance (default 0.001).  The convex program is solved exactly: bisection
on the Lagrange multiplier of the variance ball around an inner
equality-free least squares with active-set handling of the nonnegativity
bounds.  No external solver is involved; the KKT residual of the returned
point is checked against 1e-8.

For HVAC models the paper-sketched recipe is the same least-squares core:
regress temperature differences on net injected energy to get the product
C_p*m, then regress the residual drift on the inside-outside temperature
gap to get the loss coefficient k.  That is ordinary ``numpy.linalg.lstsq``
territory and intentionally not a separate algorithm here.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


class FittingError(ValueError):
    pass


class DegenerateDataError(FittingError):
    """Raised when the data cannot identify the parameters."""


@dataclass(frozen=True)
class Sample:
    id: str
    mass: float                 # kg
    t_initial: float            # K
    powers: tuple[float, ...]   # average W per step
    energy: float               # measured terminal energy, J

    def __post_init__(self):
        if self.mass <= 0:
            raise FittingError(f"sample {self.id}: mass must be > 0")
        if len(self.powers) < 1:
            raise FittingError(f"sample {self.id}: empty power curve")
        if any(p < 0 for p in self.powers):
            raise FittingError(f"sample {self.id}: negative power")


@dataclass
class FitResult:
    alpha: float
    beta_per_sample: dict[str, float]
    beta_bar: float
    delta: float
    sse: float
    variance_used: float
    kkt_residual: float
    multiplier: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta_per_sample": self.beta_per_sample,
            "beta_bar": self.beta_bar,
            "delta": self.delta,
            "sse": self.sse,
            "variance_used": self.variance_used,
            "kkt_residual": self.kkt_residual,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


@dataclass
class LooReport:
    predictions: dict[str, float]
    squared_errors: dict[str, float]
    rmse: float
    mean_energy: float
    ratio: float                      # rmse / mean energy
    degenerate_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "predictions": self.predictions,
            "squared_errors": self.squared_errors,
            "rmse": self.rmse,
            "mean_energy": self.mean_energy,
            "ratio": self.ratio,
            "degenerate_ids": self.degenerate_ids,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _design(samples: list[Sample], step_seconds: float):
    """Rows [a_s, -H_s, p_s * e_s]; all rows share one energy scale."""
    n = len(samples)
    a = np.array([s.mass * s.t_initial for s in samples])
    h = np.array([float(len(s.powers)) for s in samples])
    p = np.array([step_seconds * float(np.sum(s.powers)) for s in samples])
    y = np.array([s.energy for s in samples])
    scale = float(np.mean(np.abs(y))) or 1.0
    X = np.zeros((n, 2 + n))
    X[:, 0] = a
    X[:, 1] = -h
    X[np.arange(n), 2 + np.arange(n)] = p
    return X / scale, y / scale, scale, p


def _center_penalty(n: int) -> np.ndarray:
    """Penalty matrix of sum_s (beta_s - mean(beta))^2 over theta."""
    P = np.zeros((2 + n, 2 + n))
    C = np.eye(n) - np.ones((n, n)) / n
    P[2:, 2:] = C
    return P


def _nnls_ridge(X, y, P, lam, fixed: dict[int, float], tol=1e-12):
    """argmin ||X t - y||^2 + lam t'Pt  s.t. t >= 0, t[i] = fixed[i].

    Active-set iteration: pin the most negative coordinate, release pinned
    coordinates with a negative gradient.  The inner solve stacks the
    penalty rows and goes through SVD least squares after column
    equilibration, so the rank-deficient zero-loss manifold and wildly
    different parameter scales are both handled exactly.
    """
    m, n = X.shape
    D = np.ones(n)
    colmax = np.max(np.abs(X), axis=0)
    nz = colmax > 0
    D[nz] = 1.0 / colmax[nz]
    X = X * D
    # The centering penalty is idempotent, so stacking sqrt(lam) * (P D)
    # reproduces lam * (D P D) through the normal equations.
    R = math.sqrt(lam) * (P * D[None, :]) if lam > 0 else None
    P = P * D[:, None] * D[None, :]
    fixed = {j: v / D[j] for j, v in fixed.items()}
    G = X.T @ X + lam * P
    r = X.T @ y
    active = set()
    for _ in range(8 * n + 16):
        free = [j for j in range(n) if j not in active and j not in fixed]
        theta = np.zeros(n)
        for j, v in fixed.items():
            theta[j] = v
        if free:
            pinned = [j for j in range(n) if j not in free]
            vals = np.array([theta[j] for j in pinned])
            top_rhs = y - (X[:, pinned] @ vals if pinned else 0.0)
            if R is not None:
                A = np.vstack([X[:, free], R[:, free]])
                bot_rhs = -(R[:, pinned] @ vals) if pinned else np.zeros(n)
                rhs = np.concatenate([top_rhs, bot_rhs])
            else:
                A = X[:, free]
                rhs = top_rhs
            theta[free], *_ = np.linalg.lstsq(A, rhs, rcond=None)
        neg = [j for j in free if theta[j] < -tol]
        if neg:
            active.add(min(neg, key=lambda j: theta[j]))
            continue
        theta[theta < 0] = 0.0
        grad = 2.0 * (G @ theta - r)
        release = [j for j in active if grad[j] < -1e-10]
        if release:
            active.discard(min(release, key=lambda j: grad[j]))
            continue
        return theta * D, grad
    raise FittingError("active-set iteration did not settle")


def _variance(theta: np.ndarray) -> float:
    betas = theta[2:]
    return float(np.sum((betas - betas.mean()) ** 2))


def fit(samples: list[Sample], variance_bound: float = 0.001, *,
        fix_alpha: float | None = None, fix_delta: float | None = None,
        allow_ragged: bool = False, step_seconds: float = 3600.0) -> FitResult:
    """Estimate (alpha, beta_s, delta) from measured furnace runs."""
    if len(samples) < 2:
        raise FittingError("need at least 2 samples")
    horizons = {len(s.powers) for s in samples}
    if len(horizons) > 1 and not allow_ragged:
        raise FittingError(
            f"samples have mixed horizons {sorted(horizons)}; "
            "pass allow_ragged=True to accept")
    ids = [s.id for s in samples]
    if len(set(ids)) != len(ids):
        raise FittingError("duplicate sample ids")
    X, y, scale, p_sums = _design(samples, step_seconds)
    if np.any(p_sums == 0.0):
        zero = [s.id for s, ps in zip(samples, p_sums) if ps == 0.0]
        raise DegenerateDataError(
            f"all-zero power curves make beta unidentifiable: {zero}")
    n = len(samples)
    P = _center_penalty(n)
    fixed = {}
    if fix_alpha is not None:
        fixed[0] = float(fix_alpha)
    if fix_delta is not None:
        fixed[1] = float(fix_delta)

    if variance_bound == 0.0:
        theta, kkt_pooled = _fit_pooled(X, y, fixed, n)
        betas = {s.id: float(theta[2 + i]) for i, s in enumerate(samples)}
        resid = X @ theta - y
        return FitResult(
            alpha=float(theta[0]), beta_per_sample=betas,
            beta_bar=float(np.mean(theta[2:])), delta=float(theta[1]),
            sse=float(resid @ resid) * scale * scale,
            variance_used=0.0, kkt_residual=kkt_pooled, multiplier=-1.0)
    # A vanishing variance penalty resolves the lambda -> 0 limit: with n
    # samples and n+2 parameters the loss alone is rank deficient, and the
    # KKT point at an inactive ball is the minimum-variance loss minimizer.
    theta, grad = _nnls_ridge(X, y, P, 1e-9, fixed)
    lam = 0.0
    if _variance(theta) > variance_bound:
        lam_hi = 1.0
        for _ in range(200):
            th, _ = _nnls_ridge(X, y, P, lam_hi, fixed)
            if _variance(th) <= variance_bound:
                break
            lam_hi *= 4.0
        lam_lo = 0.0
        for _ in range(160):
            mid = 0.5 * (lam_lo + lam_hi)
            th, g = _nnls_ridge(X, y, P, mid, fixed)
            if _variance(th) > variance_bound:
                lam_lo = mid
            else:
                lam_hi = mid
        theta, grad = _nnls_ridge(X, y, P, lam_hi, fixed)
        lam = lam_hi

    betas = {s.id: float(theta[2 + i]) for i, s in enumerate(samples)}
    resid = X @ theta - y
    sse = float(resid @ resid) * scale * scale
    variance = _variance(theta)
    kkt = _kkt_residual(theta, grad, lam, variance_bound, fixed)
    return FitResult(
        alpha=float(theta[0]),
        beta_per_sample=betas,
        beta_bar=float(np.mean(theta[2:])),
        delta=float(theta[1]),
        sse=sse,
        variance_used=variance,
        kkt_residual=kkt,
        multiplier=float(lam),
    )


def _fit_pooled(X, y, fixed, n):
    """variance_bound == 0: all betas share one value."""
    Xp = np.zeros((X.shape[0], 3))
    Xp[:, 0] = X[:, 0]
    Xp[:, 1] = X[:, 1]
    Xp[:, 2] = X[:, 2:].sum(axis=1)
    fixed_p = {j: v for j, v in fixed.items() if j < 2}
    theta_p, grad_p = _nnls_ridge(Xp, y, np.zeros((3, 3)), 0.0, fixed_p)
    kkt = _kkt_residual(theta_p, grad_p, 0.0, 0.0, fixed_p)
    theta = np.zeros(2 + n)
    theta[0], theta[1] = theta_p[0], theta_p[1]
    theta[2:] = theta_p[2]
    return theta, kkt


def _kkt_residual(theta, grad, lam, variance_bound, fixed) -> float:
    """Scaled stationarity + complementarity residual of the returned point."""
    res = 0.0
    for j in range(len(theta)):
        if j in fixed:
            continue
        if theta[j] > 1e-10:
            res = max(res, abs(grad[j]))
        else:
            res = max(res, max(0.0, -grad[j]))
    if variance_bound and math.isfinite(lam):
        slack = _variance(theta) - variance_bound
        res = max(res, abs(lam * slack), max(0.0, slack))
    return float(res)


def leave_one_out(samples: list[Sample], variance_bound: float = 0.001, *,
                  step_seconds: float = 3600.0,
                  threads: int = 1) -> LooReport:
    """Hold out each sample, fit the rest, predict with the fold's mean beta."""
    if len(samples) < 3:
        raise FittingError("need at least 3 samples for leave-one-out")

    def one_fold(i: int):
        held = samples[i]
        rest = samples[:i] + samples[i + 1:]
        try:
            res = fit(rest, variance_bound, step_seconds=step_seconds)
        except DegenerateDataError:
            return held.id, None, None
        p_sum = step_seconds * float(np.sum(held.powers))
        pred = (res.alpha * held.mass * held.t_initial
                + res.beta_bar * p_sum - res.delta * len(held.powers))
        return held.id, pred, (pred - held.energy) ** 2

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one_fold, range(len(samples))))
    else:
        rows = [one_fold(i) for i in range(len(samples))]

    rows.sort(key=lambda r: r[0])  # deterministic merge by sample id
    predictions, sq_errors, degenerate = {}, {}, []
    for sid, pred, err in rows:
        if pred is None:
            degenerate.append(sid)
        else:
            predictions[sid] = float(pred)
            sq_errors[sid] = float(err)
    if not sq_errors:
        raise DegenerateDataError("every fold was degenerate")
    rmse = math.sqrt(math.fsum(sq_errors.values()) / len(sq_errors))
    mean_energy = math.fsum(s.energy for s in samples) / len(samples)
    return LooReport(predictions, sq_errors, rmse, mean_energy,
                     rmse / mean_energy, degenerate)


# ---------------------------------------------------------------------------
# Sample CSV:  sample_id, mass_kg, t0_K, energy_J, p_1, ..., p_H  (watts)
# ---------------------------------------------------------------------------


def read_samples_csv(path_or_text) -> list[Sample]:
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(str(text)))
    header = next(reader, None)
    if not header or header[:4] != ["sample_id", "mass_kg", "t0_K", "energy_J"]:
        raise FittingError(
            "sample CSV must start with columns sample_id,mass_kg,t0_K,energy_J")
    n_p = len(header) - 4
    if n_p < 1 or header[4:] != [f"p_{i}" for i in range(1, n_p + 1)]:
        raise FittingError("power columns must be named p_1..p_H")
    samples = []
    seen: dict[str, int] = {}
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FittingError(f"row {row_no}: expected {len(header)} fields")
        sid = row[0]
        if sid in seen:
            raise FittingError(
                f"row {row_no}: duplicate sample id {sid!r} (first at row {seen[sid]})")
        seen[sid] = row_no
        try:
            samples.append(Sample(
                sid, float(row[1]), float(row[2]),
                tuple(float(v) for v in row[4:]), float(row[3])))
        except ValueError as exc:
            raise FittingError(f"row {row_no}: {exc}") from None
    if not samples:
        raise FittingError("sample CSV has no data rows")
    return samples


def write_samples_csv(samples: list[Sample], path) -> None:
    H = max(len(s.powers) for s in samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "mass_kg", "t0_K", "energy_J"]
                   + [f"p_{i}" for i in range(1, H + 1)])
        for s in samples:
            pad = list(s.powers) + [0.0] * (H - len(s.powers))
            w.writerow([s.id, repr(float(s.mass)), repr(float(s.t_initial)),
                        repr(float(s.energy))] + [repr(float(p)) for p in pad])
