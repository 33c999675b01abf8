"""Step-heating (DC) trend estimation and bias-aware removal.

Each pixel trace under unipolar coded heating splits into a smooth
step-heating trend and a zero-mean coded ripple. The trend is fitted by
a1*t + a2*t^0.75 + a3*t^0.5 with non-negative coefficients, then a
scaled copy is subtracted: scaling by (1 - bias) keeps exactly the DC
share that the bias of a modified sequence accounts for, so the output
equals the response to the modified-sequence excitation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .codes import expected_bias
from .errors import BiasMismatch, DegenerateTrace
from .stack import ThermogramStack

_EXPONENTS = (1.0, 0.75, 0.5)


def design_matrix(times) -> np.ndarray:
    """Columns t, t^0.75, t^0.5 evaluated at the given times."""
    t = np.asarray(times, dtype=float)
    return np.stack([t ** e for e in _EXPONENTS], axis=1)


@dataclass(frozen=True)
class DcFit:
    """Non-negative coefficients of the trend fit plus its residual."""

    a1: float
    a2: float
    a3: float
    rms_residual: float
    bias_used: float = 0.0

    @property
    def coefficients(self):
        return np.array([self.a1, self.a2, self.a3])

    def evaluate(self, times) -> np.ndarray:
        return design_matrix(times) @ self.coefficients


class _PatternSolver:
    """Exact 3-variable NNLS by exhaustive active-set enumeration.

    With three coefficients there are eight sign patterns; solving the
    unconstrained least squares on every subset of columns and keeping
    the best feasible one is exactly optimal for this convex problem.
    """

    def __init__(self, times):
        self.matrix = design_matrix(times)
        self.subsets = []
        for mask in range(8):
            idx = [i for i in range(3) if mask >> i & 1]
            cols = self.matrix[:, idx]
            # pseudo-inverse per subset, reused across pixels of a stack
            pinv = np.linalg.pinv(cols) if idx else None
            self.subsets.append((idx, cols, pinv))

    def solve(self, trace):
        best_coefs, best_sq = np.zeros(3), float(np.dot(trace, trace))
        for idx, cols, pinv in self.subsets[1:]:
            sol = pinv @ trace
            if np.any(sol < 0):
                continue
            resid = trace - cols @ sol
            sq = float(np.dot(resid, resid))
            if sq < best_sq:
                best_sq = sq
                best_coefs = np.zeros(3)
                best_coefs[idx] = sol
        return best_coefs, np.sqrt(max(best_sq, 0.0) / len(trace))


def _check_trace(trace):
    trace = np.asarray(trace, dtype=float)
    if not np.isfinite(trace).all():
        raise DegenerateTrace("trace contains non-finite samples")
    if not np.any(trace):
        raise DegenerateTrace("trace is identically zero")
    return trace


def fit_dc(trace, timing) -> DcFit:
    """Non-negative least-squares trend fit of a pixel trace.

    Times are n * dt from the timing. The solution is the global
    optimum of the constrained problem.
    """
    trace = _check_trace(trace)
    times = np.arange(len(trace)) * timing.dt
    coefs, rms = _PatternSolver(times).solve(trace)
    return DcFit(a1=float(coefs[0]), a2=float(coefs[1]), a3=float(coefs[2]),
                 rms_residual=float(rms))


def _validate_bias(code):
    expected = expected_bias(code)
    if abs(code.bias - expected) > 1e-9 * max(1.0, abs(expected)):
        raise BiasMismatch(
            f"{code.kind.value} code carries bias {code.bias!r}, "
            f"expected {expected!r}")
    return code.bias


def remove_dc(trace, fit, code, timing) -> np.ndarray:
    """Subtract the scaled trend: trace - (1 - bias) * fitted trend.

    Standard codes have zero bias (plain subtraction); modified codes
    keep the bias share of the trend so the result matches the response
    to the biased sequence.
    """
    trace = np.asarray(trace, dtype=float)
    bias = _validate_bias(code)
    times = np.arange(len(trace)) * timing.dt
    return trace - (1.0 - bias) * fit.evaluate(times)


def remove_dc_stack(stack, code, timing):
    """Pixelwise fit and removal over a whole stack.

    Returns the DC-removed stack and a (ny, nx) object array of DcFit
    entries; pixels rejected as degenerate hold None and pass through
    as zero traces.
    """
    bias = _validate_bias(code)
    n_frames = stack.n_frames
    expected = timing.total_frames(code.n_bit)
    if n_frames != expected:
        raise ValueError(
            f"stack has {n_frames} frames, timing implies {expected}")
    times = np.arange(n_frames) * timing.dt
    solver = _PatternSolver(times)
    basis = solver.matrix
    out = np.zeros((n_frames, stack.ny, stack.nx), dtype=np.float64)
    fits = np.empty((stack.ny, stack.nx), dtype=object)
    for jy in range(stack.ny):
        for jx in range(stack.nx):
            trace = stack.data[:, jy, jx].astype(np.float64)
            try:
                trace = _check_trace(trace)
            except DegenerateTrace:
                fits[jy, jx] = None
                continue
            coefs, rms = solver.solve(trace)
            fits[jy, jx] = DcFit(a1=float(coefs[0]), a2=float(coefs[1]),
                                 a3=float(coefs[2]), rms_residual=float(rms),
                                 bias_used=bias)
            out[:, jy, jx] = trace - (1.0 - bias) * (basis @ coefs)
    metadata = dict(stack.metadata)
    metadata.update({
        "stage": "dc_removed",
        "code_kind": code.kind.value,
        "code_n_bit": str(code.n_bit),
        "bias": repr(bias),
    })
    removed = ThermogramStack(data=out.astype(np.float32), fps=stack.fps,
                              metadata=metadata)
    return removed, fits


def export_fit_map_csv(fits, path):
    """Diagnostic CSV of per-pixel fit coefficients (j_x, j_y, a1, a2, a3, rms)."""
    ny, nx = fits.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j_x", "j_y", "a1", "a2", "a3", "rms"])
        for jy in range(ny):
            for jx in range(nx):
                fit = fits[jy, jx]
                if fit is None:
                    writer.writerow([jx, jy, "nan", "nan", "nan", "nan"])
                else:
                    writer.writerow([jx, jy, repr(fit.a1), repr(fit.a2),
                                     repr(fit.a3), repr(fit.rms_residual)])
