"""Lorentzian line fitting shared by the reduced-model and oracle spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LorentzianFit:
    """offset + amplitude * hwhm^2 / ((x - center)^2 + hwhm^2)."""

    center: float
    hwhm: float
    amplitude: float
    offset: float
    ok: bool
    rss: float
    iterations: int

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.offset + self.amplitude * self.hwhm**2 / (
            (x - self.center) ** 2 + self.hwhm**2
        )


def _initial_guess(x, y):
    off = float(np.min(y))
    k = int(np.argmax(y))
    amp = float(y[k] - off)
    center = float(x[k])
    # Half-power crossings around the peak; fall back to a span fraction.
    half = off + 0.5 * amp
    above = y >= half
    left = center - x[0]
    right = x[-1] - center
    for j in range(k, -1, -1):
        if not above[j]:
            left = center - x[j]
            break
    for j in range(k, len(x)):
        if not above[j]:
            right = x[j] - center
            break
    hwhm = 0.5 * (left + right)
    if not np.isfinite(hwhm) or hwhm <= 0:
        hwhm = (x[-1] - x[0]) / 6.0
    return np.array([center, hwhm, amp, off])


def lorentzian_fit(x, y, max_iter: int = 200) -> LorentzianFit:
    """Least-squares Lorentzian fit by damped Gauss-Newton.

    Parameters
    ----------
    x, y : arrays of equal length >= 4.

    Returns
    -------
    LorentzianFit
        With ok=False if the iteration failed to converge or the data
        cannot seed a peak (flat column).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 4:
        raise ValueError("need at least 4 samples to fit 4 parameters")
    p = _initial_guess(x, y)
    if p[2] <= 0:
        return LorentzianFit(p[0], abs(p[1]), p[2], p[3], False, float("inf"), 0)

    def residual(p):
        c, w, a, o = p
        denom = (x - c) ** 2 + w * w
        return o + a * w * w / denom - y

    def jacobian(p):
        c, w, a, o = p
        d = (x - c) ** 2 + w * w
        d2 = d * d
        j = np.empty((x.size, 4))
        j[:, 0] = a * w * w * 2.0 * (x - c) / d2
        j[:, 1] = a * 2.0 * w * (x - c) ** 2 / d2
        j[:, 2] = w * w / d
        j[:, 3] = 1.0
        return j

    r = residual(p)
    rss = float(r @ r)
    lam = 1e-3
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        j = jacobian(p)
        g = j.T @ r
        h = j.T @ j
        try:
            step = np.linalg.solve(h + lam * np.diag(np.diag(h) + 1e-30), -g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        p_new = p + step
        p_new[1] = abs(p_new[1])
        r_new = residual(p_new)
        rss_new = float(r_new @ r_new)
        if rss_new < rss:
            rel = abs(rss - rss_new) / max(rss, 1e-300)
            p, r, rss = p_new, r_new, rss_new
            lam = max(lam * 0.3, 1e-12)
            if rel < 1e-14 or np.max(np.abs(step)) < 1e-13 * (1 + np.max(np.abs(p))):
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                break
    if not converged and np.isfinite(rss) and rss > 0:
        # Stagnation at a first-order optimum (noise floor) counts as
        # convergence: test the gradient cosines against the residual.
        j = jacobian(p)
        g = j.T @ r
        jn = np.sqrt(np.sum(j * j, axis=0)) * np.sqrt(rss) + 1e-300
        converged = bool(np.max(np.abs(g) / jn) < 1e-6)
    span = x[-1] - x[0]
    ok = converged and np.isfinite(rss) and 0 < p[1] < 10.0 * span
    return LorentzianFit(
        center=float(p[0]), hwhm=float(abs(p[1])), amplitude=float(p[2]),
        offset=float(p[3]), ok=bool(ok), rss=rss, iterations=it,
    )
