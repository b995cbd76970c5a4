"""Quadrature reference values for the scalar toy problem.

``X ~ N(0, 1)``, ``U = a X + b``, ``Z = U D`` with ``D ~ N(1, sigma^2)``.
Everything here is deterministic numerical integration; nothing is shared
with the Monte-Carlo estimators it is used to check.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

ORACLE_TOL = 1e-6
_HALF_LOG_2PIE = 0.5 * math.log(2 * math.pi * math.e)
_TAIL = 12.0


def _normal_pdf(x, mean, std):
    r = (x - mean) / std
    return np.exp(-0.5 * r * r) / (std * math.sqrt(2 * math.pi))


@dataclass(frozen=True)
class ToyOracle:
    a: float = 2.0
    b: float = 0.5
    sigma: float = 0.1
    tol: float = ORACLE_TOL

    def key(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def _quad(self, fn, lo, hi, points=None):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            pts = [p for p in (points or []) if lo < p < hi] or None
            return integrate.quad(fn, lo, hi, epsabs=self.tol, epsrel=self.tol, limit=500, points=pts)[0]

    def conditional_entropy(self) -> float:
        """``h(Z|X) = log(sigma) + log(2 pi e)/2 + E[log |U|]``."""
        su = abs(self.a)
        lo, hi = self.b - _TAIL * su, self.b + _TAIL * su
        e_log = self._quad(lambda u: _normal_pdf(u, self.b, su) * math.log(abs(u)) if u else 0.0,
                           lo, hi, points=[0.0])
        return math.log(self.sigma) + _HALF_LOG_2PIE + e_log

    def density(self, z: float) -> float:
        """``p(z) = int p_D(d) p_U(z/d) / |d| dd``."""
        su = abs(self.a)
        lo, hi = 1.0 - _TAIL * self.sigma, 1.0 + _TAIL * self.sigma

        def integrand(d):
            if d == 0.0:
                return 0.0
            return _normal_pdf(d, 1.0, self.sigma) * _normal_pdf(z / d, self.b, su) / abs(d)

        return self._quad(integrand, lo, hi, points=[0.0, 1.0])

    def marginal_entropy(self) -> float:
        su = abs(self.a)
        reach = (abs(self.b) + _TAIL * su) * (1.0 + _TAIL * self.sigma)

        def integrand(z):
            p = self.density(z)
            return -p * math.log(p) if p > 0 else 0.0

        scale = abs(self.b) + su
        knots = [-scale, -0.1 * scale, 0.1 * scale, scale]
        neg = self._quad(integrand, -reach, 0.0, points=knots)
        pos = self._quad(integrand, 0.0, reach, points=knots)
        return neg + pos

    def mutual_information(self) -> float:
        return self.marginal_entropy() - self.conditional_entropy()

    def values(self) -> dict:
        h_zx = self.conditional_entropy()
        h_z = self.marginal_entropy()
        return {"h_z": h_z, "h_z_given_x": h_zx, "mi": h_z - h_zx}


def cached_oracle(oracle: ToyOracle, cache_dir: str | Path | None = None) -> dict:
    """Oracle values, read from / written to ``cache_dir/oracle-<hash>.json`` when given."""
    if cache_dir is None:
        return oracle.values()
    path = Path(cache_dir) / f"oracle-{oracle.key()}.json"
    if path.exists():
        return json.loads(path.read_text())["values"]
    values = oracle.values()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"params": asdict(oracle), "values": values}, indent=2, sort_keys=True))
    return values
