"""Closed-form chirplike polyphase codes: Frank, P1, Px, P2, P4, Zadoff, Golomb.

Every phase is formed as 2 pi times an exact rational number, evaluated with
fractions.Fraction, so half-integer terms such as (M - 1 - m)/2 are never
rounded before scaling. Phases are not reduced modulo 2 pi.

Two-index codes are flattened with n (the group index) outer and k inner.
Chu codes are Zadoff codes with q = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .metrics import SidelobeMetrics, autocorr_fft, sidelobe_metrics
from .seqcore import UnimodularSequence

KINDS = ("frank", "p1", "px", "p2", "p4", "zadoff", "chu", "golomb")
_SQUARE = ("frank", "p1", "px")


@dataclass(frozen=True)
class CodeSpec:
    """Code family and its integer parameters.

    ``l`` is the group count for Frank, P1 and Px (length l^2); ``n`` may be
    given instead and must then be a perfect square. ``m`` is the length of
    the single-index codes. ``r`` and ``q`` parametrize Zadoff; ``r2`` is
    the Golomb multiplier.
    """

    kind: str
    l: Optional[int] = None
    m: Optional[int] = None
    n: Optional[int] = None
    r: int = 1
    q: int = 0
    r2: int = 1

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ValueError(f"unknown code kind {self.kind!r}; expected one of {KINDS}")
        if kind in _SQUARE:
            if self.l is None:
                if self.n is None:
                    raise ValueError(f"{kind} needs l (or a perfect-square n)")
                root = math.isqrt(self.n)
                if root * root != self.n:
                    raise ValueError(f"{kind} codes need a perfect-square length, got {self.n}")
                object.__setattr__(self, "l", root)
            elif self.n is not None and self.n != self.l * self.l:
                raise ValueError("n and l disagree")
            if self.l < 2:
                raise ValueError("l must be >= 2")
        else:
            if self.m is None:
                if self.n is None:
                    raise ValueError(f"{kind} needs m")
                object.__setattr__(self, "m", self.n)
            if self.m < 2:
                raise ValueError("m must be >= 2")
            if kind == "zadoff":
                if math.gcd(self.r, self.m) != 1:
                    raise ValueError(f"Zadoff needs gcd(r, M) = 1, got r={self.r}, M={self.m}")
                if not 0 <= self.q <= self.m:
                    raise ValueError("Zadoff needs 0 <= q <= M")
            if kind == "chu" and math.gcd(self.r, self.m) != 1:
                raise ValueError(f"Chu needs gcd(r, M) = 1, got r={self.r}, M={self.m}")
            if kind == "golomb" and math.gcd(self.r2, self.m) != 1:
                raise ValueError(f"Golomb needs gcd(r'', M) = 1, got r''={self.r2}, M={self.m}")

    @property
    def length(self) -> int:
        return self.l * self.l if self.kind in _SQUARE else self.m


def _cycles(spec: CodeSpec) -> list:
    """Phase of every element in units of 2 pi, as exact fractions."""
    kind = spec.kind
    if kind in _SQUARE:
        L = spec.l
        half = Fraction(L + 1, 2)
        out = []
        for n in range(1, L + 1):
            for k in range(1, L + 1):
                if kind == "frank":
                    v = Fraction((n - 1) * (k - 1), L)
                elif kind == "p1":
                    v = (half - n) * ((n - 1) * L + (k - 1)) / L
                elif L % 2 == 0:
                    v = (half - k) * (half - n) / L
                else:
                    v = (Fraction(L, 2) - k) * (half - n) / L
                out.append(v)
        return out
    M = spec.m
    out = []
    for m in range(1, M + 1):
        if kind == "p2":
            v = Fraction((m - 1) ** 2, 2 * M)
        elif kind == "p4":
            v = Fraction((m - 1) * (m - 1 - M), 2 * M)
        elif kind in ("zadoff", "chu"):
            q = spec.q if kind == "zadoff" else 0
            v = (m - 1) * (Fraction(spec.r * (M - 1 - m), 2) - q) / M
        else:
            v = Fraction(spec.r2 * (m - 1) * m, 2 * M)
        out.append(v)
    return out


def generate(spec: CodeSpec) -> UnimodularSequence:
    """Phases of the requested code, straight from its closed form."""
    return UnimodularSequence(np.array([2 * np.pi * float(v) for v in _cycles(spec)]))


def reference_metrics(spec: CodeSpec, p: float = 2.0) -> SidelobeMetrics:
    return sidelobe_metrics(autocorr_fft(generate(spec)), p)
