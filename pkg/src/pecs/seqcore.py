"""Sequence representation: unimodular sequences, partitions and polynomial phase.

A sequence is stored as its phase vector, so unit modulus holds by
construction. A partition splits the sequence into consecutive sub-sequences
and each sub-sequence carries a phase polynomial evaluated at m = 1..M_l.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class UnimodularSequence:
    """Constant-modulus sequence stored as phases in radians."""

    phases: np.ndarray

    def __post_init__(self):
        ph = _frozen(self.phases)
        if ph.ndim != 1:
            raise ValueError("phases must be a 1-D vector")
        if ph.size < 2:
            raise ValueError(f"sequence length must be >= 2, got {ph.size}")
        if not np.all(np.isfinite(ph)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phases", ph)

    @classmethod
    def from_complex(cls, z) -> "UnimodularSequence":
        """Keep only the phase of each complex sample."""
        return cls(np.angle(np.asarray(z, dtype=complex)))

    @property
    def n(self) -> int:
        return int(self.phases.size)

    def __len__(self) -> int:
        return self.n

    @property
    def samples(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def __eq__(self, other):
        if not isinstance(other, UnimodularSequence):
            return NotImplemented
        return np.array_equal(self.phases, other.phases)

    def __hash__(self):
        return hash(self.phases.tobytes())


@dataclass(frozen=True, eq=False)
class Partition:
    """Lengths M_1..M_L of consecutive sub-sequences."""

    lengths: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.lengths)
        if raw.ndim != 1 or raw.size < 1:
            raise ValueError("partition needs at least one sub-sequence")
        if not np.all(np.equal(np.mod(raw, 1), 0)):
            raise ValueError("sub-sequence lengths must be integers")
        lens = _frozen(raw, dtype=np.int64)
        if np.any(lens < 1):
            raise ValueError("every sub-sequence length must be >= 1")
        object.__setattr__(self, "lengths", lens)

    @classmethod
    def uniform(cls, n: int, m: int) -> "Partition":
        """Blocks of length m; a shorter final block absorbs any remainder."""
        if m < 1 or n < 1:
            raise ValueError("n and m must be positive")
        lens = [m] * (n // m)
        if n % m:
            lens.append(n % m)
        return cls(lens)

    @classmethod
    def random(cls, n: int, m_min: int, m_max: int, rng: np.random.Generator) -> "Partition":
        """Lengths drawn uniformly from [m_min, m_max]; the last one is trimmed to fit n."""
        if not 1 <= m_min <= m_max:
            raise ValueError("need 1 <= m_min <= m_max")
        lens = []
        total = 0
        while total < n:
            m = int(rng.integers(m_min, m_max + 1))
            m = min(m, n - total)
            lens.append(m)
            total += m
        return cls(lens)

    @property
    def n(self) -> int:
        return int(self.lengths.sum())

    @property
    def count(self) -> int:
        return int(self.lengths.size)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.lengths)[:-1]])

    def slices(self):
        return [slice(int(o), int(o + m)) for o, m in zip(self.offsets, self.lengths)]

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.lengths, other.lengths)

    def __hash__(self):
        return hash(self.lengths.tobytes())


@dataclass(frozen=True, eq=False)
class PhasePolynomials:
    """Per-sub-sequence coefficients; row l holds a_0..a_Q for block l."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("coeffs must be an L x (Q+1) matrix")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def rows(self) -> int:
        return self.coeffs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PhasePolynomials):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())


def polynomial_phase(coeffs, m_len: int) -> np.ndarray:
    """Evaluate sum_q a_q m^q at m = 1..m_len."""
    m = np.arange(1, m_len + 1, dtype=float)
    return np.polynomial.polynomial.polyval(m, np.asarray(coeffs, dtype=float))


def synthesize(partition: Partition, polys: PhasePolynomials) -> UnimodularSequence:
    """Concatenate e^{j sum_q a_{q,l} m^q} over the sub-sequences."""
    if polys.rows != partition.count:
        raise ValueError(
            f"partition has {partition.count} sub-sequences but coeffs have {polys.rows} rows"
        )
    parts = [polynomial_phase(polys.coeffs[l], int(m)) for l, m in enumerate(partition.lengths)]
    return UnimodularSequence(np.concatenate(parts))


def unwrap_phase(x: UnimodularSequence) -> np.ndarray:
    """Standard unwrap of arg(x): first entry in (-pi, pi], jumps above pi removed."""
    return np.unwrap(np.angle(x.samples))


def wrap_to_pi(a) -> np.ndarray:
    """Map angles to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    return np.pi - np.mod(np.pi - a, 2 * np.pi)


def scaled_basis(m_len: int, q: int) -> np.ndarray:
    """Columns (m / m_len)^q for m = 1..m_len, q = 0..Q."""
    m = np.arange(1, m_len + 1, dtype=float) / m_len
    return m[:, None] ** np.arange(q + 1)


def fit_phase_polynomial(phases, q: int):
    """Least-squares degree-q fit of phases over m = 1..M.

    The phases are fitted as given, so pass an unwrapped vector. The fit
    runs on the scaled basis (m/M)^q and the coefficients are mapped back to
    the raw monomials m^q.

    Returns:
        (coeffs, residual_norm) with coeffs ordered a_0..a_q.
    """
    ph = np.asarray(phases, dtype=float)
    if q < 0:
        raise ValueError("degree must be >= 0")
    m_len = ph.size
    if m_len < q + 1:
        raise ValueError(f"need at least {q + 1} samples for a degree-{q} fit, got {m_len}")
    basis = scaled_basis(m_len, q)
    z, *_ = np.linalg.lstsq(basis, ph, rcond=None)
    resid = float(np.linalg.norm(basis @ z - ph))
    return z / float(m_len) ** np.arange(q + 1), resid


def constraint_residual(x: UnimodularSequence, partition: Partition, q: int) -> float:
    """Largest deviation of any sub-sequence from a degree-q polynomial phase.

    Uses the fact that the (q+1)-th finite difference of a degree-q polynomial
    sampled at consecutive integers vanishes, so for a feasible sequence the
    same difference of the wrapped phases is a multiple of 2 pi. This needs no
    unwrapping and no candidate coefficients. Blocks with at most q+1 samples
    are unconstrained and contribute zero.
    """
    if partition.n != x.n:
        raise ValueError("partition does not cover the sequence")
    ph = x.phases
    worst = 0.0
    for sl in partition.slices():
        block = ph[sl]
        if block.size <= q + 1:
            continue
        d = np.diff(block, n=q + 1)
        worst = max(worst, float(np.max(np.abs(wrap_to_pi(d)))))
    return worst


def witness_residual(x: UnimodularSequence, partition: Partition, polys: PhasePolynomials) -> float:
    """Fit residual of each block after unwrapping against the claimed polynomial.

    Each block's phase is lifted onto the branch closest to its claimed
    polynomial, refitted blind with fit_phase_polynomial, and the largest fit
    residual is returned.
    """
    q = polys.degree
    worst = 0.0
    for l, sl in enumerate(partition.slices()):
        block = x.phases[sl]
        if block.size < q + 1:
            continue
        ref = polynomial_phase(polys.coeffs[l], block.size)
        lifted = ref + wrap_to_pi(block - ref)
        _, resid = fit_phase_polynomial(lifted, q)
        worst = max(worst, resid)
    return worst


def random_unimodular(n: int, seed: int) -> UnimodularSequence:
    """Phases i.i.d. uniform on [0, 2 pi) from a seeded generator."""
    if n < 2:
        raise ValueError(f"sequence length must be >= 2, got {n}")
    rng = np.random.default_rng(seed)
    return UnimodularSequence(rng.uniform(0.0, 2 * np.pi, n))


def sequence_to_dict(
    x: UnimodularSequence,
    partition: Optional[Partition] = None,
    polys: Optional[PhasePolynomials] = None,
    seed: Optional[int] = None,
) -> dict:
    return {
        "n": x.n,
        "phases_rad": [float(v) for v in x.phases],
        "partition": None if partition is None else [int(v) for v in partition.lengths],
        "poly_coeffs": None if polys is None else [[float(v) for v in row] for row in polys.coeffs],
        "seed": None if seed is None else int(seed),
    }


def sequence_from_dict(d: dict):
    """Inverse of sequence_to_dict; returns (x, partition, polys, seed)."""
    try:
        x = UnimodularSequence(d["phases_rad"])
        if int(d["n"]) != x.n:
            raise ValueError(f"declared n={d['n']} but {x.n} phases given")
        part = Partition(d["partition"]) if d.get("partition") is not None else None
        polys = PhasePolynomials(d["poly_coeffs"]) if d.get("poly_coeffs") is not None else None
    except KeyError as exc:
        raise ValueError(f"sequence object missing field {exc}") from None
    if part is not None and part.n != x.n:
        raise ValueError("partition lengths do not sum to n")
    if polys is not None and (part is None or polys.rows != part.count):
        raise ValueError("poly_coeffs rows do not match the partition")
    return x, part, polys, d.get("seed")


def load_sequence(path) -> UnimodularSequence:
    """Read a sequence JSON file; a top-level 'sequence' key is also accepted."""
    d = json.loads(Path(path).read_text())
    if "sequence" in d and "phases_rad" not in d:
        d = d["sequence"]
    return sequence_from_dict(d)[0]


def as_sequence(x) -> UnimodularSequence:
    if isinstance(x, UnimodularSequence):
        return x
    return UnimodularSequence.from_complex(x)


def concat(parts: Sequence[UnimodularSequence]) -> UnimodularSequence:
    return UnimodularSequence(np.concatenate([p.phases for p in parts]))
