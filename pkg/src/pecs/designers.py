"""Sequence designers with piecewise polynomial phase.

Three outer loops share one inner step. The l_p designer (PECS) uses the
majorization parameters from mm_engine, the ISL designer (MISL-PECS) uses the
frequency-domain ISL majorizer and the cyclic designer (CAN-PECS) alternates
a spectral phase-alignment step. Each produces a target vector y, and the
inner step fits every sub-sequence's phase polynomial to y by least squares.

Coefficients are handled internally on the scaled basis (m/M_l)^q and
converted to raw monomial coefficients for the public outputs.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .metrics import acorr_fft_raw, lp_norm
from .mm_engine import StoppingRule, majorizer_params, y_update
from .seqcore import Partition, PhasePolynomials, UnimodularSequence, synthesize

DESIGNERS = ("pecs", "misl_pecs", "can_pecs")
LS_VARIANTS = ("weighted", "unweighted", "lipschitz")

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class DesignConfig:
    """Design problem and solver settings.

    The partition is given by exactly one of ``m`` (uniform blocks),
    ``m_range`` (random lengths drawn from the seed) or ``lengths``.
    ``init_scale`` bounds the random initial coefficients on the scaled
    basis, so each term of the initial phase polynomial lies in
    [-init_scale, init_scale] radians.
    """

    n: int
    q: int = 2
    p: float = 2.0
    designer: str = "pecs"
    m: Optional[int] = None
    m_range: Optional[tuple] = None
    lengths: Optional[tuple] = None
    stopping: StoppingRule = field(default_factory=StoppingRule)
    seed: int = 0
    ls_variant: str = "weighted"
    init_scale: float = 0.05
    record_timing: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if not self.p >= 2:
            raise ValueError("p must be >= 2")
        if self.designer not in DESIGNERS:
            raise ValueError(f"designer must be one of {DESIGNERS}")
        if self.ls_variant not in LS_VARIANTS:
            raise ValueError(f"ls_variant must be one of {LS_VARIANTS}")
        given = sum(v is not None for v in (self.m, self.m_range, self.lengths))
        if given > 1:
            raise ValueError("give at most one of m, m_range, lengths")
        if self.lengths is not None:
            object.__setattr__(self, "lengths", tuple(int(v) for v in self.lengths))
            if sum(self.lengths) != self.n:
                raise ValueError("partition lengths must sum to n")
        if self.m_range is not None:
            lo, hi = (int(v) for v in self.m_range)
            if not 1 <= lo <= hi:
                raise ValueError("m_range must satisfy 1 <= min <= max")
            object.__setattr__(self, "m_range", (lo, hi))
        if self.m is not None and not 1 <= self.m <= self.n:
            raise ValueError("m must be in [1, n]")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")

    def partition(self) -> Partition:
        if self.lengths is not None:
            return Partition(self.lengths)
        if self.m_range is not None:
            return Partition.random(self.n, *self.m_range, rng=derive_rng(self.seed, "partition"))
        return Partition.uniform(self.n, self.m if self.m is not None else self.n)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["m_range"] = None if self.m_range is None else list(self.m_range)
        d["lengths"] = None if self.lengths is None else list(self.lengths)
        return d


def derive_rng(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Generator for a named component, derived from the master seed."""
    key = [int(seed), index] + [ord(c) for c in label]
    return np.random.default_rng(np.random.SeedSequence(key))


@dataclass(eq=False)
class DesignRun:
    """Result of one designer run.

    objective_history[i] is the objective after i accepted iterations
    (entry 0 is the initial point): the l_p norm of the sidelobes for PECS
    and the ISL for the other designers.
    """

    x_final: UnimodularSequence
    polys_final: PhasePolynomials
    partition: Partition
    objective_history: np.ndarray
    isl_db_history: np.ndarray
    psl_db_history: np.ndarray
    iterations: int
    converged: bool
    reason: str
    config: DesignConfig
    x_initial: UnimodularSequence
    fallbacks: dict = field(default_factory=dict)
    can_criterion: Optional[np.ndarray] = None
    wall_ms: Optional[np.ndarray] = None
    rank_flags: int = 0

    def summary(self) -> dict:
        return {
            "designer": self.config.designer,
            "iterations": self.iterations,
            "converged": self.converged,
            "reason": self.reason,
            "initial_isl_db": float(self.isl_db_history[0]),
            "initial_psl_db": float(self.psl_db_history[0]),
            "final_isl_db": float(self.isl_db_history[-1]),
            "final_psl_db": float(self.psl_db_history[-1]),
            "final_objective": float(self.objective_history[-1]),
            "fallbacks": dict(self.fallbacks),
            "rank_deficient_solves": self.rank_flags,
        }


class BlockLayout:
    """Padded, batched view of a partition for vectorized least squares.

    Every block is stored in a row of an L x M_max array. Rows beyond a
    block's length are padding with zero basis and zero weight, so they do
    not influence the solve.
    """

    def __init__(self, partition: Partition, q: int):
        self.partition = partition
        self.q = q
        lens = partition.lengths
        self.m_max = int(lens.max())
        L = partition.count
        m = np.arange(1, self.m_max + 1)
        self.mask = m[None, :] <= lens[:, None]
        self.index = np.where(self.mask, partition.offsets[:, None] + m[None, :] - 1, 0)
        scaled = m[None, :] / lens[:, None].astype(float)
        self.basis = np.where(self.mask[:, :, None], scaled[:, :, None] ** np.arange(q + 1), 0.0)
        self.scale = lens[:, None].astype(float) ** np.arange(q + 1)
        self.full_rank = lens >= q + 1
        self.shape = (L, q + 1)

    def phases(self, z: np.ndarray) -> np.ndarray:
        """Concatenated phases for scaled coefficients z (L x (Q+1))."""
        grid = np.einsum("lmq,lq->lm", self.basis, z)
        return grid[self.mask]

    def to_raw(self, z: np.ndarray) -> PhasePolynomials:
        return PhasePolynomials(z / self.scale)

    def from_raw(self, polys: PhasePolynomials) -> np.ndarray:
        if polys.coeffs.shape != self.shape:
            raise ValueError(f"coefficients must be {self.shape}, got {polys.coeffs.shape}")
        return polys.coeffs * self.scale

    def gather(self, v: np.ndarray) -> np.ndarray:
        return np.where(self.mask, v[self.index], 0.0)

    def system(self, y: np.ndarray, z_prev: np.ndarray, variant: str):
        """Least-squares matrices (A, b) for each block, shapes (L,M,Q+1) and (L,M)."""
        yb = self.gather(np.asarray(y, dtype=complex))
        rho = np.abs(yb)
        psi = np.angle(yb)
        phi = np.einsum("lmq,lq->lm", self.basis, z_prev)
        theta = phi - psi
        gamma = rho * np.cos(theta)
        sin_term = rho * np.sin(theta)
        if variant == "weighted":
            # rows scaled by rho cos(theta): second-order expansion of -rho cos(phi - psi)
            A = gamma[:, :, None] * self.basis
            b = gamma * phi - sin_term
            weight = np.abs(gamma)
        elif variant == "unweighted":
            A = self.basis
            b = gamma * phi - sin_term
            weight = self.mask.astype(float)
        elif variant == "lipschitz":
            # curvature bounded by rho, so this step never decreases sum rho cos(phi - psi)
            sq = np.sqrt(rho)
            A = sq[:, :, None] * self.basis
            b = sq * (phi - np.sin(theta))
            weight = rho
        else:
            raise ValueError(f"unknown ls_variant {variant!r}")
        return A, np.where(self.mask, b, 0.0), weight


def solve_blocks(A: np.ndarray, b: np.ndarray, z_prev: np.ndarray, weight: np.ndarray):
    """Batched least squares, one small problem per block.

    QR on full-rank blocks; blocks with a numerically singular R (or fewer
    rows than unknowns) use the SVD pseudo-inverse truncated at relative
    singular value 1e-12, which returns the minimum-norm solution. Blocks
    with no usable weight keep their previous coefficients.

    Returns:
        (z, n_flagged) where n_flagged counts degenerate blocks.
    """
    L, M, K = A.shape
    z = np.empty((L, K))
    dead = weight.max(axis=1) <= _RANK_TOL * max(1.0, float(weight.max(initial=0.0)))
    use_qr = np.zeros(L, dtype=bool)
    if M >= K:
        Qm, R = np.linalg.qr(A)
        d = np.abs(np.diagonal(R, axis1=1, axis2=2))
        dmax = d.max(axis=1)
        use_qr = (d.min(axis=1) > _RANK_TOL * dmax) & (dmax > 0) & ~dead
        if use_qr.any():
            rhs = np.einsum("lmk,lm->lk", Qm[use_qr], b[use_qr])
            z[use_qr] = np.linalg.solve(R[use_qr], rhs[:, :, None])[:, :, 0]
    rest = ~use_qr & ~dead
    if rest.any():
        z[rest] = (np.linalg.pinv(A[rest], rcond=_RANK_TOL) @ b[rest][:, :, None])[:, :, 0]
    z[dead] = z_prev[dead]
    return z, int(dead.sum())


def _subroutine(layout: BlockLayout, y, z_prev, variant, batched=True):
    A, b, weight = layout.system(y, z_prev, variant)
    if batched:
        return solve_blocks(A, b, z_prev, weight)
    z = np.empty_like(z_prev)
    flags = 0
    for l in range(A.shape[0]):
        sl = slice(l, l + 1)
        z[sl], k = solve_blocks(A[sl], b[sl], z_prev[sl], weight[sl])
        flags += k
    return z, flags


def pecs_subroutine(
    y,
    partition: Partition,
    polys_prev: PhasePolynomials,
    ls_variant: str = "weighted",
    batched: bool = True,
):
    """Fit each sub-sequence's phase polynomial to the target vector y.

    The phases are linearized around the previous polynomial, giving one
    small least-squares problem per block. ``batched=False`` solves the
    blocks one at a time and gives bitwise-identical results.

    Returns:
        (x_new, polys_new)
    """
    y = np.asarray(y, dtype=complex)
    if y.size != partition.n:
        raise ValueError("y length does not match the partition")
    if polys_prev.rows != partition.count:
        raise ValueError("coefficient rows do not match the partition")
    layout = BlockLayout(partition, polys_prev.degree)
    z_prev = layout.from_raw(polys_prev)
    z, _ = _subroutine(layout, y, z_prev, ls_variant, batched)
    polys = layout.to_raw(z)
    return synthesize(partition, polys), polys


def _linearization(y, partition: Partition, polys: PhasePolynomials, polys_ref: PhasePolynomials):
    y = np.asarray(y, dtype=complex)
    layout = BlockLayout(partition, polys.degree)
    yb = layout.gather(y)
    rho, psi = np.abs(yb), np.angle(yb)
    phi_ref = np.einsum("lmq,lq->lm", layout.basis, layout.from_raw(polys_ref))
    phi = np.einsum("lmq,lq->lm", layout.basis, layout.from_raw(polys))
    theta = phi_ref - psi
    return layout.mask, rho, theta, phi, phi_ref


def p4_surrogate(y, partition: Partition, polys: PhasePolynomials, polys_ref: PhasePolynomials) -> float:
    """Second-order expansion of -sum rho cos(phi - psi) around the reference phases."""
    mask, rho, theta, phi, phi_ref = _linearization(y, partition, polys, polys_ref)
    d = phi - phi_ref
    val = -rho * np.cos(theta) + d * rho * np.sin(theta) + 0.5 * d**2 * rho * np.cos(theta)
    return float(np.sum(np.where(mask, val, 0.0)))


def p5_surrogate(y, partition: Partition, polys: PhasePolynomials, polys_ref: PhasePolynomials) -> float:
    """Perfect-square objective sum_m (gamma_m phi_m - b_m)^2 solved by the weighted fit.

    gamma = rho cos(theta) and b = gamma phi_ref - rho sin(theta), with
    theta = phi_ref - psi taken at the reference coefficients.
    """
    mask, rho, theta, phi, phi_ref = _linearization(y, partition, polys, polys_ref)
    gamma = rho * np.cos(theta)
    val = (gamma * phi - (gamma * phi_ref - rho * np.sin(theta))) ** 2
    return float(np.sum(np.where(mask, val, 0.0)))


def initial_coefficients(layout: BlockLayout, seed: int, scale: float) -> np.ndarray:
    """Random chirp-like start: scaled-basis terms up to degree 2, uniform on [-scale, scale].

    Higher-degree terms start at zero, so runs that differ only in Q >= 2
    share the same initial sequence.
    """
    rng = derive_rng(seed, "init")
    low = rng.uniform(-scale, scale, (layout.shape[0], 3))
    z = np.zeros(layout.shape)
    k = min(3, layout.q + 1)
    z[:, :k] = low[:, :k]
    return z


def misl_y(s: np.ndarray, f: Optional[np.ndarray] = None) -> np.ndarray:
    """Target vector of the ISL majorizer, scaled by 1/(2N (f_max + N^2)).

    Up to that positive factor this is
    -A (Diag(|A^H x|^2) - f_max I - N^2 I) A^H x.
    """
    n = s.size
    if f is None:
        f = np.fft.fft(s, 2 * n)
    power = np.abs(f) ** 2
    top = power.max() + n * n
    return np.fft.ifft((top - power) / top * f)[:n]


def isl_time(s: np.ndarray) -> float:
    raw = acorr_fft_raw(s)
    return float(np.sum(np.abs(raw[1 : s.size]) ** 2))


def isl_frequency_form(s: np.ndarray) -> float:
    """ISL = (1/4N) sum_g (|fft(x, 2N)_g|^2 - N)^2."""
    n = s.size
    power = np.abs(np.fft.fft(s, 2 * n)) ** 2
    return float(np.sum((power - n) ** 2) / (4 * n))


def misl_surrogate(s: np.ndarray, s_ref: np.ndarray) -> float:
    """Re(x^H (A (Diag f - f_max I) A^H - 2N^2 x_ref x_ref^H) x_ref) with f from x_ref."""
    n = s.size
    F = np.fft.fft(s_ref, 2 * n)
    power = np.abs(F) ** 2
    # A v = 2N ifft(v)[:N] for the un-normalized steering matrix
    a_term = 2 * n * np.fft.ifft((power - power.max()) * F)[:n]
    rank_one = 2 * n * n * s_ref * np.vdot(s_ref, s_ref)
    return float(np.real(np.vdot(s, a_term - rank_one)))


def can_criterion(s: np.ndarray, v: np.ndarray) -> float:
    """|| A* x_bar - v || with the unitary 2N-point DFT and v of modulus 1/sqrt(2)."""
    n = s.size
    return float(np.linalg.norm(np.fft.fft(s, 2 * n) / np.sqrt(2 * n) - v))


def can_v_step(s: np.ndarray) -> np.ndarray:
    """Best unit-modulus (scaled by 1/sqrt 2) spectrum for the current sequence."""
    F = np.fft.fft(s, 2 * s.size)
    return np.exp(1j * np.angle(F)) / np.sqrt(2)


def _sidelobe_db(raw: np.ndarray, n: int):
    mag = np.abs(raw[1:n])
    isl = float(np.sum(mag**2))
    psl = float(mag.max())
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(isl)), float(10 * np.log10(psl)), mag


class _Recorder:
    def __init__(self, timing: bool):
        self.obj, self.isl, self.psl = [], [], []
        self.timing = timing
        self.ms = [] if timing else None
        self.t0 = time.perf_counter()

    def add(self, obj, isl_db, psl_db):
        self.obj.append(obj)
        self.isl.append(isl_db)
        self.psl.append(psl_db)
        if self.timing:
            self.ms.append((time.perf_counter() - self.t0) * 1e3)


def _prepare(config: DesignConfig, x0):
    partition = config.partition()
    layout = BlockLayout(partition, config.q)
    if x0 is None:
        z = initial_coefficients(layout, config.seed, config.init_scale)
    elif isinstance(x0, PhasePolynomials):
        z = layout.from_raw(x0)
    else:
        raise TypeError("x0 must be None or PhasePolynomials (the start must satisfy the phase constraint)")
    return partition, layout, z


def _fallback_chain(variant: str):
    chain = [variant]
    for v in ("unweighted", "lipschitz"):
        if v not in chain:
            chain.append(v)
    if variant == "lipschitz":
        chain = ["lipschitz"]
    return chain


def _descent_loop(config, x0, objective, target):
    """Shared MM loop for PECS and MISL-PECS with the safeguard chain.

    objective(raw) -> value to minimize, from the raw correlation vector.
    target(s, f, raw) -> y vector, or None when the iterate is already optimal.
    """
    partition, layout, z = _prepare(config, x0)
    s = np.exp(1j * layout.phases(z))
    x_initial = UnimodularSequence(layout.phases(z))
    n = s.size
    f = np.fft.fft(s, 2 * n)
    raw = acorr_fft_raw(s, f)
    obj = objective(raw)
    rec = _Recorder(config.record_timing)
    isl_db, psl_db, _ = _sidelobe_db(raw, n)
    rec.add(obj, isl_db, psl_db)
    chain = _fallback_chain(config.ls_variant)
    counts = {v: 0 for v in chain}
    counts["held"] = 0
    rule = config.stopping
    flags = 0
    converged, reason = False, "max_iters"
    it = 0
    for it in range(1, rule.max_iters + 1):
        y = target(s, f, raw)
        if y is None:
            converged, reason = True, "impulse autocorrelation"
            it -= 1
            break
        accepted = False
        for variant in chain:
            z_new, k = _subroutine(layout, y, z, variant)
            ph_new = layout.phases(z_new)
            s_new = np.exp(1j * ph_new)
            f_new = np.fft.fft(s_new, 2 * n)
            raw_new = acorr_fft_raw(s_new, f_new)
            obj_new = objective(raw_new)
            if obj_new <= obj:
                accepted = True
                counts[variant] += 1
                flags += k
                break
        if not accepted:
            counts["held"] += 1
            converged, reason = True, "stalled: no candidate decreased the objective"
            it -= 1
            break
        step = float(np.max(np.abs(ph_new - layout.phases(z))))
        z, s, f, raw, obj = z_new, s_new, f_new, raw_new, obj_new
        isl_db, psl_db, _ = _sidelobe_db(raw, n)
        rec.add(obj, isl_db, psl_db)
        if rule.stalled(rec.obj, step):
            converged, reason = True, "tolerance"
            break
    return DesignRun(
        x_final=UnimodularSequence(layout.phases(z)),
        polys_final=layout.to_raw(z),
        partition=partition,
        objective_history=np.asarray(rec.obj),
        isl_db_history=np.asarray(rec.isl),
        psl_db_history=np.asarray(rec.psl),
        iterations=it,
        converged=converged,
        reason=reason,
        config=config,
        x_initial=x_initial,
        fallbacks=counts,
        wall_ms=None if rec.ms is None else np.asarray(rec.ms),
        rank_flags=flags,
    )


def run_pecs(config: DesignConfig, x0: Optional[PhasePolynomials] = None) -> DesignRun:
    """Minimize the l_p norm of the autocorrelation sidelobes.

    Each iteration builds the majorizer parameters, forms y, and runs the
    polynomial fit. A candidate that increases the true objective is
    recomputed with the unweighted and then the curvature-bounded fit; if
    none decreases it, the iterate is kept and the run stops.
    """
    p = config.p
    n = config.n

    def objective(raw):
        return lp_norm(raw[1:n], p)

    def target(s, f, raw):
        x = UnimodularSequence(np.angle(s))
        params = majorizer_params(x, p, f=f, raw=raw)
        if params.impulse:
            return None
        return y_update(x, params)

    return _descent_loop(config, x0, objective, target)


def run_misl_pecs(config: DesignConfig, x0: Optional[PhasePolynomials] = None) -> DesignRun:
    """Minimize the ISL through its frequency-domain quartic majorizer."""
    n = config.n

    def objective(raw):
        return float(np.sum(np.abs(raw[1:n]) ** 2))

    def target(s, f, raw):
        return misl_y(s, f)

    return _descent_loop(config, x0, objective, target)


def run_can_pecs(config: DesignConfig, x0: Optional[PhasePolynomials] = None) -> DesignRun:
    """Cyclic spectral phase alignment followed by the polynomial fit.

    The ISL is recorded as the objective and the alignment criterion D is
    recorded in ``can_criterion``; neither is forced to decrease.
    """
    partition, layout, z = _prepare(config, x0)
    s = np.exp(1j * layout.phases(z))
    x_initial = UnimodularSequence(layout.phases(z))
    n = s.size
    rec = _Recorder(config.record_timing)
    f = np.fft.fft(s, 2 * n)
    isl_db, psl_db, mag = _sidelobe_db(acorr_fft_raw(s, f), n)
    rec.add(float(np.sum(mag**2)), isl_db, psl_db)
    crit = []
    rule = config.stopping
    flags = 0
    converged, reason = False, "max_iters"
    it = 0
    for it in range(1, rule.max_iters + 1):
        v = np.exp(1j * np.angle(f)) / np.sqrt(2)
        crit.append(can_criterion(s, v))
        d = np.fft.ifft(v)[:n]
        y = np.exp(1j * np.angle(d))
        z_new, k = _subroutine(layout, y, z, config.ls_variant)
        flags += k
        ph_new = layout.phases(z_new)
        step = float(np.max(np.abs(ph_new - layout.phases(z))))
        z = z_new
        s = np.exp(1j * ph_new)
        f = np.fft.fft(s, 2 * n)
        isl_db, psl_db, mag = _sidelobe_db(acorr_fft_raw(s, f), n)
        rec.add(float(np.sum(mag**2)), isl_db, psl_db)
        if rule.abs_phase_tol > 0 and step < rule.abs_phase_tol:
            converged, reason = True, "tolerance"
            break
        if len(crit) > rule.window and rule.rel_obj_tol > 0:
            old = crit[-1 - rule.window]
            if old > 0 and abs(old - crit[-1]) / old < rule.rel_obj_tol:
                converged, reason = True, "tolerance"
                break
    return DesignRun(
        x_final=UnimodularSequence(layout.phases(z)),
        polys_final=layout.to_raw(z),
        partition=partition,
        objective_history=np.asarray(rec.obj),
        isl_db_history=np.asarray(rec.isl),
        psl_db_history=np.asarray(rec.psl),
        iterations=it,
        converged=converged,
        reason=reason,
        config=config,
        x_initial=x_initial,
        fallbacks={config.ls_variant: it},
        can_criterion=np.asarray(crit),
        wall_ms=None if rec.ms is None else np.asarray(rec.ms),
        rank_flags=flags,
    )


def run_design(config: DesignConfig, x0: Optional[PhasePolynomials] = None) -> DesignRun:
    runner = {"pecs": run_pecs, "misl_pecs": run_misl_pecs, "can_pecs": run_can_pecs}[config.designer]
    return runner(config, x0)


def run_mm_psl(p: float, x0: UnimodularSequence, stopping: StoppingRule) -> UnimodularSequence:
    """Unconstrained l_p majorization: every phase free, x = e^{j arg y}.

    Reference point for the fully unconstrained special case of the
    polynomial-phase designer.
    """
    x = x0
    hist = []
    for _ in range(stopping.max_iters):
        params = majorizer_params(x, p)
        if params.impulse:
            break
        hist.append(params.t)
        x = UnimodularSequence(np.angle(y_update(x, params)))
        if stopping.stalled(hist):
            break
    return x
