"""Frames from principal symbols, frame transitions, the spin homomorphism and its lifts.

Convention: Π(𝓡)_j^k = ½ tr(s^j 𝓡 s^k 𝓡*) with s⁴ = Id. Π is a homomorphism with
Π(Id) = Id. A gauge map R acting by S̃(u, v) = S(Ru, Rv) moves frames by
ẽ = |det R|^{-4/3} Π(R*) e, so a lift 𝓡 of a frame transition determines the gauge map
through R = |det 𝓡|^{-2} 𝓡* (see `gauge_from_lift`).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chart import loop_samples
from .conf import resolve, thread_count
from .exceptions import (
    ClosureFailure,
    DegenerateFrame,
    GridMismatch,
    LiftVerificationFailed,
    NoLift,
    NotInGroup,
    SamplingTooCoarse,
)

logger = logging.getLogger(__name__)

MAX_REFINEMENTS = 4


class PauliBasis:
    """Standard basis of 2×2 Hermitian matrices and the Minkowski metric."""

    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    s4 = np.eye(2, dtype=complex)

    upper = np.stack([s1, s2, s3, s4])
    lower = np.stack([s1, s2, s3, -s4])
    eta = np.diag([1.0, 1.0, 1.0, -1.0])

    @classmethod
    def metric(cls, dim):
        return cls.eta if dim == 4 else np.eye(3)


SIGMA = PauliBasis.upper[:3]


def density_frame(E):
    """f_j^α = ½ tr(s^j E^α): the frame scaled by ρ, shape (P, m, m)."""
    dim = E.shape[1]
    return 0.5 * np.einsum("jik,paki->pja", PauliBasis.upper[:dim], E).real


@dataclass(frozen=True, eq=False)
class Frame:
    """Rows e[:, j] are the vectors e_j^α."""

    e: np.ndarray
    orthonormality_error: float

    @property
    def dim(self):
        return self.e.shape[-1]

    @property
    def determinant(self):
        return np.linalg.det(self.e)


def frame_from_symbol(S, metric, tolerances=None, points=None):
    """e_j^α = tr(s^j E^α) / (2ρ)."""
    tolerances = resolve(tolerances)
    E = S.sample(points).E
    e = density_frame(E) / metric.rho[:, None, None]
    determinant = np.linalg.det(e)
    if not np.all(np.isfinite(determinant)) or np.min(np.abs(determinant)) <= tolerances.degenerate:
        raise DegenerateFrame("frame vectors are linearly dependent somewhere on the grid")
    gram = np.einsum("pja,pab,pkb->pjk", e, metric.g_down, e)
    error = float(np.max(np.abs(gram - PauliBasis.metric(e.shape[-1]))))
    if error > tolerances.orthonormal:
        raise DegenerateFrame(f"frame is not orthonormal (error {error:.3e})")
    return Frame(e=e, orthonormality_error=error)


@dataclass(frozen=True, eq=False)
class FrameTransition:
    """ẽ = O e; `normalized` is O/λ, an element of SO⁺(3,1) or SO(3)."""

    O: np.ndarray
    lam: np.ndarray
    normalized: np.ndarray
    group_error: float


def transition(frame_e, frame_etilde, tolerances=None):
    tolerances = resolve(tolerances)
    O = frame_etilde.e @ np.linalg.inv(frame_e.e)
    dim = O.shape[-1]
    determinant = np.linalg.det(O)
    if np.any(determinant <= 0):
        raise NotInGroup("frame transition reverses orientation")
    lam = determinant**0.25 if dim == 4 else np.ones_like(determinant)
    normalized = O / lam[:, None, None]
    metric = PauliBasis.metric(dim)
    error = float(
        np.max(np.abs(np.einsum("pjk,kl,pml->pjm", normalized, metric, normalized) - metric))
    )
    if error > tolerances.group:
        raise NotInGroup(f"normalised transition leaves the group (error {error:.3e})")
    if dim == 4 and np.any(normalized[:, 3, 3] <= 0):
        raise NotInGroup("frame transition reverses time orientation")
    return FrameTransition(O=O, lam=lam, normalized=normalized, group_error=error)


# --------------------------
# Spin homomorphism
# --------------------------
def spin_hom(R, dim=4):
    """Π(𝓡)_j^k = ½ tr(s^j 𝓡 s^k 𝓡*), batched over leading axes."""
    R = np.asarray(R, dtype=complex)
    conjugated = np.einsum("...ab,kbc,...dc->...kad", R, PauliBasis.upper, np.conj(R))
    O = 0.5 * np.einsum("jda,...kad->...jk", PauliBasis.upper, conjugated).real
    return O[..., :dim, :dim]


def _su2_from_rotation(rotation):
    """Unit quaternion (w ≥ 0) of each rotation, returned as w Id − i(x s1 + y s2 + z s3)."""
    m = rotation
    trace = m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2]
    branch = np.argmax(np.stack([trace, m[:, 0, 0], m[:, 1, 1], m[:, 2, 2]], axis=1), axis=1)
    q = np.empty((len(m), 4))

    rows = branch == 0
    t = 2.0 * np.sqrt(np.maximum(1.0 + trace[rows], 0.0))
    q[rows] = np.stack(
        [
            0.25 * t,
            (m[rows, 2, 1] - m[rows, 1, 2]) / t,
            (m[rows, 0, 2] - m[rows, 2, 0]) / t,
            (m[rows, 1, 0] - m[rows, 0, 1]) / t,
        ],
        axis=1,
    )
    rows = branch == 1
    t = 2.0 * np.sqrt(np.maximum(1.0 + m[rows, 0, 0] - m[rows, 1, 1] - m[rows, 2, 2], 0.0))
    q[rows] = np.stack(
        [
            (m[rows, 2, 1] - m[rows, 1, 2]) / t,
            0.25 * t,
            (m[rows, 0, 1] + m[rows, 1, 0]) / t,
            (m[rows, 0, 2] + m[rows, 2, 0]) / t,
        ],
        axis=1,
    )
    rows = branch == 2
    t = 2.0 * np.sqrt(np.maximum(1.0 - m[rows, 0, 0] + m[rows, 1, 1] - m[rows, 2, 2], 0.0))
    q[rows] = np.stack(
        [
            (m[rows, 0, 2] - m[rows, 2, 0]) / t,
            (m[rows, 0, 1] + m[rows, 1, 0]) / t,
            0.25 * t,
            (m[rows, 1, 2] + m[rows, 2, 1]) / t,
        ],
        axis=1,
    )
    rows = branch == 3
    t = 2.0 * np.sqrt(np.maximum(1.0 - m[rows, 0, 0] - m[rows, 1, 1] + m[rows, 2, 2], 0.0))
    q[rows] = np.stack(
        [
            (m[rows, 1, 0] - m[rows, 0, 1]) / t,
            (m[rows, 0, 2] + m[rows, 2, 0]) / t,
            (m[rows, 1, 2] + m[rows, 2, 1]) / t,
            0.25 * t,
        ],
        axis=1,
    )

    q /= np.linalg.norm(q, axis=1)[:, None]
    q[q[:, 0] < 0] *= -1.0
    return q[:, 0, None, None] * np.eye(2) - 1j * np.einsum("pj,jab->pab", q[:, 1:], SIGMA)


def lift_pointwise(O, dim=None, tolerances=None):
    """One of the two preimages ±𝓡 (det 𝓡 = 1) of each O under Π.

    4D inputs are split as boost · rotation: the boost is read from the time column and
    lifted to the positive matrix exp(½χ n·σ), the rotation is lifted through its
    quaternion.
    """
    tolerances = resolve(tolerances)
    O = np.asarray(O, dtype=float)
    single = O.ndim == 2
    if single:
        O = O[None]
    dim = dim or O.shape[-1]

    if dim == 4:
        c = np.sqrt(np.maximum((O[:, 3, 3] + 1.0) / 2.0, 0.0))
        half = O[:, :3, 3] / (2.0 * c)[:, None]
        boost_part = np.einsum("pj,jab->pab", half, SIGMA)
        boost = c[:, None, None] * np.eye(2) + boost_part
        boost_inverse = c[:, None, None] * np.eye(2) - boost_part
        rotation = (spin_hom(boost_inverse) @ O)[:, :3, :3]
        R = boost @ _su2_from_rotation(rotation)
    else:
        R = _su2_from_rotation(O)

    error = float(np.max(np.abs(spin_hom(R, dim) - O)))
    if error > tolerances.lift:
        raise LiftVerificationFailed(f"Π(lift) differs from the input by {error:.3e}")
    return R[0] if single else R


def lift_from_gauge(R):
    """|det R|^{-2/3} R*, whose Π-image is the frame transition induced by R."""
    R = np.asarray(R, dtype=complex)
    scale = np.abs(np.linalg.det(R)) ** (-2.0 / 3.0)
    return scale[..., None, None] * np.conj(np.swapaxes(R, -1, -2))


def gauge_from_lift(lift):
    """R = |det 𝓡|^{-2} 𝓡*, inverse of `lift_from_gauge`."""
    lift = np.asarray(lift, dtype=complex)
    scale = np.abs(np.linalg.det(lift)) ** (-2.0)
    return scale[..., None, None] * np.conj(np.swapaxes(lift, -1, -2))


# --------------------------
# Continuation and monodromy
# --------------------------
def continuation_signs(previous, current):
    """±1 per pair so that sign · current continues previous; shapes (..., 2, 2)."""
    plus = np.linalg.norm(current - previous, axis=(-2, -1))
    minus = np.linalg.norm(current + previous, axis=(-2, -1))
    winner = np.minimum(plus, minus)
    loser = np.maximum(plus, minus)
    if np.any(loser < 2.0 * winner):
        raise SamplingTooCoarse("lift jumps too far between neighbouring samples")
    return np.where(minus < plus, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class Monodromy:
    signs: tuple
    samples: tuple
    loops: tuple


def _loop_monodromy(transition_at, chart, axis, n, dim, tolerances):
    points = loop_samples(chart, axis, n)
    lifts = lift_pointwise(transition_at(points), dim, tolerances)
    continued = lifts.copy()
    for k in range(1, n):
        continued[k] = continuation_signs(continued[k - 1], lifts[k]) * lifts[k]
    closing = continuation_signs(continued[-1], lifts[0]) * lifts[0]
    scale = np.linalg.norm(continued[0])
    if np.linalg.norm(closing - continued[0]) <= tolerances.closure * scale:
        return 1, continued
    if np.linalg.norm(closing + continued[0]) <= tolerances.closure * scale:
        return -1, continued
    raise ClosureFailure(f"lift along axis {axis} does not close up to sign")


def _axis_monodromy(transition_at, chart, axis, n, dim, tolerances, refine):
    for attempt in range(MAX_REFINEMENTS + 1):
        try:
            sign, continued = _loop_monodromy(transition_at, chart, axis, n, dim, tolerances)
            return sign, n, continued
        except SamplingTooCoarse:
            if not refine or attempt == MAX_REFINEMENTS:
                raise
            logger.warning("axis %d: refining loop sampling from %d to %d", axis, n, 2 * n)
            n *= 2
        except GridMismatch as exc:
            raise SamplingTooCoarse(f"cannot refine loop sampling on axis {axis}") from exc
    raise SamplingTooCoarse(f"loop along axis {axis} stays too coarse")


def monodromy_class(transition_at, chart, n_samples=None, dim=None, tolerances=None, refine=True):
    """Monodromy sign of the lifted transition around each coordinate circle.

    `transition_at(points)` returns the normalised transition (P, m, m) at `points`.
    Loops are independent and run on up to GAUGEFORMS_THREADS workers.
    """
    tolerances = resolve(tolerances)
    dim = dim or chart.dim
    n = n_samples or max(16, chart.resolution)
    axes = range(1, chart.dim + 1)
    with ThreadPoolExecutor(max_workers=min(thread_count(), chart.dim)) as pool:
        results = list(
            pool.map(
                lambda axis: _axis_monodromy(
                    transition_at, chart, axis, n, dim, tolerances, refine
                ),
                axes,
            )
        )
    signs = tuple(sign for sign, _, _ in results)
    logger.debug("monodromy signs %s", signs)
    return Monodromy(
        signs=signs,
        samples=tuple(count for _, count, _ in results),
        loops=tuple(loop for _, _, loop in results),
    )


@dataclass(frozen=True, eq=False)
class LiftResult:
    signs: tuple
    values: np.ndarray
    group: str
    kappa: tuple


def _grid_slice(dim, axis, k):
    """Index of the points with coordinate `axis` = k and all later coordinates 0."""
    return (slice(None),) * axis + (k,) + (0,) * (dim - axis - 1)


def global_lift_torus(normalized, signs, group, chart, tolerances=None):
    """Single-valued lift on the chart grid of a normalised transition sampled there.

    Unimodular groups (sl, su) need trivial monodromy. For gl and u each axis with
    monodromy −1 is compensated by the phase e^{i x^j / 2}.
    """
    tolerances = resolve(tolerances)
    group = str(getattr(group, "value", group)).lower()
    signs = tuple(int(s) for s in signs)
    if group in ("sl", "su") and any(s < 0 for s in signs):
        raise NoLift(f"monodromy {signs} admits no {group.upper()} lift", signs=signs)

    dim = chart.dim
    m = normalized.shape[-1]
    lifts = lift_pointwise(normalized, m, tolerances).reshape(chart.grid_shape + (2, 2))
    try:
        for axis in range(dim):
            for k in range(1, chart.resolution):
                previous = lifts[_grid_slice(dim, axis, k - 1)]
                current = lifts[_grid_slice(dim, axis, k)]
                flips = continuation_signs(previous, current)
                lifts[_grid_slice(dim, axis, k)] = current * flips[..., None, None]
    except SamplingTooCoarse as exc:
        raise ClosureFailure("grid too coarse to continue the lift") from exc

    kappa = tuple(1 if s < 0 else 0 for s in signs)
    values = chart.from_grid(lifts)
    if any(kappa):
        phase = np.exp(0.5j * (chart.points @ np.asarray(kappa, dtype=float)))
        values = phase[:, None, None] * values

    grid = chart.to_grid(values)
    for axis in range(dim):
        try:
            flips = continuation_signs(grid, np.roll(grid, -1, axis=axis))
        except SamplingTooCoarse as exc:
            raise ClosureFailure(f"lift is discontinuous along axis {axis + 1}") from exc
        if np.any(flips < 0):
            raise ClosureFailure(f"lift does not close along axis {axis + 1}")

    error = float(np.max(np.abs(spin_hom(values, m) - normalized)))
    if error > tolerances.lift:
        raise LiftVerificationFailed(f"global lift misses the transition by {error:.3e}")
    return LiftResult(signs=signs, values=values, group=group, kappa=kappa)
