"""Brute-force two-photon simulator for the looped array.

This module evolves exact photon-number states over the 2N modes of the
device (N array guides ``a_1..a_N`` plus their tap guides ``b_1..b_N``)
through an explicit schedule of transit steps: free evolution, loop
relabelling, coupler bank, tap-guide injections and vacuum projections.
It exists to cross-check the closed-form correlation expressions, so it
deliberately shares no linear-algebra route with them: free evolution is
exponentiated by Pade scaling-and-squaring here, never spectrally, and
two-photon statistics come from propagating symmetric Fock amplitudes,
never from permanents of transfer-matrix blocks.

States with two photons live in the symmetric subspace over 2N modes,
dimension 2N(2N+1)/2, indexed by unordered mode pairs in lexicographic
order.  The basis vector for m1 = m2 is (a^dag)^2 |0> / sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .model import ConfigError, DeviceConfig, NumericError, _readonly, permutation_for
from .spectra import coupling_for

_OCCUPIED_TOL = 1e-12


# ---- matrix exponential (Pade 13, scaling and squaring) ------------------

_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_PADE13_THETA = 5.371920351148152


def _expm(a: np.ndarray) -> np.ndarray:
    """exp(a) for a square complex matrix.

    Degree-13 Pade approximant after scaling ||a||_1 below the standard
    threshold, then repeated squaring.  Accuracy is near machine epsilon
    for the skew-Hermitian generators used here.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    ident = np.eye(n, dtype=complex)
    norm = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    squarings = 0
    if norm > _PADE13_THETA:
        squarings = int(np.ceil(np.log2(norm / _PADE13_THETA)))
        a = a / (2.0**squarings)
    b = _PADE13_B
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6
        + b[5] * a4
        + b[3] * a2
        + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6
        + b[4] * a4
        + b[2] * a2
        + b[0] * ident
    )
    x = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        x = x @ x
    return x


# ---- symmetric two-photon basis ------------------------------------------


class PairBasis:
    """Lexicographic basis of unordered mode pairs over ``n_total`` modes."""

    def __init__(self, n_total: int):
        self.n_total = n_total
        i1, i2 = np.triu_indices(n_total)
        self.i1 = _readonly(i1)
        self.i2 = _readonly(i2)
        self.dim = i1.shape[0]
        lookup = np.zeros((n_total, n_total), dtype=int)
        lookup[i1, i2] = np.arange(self.dim)
        lookup[i2, i1] = np.arange(self.dim)
        self.lookup = _readonly(lookup)
        # 1/sqrt(1 + delta_{m1 m2}) weights for the doubly occupied pairs
        self.weight = _readonly(np.where(i1 == i2, 1.0 / np.sqrt(2.0), 1.0))


@lru_cache(maxsize=32)
def pair_basis(n_total: int) -> PairBasis:
    return PairBasis(n_total)


def lift_to_two_photon(u: np.ndarray) -> np.ndarray:
    """Two-photon action of a one-photon unitary on the symmetric subspace.

    For output pair (r1 <= r2) and input pair (m1 <= m2) the matrix element
    is (u[r1,m1] u[r2,m2] + u[r1,m2] u[r2,m1]) / sqrt(1+delta_r) sqrt(1+delta_m),
    which keeps the map unitary on the normalised pair basis.
    """
    u = np.asarray(u, dtype=complex)
    pb = pair_basis(u.shape[0])
    r1 = pb.i1[:, None]
    r2 = pb.i2[:, None]
    m1 = pb.i1[None, :]
    m2 = pb.i2[None, :]
    lifted = u[r1, m1] * u[r2, m2] + u[r1, m2] * u[r2, m1]
    lifted *= pb.weight[:, None]
    lifted *= pb.weight[None, :]
    return lifted


# ---- states ---------------------------------------------------------------


@dataclass(frozen=True)
class TwoPhotonState:
    """Exactly two photons across the 2N device modes.

    ``amps`` follows the lexicographic unordered-pair order of
    ``pair_basis(2 * n_modes)``.  Norm may be below one: projections leave
    states sub-normalised, with the missing mass accounted for in pipeline
    records.
    """

    n_modes: int
    amps: np.ndarray

    def __post_init__(self):
        pb = pair_basis(2 * self.n_modes)
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (pb.dim,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({pb.dim},)"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        nsq = float(np.sum(np.abs(amps) ** 2))
        if nsq > 1.0 + 1e-12:
            raise ValueError(f"state norm^2 = {nsq} exceeds 1")
        object.__setattr__(self, "amps", _readonly(amps))

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def amplitude(self, m1: int, m2: int) -> complex:
        """Amplitude of the unordered pair (m1, m2), 1-based over 2N modes;
        array guides are 1..N, tap guides N+1..2N."""
        pb = pair_basis(2 * self.n_modes)
        if not (1 <= m1 <= 2 * self.n_modes and 1 <= m2 <= 2 * self.n_modes):
            raise ValueError(f"mode pair ({m1}, {m2}) out of range 1..{2 * self.n_modes}")
        return complex(self.amps[pb.lookup[m1 - 1, m2 - 1]])

    def coincidence_matrix(self) -> np.ndarray:
        """N x N matrix of tap-guide pair probabilities |<b_r b_s|psi>|^2."""
        n = self.n_modes
        pb = pair_basis(2 * n)
        mask = pb.i1 >= n
        probs = np.abs(self.amps[mask]) ** 2
        r = pb.i1[mask] - n
        s = pb.i2[mask] - n
        out = np.zeros((n, n))
        out[r, s] = probs
        out[s, r] = probs
        return out

    @classmethod
    def from_array_pair(cls, n_modes: int, j: int, k: int) -> "TwoPhotonState":
        """One photon in array guide j and one in k (j = k gives the
        doubly occupied state)."""
        if not (1 <= j <= n_modes and 1 <= k <= n_modes):
            raise ValueError(f"inputs ({j}, {k}) out of range 1..{n_modes}")
        pb = pair_basis(2 * n_modes)
        amps = np.zeros(pb.dim, dtype=complex)
        amps[pb.lookup[j - 1, k - 1]] = 1.0
        return cls(n_modes, amps)

    @classmethod
    def from_mode_vectors(cls, n_modes: int, phi_a, phi_b) -> "TwoPhotonState":
        """Normalised symmetric product of two array-guide wavefunctions.

        Each argument is a length-N complex vector of amplitudes over the
        array guides; the photons may occupy the same wavefunction.
        """
        pa = np.asarray(phi_a, dtype=complex)
        pb_vec = np.asarray(phi_b, dtype=complex)
        if pa.shape != (n_modes,) or pb_vec.shape != (n_modes,):
            raise ValueError("mode vectors must each have one entry per array guide")
        sym = np.outer(pa, pb_vec)
        sym = sym + sym.T
        basis = pair_basis(2 * n_modes)
        amps = np.zeros(basis.dim, dtype=complex)
        in_a = basis.i2 < n_modes
        amps[in_a] = sym[basis.i1[in_a], basis.i2[in_a]] * basis.weight[in_a]
        norm = np.sqrt(np.sum(np.abs(amps) ** 2))
        if norm == 0.0:
            raise ValueError("mode vectors give a vanishing two-photon state")
        return cls(n_modes, amps / norm)


# ---- pipeline steps --------------------------------------------------------


@dataclass(frozen=True)
class Evolve:
    """Free propagation through the coupled array for one transit time."""


@dataclass(frozen=True)
class Permute:
    """Mode relabelling applied by the loop closure."""


@dataclass(frozen=True)
class Couple:
    """Directional coupler bank joining each array guide to its tap guide."""


@dataclass(frozen=True)
class InjectB:
    """Place one photon into tap guide b_mode (1-based array index)."""

    mode: int


@dataclass(frozen=True)
class ProjectBVacuum:
    """Condition on no photon remaining in any tap guide.

    With ``renormalize`` the surviving state is scaled back to unit norm
    and the event probability is recorded; without it the lost mass stays
    missing, which is how per-transit detection probabilities are read off.
    """

    renormalize: bool = False


PipelineStep = Union[Evolve, Permute, Couple, InjectB, ProjectBVacuum]


def single_particle_step_matrix(step: PipelineStep, cfg: DeviceConfig) -> np.ndarray:
    """The 2N x 2N one-photon unitary for a linear pipeline step.

    Ordering is array guides first, tap guides second.  Injection and
    projection are not one-photon unitaries and raise ValueError.
    """
    n = cfg.n_modes
    if isinstance(step, Evolve):
        g = coupling_for(cfg).g
        u = np.eye(2 * n, dtype=complex)
        u[:n, :n] = _expm(-1j * g * cfg.tau)
        return u
    if isinstance(step, Permute):
        u = np.eye(2 * n, dtype=complex)
        u[:n, :n] = permutation_for(cfg).matrix()
        return u
    if isinstance(step, Couple):
        theta = np.asarray(cfg.theta, dtype=float)
        if theta.shape != (n,):
            raise ConfigError(f"theta must have one entry per guide, got {len(theta)}")
        u = np.zeros((2 * n, 2 * n), dtype=complex)
        idx = np.arange(n)
        u[idx, idx] = np.cos(theta)
        u[n + idx, n + idx] = np.cos(theta)
        u[idx, n + idx] = 1j * np.sin(theta)
        u[n + idx, idx] = 1j * np.sin(theta)
        return u
    raise ValueError(f"{type(step).__name__} has no single-particle matrix")


# ---- pipeline runner --------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    """Outcome of one vacuum projection.

    ``coincidences`` holds the tap-guide pair probabilities present just
    before the projection (zeros while only one photon is in flight);
    ``post_selection_prob`` is the cumulative probability of every
    conditioning event up to and including this one.
    """

    index: int
    coincidences: np.ndarray
    removed_mass: float
    survival_norm_sq: float
    post_selection_prob: float
    renormalized: bool
    state: TwoPhotonState | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "coincidences", _readonly(np.array(self.coincidences, dtype=float))
        )


@dataclass(frozen=True)
class PipelineResult:
    records: tuple[StepRecord, ...]
    final_state: TwoPhotonState | None
    post_selection_prob: float

    @property
    def entry_prob(self) -> float:
        """Joint probability of all renormalised conditioning events."""
        prob = 1.0
        for rec in self.records:
            if rec.renormalized:
                prob = rec.post_selection_prob
        return prob

    @property
    def transit_records(self) -> tuple[StepRecord, ...]:
        """Records after the last conditioning event: the observation
        transits n = 1, 2, ... in order."""
        last = -1
        for i, rec in enumerate(self.records):
            if rec.renormalized:
                last = i
        return self.records[last + 1 :]


def run_pipeline(
    cfg: DeviceConfig,
    schedule,
    initial_state: TwoPhotonState | None = None,
) -> PipelineResult:
    """Propagate photon-number states through an explicit step schedule.

    Exactly two photons must enter the run, either through the initial
    state or through InjectB steps; anything else is a ConfigError.  One
    StepRecord is emitted per ProjectBVacuum step.
    """
    n = cfg.n_modes
    total = 2 * n
    pb = pair_basis(total)
    schedule = list(schedule)

    injected = sum(isinstance(s, InjectB) for s in schedule)
    carried = 2 if initial_state is not None else 0
    if injected + carried != 2:
        raise ConfigError(
            f"schedule injects {injected + carried} photons in total, need exactly 2"
        )
    if initial_state is not None and initial_state.n_modes != n:
        raise ConfigError(
            f"initial state has {initial_state.n_modes} array modes, device has {n}"
        )

    for s in schedule:
        if isinstance(s, InjectB) and not 1 <= s.mode <= n:
            raise ConfigError(f"injection mode {s.mode} out of range 1..{n}")

    singles: dict[str, np.ndarray] = {}
    lifted: dict[str, np.ndarray] = {}

    def one_photon_matrix(kind: str, step) -> np.ndarray:
        if kind not in singles:
            singles[kind] = single_particle_step_matrix(step, cfg)
        return singles[kind]

    def two_photon_matrix(kind: str, step) -> np.ndarray:
        if kind not in lifted:
            lifted[kind] = lift_to_two_photon(one_photon_matrix(kind, step))
        return lifted[kind]

    nphot = 2 if initial_state is not None else 0
    vec = np.array(initial_state.amps, dtype=complex) if initial_state is not None else None

    b_pair = pb.i1 >= n   # both photons in tap guides
    any_b = pb.i2 >= n    # at least one photon in a tap guide
    b_r = pb.i1[b_pair] - n
    b_s = pb.i2[b_pair] - n

    records: list[StepRecord] = []
    cumulative = 1.0
    proj_count = 0

    for step in schedule:
        kind = type(step).__name__.lower()
        if isinstance(step, (Evolve, Permute, Couple)):
            if nphot == 1:
                vec = one_photon_matrix(kind, step) @ vec
            elif nphot == 2:
                vec = two_photon_matrix(kind, step) @ vec
        elif isinstance(step, InjectB):
            q = n + step.mode - 1
            if nphot == 0:
                vec = np.zeros(total, dtype=complex)
                vec[q] = 1.0
                nphot = 1
            else:
                if abs(vec[q]) > _OCCUPIED_TOL:
                    raise ConfigError(
                        f"injection into occupied tap guide b_{step.mode} "
                        f"(amplitude {abs(vec[q]):.3e})"
                    )
                pair_vec = np.zeros(pb.dim, dtype=complex)
                src = vec.copy()
                src[q] = 0.0
                pair_vec[pb.lookup[np.arange(total), q]] = src
                vec = pair_vec
                nphot = 2
        elif isinstance(step, ProjectBVacuum):
            pre = float(np.sum(np.abs(vec) ** 2))
            if nphot == 2:
                probs = np.abs(vec[b_pair]) ** 2
                coinc = np.zeros((n, n))
                coinc[b_r, b_s] = probs
                coinc[b_s, b_r] = probs
                vec = vec.copy()
                vec[any_b] = 0.0
            else:
                coinc = np.zeros((n, n))
                vec = vec.copy()
                vec[n:] = 0.0
            post = float(np.sum(np.abs(vec) ** 2))
            removed = pre - post
            if step.renormalize:
                if post <= 1e-300:
                    raise NumericError(
                        "conditioning on a zero-probability projection", residual=post
                    )
                cumulative *= post
                vec = vec / np.sqrt(post)
                post = 1.0
            proj_count += 1
            records.append(
                StepRecord(
                    index=proj_count,
                    coincidences=coinc,
                    removed_mass=removed,
                    survival_norm_sq=post,
                    post_selection_prob=cumulative,
                    renormalized=step.renormalize,
                    state=TwoPhotonState(n, vec) if nphot == 2 else None,
                )
            )
        else:
            raise ConfigError(f"unknown pipeline step {step!r}")

    final = TwoPhotonState(n, vec) if nphot == 2 else None
    return PipelineResult(tuple(records), final, cumulative)


# ---- standard schedules ------------------------------------------------------


def transit_schedule(n_steps: int) -> list:
    """n_steps observation transits: evolve, relabel, couple, read taps."""
    steps: list = []
    for _ in range(n_steps):
        steps += [Evolve(), Permute(), Couple(), ProjectBVacuum(renormalize=False)]
    return steps


def simultaneous_schedule(j: int, k: int, n_steps: int) -> list:
    """Both photons enter through their tap guides before the first transit."""
    entry: list = [InjectB(j), InjectB(k), Couple(), ProjectBVacuum(renormalize=True)]
    return entry + transit_schedule(n_steps)


def delayed_schedule(j: int, k: int, delay: int, n_steps: int) -> list:
    """Photon one enters first; photon two joins after ``delay`` transits.

    The run conditions on photon one staying in the array until the second
    injection (every tap projection up to that point).
    """
    if delay < 0:
        raise ConfigError(f"delay must be >= 0, got {delay}")
    if delay == 0:
        return simultaneous_schedule(j, k, n_steps)
    steps: list = [InjectB(j), Couple(), ProjectBVacuum(renormalize=True)]
    for _ in range(delay - 1):
        steps += [Evolve(), Permute(), Couple(), ProjectBVacuum(renormalize=False)]
    steps += [Evolve(), Permute(), InjectB(k), Couple(), ProjectBVacuum(renormalize=True)]
    return steps + transit_schedule(n_steps)


def simultaneous_run(cfg: DeviceConfig, j: int, k: int, n_steps: int) -> PipelineResult:
    return run_pipeline(cfg, simultaneous_schedule(j, k, n_steps))


def delayed_run(
    cfg: DeviceConfig, j: int, k: int, delay: int, n_steps: int
) -> PipelineResult:
    return run_pipeline(cfg, delayed_schedule(j, k, delay, n_steps))


def state_run(cfg: DeviceConfig, state: TwoPhotonState, n_steps: int) -> PipelineResult:
    """Observe an already prepared in-array two-photon state; no entry
    conditioning is applied."""
    return run_pipeline(cfg, transit_schedule(n_steps), initial_state=state)
