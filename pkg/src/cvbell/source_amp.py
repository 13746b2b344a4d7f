"""Photon-pair source with a heralded quantum-scissor amplifier on one arm.

Circuit (all beam splitters in the convention of :mod:`cvbell.fock`):

1. A parametric down-conversion source emits the two-mode squeezed state
   ``sqrt(1 - lam^2) sum_n lam^n |n>|n>`` on modes (arm1, arm2); each output
   passes a coupling loss ``eta_c``.
2. An ancilla single photon (ideal, or heralded from a second weak
   down-converter read out by bucket detector D0) is split on a beam
   splitter of transmission ``t``; the transmitted part interferes with
   arm2 on a 50/50 splitter whose outputs feed bucket detectors D1 and D2.
   Success means exactly one of D1/D2 clicks, which teleports the 0/1-photon
   content of arm2 onto the reflected ancilla mode with the vacuum amplitude
   scaled by sqrt(t) and the one-photon amplitude by sqrt(1 - t): heralded
   noiseless amplification of gain ``g = sqrt((1 - t)/t)``.
3. The surviving mode pair is recombined on a 50/50 splitter.

The two herald patterns produce outputs differing only by the sign of the
one-photon component of the amplified mode; a feed-forward phase plate on
that mode (applied for the D1 pattern) makes them identical, so the pattern
"either" accepts both clicks as the same preparation.  A fixed output phase
plate then casts the leading component into the all-real sign pattern
``c00 |00> - c2 (|20> + |02>)`` that the measurement convention of
:mod:`cvbell.measurement` favours.  With bucket detectors every conditional
branch stays pure, so the simulation propagates weighted pure branches and
assembles the conditional density operator only at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fock import (
    DensityOperator,
    ModeBasis,
    StateVector,
    beam_splitter,
    embed_single_mode,
    embedding_indices,
    loss_kraus,
)
from .measurement import photodetection_povm
from .bell import PartyConditions, bisect_threshold, golden_section_max, optimize_delta
from .parallel import map_ordered

#: Branches with squared norm below this are dropped.
BRANCH_TOL = 1e-16


@dataclass(frozen=True)
class SourceConfig:
    """Parameters of the amplified source.

    squeezing: down-conversion amplitude ratio lam in [0, 1).
    amp_transmission: ancilla splitter transmission t in (0, 1]; the
        amplifier gain is sqrt((1 - t)/t).
    coupling: efficiency of collecting each down-converter output.
    ancilla_model: "single-photon" (ideal) or "heralded-pdc" (second weak
        down-converter of amplitude ``ancilla_squeezing`` read out by D0).
    herald_efficiency: efficiency of the bucket detectors D0/D1/D2.
    cutoff: per-arm photon cutoff for the down-conversion expansion.
    herald_pattern: "d1", "d2", or "either".
    """

    squeezing: float
    amp_transmission: float
    coupling: float = 1.0
    ancilla_model: str = "single-photon"
    ancilla_squeezing: float = 0.1
    herald_efficiency: float = 1.0
    cutoff: int = 6
    herald_pattern: str = "either"

    def __post_init__(self):
        if not 0.0 <= self.squeezing < 1.0:
            raise ValueError("squeezing must lie in [0, 1)")
        if not 0.0 < self.amp_transmission <= 1.0:
            raise ValueError("amp_transmission must lie in (0, 1]")
        if not 0.0 <= self.coupling <= 1.0:
            raise ValueError("coupling must lie in [0, 1]")
        if self.ancilla_model not in ("single-photon", "heralded-pdc"):
            raise ValueError(f"unknown ancilla model {self.ancilla_model!r}")
        if not 0.0 <= self.ancilla_squeezing < 1.0:
            raise ValueError("ancilla_squeezing must lie in [0, 1)")
        if not 0.0 <= self.herald_efficiency <= 1.0:
            raise ValueError("herald_efficiency must lie in [0, 1]")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        if self.herald_pattern not in ("d1", "d2", "either"):
            raise ValueError(f"unknown herald pattern {self.herald_pattern!r}")

    @property
    def gain(self) -> float:
        return math.sqrt((1.0 - self.amp_transmission) / self.amp_transmission)


@dataclass
class HeraldedOutcome:
    """Conditional output of a post-selected circuit.

    The state is normalized; ``success_probability`` is the
    pre-normalization weight of the accepted herald pattern(s).
    """

    state: DensityOperator
    success_probability: float
    herald_pattern: str


def two_mode_squeezed(lam: float, cutoff: int) -> StateVector:
    """Two-mode squeezed vacuum, truncated at ``cutoff`` photons per arm.

    Amplitudes are proportional to lam^n on |n>|n>; the truncated vector is
    renormalized.  The discarded weight of the untruncated state is
    ``lam^(2 cutoff + 2)`` (see :func:`tmsv_truncation_weight`).
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("squeezing must lie in [0, 1)")
    basis = ModeBasis((cutoff, cutoff))
    v = np.zeros(basis.dimension, dtype=complex)
    amps = lam ** np.arange(cutoff + 1, dtype=float)
    amps /= np.linalg.norm(amps)
    for n in range(cutoff + 1):
        v[basis.index_of((n, n))] = amps[n]
    return StateVector(basis, v)


def tmsv_truncation_weight(lam: float, cutoff: int) -> float:
    """Probability weight of the untruncated state beyond the cutoff."""
    return lam ** (2 * cutoff + 2)


@lru_cache(maxsize=256)
def _basis(cutoffs: tuple, total_cap=None) -> ModeBasis:
    return ModeBasis(cutoffs, total_cap)


@lru_cache(maxsize=256)
def _embed_idx(sub_cutoffs: tuple, sub_cap, full_cutoffs: tuple, full_cap) -> np.ndarray:
    idx = embedding_indices(_basis(sub_cutoffs, sub_cap), _basis(full_cutoffs, full_cap))
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=64)
def _cached_bs(cutoffs: tuple, t: float, modes: tuple) -> np.ndarray:
    U = beam_splitter(_basis(cutoffs), t, modes)
    U.setflags(write=False)
    return U


@lru_cache(maxsize=64)
def _parity_last_mode(kept_cutoffs: tuple) -> np.ndarray:
    arr = np.array([(-1.0) ** occ[-1] for occ in _basis(kept_cutoffs).occupations])
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=64)
def _output_plate(cutoffs: tuple) -> np.ndarray:
    arr = np.array([1j ** int(occ[1]) for occ in _basis(cutoffs).occupations])
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=256)
def _cached_loss_embed(cutoffs: tuple, eta: float, mode: int) -> tuple:
    basis = ModeBasis(cutoffs)
    ops = tuple(
        embed_single_mode(basis, A, mode) for A in loss_kraus(eta, cutoffs[mode])
    )
    for op in ops:
        op.setflags(write=False)
    return ops


def _loss_branches(cutoffs, branches, mode, eta):
    if eta == 1.0:
        return branches
    out = []
    for E in _cached_loss_embed(tuple(cutoffs), float(eta), int(mode)):
        for v in branches:
            w = E @ v
            if np.vdot(w, w).real > BRANCH_TOL:
                out.append(w)
    return out


def _detector_diags(eta: float, cutoff: int):
    no_click, click, _ = photodetection_povm(eta, cutoff)
    return np.diag(click).copy(), np.diag(no_click).copy()


def _ancilla_branches(config: SourceConfig, c_cutoff: int):
    """Weighted pure branches of the split ancilla on modes (b, c).

    Mode b goes to the interference splitter, mode c is the amplifier
    output.  Branches are labelled by the D0 outcome ("click" always, for
    the ideal model).
    """
    t = config.amp_transmission
    basis = ModeBasis((c_cutoff, c_cutoff))
    if config.ancilla_model == "single-photon":
        v = np.zeros(basis.dimension, dtype=complex)
        v[basis.index_of((1, 0))] = math.sqrt(t)
        v[basis.index_of((0, 1))] = math.sqrt(1.0 - t)
        return basis, [(v, "click")]

    # Weak down-converter: signal feeds the splitter, idler feeds D0.
    chi = config.ancilla_squeezing
    pair = two_mode_squeezed(chi, c_cutoff)
    cut = (c_cutoff, c_cutoff)
    branches = [pair.amplitudes]
    for mode in (0, 1):
        branches = _loss_branches(cut, branches, mode, config.coupling)
    click, no_click = _detector_diags(config.herald_efficiency, c_cutoff)
    U = _cached_bs(basis.cutoffs, t, (0, 1))
    out = []
    for v, diag, label in (
        (v, diag, label)
        for v in branches
        for label, diag in (("click", click), ("none", no_click))
    ):
        T = v.reshape(c_cutoff + 1, c_cutoff + 1)
        for n_idler in range(c_cutoff + 1):
            w = diag[n_idler]
            if w <= BRANCH_TOL:
                continue
            sub = math.sqrt(w) * T[:, n_idler]
            if np.vdot(sub, sub).real <= BRANCH_TOL:
                continue
            big = np.zeros(basis.dimension, dtype=complex)
            for n in range(c_cutoff + 1):
                big[basis.index_of((n, 0))] = sub[n]
            out.append((U @ big, label))
    return basis, out


def _joint_interfered(config: SourceConfig, input_branches, input_cutoffs,
                      scissor_mode: int, d0_filter: str | None = "click"):
    """Attach the ancilla, interfere on the 50/50 splitter.

    The scissor mode and the ancilla's b mode are enlarged so the splitter
    conserves photon number exactly.  Returns (cutoffs, branch list of
    (vec, d0_label), a_mode, b_mode, c_cutoff).
    """
    c_cutoff = 1 if config.ancilla_model == "single-photon" else min(3, config.cutoff)
    anc_basis, anc_branches = _ancilla_branches(config, c_cutoff)
    if d0_filter is not None:
        anc_branches = [(v, lbl) for v, lbl in anc_branches if lbl == d0_filter]

    small_cutoffs = tuple(input_cutoffs) + anc_basis.cutoffs
    n_modes = len(small_cutoffs)
    b_mode = n_modes - 2
    headroom = c_cutoff  # photons the ancilla can add to the interference
    big_cutoffs = list(small_cutoffs)
    big_cutoffs[scissor_mode] += headroom
    big_cutoffs[b_mode] += input_cutoffs[scissor_mode]
    big_cutoffs = tuple(big_cutoffs)

    big = _basis(big_cutoffs)
    embed = _embed_idx(small_cutoffs, None, big_cutoffs, None)
    U = _cached_bs(big_cutoffs, 0.5, (scissor_mode, b_mode))

    joint = []
    for inp in input_branches:
        for anc, label in anc_branches:
            v = np.zeros(big.dimension, dtype=complex)
            v[embed] = np.kron(inp, anc)
            joint.append((U @ v, label))
    return big_cutoffs, joint, scissor_mode, b_mode, c_cutoff


def _herald_patterns(config: SourceConfig):
    if config.herald_pattern == "either":
        return ("d1", "d2")
    return (config.herald_pattern,)


def _condition_on_heralds(config: SourceConfig, cutoffs, joint, a_mode, b_mode):
    """Split branches over the D1/D2 outcomes, keeping the other modes.

    Returns (kept_cutoffs, {pattern: branches}, {pattern: probability}).
    The D1 branches get the feed-forward parity plate on the amplified mode
    (the last kept mode) so both patterns prepare the same state.
    """
    n_modes = len(cutoffs)
    dims = tuple(c + 1 for c in cutoffs)
    click_a, no_click_a = _detector_diags(config.herald_efficiency, cutoffs[a_mode])
    click_b, no_click_b = _detector_diags(config.herald_efficiency, cutoffs[b_mode])
    pattern_weights = {"d1": (click_a, no_click_b), "d2": (no_click_a, click_b)}

    keep = [m for m in range(n_modes) if m not in (a_mode, b_mode)]
    kept_cutoffs = tuple(cutoffs[m] for m in keep)
    parity = _parity_last_mode(kept_cutoffs)

    out: dict = {}
    probs: dict = {}
    for pattern in _herald_patterns(config):
        w_a, w_b = pattern_weights[pattern]
        branches = []
        prob = 0.0
        for v in joint:
            T = np.moveaxis(v.reshape(dims), (a_mode, b_mode), (n_modes - 2, n_modes - 1))
            T = T.reshape(-1, dims[a_mode], dims[b_mode])
            for na in range(dims[a_mode]):
                for nb in range(dims[b_mode]):
                    w = w_a[na] * w_b[nb]
                    if w <= BRANCH_TOL:
                        continue
                    sub = math.sqrt(w) * T[:, na, nb]
                    norm2 = np.vdot(sub, sub).real
                    if norm2 > BRANCH_TOL:
                        branches.append(parity * sub if pattern == "d1" else sub)
                        prob += norm2
        out[pattern] = branches
        probs[pattern] = prob
    return kept_cutoffs, out, probs


def qscissor_amplify(state, t: float, herald_efficiency: float = 1.0,
                     ancilla_model: str = "single-photon",
                     ancilla_squeezing: float = 0.1,
                     herald_pattern: str = "either") -> HeraldedOutcome:
    """Run a single-mode state through the heralded amplifier.

    On a 0/1-photon input ``c0|0> + c1|1>`` the conditional output is
    proportional to ``sqrt(t) c0 |0> + sqrt(1-t) c1 |1>``; components with
    two or more photons are truncated by the scissor (they can only reach
    the detectors, never the output mode).  Returns the conditional output
    state, the success probability of the chosen herald pattern(s), and the
    pattern label.
    """
    if isinstance(state, StateVector):
        branches = [state.normalize().amplitudes]
        cutoffs = state.basis.cutoffs
    elif isinstance(state, DensityOperator):
        w, vecs = np.linalg.eigh(state.normalize().matrix)
        branches = [
            math.sqrt(wi) * vecs[:, i] for i, wi in enumerate(w) if wi > BRANCH_TOL
        ]
        cutoffs = state.basis.cutoffs
    else:
        raise TypeError("state must be a StateVector or DensityOperator")
    if len(cutoffs) != 1:
        raise ValueError("the amplifier acts on a single-mode state")
    config = SourceConfig(
        squeezing=0.0,
        amp_transmission=t,
        ancilla_model=ancilla_model,
        ancilla_squeezing=ancilla_squeezing,
        herald_efficiency=herald_efficiency,
        cutoff=max(cutoffs[0], 1),
        herald_pattern=herald_pattern,
    )
    big_cutoffs, joint, a_mode, b_mode, _ = _joint_interfered(
        config, branches, cutoffs, 0
    )
    joint_vecs = [v for v, _ in joint]
    kept_cutoffs, by_pattern, probs = _condition_on_heralds(
        config, big_cutoffs, joint_vecs, a_mode, b_mode
    )
    basis = ModeBasis(kept_cutoffs)
    total = sum(probs.values())
    rho = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    for pattern in by_pattern:
        for v in by_pattern[pattern]:
            rho += np.outer(v, v.conj())
    if total <= BRANCH_TOL:
        return HeraldedOutcome(
            state=DensityOperator(basis, np.zeros_like(rho)),
            success_probability=0.0,
            herald_pattern=herald_pattern,
        )
    return HeraldedOutcome(
        state=DensityOperator(basis, rho / total),
        success_probability=total,
        herald_pattern=herald_pattern,
    )


def amplified_source(config: SourceConfig) -> HeraldedOutcome:
    """Conditional two-mode output of the amplified source.

    The returned state lives on a photon-capped two-mode basis (the kept
    modes' total photon number is conserved downstream of the heralds).
    The success probability covers the configured herald pattern(s); for
    the heralded-pdc ancilla it includes the D0 click.
    """
    C = config.cutoff
    tmsv = two_mode_squeezed(config.squeezing, C)
    branches = [tmsv.amplitudes]
    cutoffs = (C, C)
    for mode in (0, 1):
        branches = _loss_branches(cutoffs, branches, mode, config.coupling)

    big_cutoffs, joint, a_mode, b_mode, c_cutoff = _joint_interfered(
        config, branches, cutoffs, 1
    )
    joint_vecs = [v for v, _ in joint]
    kept_cutoffs, by_pattern, probs = _condition_on_heralds(
        config, big_cutoffs, joint_vecs, a_mode, b_mode
    )

    out_cut = C + c_cutoff
    full = _basis((out_cut, out_cut))
    capped = _basis((out_cut, out_cut), out_cut)
    embed = _embed_idx(kept_cutoffs, None, full.cutoffs, None)
    cap_idx = _embed_idx(capped.cutoffs, out_cut, full.cutoffs, None)
    U = _cached_bs(full.cutoffs, 0.5, (0, 1))
    # Output phase plate (i^n on the second mode) fixes the documented
    # c00 >= 0, c2 <= 0 sign pattern of the leading component.
    plate = _output_plate(full.cutoffs)

    total = sum(probs.values())
    rho = np.zeros((capped.dimension, capped.dimension), dtype=complex)
    for pattern in by_pattern:
        for v in by_pattern[pattern]:
            big = np.zeros(full.dimension, dtype=complex)
            big[embed] = v
            big = plate * (U @ big)
            w = big[cap_idx]
            rho += np.outer(w, w.conj())
    if total <= BRANCH_TOL:
        return HeraldedOutcome(
            state=DensityOperator(capped, np.zeros_like(rho)),
            success_probability=0.0,
            herald_pattern=config.herald_pattern,
        )
    return HeraldedOutcome(
        state=DensityOperator(capped, rho / total),
        success_probability=total,
        herald_pattern=config.herald_pattern,
    )


def herald_probabilities(config: SourceConfig) -> dict:
    """Joint probability of every detector outcome combination.

    Keys are D1/D2 pattern labels ("d1", "d2", "both", "none") for the
    ideal ancilla; the heralded-pdc model prefixes the D0 outcome as
    ``(d0_label, pattern)``.  Values sum to one.
    """
    C = config.cutoff
    tmsv = two_mode_squeezed(config.squeezing, C)
    branches = [tmsv.amplitudes]
    cutoffs = (C, C)
    for mode in (0, 1):
        branches = _loss_branches(cutoffs, branches, mode, config.coupling)

    big_cutoffs, joint, a_mode, b_mode, _ = _joint_interfered(
        config, branches, cutoffs, 1, d0_filter=None
    )
    with_d0 = config.ancilla_model == "heralded-pdc"
    dims = tuple(c + 1 for c in big_cutoffs)
    click_a, no_click_a = _detector_diags(config.herald_efficiency, big_cutoffs[a_mode])
    click_b, no_click_b = _detector_diags(config.herald_efficiency, big_cutoffs[b_mode])
    labels = {
        ("click", "none"): "d1",
        ("none", "click"): "d2",
        ("click", "click"): "both",
        ("none", "none"): "none",
    }
    probs: dict = {}
    n_modes = len(big_cutoffs)
    for v, d0_label in joint:
        T = np.abs(v.reshape(dims)) ** 2
        for (la, lb), name in labels.items():
            wa = click_a if la == "click" else no_click_a
            wb = click_b if lb == "click" else no_click_b
            marg = float(
                np.einsum(T, list(range(n_modes)), wa, [a_mode], wb, [b_mode], [])
            )
            key = (d0_label, name) if with_d0 else name
            probs[key] = probs.get(key, 0.0) + marg
    return probs


@dataclass
class SourceParams:
    """Result of inverting the source map onto a target state."""

    reachable: bool
    squeezing: float | None = None
    amp_transmission: float | None = None
    fidelity: float | None = None
    reason: str | None = None


def solve_source_params(target: StateVector, lam: float = 0.02,
                        cutoff: int = 6) -> SourceParams:
    """Squeezing and splitter transmission that produce a target state.

    Only targets supported on {|00>, |20>, |02>} with equal-magnitude
    two-photon coefficients are reachable; the leading-order output has
    vacuum amplitude sqrt(t) against two-photon amplitudes
    lam sqrt(1-t)/sqrt(2), so for a given small ``lam`` the coefficient
    ratio fixes ``t``.  The fidelity of the full circuit output against the
    target (in the output sign convention c00 >= 0, c2 <= 0) is returned.
    """
    basis = target.basis
    amps = target.normalize().amplitudes
    support = {}
    for idx, a in enumerate(amps):
        if abs(a) > 1e-9:
            support[basis.occupation_of(idx)] = complex(a)
    if not set(support) <= {(0, 0), (2, 0), (0, 2)}:
        return SourceParams(reachable=False, reason="support outside {00, 20, 02}")
    c20 = abs(support.get((2, 0), 0.0))
    c02 = abs(support.get((0, 2), 0.0))
    c00 = abs(support.get((0, 0), 0.0))
    if abs(c20 - c02) > 1e-6:
        return SourceParams(
            reachable=False, reason="unequal |20> and |02> weights are not producible"
        )
    if c20 < 1e-12:
        return SourceParams(
            reachable=True, squeezing=0.0, amp_transmission=1.0, fidelity=None
        )
    if c00 < 1e-12:
        return SourceParams(
            reachable=False, reason="vanishing vacuum weight requires t -> 0"
        )
    ratio = c20 / c00
    t = lam**2 / (lam**2 + 2.0 * ratio**2)
    config = SourceConfig(squeezing=lam, amp_transmission=t, cutoff=cutoff)
    outcome = amplified_source(config)
    out_basis = outcome.state.basis
    vec = np.zeros(out_basis.dimension, dtype=complex)
    gauge = support.get((0, 0), 1.0)
    gauge = gauge / abs(gauge)  # rotate target so c00 is real positive
    for occ, a in support.items():
        vec[out_basis.index_of(occ)] = a / gauge
    fid = float((vec.conj() @ outcome.state.matrix @ vec).real)
    return SourceParams(
        reachable=True, squeezing=lam, amp_transmission=t, fidelity=fid
    )


def dominant_component(rho: DensityOperator) -> tuple[StateVector, float]:
    """Largest-weight pure component of a density operator.

    The vector's global phase is fixed so its largest coefficient is real
    positive.
    """
    w, v = np.linalg.eigh(rho.matrix)
    vec = v[:, -1]
    anchor = vec[np.argmax(np.abs(vec))]
    if abs(anchor) > 0:
        vec = vec * (anchor.conjugate() / abs(anchor))
    return StateVector(rho.basis, vec), float(w[-1].real)


# ---------------------------------------------------------------------------
# Sweeps over the source parameters


def default_squeezing_grid(points: int = 40, upper: float = 0.4) -> tuple:
    return tuple(np.linspace(0.0, upper, points))


def default_transmission_grid(points: int = 60, lower: float = 3e-5,
                              upper: float = 0.99) -> tuple:
    """Log-spaced splitter transmissions; small t realizes large gains."""
    return tuple(np.geomspace(lower, upper, points))


_STACK_CACHE: dict = {}


def _source_stack(eta_c: float, cutoff: int, lam_grid: tuple, t_grid: tuple):
    """Conditional outputs over a (squeezing, transmission) grid, cached."""
    key = (eta_c, cutoff, lam_grid, t_grid)
    if key not in _STACK_CACHE:
        params = [(lam, t) for lam in lam_grid for t in t_grid]
        states = []
        basis = None
        for lam, t in params:
            outcome = amplified_source(
                SourceConfig(
                    squeezing=lam, amp_transmission=t, coupling=eta_c, cutoff=cutoff
                )
            )
            states.append(outcome.state.matrix)
            basis = outcome.state.basis
        _STACK_CACHE[key] = (params, np.array(states), basis)
    return _STACK_CACHE[key]


def _bell_matrix_for(basis, alice, bob, delta):
    from .bell import BellScenario, bell_matrix

    return bell_matrix(basis, BellScenario(alice=alice, bob=bob, delta=delta))


@dataclass
class SourceOptimum:
    chsh_value: float
    squeezing: float
    amp_transmission: float
    delta: float


def max_source_chsh(
    alice: PartyConditions,
    bob: PartyConditions,
    eta_c: float = 1.0,
    cutoff: int = 6,
    lam_grid: tuple | None = None,
    t_grid: tuple | None = None,
    delta_points: int = 81,
    refine: bool = True,
) -> SourceOptimum:
    """Maximize the CHSH value of the source output over (lam, t, delta).

    Coarse grid scan over the cached output stack, then coordinate
    refinement (golden sections in lam, log t and delta) around the best
    grid point.
    """
    lam_grid = lam_grid or default_squeezing_grid()
    t_grid = t_grid or default_transmission_grid()
    params, stack, basis = _source_stack(eta_c, cutoff, lam_grid, t_grid)

    deltas = np.linspace(0.0, 6.0, delta_points)
    best = (-np.inf, 0, 0.0)
    for d in deltas:
        B = _bell_matrix_for(basis, alice, bob, d)
        vals = np.einsum("sij,ji->s", stack, B).real
        k = int(np.argmax(vals))
        if vals[k] > best[0]:
            best = (float(vals[k]), k, float(d))
    value, k, delta = best
    lam, t = params[k]

    if not refine:
        return SourceOptimum(value, lam, t, delta)

    def circuit_chsh(lam_v, t_v, delta_v=None):
        rho = amplified_source(
            SourceConfig(
                squeezing=lam_v, amp_transmission=t_v, coupling=eta_c, cutoff=cutoff
            )
        ).state
        if delta_v is not None:
            B = _bell_matrix_for(rho.basis, alice, bob, delta_v)
            return float(np.trace(rho.matrix @ B).real)
        return optimize_delta(alice, bob, state=rho, grid_points=61)

    lam_step = lam_grid[1] - lam_grid[0]
    lam, _ = golden_section_max(
        lambda x: circuit_chsh(x, t, delta),
        max(0.0, lam - lam_step),
        min(lam_grid[-1], lam + lam_step),
        1e-4,
    )
    log_step = math.log(t_grid[1] / t_grid[0])
    logt, _ = golden_section_max(
        lambda x: circuit_chsh(lam, math.exp(x), delta),
        math.log(t) - log_step,
        min(math.log(t_grid[-1]), math.log(t) + log_step),
        1e-4,
    )
    t = math.exp(logt)
    delta, value = circuit_chsh(lam, t)
    return SourceOptimum(value, lam, t, delta)


def _source_scenario(symmetry: str, eta_t: float, eta_d: float):
    from .bell import _scenario_for

    return _scenario_for(symmetry, eta_t=eta_t, eta_d=eta_d, eta_h=1.0)


@dataclass
class SourceRegionPoint:
    eta_d: float
    eta_t_star: float | None
    optimum: SourceOptimum | None


def source_critical_transmission(
    eta_d: float = 1.0,
    eta_c: float = 1.0,
    symmetry: str = "symmetric",
    cutoff: int = 6,
    tol: float = 1e-3,
    lam_grid: tuple | None = None,
    t_grid: tuple | None = None,
) -> float | None:
    """Critical transmission for the amplified source at a given eta_d."""

    def max_chsh(eta_t):
        scen = _source_scenario(symmetry, eta_t, eta_d)
        return max_source_chsh(
            scen.alice, scen.bob, eta_c=eta_c, cutoff=cutoff,
            lam_grid=lam_grid, t_grid=t_grid,
        ).chsh_value

    return bisect_threshold(max_chsh, tol=tol)


def _source_region_solve(eta_d, eta_c, symmetry, cutoff, tol, lam_grid, t_grid):
    thr = source_critical_transmission(
        eta_d=eta_d, eta_c=eta_c, symmetry=symmetry, cutoff=cutoff, tol=tol,
        lam_grid=lam_grid, t_grid=t_grid,
    )
    optimum = None
    if thr is not None:
        scen = _source_scenario(symmetry, thr, eta_d)
        optimum = max_source_chsh(
            scen.alice, scen.bob, eta_c=eta_c, cutoff=cutoff,
            lam_grid=lam_grid, t_grid=t_grid,
        )
    return SourceRegionPoint(eta_d=float(eta_d), eta_t_star=thr, optimum=optimum)


def source_region_boundary(
    eta_d_values,
    eta_c: float = 1.0,
    symmetry: str = "symmetric",
    cutoff: int = 6,
    tol: float = 1e-3,
    lam_grid: tuple | None = None,
    t_grid: tuple | None = None,
    workers: int = 1,
) -> list[SourceRegionPoint]:
    """Violation-region boundary with (lam, t, delta) optimized per point."""
    from functools import partial

    solve = partial(
        _source_region_solve,
        eta_c=eta_c,
        symmetry=symmetry,
        cutoff=cutoff,
        tol=tol,
        lam_grid=lam_grid,
        t_grid=t_grid,
    )
    return map_ordered(solve, eta_d_values, workers=workers)


def amplified_source_threshold_with_filters(
    gain: float,
    applications: int = 1,
    eta_d: float = 1.0,
    eta_c: float = 1.0,
    cutoff: int = 6,
    tol: float = 1e-3,
    lam_grid: tuple | None = None,
    t_grid: tuple | None = None,
) -> float | None:
    """Critical transmission when the source feeds the local filters.

    The source output suffers the transmission loss explicitly (the filters
    sit between the channel and the measurements), is filtered on both
    modes, and is measured with detector efficiency ``eta_d``.  The source
    parameters and bin half-width are re-optimized at every bisection step.
    """
    lam_grid = lam_grid or default_squeezing_grid(20)
    t_grid = t_grid or default_transmission_grid(30)
    params, stack, basis = _source_stack(eta_c, cutoff, lam_grid, t_grid)
    party = PartyConditions(eta_t=1.0, eta_d=eta_d, eta_h=1.0)

    filter_single = [
        ((gain - 1.0) * np.arange(c + 1, dtype=float) + 1.0) ** applications
        for c in basis.cutoffs
    ]
    filter_diag = np.array(
        [
            filter_single[0][occ[0]] * filter_single[1][occ[1]]
            for occ in basis.occupations
        ]
    )

    def lossy_filtered_stack(eta_t):
        out = stack
        for mode in (0, 1):
            acc = np.zeros_like(out)
            for E in _capped_loss_embed(basis, eta_t, mode):
                acc += np.matmul(np.matmul(E[None], out), E.conj().T[None])
            out = acc
        out = filter_diag[None, :, None] * out * filter_diag[None, None, :]
        traces = np.einsum("sii->s", out).real
        traces = np.where(traces > 0.0, traces, np.inf)
        return out / traces[:, None, None]

    def max_chsh(eta_t):
        filtered = lossy_filtered_stack(eta_t)
        deltas = np.linspace(0.0, 6.0, 61)
        best = (-np.inf, 0, 0.0)
        for d in deltas:
            B = _bell_matrix_for(basis, party, party, d)
            vals = np.einsum("sij,ji->s", filtered, B).real
            k = int(np.argmax(vals))
            if vals[k] > best[0]:
                best = (float(vals[k]), k, float(d))
        value, k, delta = best
        _, refined = golden_section_max(
            lambda d: float(
                np.trace(filtered[k] @ _bell_matrix_for(basis, party, party, d)).real
            ),
            max(0.0, delta - 0.1),
            delta + 0.1,
            1e-5,
        )
        return max(value, refined)

    return bisect_threshold(max_chsh, tol=tol)


def _capped_loss_embed(basis: ModeBasis, eta: float, mode: int):
    """Loss Kraus operators embedded in a (possibly photon-capped) basis."""
    key = (basis.cutoffs, basis.total_cap, float(eta), mode)
    if key not in _CAPPED_LOSS_CACHE:
        _CAPPED_LOSS_CACHE[key] = [
            embed_single_mode(basis, A, mode)
            for A in loss_kraus(eta, basis.cutoffs[mode])
        ]
    return _CAPPED_LOSS_CACHE[key]


_CAPPED_LOSS_CACHE: dict = {}
