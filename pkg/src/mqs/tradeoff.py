"""Numerical certification of the index/probability/volume trade-offs.

Every inequality tested here ties the growth of a noncommutativity norm
after a subsystem operation to the success probability G and the subsystem
volume |S|:

  pure:   ||[A, rho2]||_inf  <= (4|S| + ||[A, rho1]||_inf) / G
  mixed:  ||[A,[A,rho2]]||_1 <= (||[A,[A,rho1]]||_1 + 16|S|N
                                 + 4|S|^2 G + 12|S|^2) / G

together with their supporting facts: ||[A, E]||_inf <= 2|S| for every
Kraus operator, the contraction lemma ||sum_k E_k X E_k^dag||_1 <= ||X||_1,
and the three-term decomposition of the transformed double commutator.
A slack below -1e-9 on a valid instance falsifies the implementation and
is preserved as a serialized counterexample.  Instances with vanishing G
are classified inapplicable, never violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    ChannelValidation,
    KrausChannel,
    NullOutcome,
    apply_mixed,
    apply_pure,
    channel_to_dict,
    make_channel,
    random_channel,
    validate,
)
from .indices import double_commutator, double_commutator_trace_norm
from .lattice import (
    PAULI_X,
    AdditiveOperator,
    DensityState,
    LatticeConfig,
    PureState,
    SubsystemSupport,
    realize_additive,
    schatten_norm,
)
from .sampling import (
    derive_rng,
    random_additive,
    random_density_state,
    random_hermitian,
    random_pure_state,
    random_support,
)

SLACK_TOL = -1e-9


@dataclass(frozen=True)
class TradeoffReport:
    """One evaluated inequality instance with its term breakdown."""

    lhs: float
    rhs: float
    slack: float
    components: dict[str, float]
    G: float
    volume_s: int
    tightness_ratio: float
    kind: str
    applicable: bool = True

    @property
    def holds(self) -> bool:
        return (not self.applicable) or self.slack >= SLACK_TOL


@dataclass(frozen=True)
class SupportBoundReport:
    """||[A, E_k]||_inf against 2|S| for every Kraus operator."""

    norms: tuple[float, ...]
    bound: float
    max_ratio: float

    @property
    def holds(self) -> bool:
        return all(v <= self.bound + 1e-9 for v in self.norms)


@dataclass(frozen=True)
class ContractionReport:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-9


@dataclass(frozen=True)
class CommutatorDecomposition:
    """Three-term split of G * [A, [A, rho2]] with per-term certificates.

    state_term carries the input double commutator through the channel,
    cross_term collects single channel commutators, channel_term collects
    double channel commutators; their sum reproduces the transformed double
    commutator exactly, and each trace norm obeys its closed-form bound.
    """

    state_term_norm: float
    cross_term_norm: float
    channel_term_norm: float
    state_term_bound: float
    cross_term_bound: float
    channel_term_bound: float
    assembly_lhs: float
    assembly_rhs: float
    assembly_residual: float
    G: float

    @property
    def holds(self) -> bool:
        tol = 1e-9
        return (self.state_term_norm <= self.state_term_bound + tol
                and self.cross_term_norm <= self.cross_term_bound + tol
                and self.channel_term_norm <= self.channel_term_bound + tol
                and self.assembly_lhs <= self.assembly_rhs + tol)


def _require_valid(channel: KrausChannel) -> ChannelValidation:
    report = validate(channel)
    if not report.valid:
        raise ValueError(f"channel is not trace-non-increasing "
                         f"(max Gram eigenvalue {report.max_gram_eigenvalue:g})")
    return report


def _inapplicable(kind: str, volume_s: int) -> TradeoffReport:
    return TradeoffReport(lhs=math.nan, rhs=math.nan, slack=math.nan,
                          components={}, G=0.0, volume_s=volume_s,
                          tightness_ratio=math.nan, kind=kind, applicable=False)


def check_support_bound(a: AdditiveOperator,
                        channel: KrausChannel) -> SupportBoundReport:
    """Certify ||[A, E_k]||_inf <= 2|S| for each Kraus operator."""
    _require_valid(channel)
    bound = 2.0 * channel.support.volume
    amat = realize_additive(a)
    norms = []
    for e in channel.embedded_ops():
        norms.append(schatten_norm(amat @ e - e @ amat, math.inf))
    max_ratio = max(norms) / bound if norms else 0.0
    return SupportBoundReport(norms=tuple(norms), bound=bound,
                              max_ratio=float(max_ratio))


def check_pure_tradeoff(psi1: PureState, channel: KrausChannel,
                        a: AdditiveOperator) -> TradeoffReport:
    """Pure-to-pure trade-off on one instance.

    lhs = ||[A, |psi2><psi2|]||_inf for the selective outcome psi2; rhs is
    (4|S| + ||[A, |psi1><psi1|]||_inf) / G.
    """
    _require_valid(channel)
    volume = channel.support.volume
    try:
        outcome = apply_pure(channel, psi1)
    except NullOutcome:
        return _inapplicable("pure", volume)
    amat = realize_additive(a)
    rho1 = psi1.projector()
    rho2 = outcome.state.projector()
    lhs = schatten_norm(amat @ rho2 - rho2 @ amat, math.inf)
    input_norm = schatten_norm(amat @ rho1 - rho1 @ amat, math.inf)
    g = outcome.success_probability
    components = {"4|S|": 4.0 * volume, "||[A,rho1]||inf": input_norm}
    rhs = (components["4|S|"] + components["||[A,rho1]||inf"]) / g
    return TradeoffReport(lhs=lhs, rhs=rhs, slack=rhs - lhs,
                          components=components, G=g, volume_s=volume,
                          tightness_ratio=lhs / rhs, kind="pure")


def check_contraction_lemma(x: np.ndarray,
                            channel: KrausChannel) -> ContractionReport:
    """||sum_k E_k X E_k^dag||_1 <= ||X||_1 for Hermitian X."""
    _require_valid(channel)
    dim = channel.support.lattice.dim
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (dim, dim):
        raise ValueError(f"operator must be {dim} x {dim}")
    if np.abs(x - x.conj().T).max() > 1e-9 * max(1.0, np.abs(x).max()):
        raise ValueError("contraction lemma applies to Hermitian operators")
    out = np.zeros_like(x)
    for e in channel.embedded_ops():
        out += e @ x @ e.conj().T
    return ContractionReport(lhs=schatten_norm(out, 1), rhs=schatten_norm(x, 1))


def decompose_double_commutator(rho1: DensityState, channel: KrausChannel,
                                a: AdditiveOperator) -> CommutatorDecomposition:
    """Split sum_k [A,[A, E_k rho1 E_k^dag]] into its three bounded groups.

    Commutators with Kraus operators see only A_S = sum_{l in S} a(l), which
    is exact because the complement part of A commutes with anything
    supported on S.  Bounds: the state term by ||[A,[A,rho1]]||_1 (the
    contraction lemma), the cross term by 16|S|N, the channel term by
    4|S|^2 G + 12|S|^2.
    """
    _require_valid(channel)
    volume = channel.support.volume
    lat = rho1.lattice
    outcome = apply_mixed(channel, rho1)  # propagates NullOutcome when G ~ 0
    g = outcome.success_probability

    amat = realize_additive(a)
    a_s = realize_additive(a.restricted(channel.support))
    rho = rho1.matrix
    inner = amat @ rho - rho @ amat           # [A, rho1]
    ddc1 = amat @ inner - inner @ amat        # [A, [A, rho1]]

    dim = lat.dim
    state_term = np.zeros((dim, dim), dtype=np.complex128)
    cross_term = np.zeros((dim, dim), dtype=np.complex128)
    channel_term = np.zeros((dim, dim), dtype=np.complex128)
    for e in channel.embedded_ops():
        ed = e.conj().T
        ce = a_s @ e - e @ a_s                # [A_S, E_k]
        ced = a_s @ ed - ed @ a_s             # [A_S, E_k^dag]
        cce = a_s @ ce - ce @ a_s             # [A_S, [A_S, E_k]]
        cced = a_s @ ced - ced @ a_s
        state_term += e @ ddc1 @ ed
        cross_term += 2.0 * (ce @ inner @ ed + e @ inner @ ced)
        channel_term += cce @ rho @ ed + e @ rho @ cced + 2.0 * ce @ rho @ ced

    norm1 = schatten_norm(state_term, 1)
    norm2 = schatten_norm(cross_term, 1)
    norm3 = schatten_norm(channel_term, 1)
    input_dd_norm = float(np.abs(np.linalg.eigvalsh(ddc1)).sum())

    lhs = double_commutator_trace_norm(outcome.state, a)
    rhs = (norm1 + norm2 + norm3) / g
    assembled = state_term + cross_term + channel_term
    residual = float(np.abs(assembled / g - double_commutator(outcome.state, a)).max())

    return CommutatorDecomposition(
        state_term_norm=norm1, cross_term_norm=norm2, channel_term_norm=norm3,
        state_term_bound=input_dd_norm,
        cross_term_bound=16.0 * volume * lat.n_sites,
        channel_term_bound=4.0 * volume ** 2 * g + 12.0 * volume ** 2,
        assembly_lhs=lhs, assembly_rhs=rhs, assembly_residual=residual, G=g)


def check_mixed_tradeoff(rho1: DensityState, channel: KrausChannel,
                         a: AdditiveOperator) -> TradeoffReport:
    """Mixed-state trade-off on one instance.

    lhs = ||[A,[A,rho2]]||_1 for the selective outcome; rhs sums the input
    double-commutator norm with 16|S|N + 4|S|^2 G + 12|S|^2, divided by G.
    """
    _require_valid(channel)
    volume = channel.support.volume
    n = rho1.lattice.n_sites
    try:
        outcome = apply_mixed(channel, rho1)
    except NullOutcome:
        return _inapplicable("mixed", volume)
    g = outcome.success_probability
    lhs = double_commutator_trace_norm(outcome.state, a)
    components = {
        "||[A,[A,rho1]]||1": double_commutator_trace_norm(rho1, a),
        "16|S|N": 16.0 * volume * n,
        "4|S|^2G": 4.0 * volume ** 2 * g,
        "12|S|^2": 12.0 * volume ** 2,
    }
    rhs = sum(components.values()) / g
    return TradeoffReport(lhs=lhs, rhs=rhs, slack=rhs - lhs,
                          components=components, G=g, volume_s=volume,
                          tightness_ratio=lhs / rhs, kind="mixed")


# ---------------------------------------------------------------------------
# randomized suites and adversarial search


def _state_to_list(vec: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in vec]


def _instance_dict(kind: str, seed_path, channel: KrausChannel,
                   a: AdditiveOperator, report, state_vec=None,
                   rho_mat=None) -> dict:
    doc = {
        "kind": kind,
        "seed_path": list(seed_path),
        "coefficients": [[float(x) for x in row] for row in a.coeffs],
        "channel": channel_to_dict(channel),
    }
    if state_vec is not None:
        doc["state"] = _state_to_list(state_vec)
    if rho_mat is not None:
        doc["rho"] = [_state_to_list(row) for row in rho_mat]
    if isinstance(report, TradeoffReport):
        doc["lhs"] = report.lhs
        doc["rhs"] = report.rhs
        doc["slack"] = report.slack
    return doc


@dataclass
class SuiteSummary:
    """Aggregate of one randomized verification suite."""

    suite: str
    trials: int
    checked: int = 0
    inapplicable: int = 0
    violations: list = field(default_factory=list)
    worst_slack: float = math.inf
    max_tightness: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "checked": self.checked,
            "inapplicable": self.inapplicable,
            "violations": self.violations,
            "worst_slack": None if math.isinf(self.worst_slack) else self.worst_slack,
            "max_tightness_ratio": self.max_tightness,
            "passed": self.passed,
        }

    def _absorb(self, report, instance: dict) -> None:
        if isinstance(report, TradeoffReport):
            if not report.applicable:
                self.inapplicable += 1
                return
            self.checked += 1
            self.worst_slack = min(self.worst_slack, report.slack)
            self.max_tightness = max(self.max_tightness, report.tightness_ratio)
            if report.slack < SLACK_TOL:
                self.violations.append(instance)
        else:
            self.checked += 1
            if not report.holds:
                self.violations.append(instance)


_SUITE_IDS = {"pure": 1, "mixed": 2, "lemma": 3}


def _pure_trial(summary: SuiteSummary, seed: int, i: int, n_max: int) -> None:
    rng = derive_rng(seed, _SUITE_IDS["pure"], i)
    n = int(rng.integers(2, n_max + 1))
    lat = LatticeConfig(n)
    psi = random_pure_state(lat, rng)
    support = random_support(lat, rng)
    chan = random_channel(lat, support, 1, int(rng.integers(0, 2 ** 31)))
    a = random_additive(lat, rng)
    rep = check_pure_tradeoff(psi, chan, a)
    inst = _instance_dict("pure", (seed, i), chan, a, rep,
                          state_vec=psi.amplitudes)
    summary._absorb(rep, inst)
    sup = check_support_bound(a, chan)
    summary._absorb(sup, _instance_dict("support", (seed, i), chan, a, sup,
                                        state_vec=psi.amplitudes))


def _mixed_trial(summary: SuiteSummary, seed: int, i: int, n_max: int) -> None:
    rng = derive_rng(seed, _SUITE_IDS["mixed"], i)
    n = int(rng.integers(2, n_max + 1))
    lat = LatticeConfig(n)
    rho = random_density_state(lat, rng)
    support = random_support(lat, rng)
    n_kraus = int(rng.integers(1, 4))
    chan = random_channel(lat, support, n_kraus, int(rng.integers(0, 2 ** 31)))
    a = random_additive(lat, rng)
    rep = check_mixed_tradeoff(rho, chan, a)
    inst = _instance_dict("mixed", (seed, i), chan, a, rep, rho_mat=rho.matrix)
    summary._absorb(rep, inst)
    if rep.applicable:
        dec = decompose_double_commutator(rho, chan, a)
        summary._absorb(dec, _instance_dict("decomposition", (seed, i), chan,
                                            a, dec, rho_mat=rho.matrix))
    sup = check_support_bound(a, chan)
    summary._absorb(sup, _instance_dict("support", (seed, i), chan, a, sup))


def _lemma_trial(summary: SuiteSummary, seed: int, i: int, n_max: int) -> None:
    rng = derive_rng(seed, _SUITE_IDS["lemma"], i)
    n = int(rng.integers(2, n_max + 1))
    lat = LatticeConfig(n)
    x = random_hermitian(lat.dim, rng)
    support = random_support(lat, rng)
    n_kraus = int(rng.integers(1, 4))
    chan = random_channel(lat, support, n_kraus, int(rng.integers(0, 2 ** 31)))
    rep = check_contraction_lemma(x, chan)
    if not rep.holds:
        summary.violations.append({"kind": "lemma", "seed_path": [seed, i],
                                   "lhs": rep.lhs, "rhs": rep.rhs,
                                   "channel": channel_to_dict(chan)})
    summary.checked += 1


def run_verify_suite(suite: str, trials: int, seed: int,
                     n_max: int = 6) -> dict:
    """Run seeded randomized suites; abort a suite on its first violation.

    `suite` is one of "pure", "mixed", "lemma", or "all".  The summary is a
    JSON-ready dict with per-suite slack statistics and any serialized
    counterexamples.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    names = ["pure", "mixed", "lemma"] if suite == "all" else [suite]
    if any(name not in _SUITE_IDS for name in names):
        raise ValueError(f"unknown suite {suite!r}")
    runners = {"pure": _pure_trial, "mixed": _mixed_trial, "lemma": _lemma_trial}
    out = {"seed": seed, "trials": trials, "n_max": n_max, "suites": {}}
    for name in names:
        summary = SuiteSummary(suite=name, trials=trials)
        for i in range(trials):
            runners[name](summary, seed, i, n_max)
            if summary.violations:
                break
        out["suites"][name] = summary.to_dict()
    out["passed"] = all(s["passed"] for s in out["suites"].values())
    return out


@dataclass(frozen=True)
class AdversarialResult:
    max_ratio: float
    instance: dict
    trials: int


def _ratio_of(kind: str, psi, rho, chan, a) -> tuple[float, object]:
    if kind == "support":
        rep = check_support_bound(a, chan)
        return rep.max_ratio, rep
    if kind == "pure":
        rep = check_pure_tradeoff(psi, chan, a)
    else:
        rep = check_mixed_tradeoff(rho, chan, a)
    ratio = rep.tightness_ratio if rep.applicable else -1.0
    return ratio, rep


def adversarial_search(kind: str, trials: int, seed: int, n_max: int = 6,
                       hill_steps: int = 20) -> AdversarialResult:
    """Randomized search plus hill climbing for near-tight instances.

    Maximizes lhs/rhs of the chosen inequality ("pure", "mixed", or
    "support").  Structured candidates known to be tight for the support
    bound (single-site sigma_x against a z-aligned site) join the random
    pool.  The returned ratio must never exceed 1 + 1e-9.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if kind not in ("pure", "mixed", "support"):
        raise ValueError(f"unknown inequality {kind!r}")
    best = (-math.inf, None, None, None, None)  # ratio, psi, rho, chan, a

    for i in range(trials):
        rng = derive_rng(seed, 0xAD, i)
        n = int(rng.integers(2, n_max + 1))
        lat = LatticeConfig(n)
        psi = random_pure_state(lat, rng)
        rho = random_density_state(lat, rng) if kind == "mixed" else None
        support = random_support(lat, rng)
        n_kraus = 1 if kind == "pure" else int(rng.integers(1, 4))
        if kind == "support" and i % 2 == 0:
            # known tight family: sigma_x on one site, z-aligned observable
            site = int(rng.integers(1, n + 1))
            support = SubsystemSupport((site,), lat)
            chan = make_channel([PAULI_X], support)
            a = AdditiveOperator.uniform(lat, "z")
        else:
            chan = random_channel(lat, support, n_kraus,
                                  int(rng.integers(0, 2 ** 31)))
            a = random_additive(lat, rng)
        ratio, _ = _ratio_of(kind, psi, rho, chan, a)
        if ratio > best[0]:
            best = (ratio, psi, rho, chan, a)

    ratio, psi, rho, chan, a = best
    rng = derive_rng(seed, 0xAD, trials)
    for _ in range(hill_steps):
        c = a.coeffs + 0.2 * rng.standard_normal(a.coeffs.shape)
        norms = np.linalg.norm(c, axis=1, keepdims=True)
        c = c / np.maximum(norms, 1e-300)
        cand = AdditiveOperator(c, a.lattice)
        new_ratio, _ = _ratio_of(kind, psi, rho, chan, cand)
        if new_ratio > ratio:
            ratio, a = new_ratio, cand

    _, rep = _ratio_of(kind, psi, rho, chan, a)
    instance = _instance_dict(kind, (seed,), chan, a, rep,
                              state_vec=None if psi is None else psi.amplitudes,
                              rho_mat=None if rho is None else rho.matrix)
    instance["max_ratio"] = ratio
    return AdversarialResult(max_ratio=float(ratio), instance=instance,
                             trials=trials)
