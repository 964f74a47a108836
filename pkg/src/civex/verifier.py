"""Four-way triage over committed graphs, with auditable execution certificates.

Rules, in order:

1. Tool gate - non-interventional actions pass straight through; malformed
   frames and forbidden tools are rejected.
2. Identification - every candidate graph is checked for a backdoor or
   frontdoor argument and the set is partitioned into identified /
   not-identified.
3. Certified execution - when every graph is identified, estimate the effect
   under each graph, take the minimum (worst-case) lower confidence bound,
   and execute only if it clears the utility threshold and the action cost
   stays inside the risk budget.  Execution carries a certificate.
4. Bounded-risk experimentation - any not-identified graph routes to
   EXPERIMENT when the action is reversible and affordable, else ABSTAIN.

Every EXECUTE issued by rule 3 carries a certificate binding the committed
graph, the assumption labels, the identification proof, the estimate with
its one-sided bound, the provenance hash of the data, and the declared risk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

from .estimation import (
    EffectEstimate,
    EstimationError,
    adjusted_effect,
    frontdoor_effect,
    provenance_hash,
)
from .frames import Frame, FrameError
from .graphs import (
    CausalGraph,
    IdentificationKind,
    IdentificationResult,
    canonical_graph_json,
    graph_digest,
    graph_from_json_dict,
    identify,
)
from .scm import ActionFrame, InstanceId, ScmInstance

__all__ = [
    "Decision",
    "VerifierConfig",
    "Certificate",
    "Verdict",
    "InstanceView",
    "TwoStageResult",
    "triage",
    "run_two_stage",
    "make_view",
    "resolve_for_experiment",
    "build_execution_certificate",
    "certificate_to_json_dict",
    "certificate_from_json_dict",
    "validate_certificate",
    "verify_certificate",
]

ASSUMPTION_LABELS = ("A1", "A2", "A3", "A4")


class Decision(str, Enum):
    EXECUTE = "EXECUTE"
    REJECT = "REJECT"
    EXPERIMENT = "EXPERIMENT"
    ABSTAIN = "ABSTAIN"


@dataclass(frozen=True)
class VerifierConfig:
    alpha: float = 0.05
    tau_u: float = 0.0
    tau_r: float = 0.5
    cert_only: bool = False
    forbidden_tools: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.tau_r < 0:
            raise ValueError("tau_r must be >= 0")

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "tau_u": self.tau_u,
            "tau_r": self.tau_r,
            "cert_only": self.cert_only,
            "forbidden_tools": sorted(self.forbidden_tools),
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "VerifierConfig":
        return cls(
            alpha=obj.get("alpha", 0.05),
            tau_u=obj.get("tau_u", 0.0),
            tau_r=obj.get("tau_r", 0.5),
            cert_only=obj.get("cert_only", False),
            forbidden_tools=frozenset(obj.get("forbidden_tools", ())),
        )


@dataclass(frozen=True)
class Certificate:
    graph_json: str
    graph_sha256: str
    assumptions: tuple[str, ...]
    proof: IdentificationResult
    theta_hat: float
    std_err: float
    lcb_alpha: float
    alpha: float
    n: int
    provenance: str
    risk: float


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    rule_fired: int | None = None
    certificate: Certificate | None = None
    refusal_reason: str | None = None
    rationale: str | None = None

    def __post_init__(self) -> None:
        if self.decision is not Decision.EXECUTE and self.refusal_reason is None:
            object.__setattr__(self, "refusal_reason", "unspecified refusal")


@dataclass(frozen=True)
class InstanceView:
    """What a verdict provider is allowed to see.

    Carries the action frame, the committed graph set, and one data frame.
    Ground-truth effects, labels, and the paired experimental frame are not
    part of the view; the two-stage protocol swaps the data in itself.
    """

    id: InstanceId
    frame: ActionFrame
    graphs: tuple[CausalGraph, ...]
    data: Frame
    safe_experiment_available: bool
    stage: int = 1


VerdictProvider = Callable[[InstanceView], Verdict]


def make_view(inst: ScmInstance) -> InstanceView:
    return InstanceView(
        id=inst.id,
        frame=inst.frame,
        graphs=(inst.graph,),
        data=inst.observational,
        safe_experiment_available=inst.safe_experiment_available,
        stage=1,
    )


def resolve_for_experiment(g: CausalGraph) -> CausalGraph:
    """Graph describing the randomized follow-up data.

    Random assignment severs every influence on the treatment, so the latent
    edge and all directed edges into the treatment are dropped; the empty
    backdoor set then identifies the effect.
    """
    return g.without_bidirected().without_directed_into([g.treatment])


def _malformed_reason(frame: ActionFrame, graphs: Sequence[CausalGraph]) -> str | None:
    if not frame.tool:
        return "malformed action frame: missing tool name"
    if frame.cost < 0:
        return "malformed action frame: negative cost"
    for g in graphs:
        if frame.target_variable not in g.nodes:
            return f"malformed action frame: unknown target variable '{frame.target_variable}'"
        if frame.utility_variable not in g.nodes:
            return f"malformed action frame: unknown utility variable '{frame.utility_variable}'"
    return None


def _estimate_for(
    proof: IdentificationResult, d: Frame, alpha: float,
    treatment: str, outcome: str,
) -> EffectEstimate:
    if proof.kind is IdentificationKind.BACKDOOR:
        return adjusted_effect(d, proof.adjustment_set, alpha=alpha,
                               treatment_col=treatment, outcome_col=outcome)
    if proof.kind is IdentificationKind.FRONTDOOR:
        return frontdoor_effect(d, proof.mediator_set, alpha=alpha,
                                treatment_col=treatment, outcome_col=outcome)
    raise EstimationError("cannot estimate an unidentified effect")


def build_execution_certificate(
    graph: CausalGraph,
    proof: IdentificationResult,
    estimate: EffectEstimate,
    d: Frame,
    frame: ActionFrame,
) -> Certificate:
    return Certificate(
        graph_json=canonical_graph_json(graph),
        graph_sha256=graph_digest(graph),
        assumptions=ASSUMPTION_LABELS,
        proof=proof,
        theta_hat=estimate.theta_hat,
        std_err=estimate.std_err,
        lcb_alpha=estimate.lcb,
        alpha=estimate.alpha,
        n=estimate.n,
        provenance=provenance_hash(d),
        risk=frame.cost,
    )


def triage(
    frame: ActionFrame,
    graphs: Sequence[CausalGraph],
    d: Frame,
    cfg: VerifierConfig,
) -> Verdict:
    """Route one proposed action to EXECUTE, REJECT, EXPERIMENT, or ABSTAIN."""
    if not graphs:
        raise ValueError("at least one committed graph is required")

    # Rule 1: tool gate.
    reason = _malformed_reason(frame, graphs)
    if reason is not None:
        return Verdict(Decision.REJECT, rule_fired=1, refusal_reason=reason)
    if frame.tool in cfg.forbidden_tools:
        return Verdict(Decision.REJECT, rule_fired=1,
                       refusal_reason=f"tool '{frame.tool}' is in a forbidden risk class")
    if not frame.interventional:
        return Verdict(Decision.EXECUTE, rule_fired=1,
                       rationale="non-interventional action; no causal claim to certify")

    # Rule 2: identification.
    proofs = [identify(g) for g in graphs]
    not_identified = [p for p in proofs if not p.identified]

    # Rule 4: any unidentified graph dominates.
    if not_identified:
        if frame.cost <= cfg.tau_r and frame.reversible:
            if cfg.cert_only:
                return Verdict(
                    Decision.ABSTAIN, rule_fired=4,
                    refusal_reason="effect not identifiable; experimentation disabled "
                                   "(certificate-only mode)")
            return Verdict(
                Decision.EXPERIMENT, rule_fired=4,
                refusal_reason="effect not identifiable under the committed graph; "
                               "reversible action within the risk budget")
        return Verdict(
            Decision.ABSTAIN, rule_fired=4,
            refusal_reason="effect not identifiable and no safe experiment is admissible")

    # Rule 3: certified execution on the worst-case bound.
    estimates: list[EffectEstimate] = []
    try:
        for g, proof in zip(graphs, proofs):
            estimates.append(_estimate_for(proof, d, cfg.alpha,
                                           g.treatment, g.outcome))
    except (EstimationError, FrameError) as exc:
        return Verdict(Decision.ABSTAIN, rule_fired=3,
                       refusal_reason=f"estimation failure: {exc}")
    worst = min(range(len(estimates)), key=lambda i: estimates[i].lcb)
    min_lcb = estimates[worst].lcb
    if min_lcb < cfg.tau_u:
        return Verdict(
            Decision.REJECT, rule_fired=3,
            refusal_reason=f"worst-case lower confidence bound {min_lcb:.6g} "
                           f"is below the utility threshold {cfg.tau_u:.6g}")
    if frame.cost > cfg.tau_r:
        return Verdict(
            Decision.REJECT, rule_fired=3,
            refusal_reason=f"cost {frame.cost:.6g} overruns the risk threshold {cfg.tau_r:.6g}")
    cert = build_execution_certificate(graphs[worst], proofs[worst], estimates[worst], d, frame)
    return Verdict(Decision.EXECUTE, rule_fired=3, certificate=cert,
                   rationale=proofs[worst].proof_note)


@dataclass(frozen=True)
class TwoStageResult:
    terminal: Verdict
    trace: tuple[Verdict, ...]

    @property
    def stage1(self) -> Verdict:
        return self.trace[0]


def run_two_stage(
    inst: ScmInstance,
    decide: VerdictProvider,
    cfg: VerifierConfig,
) -> TwoStageResult:
    """Record the stage-1 verdict and resolve EXPERIMENT via the paired data.

    When stage 1 returns EXPERIMENT and a safe experiment is available, the
    provider is re-invoked on the resolved graph (latent edge dropped,
    treatment randomized) with the experimental frame; the terminal verdict
    is the second answer.  Without an available experiment the terminal
    verdict is a conservative ABSTAIN.
    """
    view1 = make_view(inst)
    v1 = decide(view1)
    if v1.decision is not Decision.EXPERIMENT:
        return TwoStageResult(terminal=v1, trace=(v1,))
    if not inst.safe_experiment_available:
        vt = Verdict(Decision.ABSTAIN, rule_fired=4,
                     refusal_reason="experiment requested but no safe experiment is available")
        return TwoStageResult(terminal=vt, trace=(v1, vt))
    view2 = InstanceView(
        id=inst.id,
        frame=inst.frame,
        graphs=tuple(resolve_for_experiment(g) for g in view1.graphs),
        data=inst.experimental,
        safe_experiment_available=False,
        stage=2,
    )
    v2 = decide(view2)
    if v2.decision is Decision.EXPERIMENT:
        v2 = Verdict(Decision.ABSTAIN, rule_fired=4,
                     refusal_reason="experiment loop did not terminate after one stage")
    return TwoStageResult(terminal=v2, trace=(v1, v2))


def certificate_to_json_dict(cert: Certificate) -> dict:
    return {
        "graph": json.loads(cert.graph_json),
        "graph_sha256": cert.graph_sha256,
        "assumptions": list(cert.assumptions),
        "proof": cert.proof.to_json_dict(),
        "theta_hat": cert.theta_hat,
        "std_err": cert.std_err,
        "lcb_alpha": cert.lcb_alpha,
        "alpha": cert.alpha,
        "n": cert.n,
        "provenance": cert.provenance,
        "risk": cert.risk,
    }


def certificate_from_json_dict(obj: Mapping) -> Certificate:
    graph = graph_from_json_dict(obj["graph"])
    return Certificate(
        graph_json=canonical_graph_json(graph),
        graph_sha256=obj["graph_sha256"],
        assumptions=tuple(obj["assumptions"]),
        proof=IdentificationResult.from_json_dict(obj["proof"]),
        theta_hat=obj["theta_hat"],
        std_err=obj["std_err"],
        lcb_alpha=obj["lcb_alpha"],
        alpha=obj["alpha"],
        n=obj["n"],
        provenance=obj["provenance"],
        risk=obj["risk"],
    )


def validate_certificate(cert: Certificate, cfg: VerifierConfig) -> list[str]:
    """Check the certificate's structural invariants; returns violations."""
    problems = []
    if not cert.proof.identified:
        problems.append("proof is not an identification argument")
    if cert.lcb_alpha < cfg.tau_u:
        problems.append("lower confidence bound is below the utility threshold")
    if cert.risk > cfg.tau_r:
        problems.append("declared risk exceeds the risk threshold")
    return problems


def verify_certificate(cert: Certificate, data_bytes: bytes) -> list[str]:
    """Replay a stored certificate against stored data.

    Recomputes the provenance digest, the graph commitment digest, and the
    estimate (point value and bound) from scratch.  Returns the names of
    mismatched fields; an empty list means the replay reproduced the
    certificate exactly.
    """
    import hashlib

    mismatches: list[str] = []
    if hashlib.sha256(data_bytes).hexdigest() != cert.provenance:
        mismatches.append("provenance")
        return mismatches
    graph = graph_from_json_dict(json.loads(cert.graph_json))
    if graph_digest(graph) != cert.graph_sha256:
        mismatches.append("graph_sha256")
    try:
        frame = Frame.from_canonical_bytes(data_bytes)
        estimate = _estimate_for(cert.proof, frame, cert.alpha,
                                 graph.treatment, graph.outcome)
    except (EstimationError, FrameError, ValueError) as exc:
        mismatches.append(f"estimation ({exc})")
        return mismatches
    if estimate.theta_hat != cert.theta_hat:
        mismatches.append("theta_hat")
    if estimate.lcb != cert.lcb_alpha:
        mismatches.append("lcb_alpha")
    return mismatches
