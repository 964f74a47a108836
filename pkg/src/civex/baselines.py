"""Comparison verdict providers, plus a replay provider for recorded shards.

Every provider consumes the same redacted view (action frame, committed
graph set, observational frame).  Only the oracle is handed the planted
effect, through a context table keyed by instance id; nothing else can reach
ground truth by construction.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .estimation import EstimationError, adjusted_effect, unadjusted_difference
from .frames import Frame, FrameError
from .graphs import identify
from .scm import InstanceId, ScmInstance
from .verifier import (
    Decision,
    InstanceView,
    Verdict,
    VerifierConfig,
    build_execution_certificate,
    make_view,
    triage,
)

__all__ = [
    "ORACLE_SCM",
    "CIVEX",
    "CIVEX_CERT_ONLY",
    "CAUSAL_NO_EXPERIMENT",
    "CONTEXT_ONLY_NO_CAUSAL",
    "OBSERVATIONAL_ASSOCIATION",
    "ALWAYS_ABSTAIN",
    "POLICY_GATE",
    "SCHEMA_GATE",
    "SEMANTIC_ONTOLOGY_GATE",
    "FAMILY_MAJORITY_CLASSIFIER",
    "NAME_ONLY_CLASSIFIER",
    "ALL_METHODS",
    "ProviderContext",
    "build_context",
    "make_provider",
    "decide",
    "replay_method",
    "is_replay_method",
    "replay_tag",
    "load_replay_shard",
]

ORACLE_SCM = "OracleSCM"
CIVEX = "CIVeX"
CIVEX_CERT_ONLY = "CIVeXCertOnly"
CAUSAL_NO_EXPERIMENT = "CausalNoExperiment"
CONTEXT_ONLY_NO_CAUSAL = "ContextOnlyNoCausal"
OBSERVATIONAL_ASSOCIATION = "ObservationalAssociation"
ALWAYS_ABSTAIN = "AlwaysAbstain"
POLICY_GATE = "PolicyGate"
SCHEMA_GATE = "SchemaGate"
SEMANTIC_ONTOLOGY_GATE = "SemanticOntologyGate"
FAMILY_MAJORITY_CLASSIFIER = "FamilyMajorityClassifier"
NAME_ONLY_CLASSIFIER = "NameOnlyClassifier"

ALL_METHODS = (
    ORACLE_SCM,
    CIVEX,
    CIVEX_CERT_ONLY,
    CAUSAL_NO_EXPERIMENT,
    CONTEXT_ONLY_NO_CAUSAL,
    OBSERVATIONAL_ASSOCIATION,
    ALWAYS_ABSTAIN,
    POLICY_GATE,
    SCHEMA_GATE,
    SEMANTIC_ONTOLOGY_GATE,
    FAMILY_MAJORITY_CLASSIFIER,
    NAME_ONLY_CLASSIFIER,
)

# Action names treated as benign by the name-only classifier.
NAME_ONLY_EXECUTE_TOOLS = frozenset({"enable_cache", "trim_logs"})

_REPLAY_PREFIX = "Replay("


def replay_method(tag: str) -> str:
    return f"{_REPLAY_PREFIX}{tag})"


def is_replay_method(method: str) -> bool:
    return method.startswith(_REPLAY_PREFIX) and method.endswith(")")


def replay_tag(method: str) -> str:
    if not is_replay_method(method):
        raise ValueError(f"'{method}' is not a replay method id")
    return method[len(_REPLAY_PREFIX):-1]


def _shard_key(inst_id: InstanceId) -> tuple[int, str, str, int]:
    return (inst_id.seed, inst_id.regime, inst_id.family, inst_id.index)


@dataclass(frozen=True)
class ProviderContext:
    """Side tables a provider may need beyond the redacted view."""

    theta_by_id: Mapping[InstanceId, float] = field(default_factory=dict)
    pooled_association: Mapping[tuple[int, str, str], tuple[float, float]] = field(
        default_factory=dict
    )
    replay_shards: Mapping[str, Mapping[tuple[int, str, str, int], str]] = field(
        default_factory=dict
    )
    obs_assoc_per_instance: bool = False


def _pooled_association(instances: Sequence[ScmInstance]) -> dict[tuple[int, str, str], tuple[float, float]]:
    """Family-pooled association per seed: one estimate over the family's
    instance-level arm means, shared by all instances in the pool."""
    groups: dict[tuple[int, str, str], list[tuple[float, float]]] = {}
    for inst in instances:
        t = inst.observational.column("T")
        y = inst.observational.column("Y")
        if not (t == 1.0).any() or not (t == 0.0).any():
            continue
        key = (inst.id.seed, inst.id.regime, inst.id.family)
        groups.setdefault(key, []).append(
            (float(y[t == 1.0].mean()), float(y[t == 0.0].mean()))
        )
    pooled: dict[tuple[int, str, str], tuple[float, float]] = {}
    for key, pairs in groups.items():
        rows = [(1.0, m1) for m1, _ in pairs] + [(0.0, m0) for _, m0 in pairs]
        frame = Frame(columns=("T", "Y"), data=np.array(rows))
        try:
            est = unadjusted_difference(frame)
        except EstimationError:
            continue
        pooled[key] = (est.theta_hat, est.lcb)
    return pooled


def build_context(
    instances: Sequence[ScmInstance],
    *,
    replay_shards: Mapping[str, Mapping[tuple[int, str, str, int], str]] | None = None,
    obs_assoc_per_instance: bool = False,
) -> ProviderContext:
    return ProviderContext(
        theta_by_id={inst.id: inst.spec.theta for inst in instances},
        pooled_association=_pooled_association(instances),
        replay_shards=dict(replay_shards or {}),
        obs_assoc_per_instance=obs_assoc_per_instance,
    )


def _oracle(ctx: ProviderContext) -> Callable[[InstanceView], Verdict]:
    def provider(view: InstanceView) -> Verdict:
        theta = ctx.theta_by_id[view.id]
        if theta > 0:
            return Verdict(Decision.EXECUTE, rationale="planted effect is positive")
        return Verdict(Decision.REJECT, refusal_reason="planted effect is not positive")

    return provider


def _civex(cfg: VerifierConfig) -> Callable[[InstanceView], Verdict]:
    def provider(view: InstanceView) -> Verdict:
        return triage(view.frame, view.graphs, view.data, cfg)

    return provider


def _causal_no_experiment(cfg: VerifierConfig) -> Callable[[InstanceView], Verdict]:
    """Backdoor/frontdoor adjustment with the worst-case bound, but no
    experimentation: unidentified queries are refused outright."""

    def provider(view: InstanceView) -> Verdict:
        proofs = [identify(g) for g in view.graphs]
        if any(not p.identified for p in proofs):
            return Verdict(Decision.ABSTAIN,
                           refusal_reason="effect not identifiable; this method never experiments")
        estimates = []
        try:
            for g, proof in zip(view.graphs, proofs):
                if proof.mediator_set:
                    from .estimation import frontdoor_effect

                    estimates.append(frontdoor_effect(
                        view.data, proof.mediator_set, cfg.alpha,
                        treatment_col=g.treatment, outcome_col=g.outcome))
                else:
                    estimates.append(adjusted_effect(
                        view.data, proof.adjustment_set, cfg.alpha,
                        treatment_col=g.treatment, outcome_col=g.outcome))
        except (EstimationError, FrameError) as exc:
            return Verdict(Decision.ABSTAIN, refusal_reason=f"estimation failure: {exc}")
        worst = min(range(len(estimates)), key=lambda i: estimates[i].lcb)
        if estimates[worst].lcb < cfg.tau_u:
            return Verdict(Decision.REJECT,
                           refusal_reason="worst-case lower confidence bound below the threshold")
        if view.frame.cost > cfg.tau_r:
            return Verdict(Decision.REJECT,
                           refusal_reason="cost overruns the risk threshold")
        cert = build_execution_certificate(
            view.graphs[worst], proofs[worst], estimates[worst], view.data, view.frame
        )
        return Verdict(Decision.EXECUTE, certificate=cert,
                       rationale=proofs[worst].proof_note)

    return provider


def _context_only(cfg: VerifierConfig) -> Callable[[InstanceView], Verdict]:
    """Adjust on every observed covariate column, with no identification
    reasoning; the latent edge is simply ignored."""

    def provider(view: InstanceView) -> Verdict:
        t_col = view.frame.target_variable
        y_col = view.frame.utility_variable
        covariates = [c for c in view.data.columns if c not in (t_col, y_col)]
        try:
            est = adjusted_effect(view.data, covariates, cfg.alpha,
                                  treatment_col=t_col, outcome_col=y_col)
        except (EstimationError, FrameError) as exc:
            return Verdict(Decision.REJECT, refusal_reason=f"estimation failure: {exc}")
        if est.lcb >= cfg.tau_u:
            return Verdict(Decision.EXECUTE,
                           rationale="covariate-adjusted bound clears the threshold")
        return Verdict(Decision.REJECT,
                       refusal_reason="covariate-adjusted bound below the threshold")

    return provider


def _observational_association(ctx: ProviderContext, cfg: VerifierConfig) -> Callable[[InstanceView], Verdict]:
    def provider(view: InstanceView) -> Verdict:
        if ctx.obs_assoc_per_instance:
            try:
                est = unadjusted_difference(view.data, cfg.alpha)
            except (EstimationError, FrameError) as exc:
                return Verdict(Decision.ABSTAIN, refusal_reason=f"estimation failure: {exc}")
            delta, lcb = est.theta_hat, est.lcb
        else:
            key = (view.id.seed, view.id.regime, view.id.family)
            if key not in ctx.pooled_association:
                return Verdict(Decision.ABSTAIN,
                               refusal_reason="no pooled association available")
            delta, lcb = ctx.pooled_association[key]
        if delta > 0 and lcb >= 0:
            return Verdict(Decision.EXECUTE,
                           rationale="positive association with a non-negative bound")
        return Verdict(Decision.ABSTAIN,
                       refusal_reason="association sign or bound did not clear zero")

    return provider


def _always_abstain(view: InstanceView) -> Verdict:
    return Verdict(Decision.ABSTAIN,
                   refusal_reason="refuses every state-changing action")


def _policy_gate(view: InstanceView) -> Verdict:
    try:
        est = unadjusted_difference(view.data,
                                    treatment_col=view.frame.target_variable,
                                    outcome_col=view.frame.utility_variable)
    except (EstimationError, FrameError) as exc:
        return Verdict(Decision.REJECT, refusal_reason=f"estimation failure: {exc}")
    if est.theta_hat > 0:
        return Verdict(Decision.EXECUTE, rationale="observed association is positive")
    return Verdict(Decision.REJECT, refusal_reason="observed association is not positive")


def _forbidden_list_gate(rationale: str, cfg: VerifierConfig) -> Callable[[InstanceView], Verdict]:
    def provider(view: InstanceView) -> Verdict:
        if view.frame.tool in cfg.forbidden_tools:
            return Verdict(Decision.REJECT,
                           refusal_reason=f"tool '{view.frame.tool}' is on the forbidden list")
        return Verdict(Decision.EXECUTE, rationale=rationale)

    return provider


def _name_only(view: InstanceView) -> Verdict:
    if view.frame.tool in NAME_ONLY_EXECUTE_TOOLS:
        return Verdict(Decision.EXECUTE,
                       rationale=f"action name '{view.frame.tool}' is on the benign list")
    return Verdict(Decision.ABSTAIN,
                   refusal_reason=f"action name '{view.frame.tool}' is not on the benign list")


def _replay(tag: str, ctx: ProviderContext) -> Callable[[InstanceView], Verdict]:
    shard = ctx.replay_shards.get(tag, {})

    def provider(view: InstanceView) -> Verdict:
        terminal = shard.get(_shard_key(view.id))
        if terminal is None:
            return Verdict(Decision.ABSTAIN, refusal_reason="no recorded verdict")
        return Verdict(Decision(terminal), rationale=f"replayed from shard '{tag}'")

    return provider


def make_provider(
    method: str,
    ctx: ProviderContext,
    cfg: VerifierConfig,
) -> Callable[[InstanceView], Verdict]:
    if is_replay_method(method):
        return _replay(replay_tag(method), ctx)
    if method == ORACLE_SCM:
        return _oracle(ctx)
    if method == CIVEX:
        return _civex(cfg)
    if method == CIVEX_CERT_ONLY:
        from dataclasses import replace

        return _civex(replace(cfg, cert_only=True))
    if method == CAUSAL_NO_EXPERIMENT:
        return _causal_no_experiment(cfg)
    if method == CONTEXT_ONLY_NO_CAUSAL:
        return _context_only(cfg)
    if method == OBSERVATIONAL_ASSOCIATION:
        return _observational_association(ctx, cfg)
    if method == ALWAYS_ABSTAIN:
        return _always_abstain
    if method == POLICY_GATE:
        return _policy_gate
    if method == SCHEMA_GATE:
        return _forbidden_list_gate("tool schema validated", cfg)
    if method == SEMANTIC_ONTOLOGY_GATE:
        return _forbidden_list_gate(
            "target and utility variables are present in the tool ontology", cfg
        )
    if method == FAMILY_MAJORITY_CLASSIFIER:
        return _forbidden_list_gate(
            "counterbalanced families have no usable majority label; defaults to allow", cfg
        )
    if method == NAME_ONLY_CLASSIFIER:
        return _name_only
    raise ValueError(f"unknown method '{method}'")


def decide(method: str, inst: ScmInstance, cfg: VerifierConfig,
           ctx: ProviderContext | None = None) -> Verdict:
    """Single-invocation decision for one instance (no experiment resolution)."""
    if ctx is None:
        ctx = build_context([inst])
    return make_provider(method, ctx, cfg)(make_view(inst))


_VALID_VERDICTS = {d.value for d in Decision}


def load_replay_shard(path) -> dict[tuple[int, str, str, int], str]:
    """Parse one recorded-verdict CSV; raises on malformed shards so callers
    can skip them atomically.  Unknown columns are ignored."""
    entries: dict[tuple[int, str, str, int], str] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"seed", "regime", "family", "index", "stage1", "terminal"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise ValueError(f"shard {path} is missing required columns {sorted(required)}")
        for row in reader:
            terminal = row["terminal"].strip().upper()
            if terminal not in _VALID_VERDICTS:
                raise ValueError(f"shard {path} has invalid verdict '{row['terminal']}'")
            key = (int(row["seed"]), row["regime"].strip(), row["family"].strip(),
                   int(row["index"]))
            entries[key] = terminal
    return entries


def load_replay_shards(paths: Iterable) -> dict[tuple[int, str, str, int], str]:
    """Merge shards, skipping (with a warning) any that fail to parse."""
    merged: dict[tuple[int, str, str, int], str] = {}
    for path in paths:
        try:
            merged.update(load_replay_shard(path))
        except (ValueError, OSError) as exc:
            warnings.warn(f"skipping replay shard {path}: {exc}")
    return merged
