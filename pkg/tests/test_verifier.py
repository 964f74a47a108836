import json
from dataclasses import replace

import numpy as np
import pytest

from civex.estimation import provenance_hash
from civex.frames import Frame
from civex.graphs import CausalGraph, IdentificationKind
from civex.scm import (
    ADVERSARIAL,
    MODERATE,
    ActionFrame,
    BenchmarkSpec,
    sample_instance,
)
from civex.verifier import (
    Decision,
    VerifierConfig,
    certificate_from_json_dict,
    certificate_to_json_dict,
    make_view,
    resolve_for_experiment,
    run_two_stage,
    triage,
    validate_certificate,
    verify_certificate,
)

CFG = VerifierConfig()


def worked_graph():
    return CausalGraph.create(
        nodes=["add_index", "latency_savings_ms", "query_volume", "write_volume"],
        directed=[
            ("query_volume", "add_index"),
            ("query_volume", "latency_savings_ms"),
            ("write_volume", "add_index"),
            ("write_volume", "latency_savings_ms"),
            ("add_index", "latency_savings_ms"),
        ],
        treatment="add_index",
        outcome="latency_savings_ms",
    )


def worked_frame(reversible=True, cost=0.05, interventional=True, tool="add_index"):
    return ActionFrame(tool=tool, target_variable="add_index", target_value=1.0,
                       utility_variable="latency_savings_ms", cost=cost,
                       reversible=reversible, interventional=interventional)


def worked_data(theta=3.1, n=400, seed=0):
    """Confounded draw matching the worked graph, planted positive effect."""
    rng = np.random.default_rng(seed)
    qv = rng.normal(0, 1, n)
    wv = rng.normal(0, 1, n)
    t = (rng.random(n) < 1 / (1 + np.exp(-(0.8 * qv + 0.6 * wv)))).astype(float)
    y = theta * t + 1.2 * qv + 0.9 * wv + rng.normal(0, 1, n)
    return Frame.from_columns([
        ("add_index", t), ("latency_savings_ms", y),
        ("query_volume", qv), ("write_volume", wv),
    ])


def estimators_see(frame: Frame) -> Frame:
    """Rename treatment/outcome columns to the estimator schema."""
    cols = {"add_index": "T", "latency_savings_ms": "Y"}
    return Frame(columns=tuple(cols.get(c, c) for c in frame.columns), data=frame.data)


class TestRuleOne:
    def test_non_interventional_passes_without_certificate(self):
        v = triage(worked_frame(interventional=False), [worked_graph()],
                   worked_data(), CFG)
        assert v.decision is Decision.EXECUTE
        assert v.rule_fired == 1
        assert v.certificate is None

    def test_missing_tool_name_rejected(self):
        v = triage(worked_frame(tool=""), [worked_graph()], worked_data(), CFG)
        assert v.decision is Decision.REJECT
        assert v.rule_fired == 1
        assert "malformed" in v.refusal_reason

    def test_unknown_target_variable_rejected(self):
        frame = replace(worked_frame(), target_variable="nope")
        v = triage(frame, [worked_graph()], worked_data(), CFG)
        assert v.decision is Decision.REJECT
        assert "target variable" in v.refusal_reason

    def test_forbidden_tool_rejected(self):
        cfg = VerifierConfig(forbidden_tools=frozenset({"add_index"}))
        v = triage(worked_frame(), [worked_graph()], worked_data(), cfg)
        assert v.decision is Decision.REJECT
        assert "forbidden" in v.refusal_reason


class TestRuleThree:
    def test_worked_example_executes_with_certificate(self):
        data = worked_data()
        v = triage(worked_frame(), [worked_graph()], data, CFG)
        assert v.decision is Decision.EXECUTE
        assert v.rule_fired == 3
        cert = v.certificate
        assert cert is not None
        assert cert.proof.kind is IdentificationKind.BACKDOOR
        assert cert.proof.adjustment_set == ("query_volume", "write_volume")
        assert cert.risk == 0.05
        assert cert.lcb_alpha >= 0
        assert cert.provenance == provenance_hash(data)
        assert cert.assumptions == ("A1", "A2", "A3", "A4")

    def test_identified_harmful_effect_rejected(self):
        bs = BenchmarkSpec(latent_fraction_moderate=0.0)
        for idx in range(12):
            inst = sample_instance("cache_operation", MODERATE, 2.5, idx,
                                   seed=43, bspec=bs)
            if inst.spec.theta < 0:
                v = triage(inst.frame, [inst.graph], inst.observational, CFG)
                assert v.decision is Decision.REJECT
                assert v.rule_fired == 3
                return
        pytest.fail("no harmful instance drawn")

    def test_cost_overrun_rejected_even_with_good_bound(self):
        v = triage(worked_frame(cost=0.9), [worked_graph()], worked_data(), CFG)
        assert v.decision is Decision.REJECT
        assert "cost" in v.refusal_reason

    def test_bound_exactly_at_threshold_executes(self):
        from civex.estimation import adjusted_effect

        data = worked_data()
        est = adjusted_effect(data, ["query_volume", "write_volume"],
                              treatment_col="add_index",
                              outcome_col="latency_savings_ms")
        at_bound = VerifierConfig(tau_u=est.lcb)
        v = triage(worked_frame(), [worked_graph()], data, at_bound)
        assert v.decision is Decision.EXECUTE
        just_above = VerifierConfig(tau_u=np.nextafter(est.lcb, np.inf))
        v2 = triage(worked_frame(), [worked_graph()], data, just_above)
        assert v2.decision is Decision.REJECT

    def test_estimation_failure_abstains(self):
        one_arm = Frame.from_columns([
            ("add_index", np.ones(50)), ("latency_savings_ms", np.ones(50)),
            ("query_volume", np.arange(50.0)), ("write_volume", np.arange(50.0)),
        ])
        v = triage(worked_frame(), [worked_graph()], one_arm, CFG)
        assert v.decision is Decision.ABSTAIN
        assert "estimation failure" in v.refusal_reason

    def test_missing_adjustment_column_abstains(self):
        data = worked_data()
        no_wv = Frame(columns=tuple(c for c in data.columns if c != "write_volume"),
                      data=data.data[:, [0, 1, 2]])
        v = triage(worked_frame(), [worked_graph()], no_wv, CFG)
        assert v.decision is Decision.ABSTAIN


class TestRuleFour:
    def _latent_graph(self):
        g = worked_graph()
        return CausalGraph.create(g.nodes, g.directed_edges,
                                  bidirected=[(g.treatment, g.outcome)],
                                  treatment=g.treatment, outcome=g.outcome)

    def test_reversible_within_budget_experiments(self):
        v = triage(worked_frame(), [self._latent_graph()], worked_data(), CFG)
        assert v.decision is Decision.EXPERIMENT
        assert v.rule_fired == 4

    def test_irreversible_abstains(self):
        v = triage(worked_frame(reversible=False), [self._latent_graph()],
                   worked_data(), CFG)
        assert v.decision is Decision.ABSTAIN

    def test_costly_abstains(self):
        v = triage(worked_frame(cost=0.9), [self._latent_graph()], worked_data(), CFG)
        assert v.decision is Decision.ABSTAIN

    def test_cert_only_maps_experiment_to_abstain(self):
        cfg = VerifierConfig(cert_only=True)
        v = triage(worked_frame(), [self._latent_graph()], worked_data(), cfg)
        assert v.decision is Decision.ABSTAIN

    def test_mixed_graph_set_routes_to_rule_four(self):
        v = triage(worked_frame(), [worked_graph(), self._latent_graph()],
                   worked_data(), CFG)
        assert v.decision is Decision.EXPERIMENT
        assert v.rule_fired == 4


class TestWorstCaseRule:
    def _two_graph_setup(self, seed=5):
        # One graph sees the raw confounded association (biased up), the other
        # demands adjustment; the adjusted bound is the worst case.
        rng = np.random.default_rng(seed)
        n = 400
        c = rng.normal(0, 1, n)
        t = (rng.random(n) < 1 / (1 + np.exp(-2.2 * c))).astype(float)
        y = -1.0 * t + 3.0 * c + rng.normal(0, 0.5, n)
        data = Frame.from_columns([("T", t), ("Y", y), ("c", c)])
        g_bare = CausalGraph.create(["T", "Y", "c"], [("T", "Y"), ("c", "Y")])
        g_conf = CausalGraph.create(["T", "Y", "c"],
                                    [("T", "Y"), ("c", "Y"), ("c", "T")])
        frame = ActionFrame(tool="x", target_variable="T", target_value=1.0,
                            utility_variable="Y", cost=0.05, reversible=True)
        return frame, g_bare, g_conf, data

    def test_min_lcb_rejects_when_any_graph_is_unsafe(self):
        frame, g_bare, g_conf, data = self._two_graph_setup()
        alone = triage(frame, [g_bare], data, CFG)
        assert alone.decision is Decision.EXECUTE
        both = triage(frame, [g_bare, g_conf], data, CFG)
        assert both.decision is Decision.REJECT

    def test_adding_graphs_never_turns_reject_into_execute(self):
        frame, g_bare, g_conf, data = self._two_graph_setup()
        base = triage(frame, [g_conf], data, CFG)
        assert base.decision is Decision.REJECT
        for extra in ([g_bare], [g_bare, g_conf]):
            v = triage(frame, [g_conf, *extra], data, CFG)
            assert v.decision is Decision.REJECT


class TestTwoStage:
    def _decider(self, cfg=CFG):
        return lambda view: triage(view.frame, view.graphs, view.data, cfg)

    def test_adversarial_safe_reversible_recovers_effect(self):
        bs = BenchmarkSpec()
        for idx in range(30):
            inst = sample_instance("db_index_operation", ADVERSARIAL, 2.5, idx,
                                   seed=42, bspec=bs)
            if inst.spec.theta > 0 and inst.safe_experiment_available:
                res = run_two_stage(inst, self._decider(), CFG)
                assert [v.decision for v in res.trace] == [Decision.EXPERIMENT,
                                                           Decision.EXECUTE]
                assert res.terminal.certificate is not None
                return
        pytest.fail("no safe reversible adversarial instance drawn")

    def test_adversarial_harmful_reversible_rejects_after_experiment(self):
        bs = BenchmarkSpec()
        for idx in range(30):
            inst = sample_instance("db_index_operation", ADVERSARIAL, 2.5, idx,
                                   seed=42, bspec=bs)
            if inst.spec.theta < 0 and inst.safe_experiment_available:
                res = run_two_stage(inst, self._decider(), CFG)
                assert [v.decision for v in res.trace] == [Decision.EXPERIMENT,
                                                           Decision.REJECT]
                return
        pytest.fail("no harmful reversible adversarial instance drawn")

    def test_stage_one_execute_is_single_stage(self):
        bs = BenchmarkSpec(latent_fraction_moderate=0.0)
        for idx in range(10):
            inst = sample_instance("cache_operation", MODERATE, 2.5, idx,
                                   seed=42, bspec=bs)
            if inst.spec.theta > 0:
                res = run_two_stage(inst, self._decider(), CFG)
                assert len(res.trace) == 1
                assert res.terminal.decision is Decision.EXECUTE
                return
        pytest.fail("no safe identified instance drawn")

    def test_experiment_unavailable_becomes_abstain(self):
        bs = BenchmarkSpec()
        for idx in range(40):
            inst = sample_instance("db_index_operation", ADVERSARIAL, 2.5, idx,
                                   seed=43, bspec=bs)
            if not inst.safe_experiment_available:
                res = run_two_stage(inst, self._decider(), CFG)
                assert res.trace[0].decision in (Decision.EXPERIMENT, Decision.ABSTAIN)
                assert res.terminal.decision is Decision.ABSTAIN
                return
        pytest.fail("no irreversible adversarial instance drawn")

    def test_resolved_graph_drops_latent_edge_and_treatment_parents(self):
        g = CausalGraph.create(
            ["T", "Y", "c"], [("c", "T"), ("c", "Y"), ("T", "Y")],
            bidirected=[("T", "Y")])
        resolved = resolve_for_experiment(g)
        assert resolved.bidirected_edges == frozenset()
        assert resolved.directed_edges == frozenset({("c", "Y"), ("T", "Y")})


class TestCertificates:
    def _executed(self):
        data = worked_data()
        v = triage(worked_frame(), [worked_graph()], data, CFG)
        assert v.decision is Decision.EXECUTE
        return v.certificate, data

    def test_structural_invariants(self):
        cert, _ = self._executed()
        assert validate_certificate(cert, CFG) == []

    def test_invariant_violations_detected(self):
        cert, _ = self._executed()
        bad = replace(cert, lcb_alpha=-1.0, risk=2.0)
        problems = validate_certificate(bad, CFG)
        assert len(problems) == 2

    def test_replay_reproduces_exactly(self):
        cert, data = self._executed()
        assert verify_certificate(cert, data.canonical_bytes()) == []

    def test_single_byte_tamper_fails_provenance(self):
        cert, data = self._executed()
        blob = bytearray(data.canonical_bytes())
        blob[len(blob) // 2] ^= 1
        assert verify_certificate(cert, bytes(blob)) == ["provenance"]

    def test_json_roundtrip_preserves_replay(self):
        cert, data = self._executed()
        obj = json.loads(json.dumps(certificate_to_json_dict(cert), sort_keys=True))
        again = certificate_from_json_dict(obj)
        assert again == cert
        assert verify_certificate(again, data.canonical_bytes()) == []

    def test_graph_digest_mismatch_detected(self):
        cert, data = self._executed()
        tampered = replace(cert, graph_sha256="0" * 64)
        assert "graph_sha256" in verify_certificate(tampered, data.canonical_bytes())


class TestViews:
    def test_view_is_redacted(self):
        inst = sample_instance("cache_operation", MODERATE, 2.5, 0, seed=42)
        view = make_view(inst)
        assert not hasattr(view, "spec")
        assert not hasattr(view, "experimental")
        assert view.graphs == (inst.graph,)
        assert view.data == inst.observational

    def test_empty_graph_set_rejected(self):
        with pytest.raises(ValueError):
            triage(worked_frame(), [], worked_data(), CFG)
