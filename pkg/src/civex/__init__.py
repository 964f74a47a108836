"""Causal intervention verifier, synthetic tool-call benchmark, and harness."""

__version__ = "0.1.0"

from .frames import Frame, FrameError
from .graphs import (
    CausalGraph,
    GraphError,
    IdentificationKind,
    IdentificationResult,
    d_separated,
    identify,
    relabel_latent,
    validate_graph,
)
from .estimation import (
    EffectEstimate,
    EstimationError,
    adjusted_effect,
    frontdoor_effect,
    provenance_hash,
    unadjusted_difference,
)
from .scm import (
    ActionFrame,
    BenchmarkSpec,
    InstanceId,
    ScmInstance,
    ScmSpec,
    build_benchmark,
    generate_frame,
    recovery_check,
    sample_instance,
)
from .verifier import (
    Certificate,
    Decision,
    InstanceView,
    TwoStageResult,
    Verdict,
    VerifierConfig,
    run_two_stage,
    triage,
    verify_certificate,
)
from .evaluation import (
    MethodSummary,
    ScoreRecord,
    ScoreWeights,
    bootstrap_ci,
    rule_of_three,
    score,
    summarize,
    wilcoxon_exact,
)

__all__ = [
    "__version__",
    "Frame",
    "FrameError",
    "CausalGraph",
    "GraphError",
    "IdentificationKind",
    "IdentificationResult",
    "d_separated",
    "identify",
    "relabel_latent",
    "validate_graph",
    "EffectEstimate",
    "EstimationError",
    "adjusted_effect",
    "frontdoor_effect",
    "provenance_hash",
    "unadjusted_difference",
    "ActionFrame",
    "BenchmarkSpec",
    "InstanceId",
    "ScmInstance",
    "ScmSpec",
    "build_benchmark",
    "generate_frame",
    "recovery_check",
    "sample_instance",
    "Certificate",
    "Decision",
    "InstanceView",
    "TwoStageResult",
    "Verdict",
    "VerifierConfig",
    "run_two_stage",
    "triage",
    "verify_certificate",
    "MethodSummary",
    "ScoreRecord",
    "ScoreWeights",
    "bootstrap_ci",
    "rule_of_three",
    "score",
    "summarize",
    "wilcoxon_exact",
]
