from .campaigns import (DetectionTriggered, NoPortDistinctPair, NoWildcardObserved, boundary_campaign,
                        detect_co_residency, detect_redirection, detect_syn_proxy, infer_aggregation_threshold,
                        mixed_targets, read_tenant_rules, reconstruct_access_matrix, scan_batch)
from .inference import (BoundaryEstimate, InferenceReport, InsufficientCoverage, Mechanism, PatternNotFound,
                        classify_defense, estimate_credit_params, estimate_detection_boundary, success_runs)
from .probes import Attacker, ObservationRecord, ProbeBatch, ProbeKind, ProbeResult, ReplayAttacker, interleave
from .sidechannel import RuleEvent, SideChannel, TableSnapshot

__all__ = [
    "Attacker", "BoundaryEstimate", "DetectionTriggered", "InferenceReport", "InsufficientCoverage",
    "Mechanism", "NoPortDistinctPair", "NoWildcardObserved", "ObservationRecord", "PatternNotFound",
    "ProbeBatch", "ProbeKind", "ProbeResult", "ReplayAttacker", "RuleEvent", "SideChannel", "TableSnapshot",
    "boundary_campaign", "classify_defense", "detect_co_residency", "detect_redirection", "detect_syn_proxy",
    "estimate_credit_params", "estimate_detection_boundary", "infer_aggregation_threshold", "interleave",
    "mixed_targets", "read_tenant_rules", "reconstruct_access_matrix", "scan_batch", "success_runs",
]
