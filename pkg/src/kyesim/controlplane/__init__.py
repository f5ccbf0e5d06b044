from .access import AccessControl, AccessMatrix, UnknownSubnet, access_control_decide
from .aggregation import Aggregation, AggregationConfig, FlowStats, aggregation_decide
from .controller import BLOCK_PRIORITY, Controller, PacketIn
from .dos import DOS_PRIORITY, DosDetector, DosResponse, DosThresholdConfig, dos_threshold_check
from .routing import NoRoute, RouteConfig, out_port, route_baseline
from .tenant import TenantRouting, UnknownTenant, tenant_route
from .trwcb import (Outcome, Status, TrwCb, TrwCbConfig, TrwCbHostState, UnknownPending,
                    trwcb_on_first_contact, trwcb_on_outcome)
from .verdicts import Defer, InstallRule, InstallRuleChain, PacketOutNoRule, PolicyVerdict, SilentDrop
from .workingset import WorkingSet, WorkingSetConfig, working_set_decide

__all__ = [
    "AccessControl", "AccessMatrix", "Aggregation", "AggregationConfig", "BLOCK_PRIORITY", "Controller",
    "DOS_PRIORITY", "Defer", "DosDetector", "DosResponse", "DosThresholdConfig", "FlowStats",
    "InstallRule", "InstallRuleChain", "NoRoute", "Outcome", "PacketIn", "PacketOutNoRule",
    "PolicyVerdict", "RouteConfig", "SilentDrop", "Status", "TenantRouting", "TrwCb", "TrwCbConfig",
    "TrwCbHostState", "UnknownPending", "UnknownSubnet", "UnknownTenant", "WorkingSet",
    "WorkingSetConfig", "access_control_decide", "aggregation_decide", "dos_threshold_check",
    "out_port", "route_baseline", "tenant_route", "trwcb_on_first_contact", "trwcb_on_outcome",
    "working_set_decide",
]
