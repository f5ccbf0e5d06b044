"""k-hop header-rewrite chains: planning, bookkeeping and controller integration."""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from ..controlplane.routing import NoRoute, out_port
from ..controlplane.verdicts import InstallRule, InstallRuleChain, SilentDrop
from ..netcore import FlowKey, FlowRule, Forward, Header, SetField, TableFull, parse_prefix
from ..netcore.topology import natural_key

log = logging.getLogger(__name__)

OBFUSCATION_PRIORITY = 100
REWRITE_POOL = "100.64.0.0/10"


class PathTooShort(ValueError):
    pass


class LedgerCollision(KeyError):
    pass


@dataclass
class ObfuscationPlan:
    k: int
    path: list[str]
    headers: list[Header]  # headers[0] is the original; headers[i] is what hop i+1 matches
    in_ports: list[int]
    policy: str  # "forward" | "drop"
    flow_id: str = ""
    rules: list[tuple[str, FlowRule]] = field(default_factory=list)

    @property
    def policy_hop(self) -> str:
        return self.path[-1]

    @property
    def rewrites(self) -> list[tuple[Header, Header]]:
        return list(zip(self.headers[:-1], self.headers[1:]))


class RewriteLedger:
    """Bijection between rewritten (src, dst) pairs and (flow id, hop index)."""

    def __init__(self):
        self.forward: dict[tuple[int, int], tuple[str, int]] = {}
        self.reverse: dict[tuple[str, int], tuple[int, int]] = {}
        self.originals: dict[str, Header] = {}

    def __len__(self) -> int:
        return len(self.forward)

    def taken(self, pair: tuple[int, int]) -> bool:
        return pair in self.forward

    def add(self, flow_id: str, hop: int, pair: tuple[int, int], original: Header) -> None:
        if pair in self.forward or (flow_id, hop) in self.reverse:
            raise LedgerCollision((flow_id, hop, pair))
        self.forward[pair] = (flow_id, hop)
        self.reverse[(flow_id, hop)] = pair
        self.originals[flow_id] = original

    def original(self, pair: tuple[int, int]) -> Optional[Header]:
        entry = self.forward.get(pair)
        return None if entry is None else self.originals[entry[0]]

    def release(self, flow_id: str) -> None:
        for key in [k for k in self.reverse if k[0] == flow_id]:
            del self.forward[self.reverse.pop(key)]
        self.originals.pop(flow_id, None)

    def is_bijective(self) -> bool:
        return (len(self.forward) == len(self.reverse)
                and all(self.reverse[v] == k for k, v in self.forward.items()))


def candidate_paths(topology, ingress: str, k: int) -> list[list[str]]:
    paths = []
    for target in sorted(topology.graph.nodes, key=natural_key):
        if target == ingress:
            continue
        for p in nx.all_simple_paths(topology.graph, ingress, target, cutoff=k - 1):
            if len(p) == k:
                paths.append(p)
    return sorted(paths, key=lambda p: [natural_key(s) for s in p])


def _fresh_pair(rng: random.Random, ledger: RewriteLedger, pool: tuple[int, int]) -> tuple[int, int]:
    net, plen = pool
    size = 1 << (32 - plen)
    for _ in range(1000):
        pair = (net + rng.randrange(1, size - 1), net + rng.randrange(1, size - 1))
        if not ledger.taken(pair) and pair[0] != pair[1]:
            return pair
    raise LedgerCollision("rewrite pool exhausted")


def plan_path(topology, ingress: str, header: Header, in_port: int, k: int, rng: random.Random,
              ledger: RewriteLedger, policy: str = "forward", flow_id: str = "",
              pool: str = REWRITE_POOL, priority: int = OBFUSCATION_PRIORITY) -> ObfuscationPlan:
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        path = [ingress]
    else:
        options = candidate_paths(topology, ingress, k)
        if not options:
            raise PathTooShort(f"no simple path of {k} switches from {ingress}")
        path = options[rng.randrange(len(options))]
    flow_id = flow_id or header.describe()
    cidr = parse_prefix(pool)
    headers = [header]
    for hop in range(1, k):
        src, dst = _fresh_pair(rng, ledger, cidr)
        ledger.add(flow_id, hop, (src, dst), header)
        headers.append(Header(src, dst, header.proto, header.src_port, header.dst_port,
                              header.tcp_flags, header.tenant_tag))
    in_ports = [in_port] + [topology.neighbor_port(path[i], path[i - 1]) for i in range(1, k)]
    plan = ObfuscationPlan(k, path, headers, in_ports, policy, flow_id)
    plan.rules = _build_rules(topology, plan, priority)
    return plan


def _build_rules(topology, plan: ObfuscationPlan, priority: int) -> list[tuple[str, FlowRule]]:
    rules = []
    orig = plan.headers[0]
    for i, sw in enumerate(plan.path):
        h = plan.headers[i]
        match = FlowKey.pair(h.src_ip, h.dst_ip, in_port=plan.in_ports[i], tenant_tag=h.tenant_tag)
        if i < plan.k - 1:
            nxt = plan.headers[i + 1]
            acts = (SetField("src_ip", nxt.src_ip), SetField("dst_ip", nxt.dst_ip),
                    Forward(topology.neighbor_port(sw, plan.path[i + 1])))
        elif plan.policy == "drop":
            acts = ()
        else:
            acts = (Forward(out_port(topology, sw, orig.dst_ip)),)
            if plan.k > 1:
                acts = (SetField("src_ip", orig.src_ip), SetField("dst_ip", orig.dst_ip)) + acts
        rules.append((sw, FlowRule(match, acts, priority)))
    return rules


def install_plan(network, plan: ObfuscationPlan) -> list[int]:
    """Install every hop or none of them."""
    done = []
    try:
        for sw, rule in plan.rules:
            done.append((sw, network.install(sw, rule)))
    except TableFull:
        for sw, rid in reversed(done):
            network.remove(sw, rid, "rollback")
        raise
    return [rid for _, rid in done]


class Obfuscator:
    """Controller hook that turns edge forwarding/drop decisions into k-hop chains."""

    def __init__(self, k: int = 1, seed: int = 0, pool: str = REWRITE_POOL,
                 priority: int = OBFUSCATION_PRIORITY):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.rng = random.Random(seed)
        self.pool = pool
        self.priority = priority
        self.ledger = RewriteLedger()
        self.plans: dict[str, ObfuscationPlan] = {}
        self.overhead: Counter = Counter()
        self.ctl = None
        self._rule_owner: dict[tuple[str, int], str] = {}
        self._pending_owner: dict[tuple[str, FlowKey], str] = {}

    @property
    def active(self) -> bool:
        return self.k > 1

    def bind(self, controller) -> None:
        self.ctl = controller
        for sw in controller.net.switches.values():
            sw.observers.append(self._make_observer(sw.switch_id))

    def _make_observer(self, switch_id: str):
        def observe(op, rule, now):
            if op == "add" and rule.priority == self.priority:
                flow = self._pending_owner.pop((switch_id, rule.match), None)
                if flow is not None:
                    self._rule_owner[(switch_id, rule.rule_id)] = flow
            elif op == "remove":
                flow = self._rule_owner.pop((switch_id, rule.rule_id), None)
                if flow is not None and flow in self.plans:
                    del self.plans[flow]
                    self.ledger.release(flow)
        return observe

    def transform(self, verdict, ctx):
        if not self.active:
            return verdict
        if isinstance(verdict, SilentDrop):
            policy = "drop"
        elif isinstance(verdict, InstallRule) and verdict.switch in (None, ctx.switch) and (
                verdict.rule is None or verdict.rule.is_drop):
            policy = "drop" if verdict.rule is not None else "forward"
        else:
            return verdict
        flow_id = f"{ctx.switch}:{ctx.in_port}:{ctx.header.describe()}"
        if flow_id in self.plans:
            self.ledger.release(flow_id)
            del self.plans[flow_id]
        try:
            plan = plan_path(self.ctl.topology, ctx.switch, ctx.header, ctx.in_port, self.k, self.rng,
                             self.ledger, policy, flow_id, self.pool, self.priority)
        except (PathTooShort, NoRoute) as exc:
            log.debug("obfuscation skipped: %s", exc)
            self.ledger.release(flow_id)
            return verdict
        self.plans[flow_id] = plan
        for sw, rule in plan.rules:
            self._pending_owner[(sw, rule.match)] = flow_id
        self.overhead["flows"] += 1
        self.overhead["flow_mods"] += len(plan.rules)
        self.overhead["extra_hops"] += self.k - 1
        return InstallRuleChain(list(plan.rules))

    def restored(self, header: Header) -> Optional[Header]:
        return self.ledger.original((header.src_ip, header.dst_ip))
