import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kyesim.controlplane import Controller
from kyesim.kye import Attacker, SideChannel
from kyesim.netcore import Host, Link, Network, SwitchSpec, Topology, ip


def star(n_hosts=4, latency=0.01, syn_proxy=False, capacity=1000, extra_hosts=()):
    """One switch, attacker a0 (10.1.0.1/16) on port 1, responsive h1..hN, dark 10.3/16."""
    hosts = [Host("a0", ip("10.1.0.1"), "s1", latency=0.0005, prefix=16)]
    hosts += [Host(f"h{i}", ip(f"10.2.0.{i}"), "s1", latency=latency) for i in range(1, n_hosts + 1)]
    hosts.append(Host("dark", ip("10.3.0.0"), "s1", latency=latency, prefix=16, responsive=False))
    hosts += list(extra_hosts)
    return Topology([SwitchSpec("s1", capacity, syn_proxy)], hosts)


def line(n=3, latency=0.001):
    """s1 - s2 - ... - sn; attacker on s1, h1 and dark on sn."""
    sw = [SwitchSpec(f"s{i}") for i in range(1, n + 1)]
    links = [Link(f"s{i}", f"s{i + 1}", latency) for i in range(1, n)]
    hosts = [Host("a0", ip("10.1.0.1"), "s1", latency=0.0005, prefix=16),
             Host("h1", ip("10.2.0.1"), f"s{n}", latency=0.01),
             Host("dark", ip("10.3.0.0"), f"s{n}", latency=0.01, prefix=16, responsive=False)]
    return Topology(sw, hosts, links)


def rig(topo, apps=(), obfuscator=None, route=None, poll_interval=0.0, monitor=("s1",), known_k=1):
    net = Network(topo)
    ctl = Controller(net, list(apps), route, obfuscator)
    chans = [SideChannel(net, s, poll_interval) for s in monitor]
    att = Attacker(net, ["a0"], chans, known_k=known_k)
    return net, ctl, att


@pytest.fixture
def star_topo():
    return star()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
