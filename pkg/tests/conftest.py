"""Shared fixtures: the two-parameter demo space and its simulated chain."""

from __future__ import annotations

from pathlib import Path

import pytest

from microtune.simulate import Scenario, Stage
from microtune.space import Kind, ParameterSpec, RenderRule, SearchSpace, Target

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"
STUB_DIR = REPO_ROOT / "stubs"

MIB = 1024**2


def make_param(
    name: str,
    values,
    kind: Kind = Kind.CATEGORICAL,
    default=None,
    enabled: bool = True,
    target: Target = Target.RUNTIME_FLAG,
    template: str | None = None,
) -> ParameterSpec:
    values = tuple(values)
    if kind is Kind.BOOLEAN:
        render = RenderRule(target=target, on_template=f"--{name}", off_template="")
    else:
        render = RenderRule(target=target, template=template or f"--{name}={{value}}")
    if default is None:
        default = values[0] if values else None
    return ParameterSpec(
        name=name,
        kind=kind,
        values=values,
        default=default,
        render=render,
        enabled=enabled,
    )


@pytest.fixture
def demo_space() -> SearchSpace:
    """gc in [serial, g1, zgc] then heap in [256m, 512m]; defaults g1/256m."""
    return SearchSpace(
        name="gc-heap-demo",
        parameters=(
            make_param("gc", ["serial", "g1", "zgc"], default="g1", template="-Dgc={value}"),
            make_param(
                "heap",
                [256 * MIB, 512 * MIB],
                kind=Kind.BYTE,
                default=256 * MIB,
                template="-Xmx{value}",
            ),
        ),
    )


@pytest.fixture
def demo_scenario() -> Scenario:
    """Two-stage chain whose optimum is {gc: zgc, heap: 512m} at 0.684 s."""
    return Scenario(
        stages=(Stage("ingest", 0.3), Stage("toll", 0.5)),
        effects={
            "gc": {"serial": 1.05, "g1": 1.0, "zgc": 0.9},
            "heap": {256 * MIB: 1.0, 512 * MIB: 0.95},
        },
        noise_amplitude=0.0,
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion after the run."""
    lines = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                lines.append((nodeid.split("::")[-1], label))
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, label in sorted(lines):
            terminalreporter.write_line(f"  {label}  {name}")
