import math

import numpy as np
import pytest

from teleport_sim.channel import ChannelSpec
from teleport_sim.experiments.runners import _resource_valid
from teleport_sim.nongauss import NG_KINDS, NgOpSpec
from teleport_sim.resource import build_resource, build_resource_dense, tmsv_cutoff

SPECS = [None] + [
    NgOpSpec(kind, placement, tc=0.6 if kind == "catalysis" else None, ts=0.3 if kind == "scissors" else None, target=target)
    for kind in NG_KINDS
    for placement in ("before", "after")
    for target in ("both", "sender", "receiver")
    if not (kind.startswith("delocalized") and (placement == "after" or target != "both"))
    and not (kind == "scissors" and placement == "before")
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: "none" if s is None else f"{s.kind}-{s.placement}-{s.target}")
def test_windowed_matches_dense(spec):
    r, ch, d = 0.6, ChannelSpec.from_db(3.0, t1_db=1.0), 7
    fast = build_resource(r, ch, spec, d)
    dense = build_resource_dense(r, ch, spec, d)
    assert fast.p_operation == pytest.approx(dense.p_operation, rel=1e-10)
    assert fast.resource_type == dense.resource_type
    a = fast.blocks.blocks / fast.blocks.norm
    b = dense.blocks.blocks / dense.blocks.norm
    assert np.allclose(a, b, atol=1e-12)
    assert _resource_valid(fast.blocks)


def test_default_cutoff_follows_policy():
    assert build_resource(0.5, ChannelSpec()).cutoff == tmsv_cutoff(0.5)
