from __future__ import annotations

import pytest

from mcmpipe import (
    HardwareConfig,
    LayerDesc,
    LayerKind,
    Network,
    default_hardware,
)


def conv(name="x", c_in=1, c_out=1, px=1, k=1, stride=1, pad=0, pool=1):
    return LayerDesc(
        kind=LayerKind.CONV, c_in=c_in, c_out=c_out, h_in=px, w_in=px,
        k_h=k, k_w=k, stride=stride, padding=pad, pool=pool, name=name,
    )


def fc(name, c_in, c_out):
    return LayerDesc(kind=LayerKind.FC, c_in=c_in, c_out=c_out, name=name)


def toy5() -> Network:
    """Five declining-resolution conv layers; small enough for the oracle."""
    return Network(name="toy5", layers=(
        conv("c1", 3, 16, 32, k=3, pad=1),
        conv("c2", 16, 32, 32, k=3, pad=1, pool=2),
        conv("c3", 32, 64, 16, k=3, pad=1),
        conv("c4", 64, 64, 16, k=3, pad=1, pool=2),
        conv("c5", 64, 128, 8, k=3, pad=1),
    ))


@pytest.fixture
def hw16() -> HardwareConfig:
    return default_hardware(16)


@pytest.fixture
def hw8() -> HardwareConfig:
    return default_hardware(8)
