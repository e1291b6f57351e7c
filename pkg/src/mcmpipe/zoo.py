"""Built-in network shapes.

Residual networks are linearized to their main-path weight layers (shortcut
adds are free and shortcut tensors assumed co-resident); pooling is folded
into the preceding conv via ``LayerDesc.pool``.
"""

from __future__ import annotations

from .errors import ParseError
from .model import LayerDesc, LayerKind, Network


def _conv(name, c_in, c_out, hw, k, stride=1, pad=None, pool=1):
    if pad is None:
        pad = k // 2
    return LayerDesc(
        kind=LayerKind.CONV, c_in=c_in, c_out=c_out, h_in=hw, w_in=hw,
        k_h=k, k_w=k, stride=stride, padding=pad, pool=pool, name=name,
    )


def _fc(name, c_in, c_out):
    return LayerDesc(kind=LayerKind.FC, c_in=c_in, c_out=c_out, name=name)


def _alexnet() -> Network:
    return Network(name="alexnet", layers=(
        _conv("conv1", 3, 96, 227, k=11, stride=4, pad=0, pool=2),
        _conv("conv2", 96, 256, 27, k=5, pool=2),
        _conv("conv3", 256, 384, 13, k=3),
        _conv("conv4", 384, 384, 13, k=3),
        _conv("conv5", 384, 256, 13, k=3, pool=2),
        _fc("fc6", 256 * 6 * 6, 4096),
        _fc("fc7", 4096, 4096),
        _fc("fc8", 4096, 1000),
    ))


def _vgg16() -> Network:
    cfg = [
        (64, 2), (128, 2), (256, 3), (512, 3), (512, 3),
    ]
    layers = []
    c_in, hw = 3, 224
    for stage, (width, reps) in enumerate(cfg, start=1):
        for i in range(1, reps + 1):
            pool = 2 if i == reps else 1
            layers.append(_conv(f"conv{stage}_{i}", c_in, width, hw, k=3, pool=pool))
            c_in = width
        hw //= 2
    layers += [
        _fc("fc1", 512 * 7 * 7, 4096),
        _fc("fc2", 4096, 4096),
        _fc("fc3", 4096, 1000),
    ]
    return Network(name="vgg16", layers=tuple(layers))


def _darknet19() -> Network:
    # (c_out, kernel, pool-after) per conv layer, input 224x224.
    cfg = [
        (32, 3, 2), (64, 3, 2),
        (128, 3, 1), (64, 1, 1), (128, 3, 2),
        (256, 3, 1), (128, 1, 1), (256, 3, 2),
        (512, 3, 1), (256, 1, 1), (512, 3, 1), (256, 1, 1), (512, 3, 2),
        (1024, 3, 1), (512, 1, 1), (1024, 3, 1), (512, 1, 1), (1024, 3, 1),
        (1000, 1, 7),
    ]
    layers = []
    c_in, hw = 3, 224
    for i, (c_out, k, pool) in enumerate(cfg, start=1):
        layers.append(_conv(f"conv{i}", c_in, c_out, hw, k=k, pool=pool))
        c_in = c_out
        hw = max(1, hw // pool)
    return Network(name="darknet19", layers=tuple(layers))


def _resnet_basic(name: str, blocks: tuple[int, ...]) -> Network:
    layers = [_conv("conv1", 3, 64, 224, k=7, stride=2, pad=3, pool=2)]
    c_in, hw = 64, 56
    for stage, reps in enumerate(blocks, start=1):
        width = 64 * 2 ** (stage - 1)
        for b in range(reps):
            stride = 2 if stage > 1 and b == 0 else 1
            layers.append(_conv(f"res{stage}.{b}a", c_in, width, hw, k=3, stride=stride))
            hw //= stride
            layers.append(_conv(f"res{stage}.{b}b", width, width, hw, k=3))
            c_in = width
    layers[-1] = _conv(layers[-1].name, layers[-1].c_in, layers[-1].c_out, hw, k=3, pool=hw)
    layers.append(_fc("fc", 512, 1000))
    return Network(name=name, layers=tuple(layers))


def _resnet_bottleneck(name: str, blocks: tuple[int, ...]) -> Network:
    layers = [_conv("conv1", 3, 64, 224, k=7, stride=2, pad=3, pool=2)]
    c_in, hw = 64, 56
    for stage, reps in enumerate(blocks, start=1):
        mid = 64 * 2 ** (stage - 1)
        out = mid * 4
        for b in range(reps):
            stride = 2 if stage > 1 and b == 0 else 1
            layers.append(_conv(f"res{stage}.{b}a", c_in, mid, hw, k=1))
            layers.append(_conv(f"res{stage}.{b}b", mid, mid, hw, k=3, stride=stride))
            hw //= stride
            layers.append(_conv(f"res{stage}.{b}c", mid, out, hw, k=1))
            c_in = out
    layers[-1] = _conv(layers[-1].name, layers[-1].c_in, layers[-1].c_out, hw, k=1, pool=hw)
    layers.append(_fc("fc", 2048, 1000))
    return Network(name=name, layers=tuple(layers))


_BUILDERS = {
    "alexnet": _alexnet,
    "vgg16": _vgg16,
    "darknet19": _darknet19,
    "resnet18": lambda: _resnet_basic("resnet18", (2, 2, 2, 2)),
    "resnet34": lambda: _resnet_basic("resnet34", (3, 4, 6, 3)),
    "resnet50": lambda: _resnet_bottleneck("resnet50", (3, 4, 6, 3)),
    "resnet101": lambda: _resnet_bottleneck("resnet101", (3, 4, 23, 3)),
    "resnet152": lambda: _resnet_bottleneck("resnet152", (3, 8, 36, 3)),
}

BUILTIN_NETWORKS = tuple(sorted(_BUILDERS))


def builtin_network(name: str) -> Network:
    """Return a shape-validated built-in network by name."""
    try:
        builder = _BUILDERS[name.lower()]
    except KeyError:
        raise ParseError(
            f"unknown network {name!r}; built-ins: {', '.join(BUILTIN_NETWORKS)}"
        ) from None
    return builder()
