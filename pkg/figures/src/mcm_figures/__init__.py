"""Figure scripts for the chiplet-pipeline scheduler's CSV outputs."""

from .common import KINDS, FigureSpec, MissingColumnError

__all__ = ["KINDS", "FigureSpec", "MissingColumnError", "render"]


def render(spec: FigureSpec):
    """Dispatch to the renderer for ``spec.kind`` and return the figure."""
    from . import breakdown_stack, scalability_lines, throughput_bars, validation_hist

    renderers = {
        "throughput_bars": throughput_bars.render,
        "scalability_lines": scalability_lines.render,
        "validation_hist": validation_hist.render,
        "breakdown_stack": breakdown_stack.render,
    }
    try:
        fn = renderers[spec.kind]
    except KeyError:
        raise ValueError(f"unknown figure kind {spec.kind!r}") from None
    return fn(spec)
