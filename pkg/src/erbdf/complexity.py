"""Analytic parameter and multiply-accumulate accounting."""

from dataclasses import dataclass

from .config import EngineConfig
from .model import LayerSpec, architecture

# Informational reference point from the published engine this follows;
# exact channel counts there are not public, so this is printed alongside
# our count rather than asserted.
REFERENCE_PARAMS_M = 2.306
REFERENCE_MACS_G = 0.356


@dataclass(frozen=True)
class LayerCost:
    name: str
    kind: str
    params: int
    macs_per_frame: int


def layer_costs(cfg: EngineConfig) -> list[LayerCost]:
    return [LayerCost(s.name, s.kind, s.param_count(), s.macs_per_frame())
            for s in architecture(cfg)]


def count_params_macs(weights, cfg: EngineConfig | None = None):
    """(exact parameter count, analytic MACs per second).

    Params are summed over the stored tensors; MACs come from the layer
    table times the frame rate.
    """
    cfg = cfg or weights.config
    params = sum(t.size for t in weights.tensors.values())
    macs_frame = sum(c.macs_per_frame for c in layer_costs(cfg))
    macs_per_second = int(round(macs_frame * cfg.stft.frames_per_second))
    return params, macs_per_second


def dense_cost(in_dim: int, out_dim: int, groups: int = 1) -> LayerCost:
    """Cost of a standalone (grouped) linear layer, for quick what-ifs."""
    spec = LayerSpec("dense", "grouped_linear", groups=groups,
                     in_dim=in_dim, out_dim=out_dim)
    return LayerCost(spec.name, spec.kind, spec.param_count(),
                     spec.macs_per_frame())


def complexity_report(weights, cfg: EngineConfig | None = None) -> str:
    """Human-readable per-layer breakdown."""
    cfg = cfg or weights.config
    costs = layer_costs(cfg)
    params, macs_s = count_params_macs(weights, cfg)
    lines = [f"{'layer':<18} {'kind':<15} {'params':>10} {'MACs/frame':>12}"]
    for c in costs:
        lines.append(f"{c.name:<18} {c.kind:<15} {c.params:>10} "
                     f"{c.macs_per_frame:>12}")
    lines.append("-" * 58)
    lines.append(f"total params: {params} ({params / 1e6:.3f} M; "
                 f"published reference {REFERENCE_PARAMS_M} M)")
    lines.append(f"total MACs/s: {macs_s} ({macs_s / 1e9:.3f} G; "
                 f"published reference {REFERENCE_MACS_G} G)")
    return "\n".join(lines)
