"""Decoder FLOPs model for sequence-length pruning.

Per-layer cost at sequence length n is approximated by the dominant terms
g(n) = 4*n*d^2 + 2*n^2*d + 2*n*d*m (attention projections, attention
scores, FFN). A run where the first K layers see the full sequence and the
rest see the pruned one costs K*g(n_full) + (T-K)*g(n_pruned); the
pruned/full ratio is the efficiency metric of interest. Absolute TFLOPs
depend on the text length t, which callers must supply.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ConfigError, CostModelSpec
from .selection import compute_budget

#: Named decoder geometries for common backbones.
DECODER_PRESETS: dict[str, dict[str, int]] = {
    "7b": {"d": 4096, "m": 11008, "T": 32},
}


@dataclass(frozen=True)
class CostReport:
    flops_full: float
    flops_pruned: float
    ratio: float

    @property
    def tflops_full(self) -> float:
        return self.flops_full / 1e12

    @property
    def tflops_pruned(self) -> float:
        return self.flops_pruned / 1e12


@dataclass(frozen=True)
class SweepPoint:
    r: float
    v_pruned: int
    flops_full: float
    flops_pruned: float
    ratio: float


def layer_flops(n: int, d: int, m: int) -> float:
    """Dominant FLOPs of one decoder layer at sequence length n."""
    if n < 0 or d < 0 or m < 0:
        raise ConfigError("sequence length and dimensions must be nonnegative")
    n = float(n)
    return 4.0 * n * d * d + 2.0 * n * n * d + 2.0 * n * d * m


def pruned_cost(spec: CostModelSpec) -> CostReport:
    """Total decoder FLOPs with and without pruning, plus their ratio.

    ratio = 1 exactly when K = T or v_pruned = v_full; it degrades toward
    (t + v_pruned) / (t + v_full) as d and m dominate the quadratic term.
    """
    n_full = spec.t + spec.v_full
    n_pruned = spec.t + spec.v_pruned
    g_full = layer_flops(n_full, spec.d, spec.m)
    g_pruned = layer_flops(n_pruned, spec.d, spec.m)
    flops_full = spec.T * g_full
    flops_pruned = spec.K * g_full + (spec.T - spec.K) * g_pruned
    ratio = flops_pruned / flops_full if flops_full > 0 else 1.0
    return CostReport(flops_full=flops_full, flops_pruned=flops_pruned, ratio=ratio)


def sweep(
    d: int,
    m: int,
    T: int,
    t: int,
    v_full: int,
    ratios,
    K: int = 0,
) -> list[SweepPoint]:
    """Evaluate the cost model over keep ratios, sorted ascending.

    Each ratio maps to v_pruned = max(1, round(r * v_full)) with the same
    half-away-from-zero rounding the selector uses for its budgets.
    """
    points = []
    for r in sorted(float(r) for r in ratios):
        v_pruned = compute_budget(r, v_full)
        report = pruned_cost(
            CostModelSpec(d=d, m=m, T=T, K=K, t=t, v_full=v_full, v_pruned=v_pruned)
        )
        points.append(
            SweepPoint(
                r=r,
                v_pruned=v_pruned,
                flops_full=report.flops_full,
                flops_pruned=report.flops_pruned,
                ratio=report.ratio,
            )
        )
    return points
