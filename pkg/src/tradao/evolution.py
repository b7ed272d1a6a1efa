"""Evolution tree of algorithm instances and the view payloads derived from it.

One tree per strategy; the tree is append-only (the tuning history is an
audit trail). Glyph ring segments encode each tunable parameter's relative
value across the whole strategy, the dual radar encodes self vs parent
category scores, and deltas feed the relative color mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import ModelKindMismatch, SecondRoot, TradaoError, UnknownInstance, UnknownParent
from .metrics import (
    AXIS_LABELS,
    METRIC_AXES,
    CategoryScores,
    MetricValue,
    MetricVector,
    normalize_scores,
)
from .models import RING_PARAMS, ModelParams, params_to_dict

GREEK = "αβγδεζηθικλμνξοπρστυφχψω"


def _now_iso() -> str:
    return datetime.now(tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class AlgorithmInstance:
    """One parameter configuration plus references to its backtest output."""

    id: str
    strategy_id: str
    parent_id: str | None
    label: str
    params: ModelParams
    record_ref: str
    metrics: MetricVector
    created_at: str


@dataclass
class GlyphData:
    instance_id: str
    ring: list[dict]  # {param_name, raw_value, relative}
    radar_self: CategoryScores
    radar_parent: CategoryScores | None
    deltas: list[dict]  # {param_name, signed_change}


class EvolutionTree:
    """Single-root, acyclic, append-only instance tree for one strategy."""

    def __init__(self, strategy_id: str, model_kind: str):
        self.strategy_id = strategy_id
        self.model_kind = model_kind
        self.nodes: dict[str, AlgorithmInstance] = {}
        self.root_id: str | None = None
        self._children: dict[str, list[str]] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self.nodes

    def get(self, instance_id: str) -> AlgorithmInstance:
        if instance_id not in self.nodes:
            raise UnknownInstance(instance_id)
        return self.nodes[instance_id]

    def depth(self, instance_id: str) -> int:
        node = self.get(instance_id)
        d = 0
        while node.parent_id is not None:
            node = self.nodes[node.parent_id]
            d += 1
        return d

    def children(self, instance_id: str) -> list[str]:
        self.get(instance_id)
        return list(self._children.get(instance_id, []))

    def _auto_label(self, parent_id: str | None) -> str:
        depth = 0 if parent_id is None else self.depth(parent_id) + 1
        letter = GREEK[depth % len(GREEK)]
        ordinal = sum(1 for nid in self.nodes if self.depth(nid) == depth) + 1
        return f"{letter}{ordinal}"

    def add_instance(
        self,
        instance_id: str,
        parent_id: str | None,
        params: ModelParams,
        record_ref: str,
        metrics: MetricVector,
        label: str | None = None,
        created_at: str | None = None,
    ) -> AlgorithmInstance:
        if instance_id in self.nodes:
            raise TradaoError(f"instance id {instance_id} already present")
        if params.kind != self.model_kind:
            raise ModelKindMismatch(f"{params.kind} instance in {self.model_kind} strategy")
        if parent_id is None:
            if self.root_id is not None:
                raise SecondRoot(f"strategy {self.strategy_id} already has a root")
        elif parent_id not in self.nodes:
            raise UnknownParent(parent_id)
        instance = AlgorithmInstance(
            id=instance_id,
            strategy_id=self.strategy_id,
            parent_id=parent_id,
            label=label or self._auto_label(parent_id),
            params=params,
            record_ref=record_ref,
            metrics=metrics,
            created_at=created_at or _now_iso(),
        )
        self.nodes[instance_id] = instance
        if parent_id is None:
            self.root_id = instance_id
        else:
            self._children.setdefault(parent_id, []).append(instance_id)
        return instance

    # -- derived view data ---------------------------------------------------

    def _ordered(self) -> list[AlgorithmInstance]:
        return list(self.nodes.values())  # insertion order

    def _scores(self) -> tuple[list[dict[str, float]], list[CategoryScores]]:
        return normalize_scores([n.metrics for n in self._ordered()])

    def glyph_data(self, instance_id: str) -> GlyphData:
        """Ring relatives, dual radar, and parameter deltas for one glyph."""
        node = self.get(instance_id)
        ordered = self._ordered()
        index = {n.id: i for i, n in enumerate(ordered)}
        _, categories = self._scores()

        ring: list[dict] = []
        for name in RING_PARAMS[self.model_kind]:
            raw = getattr(node.params, name)
            pool = [
                v
                for n in ordered
                if isinstance(v := getattr(n.params, name), (int, float))
            ]
            if not isinstance(raw, (int, float)) or not pool:
                relative = 0.5  # categorical values have no ordered magnitude
            else:
                lo, hi = min(pool), max(pool)
                relative = 0.5 if lo == hi else (raw - lo) / (hi - lo)
            ring.append({"param_name": name, "raw_value": raw, "relative": relative})

        deltas: list[dict] = []
        radar_parent: CategoryScores | None = None
        if node.parent_id is not None:
            parent = self.nodes[node.parent_id]
            radar_parent = categories[index[parent.id]]
            for name in RING_PARAMS[self.model_kind]:
                child_v = getattr(node.params, name)
                parent_v = getattr(parent.params, name)
                if isinstance(child_v, (int, float)) and isinstance(parent_v, (int, float)):
                    deltas.append({"param_name": name, "signed_change": child_v - parent_v})

        return GlyphData(
            instance_id=instance_id,
            ring=ring,
            radar_self=categories[index[instance_id]],
            radar_parent=radar_parent,
            deltas=deltas,
        )

    def parallel_coordinates(self, instance_id: str) -> dict:
        """Raw metric rows over the nine axes: current, parent, others."""
        node = self.get(instance_id)

        def row(n: AlgorithmInstance, tag: str) -> dict:
            return {
                "tag": tag,
                "id": n.id,
                "label": n.label,
                "values": {axis: getattr(n.metrics, axis) for axis in METRIC_AXES},
            }

        rows = [row(node, "current")]
        if node.parent_id is not None:
            rows.append(row(self.nodes[node.parent_id], "parent"))
        for n in self._ordered():
            if n.id != node.id and n.id != node.parent_id:
                rows.append(row(n, "other"))
        return {"axes": [AXIS_LABELS[a] for a in METRIC_AXES], "rows": rows}

    def subtree(self, instance_id: str) -> list[str]:
        """Descendant ids, depth-first, children in insertion order."""
        self.get(instance_id)
        out: list[str] = []
        stack = list(reversed(self._children.get(instance_id, [])))
        while stack:
            nid = stack.pop()
            out.append(nid)
            stack.extend(reversed(self._children.get(nid, [])))
        return out
