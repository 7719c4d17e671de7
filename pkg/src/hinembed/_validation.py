"""Input checks shared by the estimators."""

from __future__ import annotations

import numbers

from .hetgraph import GraphError, TypedGraph


def check_graph(graph) -> TypedGraph:
    """Return a frozen ``TypedGraph``; freezes a mutable one in place."""
    if not isinstance(graph, TypedGraph):
        raise TypeError(f"expected a TypedGraph, got {type(graph).__name__}")
    if graph.num_nodes == 0:
        raise GraphError("graph has no nodes")
    return graph.freeze()


def check_scalar(value, name: str, kind=numbers.Real, min_val=None, max_val=None,
                 include_min: bool = True, include_max: bool = True):
    if isinstance(value, bool) or not isinstance(value, kind):
        raise TypeError(f"{name} must be {kind.__name__}, got {type(value).__name__}")
    if min_val is not None and (value < min_val or (value == min_val and not include_min)):
        raise ValueError(f"{name}={value} is below the allowed range")
    if max_val is not None and (value > max_val or (value == max_val and not include_max)):
        raise ValueError(f"{name}={value} is above the allowed range")
    return value
