"""Convoy discovery in trajectory databases.

A convoy is a group of at least ``m`` objects that stay density-connected
under range ``e`` for at least ``k`` consecutive ticks.  The package offers
an exact per-tick algorithm (CMC), a filter-and-refine family (CuTS, CuTS+,
CuTS*) built on polyline simplification, a moving-cluster baseline and a
brute-force oracle.
"""
from __future__ import annotations

from .autoparam import compute_delta, compute_lambda
from .clustering import Cluster, RangeSearchMode, dbscan_points, neighborhood_polylines, omega, traj_dbscan
from .convoy import (
    Candidate,
    Convoy,
    QueryParams,
    VariantConfig,
    accuracy_report,
    brute_force,
    cmc,
    cuts_filter,
    cuts_refine,
    discover,
    mc2,
    normalize,
    variant_config,
)
from .geometry import BoundingBox, Point2, TimedSegment, cpa_time, dist_bb, dist_pp, dist_ps, dist_ss, dist_star
from .metrics import RunStats, refinement_unit
from .simplify import Segment, SimplifiedTrajectory, dp, dp_plus, dp_star, simplify
from .synthetic import PlantedConvoy, SyntheticSpec, generate
from .trajectory import DataError, Partition, TimeDomain, Trajectory, load_trajectories, partition_domain

__all__ = [
    "BoundingBox",
    "Candidate",
    "Cluster",
    "Convoy",
    "DataError",
    "Partition",
    "PlantedConvoy",
    "Point2",
    "QueryParams",
    "RangeSearchMode",
    "RunStats",
    "Segment",
    "SimplifiedTrajectory",
    "SyntheticSpec",
    "TimeDomain",
    "TimedSegment",
    "Trajectory",
    "VariantConfig",
    "accuracy_report",
    "brute_force",
    "cmc",
    "compute_delta",
    "compute_lambda",
    "cpa_time",
    "cuts_filter",
    "cuts_refine",
    "dbscan_points",
    "discover",
    "dist_bb",
    "dist_pp",
    "dist_ps",
    "dist_ss",
    "dist_star",
    "dp",
    "dp_plus",
    "dp_star",
    "generate",
    "load_trajectories",
    "mc2",
    "neighborhood_polylines",
    "normalize",
    "omega",
    "partition_domain",
    "refinement_unit",
    "simplify",
    "traj_dbscan",
    "variant_config",
]
