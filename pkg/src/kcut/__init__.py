"""Workbench for the k-cut model on rooted trees.

Tree representations and generators, two independent simulators of the
k-cut number (direct cutting process and Gamma-clock records), exact
per-tree expectations by quadrature, limit-law numerics, and a
reproducible experiment harness.
"""

from kcut.tree import Tree, Profile, DfsWalk, build_tree, profile, dfs_walk
from kcut.tree import spanned_edges, incremental_spans

__all__ = [
    "Tree",
    "Profile",
    "DfsWalk",
    "build_tree",
    "profile",
    "dfs_walk",
    "spanned_edges",
    "incremental_spans",
]
