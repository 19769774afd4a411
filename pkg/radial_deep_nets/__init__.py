"""
Radial Deep Nets - four-level deep nets that approximate and learn radial functions.
"""

__version__ = "0.1.0"

from radial_deep_nets.activations import Activation, anchored, get_activation
from radial_deep_nets.hard_instances import PackingFamily, make_bump
from radial_deep_nets.radial_builder import RadialTarget, build_radial_net
from radial_deep_nets.tree_net import TreeArch, TreeNet, evaluate, load_net, save_net
from radial_deep_nets.univariate_builder import build_univariate_net, get_target

__all__ = [
    "Activation",
    "anchored",
    "get_activation",
    "TreeArch",
    "TreeNet",
    "evaluate",
    "save_net",
    "load_net",
    "get_target",
    "build_univariate_net",
    "RadialTarget",
    "build_radial_net",
    "make_bump",
    "PackingFamily",
]
