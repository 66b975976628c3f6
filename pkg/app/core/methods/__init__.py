"""
Clustering method package.
"""
from .factory import MethodFactory
from .base import ClusteringMethod
from .kbc_method import KbcMethod
from .kmeans_method import KmeansMethod

__all__ = [
    'MethodFactory',
    'ClusteringMethod',
    'KbcMethod',
    'KmeansMethod'
]
