"""
离散化估计量
"""

from .estimator import DiscEstimator, default_partition_config, fit_theta_disc
from .partition import Partition, PartitionConfig, make_partition, partition_from_config

__all__ = [
    'Partition',
    'PartitionConfig',
    'make_partition',
    'partition_from_config',
    'fit_theta_disc',
    'default_partition_config',
    'DiscEstimator',
]
