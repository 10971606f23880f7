"""
支撑集划分
把 Z 的支撑集划分为 K 个单元格，单元格虚拟变量作为 θ̂_disc 的工具变量
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from ...core.config import setup_logger
from ...core.errors import ConfigurationError, OrderConditionError, TooManyCellsError
from ...models.constants import PartitionSchemes, Tolerances
from ...models.data import Dataset

logger = setup_logger(__name__)

# 各划分方式的默认 K（乘积划分为每一维的段数）
DEFAULT_K = {
    PartitionSchemes.QUANTILE_RANGES: 10,
    PartitionSchemes.PRODUCT_QUANTILES: 3,
}


@dataclass(frozen=True)
class PartitionConfig:
    """
    划分配置

    breakpoints 为每一维的断点（user 方式），merge_map 把原始单元格编码
    （形如 "0,2" 的字符串）映射到最终单元格；labels 直接给出每个观测的单元格。
    """

    scheme: str = PartitionSchemes.QUANTILE_RANGES
    K: Optional[int] = None
    min_count: int = Tolerances.MIN_CELL_COUNT
    breakpoints: Optional[Tuple[Tuple[float, ...], ...]] = None
    merge_map: Optional[Dict[str, int]] = None
    labels: Optional[Tuple[int, ...]] = None
    max_cells: int = Tolerances.MAX_CELLS

    def __post_init__(self):
        if self.scheme not in PartitionSchemes.CHOICES:
            raise ConfigurationError(
                f"未知的划分方式: {self.scheme}，支持: {', '.join(PartitionSchemes.CHOICES)}"
            )
        if self.K is not None and self.K < 1:
            raise ConfigurationError(f"K 必须为正整数: {self.K}")
        if self.min_count < 1:
            raise ConfigurationError(f"最小单元格样本数必须为正: {self.min_count}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Partition:
    """
    K 个单元格的划分

    labels[i] ∈ {0, ..., K-1} 为第 i 个观测所在单元格；W_bar 第 k 行为
    (1, Z̄_k, X̄_k)（X 为观测值），mu_y 为单元格内 Y 的均值。
    """

    K: int
    labels: np.ndarray
    counts: np.ndarray
    probs: np.ndarray
    W_bar: np.ndarray
    mu_y: np.ndarray
    scheme: str
    breakpoints: Optional[Tuple[np.ndarray, ...]] = None
    merge_map: Dict[Hashable, int] = field(default_factory=dict)
    flags: Tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    def dummies(self) -> np.ndarray:
        """n×K 单元格虚拟变量矩阵"""
        D = np.zeros((self.n, self.K))
        D[np.arange(self.n), self.labels] = 1.0
        return D

    def assign(self, Z: np.ndarray) -> np.ndarray:
        """
        把新的 Z 行映射到单元格

        异常:
            ConfigurationError: 该行落在训练时不存在的单元格中，或划分由标签直接给出
        """
        Z = np.asarray(Z, dtype=float)
        Z = Z[:, None] if Z.ndim == 1 else Z
        if self.scheme == PartitionSchemes.ELEMENT_WISE:
            keys = [tuple(row) for row in Z.tolist()]
        elif self.breakpoints is not None:
            keys = [tuple(row) for row in _bin_codes(Z, self.breakpoints).tolist()]
        else:
            raise ConfigurationError("由标签给出的划分不能用于新的观测")

        cells = np.empty(len(keys), dtype=int)
        for i, key in enumerate(keys):
            if key not in self.merge_map:
                raise ConfigurationError(f"第 {i} 行落在训练时为空的单元格 {key}")
            cells[i] = self.merge_map[key]
        return cells

    def to_spec(self) -> Dict[str, Any]:
        """可序列化的划分描述，用 user 方式可在同一数据上精确重建"""
        spec: Dict[str, Any] = {'scheme': self.scheme, 'K': self.K}
        if self.breakpoints is not None:
            spec['breakpoints'] = [bp.tolist() for bp in self.breakpoints]
            spec['merge_map'] = {_key_str(k): v for k, v in self.merge_map.items()}
        spec['counts'] = self.counts.tolist()
        spec['flags'] = list(self.flags)
        return spec

    def to_config(self) -> PartitionConfig:
        """转换为可重建本划分的 user 配置"""
        if self.breakpoints is None:
            return PartitionConfig(
                scheme=PartitionSchemes.USER_SUPPLIED, labels=tuple(int(v) for v in self.labels)
            )
        return PartitionConfig(
            scheme=PartitionSchemes.USER_SUPPLIED,
            breakpoints=tuple(tuple(float(v) for v in bp) for bp in self.breakpoints),
            merge_map={_key_str(k): v for k, v in self.merge_map.items()},
        )


def _key_str(key: Hashable) -> str:
    if isinstance(key, tuple):
        return ','.join(str(int(v)) if float(v).is_integer() else repr(v) for v in key)
    return str(key)


def _bin_codes(Z: np.ndarray, breakpoints: Sequence[np.ndarray]) -> np.ndarray:
    """每一维按断点分段（右闭区间），返回 n×d_z 的整数编码"""
    return np.column_stack(
        [np.searchsorted(bp, Z[:, j], side='left') for j, bp in enumerate(breakpoints)]
    ).astype(int)


def quantile_breakpoints(values: np.ndarray, K: int) -> Tuple[np.ndarray, bool]:
    """
    经验分位数断点（lower 插值），重复断点合并

    返回:
        (K-1 个以内的严格递增断点, 是否发生了合并)
    """
    levels = np.arange(1, K) / K
    raw = np.quantile(values, levels, method='lower') if levels.size else np.empty(0)
    unique = np.unique(raw)
    return unique, unique.shape[0] < raw.shape[0]


class _Groups:
    """合并过程中的单元格组，每组为若干原始单元格下标"""

    def __init__(self, counts: np.ndarray):
        self.members: List[List[int]] = [[j] for j in range(counts.shape[0])]
        self.counts: List[int] = [int(c) for c in counts]

    def __len__(self) -> int:
        return len(self.members)

    def smallest_below(self, floor: int) -> Optional[int]:
        below = [g for g, c in enumerate(self.counts) if c < floor]
        if not below or len(self.members) == 1:
            return None
        return min(below, key=lambda g: (self.counts[g], g))

    def merge(self, source: int, target: int) -> None:
        self.members[target].extend(self.members[source])
        self.counts[target] += self.counts[source]
        del self.members[source]
        del self.counts[source]


def _merge_adjacent(counts: np.ndarray, floor: int) -> _Groups:
    """一维：样本数低于下限的单元格并入样本数较少的相邻单元格（平局取左）"""
    groups = _Groups(counts)
    while True:
        g = groups.smallest_below(floor)
        if g is None:
            return groups
        neighbors = [h for h in (g - 1, g + 1) if 0 <= h < len(groups)]
        target = min(neighbors, key=lambda h: (groups.counts[h], h))
        groups.merge(g, target)


def _merge_nearest(counts: np.ndarray, centroids: np.ndarray, floor: int) -> _Groups:
    """多维：样本数低于下限的单元格并入标准化 Z 质心最近的单元格"""
    groups = _Groups(counts)
    sums = centroids * counts[:, None]
    group_sums = [sums[j].copy() for j in range(counts.shape[0])]
    while True:
        g = groups.smallest_below(floor)
        if g is None:
            return groups
        center = group_sums[g] / groups.counts[g]
        others = [h for h in range(len(groups)) if h != g]
        distances = [np.linalg.norm(group_sums[h] / groups.counts[h] - center) for h in others]
        target = others[int(np.argmin(distances))]
        group_sums[target] = group_sums[target] + group_sums[g]
        del group_sums[g]
        groups.merge(g, target)


def _cell_statistics(data: Dataset, labels: np.ndarray, K: int):
    counts = np.bincount(labels, minlength=K)
    raw = data.raw_design()
    sums = np.zeros((K, raw.shape[1]))
    np.add.at(sums, labels, raw)
    W_bar = sums / counts[:, None]
    mu_y = np.bincount(labels, weights=data.y, minlength=K) / counts
    return counts, counts / data.n, W_bar, mu_y


def _check_order(K: int, d: int, stage: str) -> None:
    if K < d:
        raise OrderConditionError(
            f"{stage}单元格数 K={K} 小于参数维度 d={d}, 阶条件不成立",
            K=K,
            d=d,
        )


def make_partition(
    data: Dataset,
    scheme: str = PartitionSchemes.QUANTILE_RANGES,
    K: Optional[int] = None,
    min_count: int = Tolerances.MIN_CELL_COUNT,
    breakpoints: Optional[Sequence[Sequence[float]]] = None,
    merge_map: Optional[Dict[str, int]] = None,
    labels: Optional[Sequence[int]] = None,
    max_cells: int = Tolerances.MAX_CELLS,
) -> Partition:
    """
    构造支撑集划分

    参数:
        data: 样本
        scheme: element / quantile / product / user
        K: quantile 为单元格数，product 为每一维的段数；None 使用默认值
        min_count: 单元格最小样本数，低于该值的单元格被合并（element 与 user 不合并）
        breakpoints: user 方式每一维的断点
        merge_map: user 方式的原始单元格到最终单元格的映射
        labels: user 方式直接给出的单元格标签
        max_cells: element 方式的不同取值数上限

    返回:
        划分

    异常:
        OrderConditionError: 划分前或合并后单元格数小于 d
    """
    config = PartitionConfig(
        scheme=scheme,
        K=K,
        min_count=min_count,
        breakpoints=None if breakpoints is None else tuple(tuple(bp) for bp in breakpoints),
        merge_map=merge_map,
        labels=None if labels is None else tuple(int(v) for v in labels),
        max_cells=max_cells,
    )
    return partition_from_config(data, config)


def partition_from_config(data: Dataset, config: PartitionConfig) -> Partition:
    """按配置构造划分"""
    d = data.d
    flags: List[str] = []
    bps: Optional[Tuple[np.ndarray, ...]] = None
    adjacency = data.d_z == 1
    floor = config.min_count

    if config.scheme == PartitionSchemes.ELEMENT_WISE:
        keys, inverse = np.unique(data.Z, axis=0, return_inverse=True)
        if keys.shape[0] > config.max_cells:
            raise TooManyCellsError(keys.shape[0], config.max_cells)
        raw_keys: List[Hashable] = [tuple(row) for row in keys.tolist()]
        floor = 1

    elif config.scheme == PartitionSchemes.USER_SUPPLIED and config.labels is not None:
        given = np.asarray(config.labels, dtype=int)
        if given.shape[0] != data.n:
            raise ConfigurationError(f"标签个数 {given.shape[0]} 与样本量 {data.n} 不一致")
        keys, inverse = np.unique(given, return_inverse=True)
        raw_keys = [int(k) for k in keys]
        floor = 1

    else:
        if config.scheme == PartitionSchemes.USER_SUPPLIED:
            if config.breakpoints is None or len(config.breakpoints) != data.d_z:
                raise ConfigurationError("user 划分需要每一维的断点或直接给出标签")
            bps = tuple(np.unique(np.asarray(bp, dtype=float)) for bp in config.breakpoints)
            possible = int(np.prod([bp.shape[0] + 1 for bp in bps]))
            floor = 1
        else:
            if config.scheme == PartitionSchemes.QUANTILE_RANGES and data.d_z != 1:
                raise ConfigurationError(
                    f"分位数区间划分只支持一维 Z (d_z={data.d_z}), 请改用 product"
                )
            per_dim = config.K or DEFAULT_K[config.scheme]
            possible = per_dim ** data.d_z
            _check_order(possible, d, '划分前')
            collapsed = []
            for j in range(data.d_z):
                bp, dup = quantile_breakpoints(data.Z[:, j], per_dim)
                collapsed.append(bp)
                if dup:
                    flags.append('collapsed_breakpoints')
                    logger.warning(f"第 {j} 维存在重复分位数断点，单元格数减少")
            bps = tuple(collapsed)
            possible = int(np.prod([bp.shape[0] + 1 for bp in bps]))

        codes = _bin_codes(data.Z, bps)
        keys, inverse = np.unique(codes, axis=0, return_inverse=True)
        raw_keys = [tuple(row) for row in keys.tolist()]
        if keys.shape[0] < possible:
            flags.append('empty_cells_dropped')
            logger.warning(f"{possible - keys.shape[0]} 个空单元格已移除")

    inverse = np.asarray(inverse).reshape(-1)
    raw_counts = np.bincount(inverse, minlength=len(raw_keys))

    if config.scheme == PartitionSchemes.USER_SUPPLIED and config.merge_map:
        final_of_raw = _apply_merge_map(raw_keys, config.merge_map)
    else:
        if adjacency:
            groups = _merge_adjacent(raw_counts, floor)
        else:
            std = data.Z.std(axis=0)
            standardized = (data.Z - data.Z.mean(axis=0)) / np.where(std > 0, std, 1.0)
            centroid_sums = np.zeros((len(raw_keys), data.d_z))
            np.add.at(centroid_sums, inverse, standardized)
            groups = _merge_nearest(raw_counts, centroid_sums / raw_counts[:, None], floor)
        if len(groups) < len(raw_keys):
            flags.append('cells_merged')
            logger.warning(f"{len(raw_keys) - len(groups)} 个样本数低于 {floor} 的单元格已合并")
        final_of_raw = np.empty(len(raw_keys), dtype=int)
        for g, members in enumerate(groups.members):
            final_of_raw[members] = g

    K_final = int(final_of_raw.max()) + 1
    _check_order(K_final, d, '合并后' if 'cells_merged' in flags else '')

    cell_labels = final_of_raw[inverse]
    counts, probs, W_bar, mu_y = _cell_statistics(data, cell_labels, K_final)
    merge_map = {key: int(final_of_raw[j]) for j, key in enumerate(raw_keys)}

    if adjacency and bps is not None and 'cells_merged' in flags:
        bps = (_merged_breakpoints(bps[0], raw_keys, final_of_raw),)
        merge_map = {(j,): j for j in range(K_final)}

    logger.info(
        f"划分 ({PartitionSchemes.get_name(config.scheme)}): K={K_final}, "
        f"最小单元格样本数 {int(counts.min())}"
    )
    return Partition(
        K=K_final,
        labels=cell_labels,
        counts=counts,
        probs=probs,
        W_bar=W_bar,
        mu_y=mu_y,
        scheme=config.scheme,
        breakpoints=bps,
        merge_map=merge_map,
        flags=tuple(dict.fromkeys(flags)),
    )


def _merged_breakpoints(bp: np.ndarray, raw_keys: List[Hashable], final_of_raw: np.ndarray) -> np.ndarray:
    """一维相邻合并后保留的断点：每个最终单元格最后一个原始编码对应的上界"""
    kept = []
    for j in range(len(raw_keys) - 1):
        if final_of_raw[j] != final_of_raw[j + 1]:
            kept.append(bp[raw_keys[j][0]])
    return np.asarray(kept, dtype=float)


def _apply_merge_map(raw_keys: List[Hashable], merge_map: Dict[str, int]) -> np.ndarray:
    final = np.empty(len(raw_keys), dtype=int)
    for j, key in enumerate(raw_keys):
        name = _key_str(key)
        if name not in merge_map:
            raise ConfigurationError(f"合并映射中缺少单元格 {name}")
        final[j] = int(merge_map[name])
    # 重新编号为连续的 0..K-1，保持原有顺序
    _, dense = np.unique(final, return_inverse=True)
    return np.asarray(dense).reshape(-1)
