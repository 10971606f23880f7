"""
常量定义模块
集中管理方法名、估计量标签、容差等常量
"""


class FirstStageMethods:
    """第一阶段非参数回归方法"""

    CELL_MEANS = 'cells'
    NADARAYA_WATSON = 'nw'
    CUBIC_SPLINE = 'spline'
    KNOWN = 'known'

    # 方法到中文名的映射
    NAMES = {
        'cells': '单元格均值',
        'nw': 'Nadaraya-Watson 核回归',
        'spline': '三次 B 样条',
        'known': '已知条件均值',
    }

    CHOICES = ('cells', 'nw', 'spline')

    @classmethod
    def get_name(cls, method: str) -> str:
        """获取方法的中文名"""
        return cls.NAMES.get(method, method)


class PartitionSchemes:
    """支撑集划分方式"""

    ELEMENT_WISE = 'element'
    QUANTILE_RANGES = 'quantile'
    PRODUCT_QUANTILES = 'product'
    USER_SUPPLIED = 'user'

    NAMES = {
        'element': '逐点划分',
        'quantile': '分位数区间',
        'product': '各维分位数乘积',
        'user': '用户指定',
    }

    CHOICES = ('element', 'quantile', 'product', 'user')

    @classmethod
    def get_name(cls, scheme: str) -> str:
        """获取划分方式的中文名"""
        return cls.NAMES.get(scheme, scheme)


class EstimatorTags:
    """估计量标签"""

    THETA = 'theta'
    THETA_STAR = 'theta_star'
    DISC = 'disc'
    OLS = 'ols'
    TSLS = 'tsls'
    INFEASIBLE = 'infeasible'
    QUANTILE = 'quantile'
    NONLINEAR = 'nonlinear'
    NONLINEAR_STAR = 'nonlinear_star'

    NAMES = {
        'theta': '半参数两步估计 θ̂',
        'theta_star': '半参数两步估计 θ̂*',
        'disc': '离散化估计 θ̂_disc',
        'ols': 'OLS',
        'tsls': '2SLS (Z 作为排除工具)',
        'infeasible': '不可行估计 (真实 π₀)',
        'quantile': '两步分位数估计 θ̂_q',
        'nonlinear': '两步非线性估计 θ̂_nl',
        'nonlinear_star': '两步非线性估计 θ̂*_nl',
    }

    # 模拟默认比较的五个估计量
    SIMULATION_DEFAULT = ('theta', 'theta_star', 'disc', 'tsls', 'ols')

    @classmethod
    def get_name(cls, tag: str) -> str:
        """获取估计量的中文名"""
        return cls.NAMES.get(tag, tag)


class Verdicts:
    """识别诊断结论"""

    OK = 'OK'
    MARGINAL = 'Marginal'
    FAIL = 'Fail'

    # 严重程度排序
    SEVERITY = {'OK': 0, 'Marginal': 1, 'Fail': 2}

    @classmethod
    def worst(cls, verdicts) -> str:
        """返回最严重的结论"""
        return max(verdicts, key=lambda v: cls.SEVERITY[v], default=cls.OK)


class DgpFamilies:
    """模拟数据生成过程"""

    SIM1 = 'sim1'
    SIM2 = 'sim2'
    SIM3 = 'sim3'

    NAMES = {
        'sim1': '二元 X, 两个二元 Z',
        'sim2': '二元 X, 连续 Z',
        'sim3': '连续 X, 连续 Z',
    }

    CHOICES = ('sim1', 'sim2', 'sim3')

    @classmethod
    def get_name(cls, family: str) -> str:
        """获取 DGP 的中文名"""
        return cls.NAMES.get(family, family)


class Tolerances:
    """数值容差与阈值"""

    # 奇异性判断：最小特征值 <= 1e-10 × 最大特征值
    SINGULARITY_RELATIVE = 1e-10
    # 诊断：条件数超过该值判为 Fail
    CONDITION_FAIL = 1e10
    # 诊断：π̂ 对 (1, Z) 回归的 R² 超过该值判为 Marginal
    NONLINEARITY_R2 = 0.999
    # 半正定判断与方差截断
    PSD_ABSOLUTE = 1e-8
    # 95% 置信区间的正态分位数
    CI_Z = 1.96
    # 2SLS 第一阶段最小典型相关低于该值时标记弱工具
    WEAK_IV_CANONICAL = 0.1
    # 留一交叉验证中 1 - L_ii 低于该值视为自权重饱和
    LOOCV_SATURATION = 1e-12
    # 单元格均值允许的最大不同取值数
    MAX_CELLS = 1024
    # 划分单元格的最小样本数
    MIN_CELL_COUNT = 5
    # 分位数估计中条件密度的下限
    DENSITY_FLOOR = 1e-6
    # 分位数估计：π̃̂ 偏离仿射的均方与其抽样方差之比不超过该值视为 π̃ 线性
    LACK_OF_FIT_RATIO = 3.0


class ExitCodes:
    """命令行退出码"""

    OK = 0
    USAGE = 1
    IDENTIFICATION = 2
    NUMERIC = 3
