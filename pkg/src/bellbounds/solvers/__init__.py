from .knorm import KNormResult, j_norm, k_norm, k_norm_certified
from .linalg import svd, sym_eig
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, LpResult, lp_solve
from .rng import RngStream, gaussian_matrix

__all__ = [
    "KNormResult", "j_norm", "k_norm", "k_norm_certified", "svd", "sym_eig",
    "INFEASIBLE", "OPTIMAL", "UNBOUNDED", "LpProblem", "LpResult", "lp_solve",
    "RngStream", "gaussian_matrix",
]
