from typing import Optional

from pydantic import BaseModel, Field

from src.core.constants import BlockJacobiMode, LinsolveKind, PreconditionerKind, SlopeKind


class LinsolveSettings(BaseModel):
    """Settings of the linear solve for the descent direction."""

    kind: LinsolveKind = Field(default=LinsolveKind.AUTO, description="Solver for the second-order system")
    tol: float = Field(default=1e-8, gt=0, description="Relative residual tolerance ||Md + r|| / (1 + ||r||)")
    maxit: int = Field(default=1000, ge=1, description="Iteration cap of pcg/gmres")
    auto_direct_limit: int = Field(default=2500, ge=1, description="auto: direct up to this dimension, pcg above")
    dense_limit: int = Field(
        default=2500, ge=1, description="Direct solves factor densely up to this dimension, sparse LU above"
    )
    preconditioner: PreconditionerKind = Field(
        default=PreconditionerKind.JACOBI, description="Preconditioner of pcg/gmres"
    )
    ilu_drop_tol: float = Field(default=1e-4, gt=0, description="Drop tolerance of the incomplete LU")
    gmres_restart: int = Field(default=50, ge=1, description="Restart length of gmres")
    partitions: int = Field(default=4, ge=2, description="Block count of block-Jacobi")
    overlap: float = Field(default=0.2, ge=0.0, lt=0.5, description="Overlap fraction of each block-Jacobi block")
    block_maxit: int = Field(default=200, ge=1, description="Sweep cap of block-Jacobi")
    block_mode: BlockJacobiMode = Field(default=BlockJacobiMode.KRYLOV, description="Richardson or CG-accelerated")
    reorder_bfs: bool = Field(default=False, description="Breadth-first renumbering before blocking")


class LinesearchSettings(BaseModel):
    """Settings of the projected backtracking line search."""

    sigma: float = Field(default=1e-2, gt=0, le=1, description="Sufficient-decrease factor")
    s_min: float = Field(default=1e-12, gt=0, description="Smallest step tried")
    max_backtracks: int = Field(default=40, ge=1, description="Cap on halvings")
    slope: SlopeKind = Field(default=SlopeKind.MINNORM, description="Slope vector of the decrease test")
    eps_reg: float = Field(default=1e-10, gt=0, description="Relative regularization of rank-deficient projections")
    dense_budget: int = Field(
        default=2000, ge=1, description="Largest sign-change set projected with a dense Gram factorization"
    )
    stall_residual_factor: float = Field(
        default=1e3,
        gt=0,
        description="A stall with residual below this multiple of the threshold counts as StepSmall",
    )


class GammaWarmupSettings(BaseModel):
    """Geometric warm-up of the Huber parameter, gamma_k = min(gamma, gamma0 * rate**k)."""

    enabled: bool = Field(default=False)
    gamma0: float = Field(default=50.0, gt=0)
    rate: float = Field(default=2.0, gt=1)


class SubproblemSettings(BaseModel):
    """Settings of the minimum-norm subgradient QP."""

    tol_qp: float = Field(default=1e-8, gt=0, description="Projected fixed-point residual tolerance")
    maxit_qp: int = Field(default=500, ge=1, description="Iteration cap of the accelerated projected gradient")
    warm_start: bool = Field(default=True, description="Reuse the previous multiplier when the active set is unchanged")


class SolverConfig(BaseModel):
    """Configuration of one GSOM run."""

    gamma: float = Field(default=1000.0, ge=0, description="Huber parameter; 0 disables the weak Hessian")
    gamma_warmup: GammaWarmupSettings = Field(default_factory=GammaWarmupSettings)
    tol_x: float = Field(default=1e-8, gt=0)
    tol_f: float = Field(default=1e-10, gt=0)
    tol_residual: float = Field(default=1e-6, gt=0)
    max_iter: int = Field(default=500, ge=1)
    tol_act: float = Field(default=1e-8, gt=0, description="Relative band for |<c_i,x>| = 0, scaled by 1+||x||_inf")
    eps_act: float = Field(default=1e-6, gt=0, description="Relative freezing band, scaled by 1+||residual||_inf")
    kappa_min: Optional[float] = Field(
        default=None, gt=0, description="Curvature floor; 1e-6*(1 + trace(B)/m) when unset"
    )
    active_set_reduction: bool = Field(default=False, description="Solve the reduced system on free coordinates")
    subproblem: SubproblemSettings = Field(default_factory=SubproblemSettings)
    linsolve: LinsolveSettings = Field(default_factory=LinsolveSettings)
    linesearch: LinesearchSettings = Field(default_factory=LinesearchSettings)
    seed: int = Field(default=0, description="Seed of every randomized estimate inside the solver")

    def gamma_at(self, iteration: int) -> float:
        """Huber parameter used at the given iteration."""
        if not self.gamma_warmup.enabled or self.gamma == 0:
            return self.gamma
        warm = self.gamma_warmup
        return min(self.gamma, warm.gamma0 * warm.rate**iteration)


class AdmmSettings(BaseModel):
    """Settings of the scaled ADMM baseline."""

    rho: float = Field(default=1.0, gt=0)
    tol: float = Field(default=1e-10, gt=0)
    maxit: int = Field(default=20000, ge=1)
    adapt_rho: bool = Field(default=True, description="Residual balancing by a factor 2 at ratio 10")
