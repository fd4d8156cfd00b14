"""Discretization error of a uniform mesh, measured against a much finer mesh."""

from src.analysis.oracle import opt_search
from src.envs.supply import SupplyModel
from src.mesh.candidates import UniformMesh
from src.utils.logger import get_logger

logger = get_logger(__name__)


def discretization_error(env: SupplyModel, fine_step: float, coarse: UniformMesh) -> float:
    """
    OPT over the fine mesh minus OPT over the coarse mesh, both by exhaustive search.

    Args:
        env: environment with an exact oracle
        fine_step: step of the reference mesh, at most a tenth of the coarse step
        coarse: the mesh being measured

    Returns:
        float: the optimality gap (non-negative whenever the coarse mesh is a sub-lattice)

    Raises:
        ValueError: if fine_step is not at most coarse.delta / 10
    """
    if fine_step > coarse.delta / 10 + 1e-15:
        raise ValueError(
            f"Fine step {fine_step} must be at most a tenth of the coarse step {coarse.delta}"
        )
    fine = opt_search(env, UniformMesh(fine_step))
    rough = opt_search(env, coarse)
    gap = fine.utility - rough.utility
    logger.debug(f"Discretization error at delta={coarse.delta}: "
                 f"{fine.utility:.6f} - {rough.utility:.6f} = {gap:.6f}")
    return gap
