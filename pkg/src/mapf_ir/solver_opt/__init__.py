from .astar import (
    NO_CONSTRAINTS, Constraint, ConstraintSet, FixedObstacles, SearchTimeout, path_cost,
    space_time_astar,
)
from .ecbs import ecbs, ecbs_subset
from .icbs import (
    ABORTED, IMPROVED, NO_IMPROVEMENT, CBSSearch, SubsetResult, icbs_full, icbs_subset,
)
