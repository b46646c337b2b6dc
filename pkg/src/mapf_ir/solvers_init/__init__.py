from .hybrid import pibt_complete
from .pibt import PIBT, pibt, pibt_solve
from .prioritized import default_order, hca, whca
from .push_and_swap import PushAndSwap, PushAndSwapFailure, push_and_swap
