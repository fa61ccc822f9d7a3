"""Rate-splitting planner for the Gaussian multi-access channel."""

from .allocation import (MembershipVerdict, NisProfile, PairRelation, RateAllocation, Status,
                         classify_pair, compute_nis, polymatroid_membership, sum_capacity,
                         tighten, vertex_rates)
from .combiner import CombinationTree, NodeEntry, build_combination_tree, combine, find_combinable_pair
from .errors import (CapacityError, DomainError, InvariantViolation, NotOnDominantFace,
                     PartitionError, PlannerError, ValidationError)
from .shannon import DEFAULT_TOLERANCE, capacity, nis_for_rate
from .splitter import (BisectionResult, Rect, Region, SplitPlan, VirtualUser,
                       closed_form_placement, compute_split_plan, epsilon_bisection,
                       partition_double_rect, partition_single_rect)
from .verifier import VerificationReport, random_problem, sample_dominant_face, verify_plan

__version__ = "0.1.0"
