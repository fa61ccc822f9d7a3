"""JSON problem and plan files.

User numbers in files are 1-based. Floats are written with ``repr``
(shortest string that round-trips a binary64 value), so reading a file
back reproduces every number bit for bit.
"""

from __future__ import annotations

import json
import math
from typing import Any, Dict, Optional, Tuple

from .allocation import PairRelation, RateAllocation
from .combiner import CombinationTree, NodeEntry
from .errors import ValidationError
from .splitter import SplitPlan, VirtualUser
from .verifier import VerificationReport

__all__ = ["Problem", "load_problem", "problem_to_dict", "plan_to_dict", "plan_from_dict",
           "dumps", "loads"]


class Problem:
    """Contents of a problem file; ``rates`` may be missing for ``vertex``."""

    def __init__(self, powers, noise, rates=None, tolerance=None):
        self.powers = tuple(powers)
        self.noise = noise
        self.rates = None if rates is None else tuple(rates)
        self.tolerance = tolerance

    def allocation(self) -> RateAllocation:
        if self.rates is None:
            raise ValidationError("problem has no rates")
        return RateAllocation(self.powers, self.rates, self.noise)


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{what} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{what} must be finite")
    return value


def _positive_list(data: dict, key: str) -> Tuple[float, ...]:
    values = data.get(key)
    if not isinstance(values, list) or not values:
        raise ValidationError(f"'{key}' must be a nonempty array")
    out = tuple(_number(v, f"{key}[{k}]") for k, v in enumerate(values))
    if any(v <= 0 for v in out):
        raise ValidationError(f"all '{key}' must be positive")
    return out


def problem_from_dict(data: Any) -> Problem:
    if not isinstance(data, dict):
        raise ValidationError("problem must be a JSON object")
    powers = _positive_list(data, "powers")
    rates = _positive_list(data, "rates") if "rates" in data else None
    if rates is not None and len(rates) != len(powers):
        raise ValidationError("'powers' and 'rates' differ in length")
    if "noise" not in data:
        raise ValidationError("'noise' is required")
    noise = _number(data["noise"], "noise")
    if noise <= 0:
        raise ValidationError("'noise' must be positive")
    tolerance = data.get("tolerance")
    if tolerance is not None:
        tolerance = _number(tolerance, "tolerance")
        if tolerance <= 0:
            raise ValidationError("'tolerance' must be positive")
    return Problem(powers, noise, rates, tolerance)


def load_problem(text: str) -> Problem:
    return problem_from_dict(loads(text))


def problem_to_dict(problem: Problem) -> Dict[str, Any]:
    out: Dict[str, Any] = {"powers": list(problem.powers)}
    if problem.rates is not None:
        out["rates"] = list(problem.rates)
    out["noise"] = problem.noise
    if problem.tolerance is not None:
        out["tolerance"] = problem.tolerance
    return out


def plan_to_dict(plan: SplitPlan, report: VerificationReport, tolerance: float,
                 emit_tree: bool = False) -> Dict[str, Any]:
    ra = plan.ra
    position = {k: pos + 1 for pos, k in enumerate(plan.decode_order)}
    out: Dict[str, Any] = {
        "problem": problem_to_dict(Problem(ra.powers, ra.noise, ra.rates, tolerance)),
        "epsilon": list(plan.epsilon),
        "virtual_users": [
            {"label": v.label, "user": v.user + 1, "piece": v.piece, "power": v.power,
             "nis": v.nis, "rate": v.rate, "decode_position": position[k]}
            for k, v in enumerate(plan.virtual_users)
        ],
        "decode_order": [plan.virtual_users[k].label for k in plan.decode_order],
        "verification": report.to_dict(),
    }
    if emit_tree and plan.tree is not None:
        out["tree"] = plan.tree.to_dict()
    return out


def _tree_from_dict(data: Any, noise: float) -> CombinationTree:
    try:
        nodes = tuple(
            NodeEntry(int(d["id"]), float(d["power"]), float(d["rate"]), float(d["nis"]),
                      frozenset(int(u) - 1 for u in d["users"]))
            for d in data["nodes"])
        children = {int(m["node"]): (int(m["low"]), int(m["high"])) for m in data["merges"]}
        relations = {int(m["node"]): PairRelation(m["relation"]) for m in data["merges"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed tree: {exc}") from exc
    return CombinationTree(nodes, children, relations, noise)


def plan_from_dict(data: Any) -> Tuple[SplitPlan, Optional[float]]:
    """Rebuild a plan from a plan file; returns the plan and its tolerance.

    Only powers, NIS values and labels are read back; stored rates and
    the stored verification report are ignored.
    """
    if not isinstance(data, dict):
        raise ValidationError("plan must be a JSON object")
    for key in ("problem", "epsilon", "virtual_users", "decode_order"):
        if key not in data:
            raise ValidationError(f"plan is missing '{key}'")
    problem = problem_from_dict(data["problem"])
    ra = problem.allocation()
    records = data["virtual_users"]
    if not isinstance(records, list) or not records:
        raise ValidationError("'virtual_users' must be a nonempty array")
    virtual = []
    for rec in records:
        if not isinstance(rec, dict):
            raise ValidationError("virtual user records must be objects")
        try:
            user = int(rec["user"]) - 1
            piece = int(rec["piece"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed virtual user record: {rec!r}") from exc
        if piece not in (0, 1, 2):
            raise ValidationError(f"bad piece number {piece}")
        virtual.append(VirtualUser(user, piece, _number(rec.get("power"), "power"),
                                   _number(rec.get("nis"), "nis")))
    index = {v.label: k for k, v in enumerate(virtual)}
    if len(index) != len(virtual):
        raise ValidationError("duplicate virtual user labels")
    order = data["decode_order"]
    if not isinstance(order, list) or any(label not in index for label in order):
        raise ValidationError("decode order names unknown virtual users")
    decode_order = tuple(index[label] for label in order)
    for pos, k in enumerate(decode_order):
        if records[k].get("decode_position") != pos + 1:
            raise ValidationError(f"decode position of {virtual[k].label} disagrees with decode order")
    epsilon = data["epsilon"]
    if not isinstance(epsilon, list) or len(epsilon) != ra.n:
        raise ValidationError("'epsilon' must list one coefficient per user")
    epsilon = tuple(_number(e, "epsilon") for e in epsilon)
    tree = _tree_from_dict(data["tree"], ra.noise) if "tree" in data else None
    plan = SplitPlan(ra, epsilon, tuple(virtual), decode_order, tree)
    return plan, problem.tolerance


def dumps(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc
