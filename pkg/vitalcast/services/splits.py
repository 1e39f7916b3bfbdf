"""
Split Service

Patient-level train/validation/test split, then predictive/generative inside train.
Sizes use largest-remainder rounding on exact fractions.
"""

import logging
from fractions import Fraction
from math import floor
from typing import List, Sequence

from vitalcast.core.errors import ContractViolation, SplitError
from vitalcast.core.numerics import Rng
from vitalcast.models.dataset_model import CohortSplit, SplitPlan
from vitalcast.models.patient_model import Cohort

logger = logging.getLogger(__name__)

MIN_PATIENTS = 5


def largest_remainder(total: int, weights: Sequence[float]) -> List[int]:
    """
    Apportion `total` seats by weight. Equal remainders go to the later part,
    so 7 patients at 0.6/0.2/0.2 become 4/1/2.
    """
    if total < 0 or not weights or any(w < 0 for w in weights):
        raise ContractViolation("largest_remainder needs total >= 0 and non-negative weights")
    exact = [Fraction(str(w)) if isinstance(w, float) else Fraction(w) for w in weights]
    weight_sum = sum(exact)
    if weight_sum == 0:
        raise ContractViolation("weights must not all be zero")
    quotas = [total * w / weight_sum for w in exact]
    seats = [floor(q) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - seats[i]), -i))
    for i in order[: total - sum(seats)]:
        seats[i] += 1
    return seats


def split_patients(cohort: Cohort, plan: SplitPlan) -> CohortSplit:
    """Deterministic per plan.seed; raises SplitError if any split ends up empty."""
    n = len(cohort)
    if n < MIN_PATIENTS:
        raise SplitError(f"need at least {MIN_PATIENTS} patients to split, got {n}")

    order = Rng(plan.seed).shuffle(sorted(cohort.ids))
    n_train, n_val, n_test = largest_remainder(n, [plan.train, plan.validation, plan.test])
    n_pred, n_gen = largest_remainder(n_train, [plan.predictive, plan.generative])
    sizes = {"train": n_train, "validation": n_val, "test": n_test, "predictive": n_pred, "generative": n_gen}
    empty = [name for name, size in sizes.items() if size == 0]
    if empty:
        raise SplitError(f"{n} patients leave empty split(s): {', '.join(empty)}")

    train = order[:n_train]
    split = CohortSplit(
        train=tuple(sorted(train)),
        validation=tuple(sorted(order[n_train : n_train + n_val])),
        test=tuple(sorted(order[n_train + n_val :])),
        predictive=tuple(sorted(train[:n_pred])),
        generative=tuple(sorted(train[n_pred:])),
        seed=plan.seed,
    )
    logger.info(
        f"[SPLIT] ✓ seed={plan.seed}: train={n_train} (P={n_pred}, G={n_gen}) validation={n_val} test={n_test}"
    )
    return split
