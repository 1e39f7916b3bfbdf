"""
MI Clustering Service

Picks a representative generative-training subset:

1. pairwise patient MI with the Kraskov (KSG, variant 1) k-nearest-neighbour
   estimator on the five vitals, time steps paired after truncating both
   patients to the shorter length
2. score J(P_i) = sum of MI against every other patient
3. sort by descending J, cut into L near-equal contiguous groups
4. sample each group proportionally into G', the rest forms P'

Brute-force Chebyshev distances; fine for a few thousand samples per pair.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist
from scipy.special import digamma

from vitalcast.core.cache import array_fingerprint, cached_pair
from vitalcast.core.errors import ContractViolation, DegenerateInputError
from vitalcast.core.numerics import Rng
from vitalcast.models.patient_model import N_VITALS, Cohort, PatientRecord
from vitalcast.services.splits import largest_remainder

logger = logging.getLogger(__name__)

PairMi = Callable[[PatientRecord, PatientRecord], float]

# Two hours at 5-minute cadence; rows closer in time than this are serially dependent.
THEILER_WINDOW = 24


def _as_samples(values: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ContractViolation(f"{name} must be n x d samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite samples")
    return arr


def ksg_mi(
    x: np.ndarray,
    y: np.ndarray,
    k: int = 3,
    jitter: float = 0.0,
    rng: Optional[Rng] = None,
    theiler: int = 0,
) -> float:
    """
    I(X;Y) in nats: psi(k) + <psi(c_i + 1) - psi(n_x + 1) - psi(n_y + 1)>.

    eps_i is the distance to the k-th neighbour in the joint max-norm space;
    n_x, n_y count marginal neighbours strictly closer than eps_i. c_i is the
    number of candidate neighbours of sample i, n - 1 unless a Theiler window
    excludes samples with |i - j| <= theiler (serially dependent rows).
    With jitter > 0, u * jitter (u uniform from rng) is added to every coordinate.
    """
    x = _as_samples(x, "x")
    y = _as_samples(y, "y")
    n = x.shape[0]
    if y.shape[0] != n:
        raise ContractViolation(f"x has {n} samples, y has {y.shape[0]}")
    if k < 1 or n <= k:
        raise ContractViolation(f"KSG needs n > k >= 1, got n={n}, k={k}")
    if theiler < 0 or n - 1 - 2 * theiler < k:
        raise ContractViolation(f"Theiler window {theiler} leaves fewer than k={k} neighbours among n={n} samples")
    if jitter > 0:
        stream = rng or Rng(0)
        x = x + jitter * stream.uniform(x.size).reshape(x.shape)
        y = y + jitter * stream.uniform(y.size).reshape(y.shape)
    for name, arr in (("x", x), ("y", y)):
        flat = np.flatnonzero(np.ptp(arr, axis=0) == 0)
        if flat.size:
            raise DegenerateInputError(f"{name} column {int(flat[0])} has zero variance; use jitter > 0")

    dx = cdist(x, x, "chebyshev")
    dy = cdist(y, y, "chebyshev")
    index = np.arange(n)
    excluded = np.abs(index[:, None] - index[None, :]) <= theiler
    dx[excluded] = np.inf
    dy[excluded] = np.inf
    candidates = n - excluded.sum(axis=1)
    joint = np.maximum(dx, dy)
    eps = np.partition(joint, k - 1, axis=1)[:, k - 1]
    nx = (dx < eps[:, None]).sum(axis=1)
    ny = (dy < eps[:, None]).sum(axis=1)
    return float(digamma(k) + np.mean(digamma(candidates + 1) - (digamma(nx + 1) + digamma(ny + 1))))


def _jittered(record: PatientRecord, jitter: float, rng: Rng) -> np.ndarray:
    vitals = np.asarray(record.vitals[:, :N_VITALS], dtype=np.float64)
    if jitter <= 0:
        return vitals
    noise = rng.substream("jitter", record.patient_id).uniform(vitals.size).reshape(vitals.shape)
    return vitals + jitter * noise


def patient_mi(
    a: PatientRecord,
    b: PatientRecord,
    k: int = 3,
    jitter: float = 1e-10,
    rng: Optional[Rng] = None,
    theiler: int = THEILER_WINDOW,
) -> float:
    """
    MI between two (imputed, scaled) patients over their common prefix.

    Rows within `theiler` steps of each other are not counted as neighbours;
    the window shrinks on short pairs so every row keeps k candidates.
    Jitter is drawn per patient, so patient_mi(a, b) == patient_mi(b, a) exactly.
    """
    rng = rng or Rng(0)
    n = min(a.p, b.p)
    if n <= k:
        raise ContractViolation(f"patients {a.patient_id} and {b.patient_id} share only {n} steps (k={k})")
    if a.p != b.p:
        logger.debug(f"[MI] pair ({a.patient_id}, {b.patient_id}) truncated to {n} steps")
    window = min(theiler, (n - 1 - k) // 2)
    xa = _jittered(a, jitter, rng)[:n]
    xb = _jittered(b, jitter, rng)[:n]
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(xb))):
        raise ContractViolation(f"impute patients {a.patient_id} and {b.patient_id} before estimating MI")
    return ksg_mi(xa, xb, k, theiler=window)


@dataclass(frozen=True, eq=False)
class MiScoreTable:
    patient_ids: Tuple[str, ...]
    matrix: np.ndarray  # symmetric, zero diagonal

    @property
    def scores(self) -> Dict[str, float]:
        totals = self.matrix.sum(axis=1) - np.diag(self.matrix)
        return {pid: float(j) for pid, j in zip(self.patient_ids, totals)}

    def ranked(self) -> Tuple[str, ...]:
        """Patient ids by descending J, ties broken by id."""
        scores = self.scores
        return tuple(sorted(self.patient_ids, key=lambda pid: (-scores[pid], pid)))


def score_cohort(
    cohort: Cohort,
    k: int = 3,
    jitter: float = 1e-10,
    rng: Optional[Rng] = None,
    pair_mi: Optional[PairMi] = None,
    theiler: int = THEILER_WINDOW,
) -> MiScoreTable:
    """
    Every pairwise MI computed once. With the default estimator, results are
    memoised on content fingerprints in the process-wide MI cache.
    """
    if len(cohort) < 2:
        raise ContractViolation(f"MI scoring needs at least 2 patients, got {len(cohort)}")
    rng = rng or Rng(0)
    records = list(cohort)
    n = len(records)

    if pair_mi is None:
        fingerprints = {r.patient_id: array_fingerprint(r.vitals) for r in records}

        def pair_mi(a: PatientRecord, b: PatientRecord) -> float:
            key = (
                fingerprints[a.patient_id], a.patient_id, fingerprints[b.patient_id], b.patient_id,
                k, jitter, rng.identity, theiler,
            )
            return cached_pair(key, lambda: patient_mi(a, b, k, jitter, rng, theiler))

    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = pair_mi(records[i], records[j])
            matrix[i, j] = matrix[j, i] = value
    logger.info(f"[MI] ✓ Scored {n} patients ({n * (n - 1) // 2} pairs, k={k}, theiler={theiler})")
    return MiScoreTable(patient_ids=tuple(r.patient_id for r in records), matrix=matrix)


@dataclass(frozen=True)
class GroupAssignment:
    groups: Tuple[Tuple[str, ...], ...]  # descending J within and across groups
    generative: Tuple[str, ...]
    predictive: Tuple[str, ...]

    @property
    def labels(self) -> Dict[str, int]:
        return {pid: g + 1 for g, members in enumerate(self.groups) for pid in members}


def group_sizes(n: int, groups: int) -> list:
    """Near-equal sizes; the first n % groups groups take one extra."""
    base, extra = divmod(n, groups)
    return [base + (1 if g < extra else 0) for g in range(groups)]


def group_and_sample(
    table: MiScoreTable,
    groups: int,
    g_fraction: Union[float, Fraction],
    rng: Rng,
) -> GroupAssignment:
    """
    |G'| is the largest-remainder share of g_fraction over the cohort; it is then
    apportioned across groups in proportion to their sizes.
    """
    fraction = Fraction(g_fraction) if isinstance(g_fraction, Fraction) else Fraction(str(g_fraction))
    if not 0 < fraction < 1:
        raise ContractViolation(f"g_fraction must lie in (0, 1), got {g_fraction}")
    n = len(table.patient_ids)
    if groups < 1 or n < groups:
        raise ContractViolation(f"cannot form {groups} groups from {n} patients")

    ranked = table.ranked()
    sizes = group_sizes(n, groups)
    bounds = np.cumsum([0] + sizes)
    members = tuple(tuple(ranked[bounds[g] : bounds[g + 1]]) for g in range(groups))

    total = largest_remainder(n, [fraction, 1 - fraction])[0]
    quotas = largest_remainder(total, sizes)
    chosen = set()
    for group, quota in zip(members, quotas):
        chosen.update(rng.choice(list(group), quota))

    generative = tuple(pid for pid in ranked if pid in chosen)
    predictive = tuple(pid for pid in ranked if pid not in chosen)
    logger.info(f"[MI] ✓ {groups} groups, |G'|={len(generative)}, |P'|={len(predictive)}")
    return GroupAssignment(groups=members, generative=generative, predictive=predictive)


def export_mi_csv(table: MiScoreTable, assignment: GroupAssignment, path: Union[str, Path]) -> None:
    """Rows in descending J: patient_id,J_nats,group,in_generative_set."""
    scores = table.scores
    labels = assignment.labels
    chosen = set(assignment.generative)
    ranked = table.ranked()
    frame = pd.DataFrame(
        {
            "patient_id": list(ranked),
            "J_nats": [scores[pid] for pid in ranked],
            "group": [labels[pid] for pid in ranked],
            "in_generative_set": [int(pid in chosen) for pid in ranked],
        }
    )
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    logger.info(f"[MI] ✓ Wrote score table for {len(ranked)} patients to {path}")
