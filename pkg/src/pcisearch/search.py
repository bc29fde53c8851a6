"""Exhaustive best-subset search over predictor combinations with a parsimony rule."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .causal import PciProfile, check_grid, profiles_for_batch, rho_grid
from .errors import CapacityError
from .moments import MomentEstimates

MAX_EXHAUSTIVE_P = 24
CHUNK_SIZE = 256
CRITERIA = ("mean", "min")


def masks_of_size(p: int, k: int) -> np.ndarray:
    """All ``k``-subsets of ``p`` predictors as an ``(N, k)`` index array, ascending by bitmask."""
    idx = np.array(list(combinations(range(p), k)), dtype=np.intp).reshape(-1, k)
    masks = (np.int64(1) << idx.astype(np.int64)).sum(axis=1)
    return idx[np.argsort(masks, kind="stable")]


def count_subsets(p: int, cap: int | None = None) -> int:
    top = p if cap is None else min(cap, p)
    return sum(comb(p, k) for k in range(1, top + 1))


@dataclass(eq=False)
class SearchResult:
    profiles: list[PciProfile]
    champions: dict[int, PciProfile]
    selected: PciProfile | None
    threshold: float
    subset_count: int
    criterion: str = "mean"
    rho_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_cardinality: int | None = None

    @property
    def infeasible_count(self) -> int:
        return sum(not pr.feasible for pr in self.profiles)

    def table(self) -> list[dict]:
        return [pr.summary() for pr in self.profiles]

    def table_json(self) -> str:
        return json.dumps(self.table(), indent=1)

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mask", "size", "predictors", "feasible", "pci_min", "pci_mean",
                    "pci_max", "accuracy", "rho_low", "rho_high"])
        for pr in self.profiles:
            lo_hi = pr.rho_interval or ("", "")
            nums = [repr(v) for v in (pr.pci_min, pr.pci_mean, pr.pci_max)] if pr.feasible else ["", "", ""]
            w.writerow([pr.mask, pr.size, ";".join(pr.names), int(pr.feasible), *nums,
                        pr.accuracy.value if pr.accuracy else "",
                        *(repr(v) if v != "" else "" for v in lo_hi)])
        return buf.getvalue()


def _score(criterion: str, prof: PciProfile) -> float:
    return prof.pci_mean if criterion == "mean" else prof.pci_min


def find_champions(profiles, criterion: str = "mean") -> dict[int, PciProfile]:
    """Best feasible profile per cardinality; ties go to the lower bitmask."""
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    best: dict[int, PciProfile] = {}
    for prof in sorted(profiles, key=lambda pr: pr.mask):
        if not prof.feasible:
            continue
        cur = best.get(prof.size)
        if cur is None or _score(criterion, prof) > _score(criterion, cur):
            best[prof.size] = prof
    return dict(sorted(best.items()))


def select_parsimonious(sr: SearchResult | dict, threshold: float = 0.7) -> PciProfile | None:
    """Champion of the smallest cardinality whose minimum PCI exceeds ``threshold``."""
    champions = sr.champions if isinstance(sr, SearchResult) else sr
    for k in sorted(champions):
        if champions[k].pci_min > threshold:
            return champions[k]
    return None


def enumerate_and_score(
    m: MomentEstimates,
    grid=None,
    cap: int | None = None,
    threshold: float = 0.7,
    criterion: str = "mean",
    workers: int | None = 1,
) -> SearchResult:
    """Score every non-empty predictor subset of size at most ``cap``.

    Subsets are scored in fixed-size chunks that do not depend on ``workers``,
    so the result is bit-identical for any thread count.  Profiles come back in
    ascending bitmask order.
    """
    p = m.p
    grid = rho_grid() if grid is None else check_grid(grid)
    if cap is None and p > MAX_EXHAUSTIVE_P:
        raise CapacityError(
            f"p={p} gives {2 ** p - 1} subsets; pass a maximum cardinality (cap) "
            f"for more than {MAX_EXHAUSTIVE_P} predictors")
    if cap is not None and cap < 1:
        raise ValueError("cap must be at least 1")
    top = p if cap is None else min(cap, p)

    tasks = []
    for k in range(1, top + 1):
        idx = masks_of_size(p, k)
        for start in range(0, len(idx), CHUNK_SIZE):
            tasks.append(idx[start:start + CHUNK_SIZE])

    def run(chunk):
        return profiles_for_batch(m, chunk, grid)

    if workers is None or workers <= 1:
        chunks = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, tasks))

    profiles = sorted((pr for ch in chunks for pr in ch), key=lambda pr: pr.mask)
    champions = find_champions(profiles, criterion)
    return SearchResult(
        profiles=profiles,
        champions=champions,
        selected=select_parsimonious(champions, threshold),
        threshold=threshold,
        subset_count=len(profiles),
        criterion=criterion,
        rho_values=grid,
        max_cardinality=cap,
    )
