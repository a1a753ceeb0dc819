"""Content popularity, per-slot request draws, and cache-mask selection.

Two independent libraries exist: the primary network's (M files) and the CIoT
network's (N files).  Popularity follows a Zipf law with per-library skew.
Each slot draws a fixed number of *distinct* requested files per library,
weighted by popularity without replacement (Gumbel top-k sampling, equivalent
to successive renormalized draws).

The cache holds whole files up to a budget shared across both libraries.
Agents emit continuous per-file scores; `topk_select` converts scores into a
binary mask under the budget and an eligibility vector (primary files are
eligible only in cooperative mode).
"""

from dataclasses import dataclass

import numpy as np

from .config import SimConfig

_ZIPF_CACHE: dict[tuple[int, float], tuple[np.ndarray, np.ndarray]] = {}


def zipf_weights(count: int, skew: float) -> np.ndarray:
    """Popularity of ranks 1..count, w_i proportional to i^-skew, summing to 1."""
    if count < 1:
        raise ValueError(f"library needs at least one file, got count={count}")
    ranks = np.arange(1, count + 1, dtype=np.float64)
    weights = ranks ** (-float(skew))
    weights /= weights.sum()
    return weights


def _cached_zipf(count: int, skew: float) -> tuple[np.ndarray, np.ndarray]:
    key = (count, float(skew))
    hit = _ZIPF_CACHE.get(key)
    if hit is None:
        weights = zipf_weights(count, skew)
        log_weights = np.log(weights)
        weights.setflags(write=False)
        log_weights.setflags(write=False)
        hit = _ZIPF_CACHE[key] = (weights, log_weights)
    return hit


@dataclass(frozen=True, slots=True)
class RequestSet:
    """One slot's requested file indices (sorted, distinct) per library."""
    pu_files: np.ndarray
    ciot_files: np.ndarray


def _pick_top(keys: np.ndarray, count: int, take: int) -> np.ndarray:
    if take >= count:
        return np.arange(count, dtype=np.int64)
    picked = keys.argpartition(count - take)[count - take:]
    picked.sort()
    return picked.astype(np.int64, copy=False)


def _draw_distinct(rng: np.random.Generator, count: int, skew: float, take: int) -> np.ndarray:
    # Gumbel-perturbed log-weights: the top-k keys are a weighted sample
    # without replacement.
    if take == 0:
        return np.empty(0, dtype=np.int64)
    _, log_weights = _cached_zipf(count, skew)
    keys = log_weights + rng.gumbel(size=count)
    return _pick_top(keys, count, take)


_JOINT_LOGW_CACHE: dict[tuple[int, float, int, float], np.ndarray] = {}


def sample_requests(rng: np.random.Generator, cfg: SimConfig) -> RequestSet:
    """Draw one slot's requests: lambda_p primary files, lambda_s CIoT files."""
    if cfg.lambda_p == 0 or cfg.lambda_s == 0:
        pu = _draw_distinct(rng, cfg.M, cfg.zeta_p, cfg.lambda_p)
        ciot = _draw_distinct(rng, cfg.N, cfg.zeta_s, cfg.lambda_s)
        return RequestSet(pu_files=pu, ciot_files=ciot)
    # joint gumbel draw; splits into the same per-library streams
    key = (cfg.M, float(cfg.zeta_p), cfg.N, float(cfg.zeta_s))
    logw = _JOINT_LOGW_CACHE.get(key)
    if logw is None:
        logw = np.concatenate([_cached_zipf(cfg.M, cfg.zeta_p)[1],
                               _cached_zipf(cfg.N, cfg.zeta_s)[1]])
        logw.setflags(write=False)
        _JOINT_LOGW_CACHE[key] = logw
    keys = logw + rng.gumbel(size=cfg.M + cfg.N)
    return RequestSet(pu_files=_pick_top(keys[:cfg.M], cfg.M, cfg.lambda_p),
                      ciot_files=_pick_top(keys[cfg.M:], cfg.N, cfg.lambda_s))


@dataclass(frozen=True, slots=True)
class HitStats:
    """Cache hits against one slot's requests, as counts and fractions."""
    pu_hits: int
    pu_frac: float
    ciot_hits: int
    ciot_frac: float


def hit_stats(pu_mask: np.ndarray, ciot_mask: np.ndarray, req: RequestSet) -> HitStats:
    pu_hits = int(np.count_nonzero(pu_mask[req.pu_files])) if req.pu_files.size else 0
    ciot_hits = (int(np.count_nonzero(ciot_mask[req.ciot_files]))
                 if req.ciot_files.size else 0)
    pu_frac = pu_hits / req.pu_files.size if req.pu_files.size else 0.0
    ciot_frac = ciot_hits / req.ciot_files.size if req.ciot_files.size else 0.0
    return HitStats(pu_hits=pu_hits, pu_frac=pu_frac, ciot_hits=ciot_hits, ciot_frac=ciot_frac)


def topk_select(scores: np.ndarray, budget: int, eligibility: np.ndarray) -> np.ndarray:
    """Binary mask with min(budget, #eligible) ones: highest eligible scores win.

    Ties break toward the lowest index (stable sort on descending score).
    Ineligible entries are never selected regardless of score.
    """
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    scores = np.asarray(scores, dtype=np.float64)
    elig = np.asarray(eligibility, dtype=bool)
    if scores.shape != elig.shape:
        raise ValueError("scores and eligibility must have the same shape")
    take = min(int(budget), int(np.count_nonzero(elig)))
    mask = np.zeros(scores.shape[0], dtype=np.uint8)
    if take == 0:
        return mask
    keyed = np.where(elig, -scores, np.inf)
    order = np.argsort(keyed, kind="stable")
    mask[order[:take]] = 1
    return mask


def cache_mask_ok(pu_mask: np.ndarray, ciot_mask: np.ndarray, coop: int, budget: int) -> bool:
    """Gated capacity rule: primary entries only in cooperative mode."""
    pu_count = int(np.count_nonzero(pu_mask))
    ciot_count = int(np.count_nonzero(ciot_mask))
    if coop == 0 and pu_count > 0:
        return False
    return coop * pu_count + ciot_count <= budget
