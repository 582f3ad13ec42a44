"""Exact integer optima and integrality-ratio reports.

The optimum of the tour (or source-sink dipath) problem on a metric
completion is computed by subset dynamic programming over bitmasks, with
costs scaled to integers first so the inner loop stays on machine/big ints.
A brute-force permutation sweep cross-checks the DP on small inputs.

``ratio_report`` glues the whole pipeline together for the named instance
families: build the instance, materialize its closed-form certificate,
extend it by zeros to the metric completion, certify it there, and compare
the certified objective against the exact integer optimum.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Optional

from .graphs import Digraph, metric_completion
from .instances import (
    BadParams,
    ladder,
    ladder_split_return_path,
    cgk_loop,
    split,
)
from .certificates import (
    balanced_certificate,
    dfj_certificate,
    objective_value,
    restrict_to_path,
)
from .lift import MomentVector, SaVerdict, check_direct, check_recursive
from .relaxations import build_balanced, build_dfj, build_path, extend_by_zeros


class OracleError(Exception):
    pass


class TooLarge(OracleError):
    pass


@dataclass(frozen=True)
class TourResult:
    cost: Fraction
    order: tuple[int, ...]


def _int_cost_matrix(g: Digraph) -> tuple[list[list[int]], int]:
    if not g.is_complete():
        raise OracleError("oracle expects a complete digraph")
    denom = 1
    for e in g.edges:
        denom = denom * e.cost.denominator // math.gcd(denom, e.cost.denominator)
    n = g.n
    mat = [[0] * n for _ in range(n)]
    for e in g.edges:
        mat[e.tail][e.head] = int(e.cost * denom)
    return mat, denom


def held_karp_cycle(g: Digraph, max_n: int = 18) -> TourResult:
    """Exact minimum Hamiltonian dicycle by subset DP, anchored at vertex 0."""
    n = g.n
    if n > max_n:
        raise TooLarge(f"n = {n} exceeds the oracle bound {max_n}")
    if n == 1:
        return TourResult(Fraction(0), (0,))
    mat, denom = _int_cost_matrix(g)
    full = 1 << (n - 1)  # masks over vertices 1..n-1
    INF = float("inf")
    dp = [[INF] * (n - 1) for _ in range(full)]
    parent: list[list[int]] = [[-1] * (n - 1) for _ in range(full)]
    for v in range(n - 1):
        dp[1 << v][v] = mat[0][v + 1]
    for mask in range(full):
        row = dp[mask]
        for last in range(n - 1):
            cur = row[last]
            if cur is INF or not (mask >> last) & 1:
                continue
            base = mat[last + 1]
            for nxt in range(n - 1):
                if (mask >> nxt) & 1:
                    continue
                nmask = mask | (1 << nxt)
                cand = cur + base[nxt + 1]
                if cand < dp[nmask][nxt]:
                    dp[nmask][nxt] = cand
                    parent[nmask][nxt] = last
    best = INF
    best_last = -1
    closing = full - 1
    for last in range(n - 1):
        if dp[closing][last] is INF:
            continue
        cand = dp[closing][last] + mat[last + 1][0]
        if cand < best:
            best = cand
            best_last = last
    order = [0]
    mask, last = closing, best_last
    chain = []
    while last != -1:
        chain.append(last + 1)
        mask, last = mask ^ (1 << last), parent[mask][last]
    order.extend(reversed(chain))
    return TourResult(Fraction(int(best), denom), tuple(order))


def held_karp_path(g: Digraph, p: int, q: int, max_n: int = 18) -> TourResult:
    """Exact minimum Hamiltonian dipath from p to q by subset DP."""
    n = g.n
    if n > max_n:
        raise TooLarge(f"n = {n} exceeds the oracle bound {max_n}")
    if p == q:
        raise OracleError("endpoints must differ")
    mat, denom = _int_cost_matrix(g)
    others = [v for v in range(n) if v != p]
    pos = {v: i for i, v in enumerate(others)}
    k = len(others)
    full = 1 << k
    INF = float("inf")
    dp = [[INF] * k for _ in range(full)]
    parent: list[list[int]] = [[-1] * k for _ in range(full)]
    for v in others:
        dp[1 << pos[v]][pos[v]] = mat[p][v]
    for mask in range(full):
        row = dp[mask]
        for last in range(k):
            cur = row[last]
            if cur is INF or not (mask >> last) & 1:
                continue
            base = mat[others[last]]
            for nxt in range(k):
                if (mask >> nxt) & 1:
                    continue
                nmask = mask | (1 << nxt)
                cand = cur + base[others[nxt]]
                if cand < dp[nmask][nxt]:
                    dp[nmask][nxt] = cand
                    parent[nmask][nxt] = last
    closing = full - 1
    best = dp[closing][pos[q]]
    if best is INF:
        raise OracleError("no spanning dipath")
    order = []
    mask, last = closing, pos[q]
    while last != -1:
        order.append(others[last])
        mask, last = mask ^ (1 << last), parent[mask][last]
    order.append(p)
    return TourResult(Fraction(int(best), denom), tuple(reversed(order)))


def brute_force_cycle(g: Digraph, max_n: int = 9) -> TourResult:
    """Permutation sweep; the independent cross-check for the cycle DP."""
    n = g.n
    if n > max_n:
        raise TooLarge(f"n = {n} exceeds the brute-force bound {max_n}")
    if n == 1:
        return TourResult(Fraction(0), (0,))
    mat = {(e.tail, e.head): e.cost for e in g.edges}
    best: Optional[Fraction] = None
    best_order: tuple[int, ...] = ()
    for perm in permutations(range(1, n)):
        order = (0,) + perm
        cost = sum((mat[a, b] for a, b in zip(order, order[1:] + order[:1])),
                   Fraction(0))
        if best is None or cost < best:
            best, best_order = cost, order
    return TourResult(best, best_order)


def brute_force_path(g: Digraph, p: int, q: int, max_n: int = 9) -> TourResult:
    n = g.n
    if n > max_n:
        raise TooLarge(f"n = {n} exceeds the brute-force bound {max_n}")
    mat = {(e.tail, e.head): e.cost for e in g.edges}
    middle = [v for v in range(n) if v not in (p, q)]
    best: Optional[Fraction] = None
    best_order: tuple[int, ...] = ()
    for perm in permutations(middle):
        order = (p,) + perm + (q,)
        cost = sum((mat[a, b] for a, b in zip(order, order[1:])), Fraction(0))
        if best is None or cost < best:
            best, best_order = cost, order
    return TourResult(best, best_order)


# ---------------------------------------------------------------------------
# ratio reports
# ---------------------------------------------------------------------------

@dataclass
class RatioReport:
    instance: str
    relaxation: str
    level: int
    opt: Fraction
    opt_source: str
    frac: Fraction
    ratio: Fraction
    bound: Fraction
    verdict: Optional[SaVerdict]
    wall_time_ms: int

    def to_json(self, *, include_timing: bool = False) -> str:
        def fr(x: Fraction) -> str:
            return f"{x.numerator}/{x.denominator}"

        payload = {
            "instance": self.instance,
            "relaxation": self.relaxation,
            "level": self.level,
            "opt": fr(self.opt),
            "opt_source": self.opt_source,
            "frac": fr(self.frac),
            "ratio": fr(self.ratio),
            "ratio_approx": f"{float(self.ratio):.6f}",
            "bound": fr(self.bound),
            "verdict": None if self.verdict is None else json.loads(self.verdict.to_json()),
        }
        if include_timing:
            payload["wall_time_ms"] = self.wall_time_ms
        return json.dumps(payload, indent=2, sort_keys=True)


def ladder_ratio_bound(ell: int, t: int) -> Fraction:
    return Fraction(4 * ell + 2) / (2 * ell + 4 + 2 * ell * Fraction(t + 1, t + 2))


def path_ratio_bound(ell: int, t: int) -> Fraction:
    return Fraction(3 * ell) / (2 * ell * Fraction(t + 1, t + 2) + ell + 2)


def cgk_ratio_bound(k: int, r: int, t: int) -> Fraction:
    lower = (2 * k - 1) * (r - 1) * r ** (k - 1)
    total_bound = 2 * k * (r + 1) * r ** (k - 1)
    return Fraction(lower) / (Fraction(t + 1, t + 2) * total_bound)


def _certify(y: MomentVector, cs, t: int, checker: str, threads: int) -> SaVerdict:
    if checker == "direct":
        return check_direct(y, cs, t, threads=threads)
    if checker == "recursive":
        return check_recursive(y, cs, t)
    if checker == "both":
        direct = check_direct(y, cs, t, threads=threads)
        rec = check_recursive(y, cs, t)
        if direct.feasible != rec.feasible:
            raise OracleError("checkers disagree on feasibility")
        merged = SaVerdict(direct.feasible, direct.violations + rec.violations,
                           "direct+recursive",
                           {**direct.checked, **rec.checked})
        return merged
    raise OracleError(f"unknown checker {checker!r}")


def ratio_report(instance: str, relaxation: str, t: int, *,
                 promoted=(), checker: str = "direct", cut_mode: str = "separated",
                 hk_max: int = 18, verify: bool = True,
                 threads: int = 1) -> RatioReport:
    """Integer optimum vs certified fractional objective for one named
    instance, as an exact ratio plus the family's closed-form bound."""
    started = time.monotonic()
    family, _, arg = instance.partition(":")
    params = [int(x) for x in arg.split(",")] if arg else []

    if family == "ladder" and relaxation == "balanced":
        (ell,) = params
        g, d = ladder(ell)
        y = balanced_certificate(g, d, t, promoted)
        host = metric_completion(g)
        host_cs = build_balanced(host, cut_mode)
        extended = extend_by_zeros(y, g, host_cs)
        frac = objective_value(extended, host.costs())
        if host.n <= hk_max:
            opt, opt_source = held_karp_cycle(host, hk_max).cost, "held-karp"
        else:
            opt, opt_source = Fraction(4 * ell + 2), "proven-lower-bound"
        bound = ladder_ratio_bound(ell, t)
        verdict = _certify(extended, host_cs, t, checker, threads) if verify else None
    elif family == "ladder-split" and relaxation == "dfj":
        (ell,) = params
        g, d = ladder(ell)
        s = split(g, d)
        z = dfj_certificate(s, t, promoted)
        host = metric_completion(s.graph)
        host_cs = build_dfj(host, cut_mode)
        extended = extend_by_zeros(z, s.graph, host_cs)
        frac = objective_value(extended, host.costs())
        if host.n <= hk_max:
            opt, opt_source = held_karp_cycle(host, hk_max).cost, "held-karp"
        elif g.n <= hk_max:
            # dashed edges cost nothing: contracting them maps optimal
            # closed walks of the split graph to the original at equal cost
            opt = held_karp_cycle(metric_completion(g), hk_max).cost
            opt_source = "held-karp-on-contraction"
        else:
            opt, opt_source = Fraction(4 * ell + 2), "proven-lower-bound"
        bound = ladder_ratio_bound(ell, t)
        verdict = _certify(extended, host_cs, t, checker, threads) if verify else None
    elif family == "ladder-split" and relaxation == "path":
        (ell,) = params
        g, d = ladder(ell)
        s = split(g, d)
        z = dfj_certificate(s, t, promoted)
        path_edges, _, _ = ladder_split_return_path(s)
        restricted, sub, p, q = restrict_to_path(z, s, path_edges)
        host = metric_completion(sub)
        host_cs = build_path(host, p, q, cut_mode)
        extended = extend_by_zeros(restricted, sub, host_cs)
        frac = objective_value(extended, host.costs())
        if host.n <= hk_max:
            opt, opt_source = held_karp_path(host, p, q, hk_max).cost, "held-karp"
        else:
            opt, opt_source = Fraction(3 * ell), "proven-lower-bound"
        bound = path_ratio_bound(ell, t)
        verdict = _certify(extended, host_cs, t, checker, threads) if verify else None
    elif family == "cgk-L" and relaxation == "balanced":
        k, r = params
        g, d = cgk_loop(k, r)
        y = balanced_certificate(g, d, t, promoted)
        host = metric_completion(g)
        host_cs = build_balanced(host, cut_mode)
        extended = extend_by_zeros(y, g, host_cs)
        frac = objective_value(extended, host.costs())
        if host.n <= hk_max:
            opt, opt_source = held_karp_cycle(host, hk_max).cost, "held-karp"
        else:
            lower = (2 * k - 1) * (r - 1) * r ** (k - 1)
            opt, opt_source = Fraction(lower), "proven-lower-bound"
        bound = cgk_ratio_bound(k, r, t)
        verdict = _certify(extended, host_cs, t, checker, threads) if verify else None
    else:
        raise BadParams(
            f"no certificate pipeline for {instance!r} with relaxation {relaxation!r}")

    elapsed = int((time.monotonic() - started) * 1000)
    return RatioReport(instance=instance, relaxation=relaxation, level=t,
                       opt=opt, opt_source=opt_source, frac=frac,
                       ratio=opt / frac, bound=bound, verdict=verdict,
                       wall_time_ms=elapsed)
