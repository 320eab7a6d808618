"""Experiment configuration, seeded random streams, deterministic reports and the golden regression suite."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import stats

from . import altproj, curie_weiss as cw, decomposition as dc, design, kl, spectral as sp, tuning
from .core import (
    Distribution,
    Kernel,
    OrbitKernelKind,
    OrbitPartition,
    build_orbit_kernel,
    gibbs_sandwich_closed_form,
    gibbs_kernel,
    lazify,
    sandwich,
    stationary_projector,
    validate_kernel,
)
from .errors import ConfigParse, OrbitMCError
from .io import format_float, kernel_from_dict, partition_from_obj

SCHEMA_VERSION = 1
RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(seed, spawn_key=(stream,))"
KINDS = ("kernel", "spectra", "kl", "design", "altproj", "curie-weiss", "tune", "golden")


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for each (seed, stream) pair."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


# ---------------------------------------------------------------- built-in models

def _two_orbit_three_state():
    pi = Distribution(np.array([0.3, 0.3, 0.4]))
    P = validate_kernel([[0, 0.4, 0.6], [0.4, 0, 0.6], [0.45, 0.45, 0.1]], pi)
    return P, OrbitPartition.from_orbits([[0, 1], [2]])


def _kl_four_state():
    pi = Distribution(np.array([0.1, 0.2, 0.3, 0.4]))
    P = validate_kernel(
        [
            [0, 1 / 3, 1 / 3, 1 / 3],
            [1 / 6, 1 / 6, 1 / 3, 1 / 3],
            [1 / 9, 2 / 9, 1 / 3, 1 / 3],
            [1 / 12, 1 / 6, 1 / 4, 1 / 2],
        ],
        pi,
    )
    return P, OrbitPartition.from_orbits([[0, 1], [2, 3]])


EXACT_FREE_ROWS = [[0.0, 0.35, 0.50], [0.6, 0.25, 0.0]]


def _exact_five_state():
    pi = Distribution(np.array([0.05, 0.1, 0.2, 0.25, 0.4]))
    part = design.optimal_partition_for_k(pi, 3)
    return design.construct_exact_sampler(part, pi, EXACT_FREE_ROWS), part


def lazy_walk(n: int) -> Kernel:
    """Lazy nearest-neighbour walk on a path with sticky ends.

    Its stationary law puts half weight on the two end states, so it is
    reversible for that law rather than for the uniform one.
    """
    a = np.zeros((n, n))
    for x in range(n):
        a[x, x] = 0.5
        if x > 0:
            a[x, x - 1] = 0.25
        if x < n - 1:
            a[x, x + 1] = 0.25
    a[0, 1] = a[n - 1, n - 2] = 0.5
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return validate_kernel(a, Distribution.from_weights(w))


EXAMPLES: dict[str, Callable[[], tuple[Kernel, OrbitPartition]]] = {
    "three-state": _two_orbit_three_state,
    "four-state": _kl_four_state,
    "five-state-exact": _exact_five_state,
}


def load_model(params: dict) -> tuple[Kernel, OrbitPartition]:
    """Model from ``params['example']`` or a JSON file at ``params['model']``.

    The file holds ``{"pi": [...], "matrix": [[...]], "partition": [[1, 2], [3]]}``
    with 1-based partition indices.
    """
    if params.get("model"):
        path = Path(params["model"])
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
            P = kernel_from_dict(obj)
            part = partition_from_obj(obj.get("partition", [[x + 1] for x in range(P.n)]), P.n)
        except FileNotFoundError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigParse(f"cannot read model file {path}: {exc}") from exc
        return P, part
    name = params.get("example") or "three-state"
    if name not in EXAMPLES:
        raise ConfigParse(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    return EXAMPLES[name]()


# ---------------------------------------------------------------- reports

@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    tol: float | None = None
    out: str | None = None
    fmt: str = "json"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigParse(f"unknown experiment kind {self.kind!r}")
        if self.fmt not in ("json", "csv"):
            raise ConfigParse("format must be 'json' or 'csv'")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigParse("seed must be an unsigned 64-bit integer")
        if self.tol is not None and not self.tol > 0:
            raise ConfigParse("tolerance must be positive")


class Report:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.results: dict[str, Any] = {}
        self.checks: list[dict[str, Any]] = []

    def tol(self, default: float) -> float:
        return default if self.config.tol is None else self.config.tol

    def put(self, key: str, value) -> None:
        self.results[key] = _plain(value)

    def check(self, name: str, passed: bool, value=None, bound=None) -> bool:
        entry = {"name": name, "passed": bool(passed)}
        if value is not None:
            entry["value"] = _plain(value)
        if bound is not None:
            entry["bound"] = _plain(bound)
        self.checks.append(entry)
        return bool(passed)

    def close(self, name: str, value, target, default_tol: float) -> bool:
        err = float(np.max(np.abs(np.asarray(value, dtype=float) - np.asarray(target, dtype=float))))
        return self.check(name, err <= self.tol(default_tol), value=err, bound=self.tol(default_tol))

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def as_dict(self) -> dict:
        cfg = self.config
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": cfg.kind,
            "config": {"params": _plain(cfg.params), "seed": int(cfg.seed), "tol": cfg.tol, "format": cfg.fmt},
            "seed": int(cfg.seed),
            "rng": RNG_ALGORITHM,
            "results": self.results,
            "checks": self.checks,
            "passed": self.passed,
        }

    def render(self) -> str:
        if self.config.fmt == "json":
            return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"
        return to_csv(self.as_dict())


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    return v


def _flatten(prefix: str, v, rows: list[tuple[str, str]]) -> None:
    if isinstance(v, dict):
        for k in sorted(v):
            _flatten(f"{prefix}.{k}" if prefix else str(k), v[k], rows)
    elif isinstance(v, list):
        for i, x in enumerate(v):
            _flatten(f"{prefix}[{i}]", x, rows)
    elif isinstance(v, float):
        rows.append((prefix, format_float(v)))
    elif isinstance(v, str):
        rows.append((prefix, v))
    else:
        rows.append((prefix, json.dumps(v)))


def to_csv(report: dict) -> str:
    """Long-format ``key,value`` rows; '.' decimals and '\\n' line endings."""
    rows: list[tuple[str, str]] = []
    _flatten("", report, rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- experiments

def _orbit_kernels(P: Kernel, part: OrbitPartition) -> dict[str, Kernel]:
    return {k.value: build_orbit_kernel(k, part, P.reference) for k in OrbitKernelKind}


def run_kernel(rep: Report) -> None:
    P, part = load_model(rep.config.params)
    kinds = _orbit_kernels(P, part)
    rep.put("n", P.n)
    rep.put("orbits", [[x + 1 for x in o] for o in part.orbits])
    rep.put("P", P.matrix)
    for name, K in kinds.items():
        rep.put(f"{name}_kernel", K.matrix)
        rep.check(f"{name}_stationary", K.stationary)
        rep.check(f"{name}_reversible", K.reversible)
        S = sandwich(K, P, K)
        rep.put(f"{name}_sandwich", S.matrix)
        rep.check(f"{name}_sandwich_stationary", S.stationary is True or P.stationary is False)
    G = kinds["gibbs"]
    rep.close("gibbs_sandwich_closed_form", G.matrix @ P.matrix @ G.matrix,
              gibbs_sandwich_closed_form(P, part), 1e-12)


def run_spectra(rep: Report) -> None:
    P, part = load_model(rep.config.params)
    kinds = _orbit_kernels(P, part)
    G = kinds["gibbs"]
    GPG = sandwich(G, P, G)
    specs = {"P": sp.spectrum_reversible(P)}
    for name in ("gibbs", "mh", "barker"):
        K = kinds[name]
        specs[name] = sp.spectrum_reversible(sandwich(K, P, K))
    for name, s in specs.items():
        rep.put(f"spectrum.{name}", {"eigenvalues": s.eigenvalues, "slem": s.slem,
                                     "right_gap": s.right_gap, "abs_gap": s.abs_gap})
    rep.check("slem_gibbs_le_P", specs["gibbs"].slem <= specs["P"].slem + 1e-10)
    rep.check("slem_mh_le_P", specs["mh"].slem <= specs["P"].slem + 1e-10)
    rep.check("slem_barker_le_P", specs["barker"].slem <= specs["P"].slem + 1e-10)
    proj_P = dc.projection_chain(P, part)
    proj_GPG = dc.projection_chain(GPG, part)
    rep.put("projection_chain", proj_P.matrix)
    rep.close("projection_chain_preserved", proj_GPG.matrix, proj_P.matrix, 1e-12)
    for i, orbit in enumerate(part.orbits):
        rc = dc.restriction_chain(P, part, i)
        rg = dc.restriction_chain(GPG, part, i)
        rep.put(f"restriction.{i + 1}", {
            "lambda2_P": sp.lambda2(rc.matrix, rc.pi_i.probs),
            "lambda2_GPG": sp.lambda2(rg.matrix, rg.pi_i.probs),
            "closed_form_GPG": dc.gpg_restriction_spectrum(P, part, i)[1] if len(orbit) > 1 else 0.0,
        })
    rep.put("gamma", {"P": dc.gamma(P, part), "GPG": dc.gamma(GPG, part)})
    rep.check("gamma_not_increased", dc.gamma(GPG, part) <= dc.gamma(P, part) + 1e-12)
    bound = dc.jerrum_gap_bound(P, part)
    rep.put("decomposition_gap_lower_bound", bound)
    rep.check("decomposition_bound_below_gap", bound <= specs["P"].right_gap + 1e-10,
              value=bound, bound=specs["P"].right_gap)
    if any(len(o) > 1 for o in part.orbits):
        theta = sp.theta_mh(part, P.reference)
        rep.put("theta", {"theta": theta.theta, "orbit": theta.achieving_orbit + 1, "branch": theta.achieving_branch})
        rep.close("theta_matches_eigensolver", theta.theta, sp.theta_by_eigensolver(part, P.reference), 1e-10)
    for name, s in specs.items():
        if s.lambda2 < 1 - 1e-12:
            rep.put(f"worst_case_variance.{name}", (1 + s.lambda2) / (1 - s.lambda2))


def run_kl(rep: Report) -> None:
    P, part = load_model(rep.config.params)
    Q = kl.information_projection(P, part)
    M = build_orbit_kernel("mh", part, P.reference)

    def pair(P0: Kernel) -> dict:
        MPM = sandwich(M, P0, M)
        return {
            "D_P_Q": kl.kl_divergence(P0, Q),
            "D_P_GPG": kl.kl_divergence(P0, kl.information_projection(P0, part)),
            "D_P_MPM_plus_D_MPM_Q": kl.kl_divergence(P0, MPM) + kl.kl_divergence(MPM, Q),
        }

    rep.put("original", pair(P))
    rep.put("lazified", pair(lazify(P)))
    member = kl.invariant_set_membership(P, part)
    rep.put("P_in_invariant_set", bool(member))
    rep.put("P_membership_residual", member.residual)
    for name, target in (("GPG", Q), ("Pi", stationary_projector(P.reference))):
        r = kl.pythagorean_residual(P, target, part)
        rep.close(f"pythagorean_{name}", r, 0.0, 1e-10)
    for side in ("left", "right"):
        for kind in ("mh", "barker"):
            gap = kl.dpi_gap(P, Q, side, kind, part)
            rep.put(f"dpi_gap.{side}.{kind}", gap)
            rep.check(f"dpi_gap_{side}_{kind}_nonnegative", gap >= -1e-10, value=gap)


def run_design(rep: Report) -> None:
    params = rep.config.params
    if params.get("pi"):
        pi = Distribution(np.asarray(params["pi"], dtype=float))
        k = int(params.get("k") or 2)
        part = design.optimal_partition_for_k(pi, k)
        free = params.get("free")
    else:
        P, part = _exact_five_state()
        pi, k, free = P.reference, part.k, EXACT_FREE_ROWS
    rep.put("pi", pi.probs)
    rep.put("k", k)
    rep.put("optimal_partition", [[x + 1 for x in o] for o in part.orbits])
    G = gibbs_kernel(part, pi)
    mass = part.masses(pi)
    rep.put("D_G_Pi", kl.kl_divergence(G, stationary_projector(pi)))
    rep.close("D_G_Pi_equals_block_entropy", kl.kl_divergence(G, stationary_projector(pi)), design.entropy(mass), 1e-10)
    sorted_mass = np.sort(mass)
    if sorted_mass[-1] > 0.5:
        star = design.star_orbit_sampler(Distribution(sorted_mass / sorted_mass.sum()))
        s = sp.summary_from_matrix(star.matrix, star.pibar.probs)
        rep.put("star_sampler", {"matrix": star.matrix, "eigenvalues": s.eigenvalues, "slem": s.slem, "abs_gap": s.abs_gap})
        rep.close("star_nontrivial_eigenvalue", s.eigenvalues[-1], 1 - 1 / sorted_mass[-1], 1e-10)
    if free is not None:
        E = design.construct_exact_sampler(part, pi, free)
        verdict = design.exact_sampler_check(E, part)
        GEG = sandwich(G, E, G)
        rep.put("exact_sampler", E.matrix)
        rep.put("exact_sampler_residuals", list(verdict.residuals))
        rep.check("exact_sampler_conditions", verdict.holds)
        rep.close("exact_sampler_gpg_is_pi", GEG.matrix, stationary_projector(pi).matrix, 1e-12)
        rep.put("exact_sampler_distance_from_pi", float(np.max(np.abs(E.matrix - pi.probs[None, :]))))


def run_altproj(rep: Report) -> None:
    params = rep.config.params
    n, m, k = int(params.get("n") or 4), int(params.get("m") or 2), int(params.get("k") or 2)
    pi = Distribution.uniform(n)
    p1, p2 = altproj.uniform_grid_partitions(n, m, k)
    G1, G2 = gibbs_kernel(p1, pi).matrix, gibbs_kernel(p2, pi).matrix
    classes, Ginf = altproj.limiting_projection([p1, p2], pi)
    c = altproj.cosine(p1, p2, pi)
    rep.put("grid", {"n": n, "m": m, "k": k, "cosine": c, "bound": m * m / n,
                     "join_classes": classes.classes.k})
    rep.close("cosine_equals_operator_norm", c, altproj.cosine_by_operator_norm(p1, p2, pi), 1e-9)
    rep.check("cosine_le_m2_over_n", c <= m * m / n + 1e-12, value=c, bound=m * m / n)
    if altproj.grid_is_exact(m, k):
        rep.close("grid_product_is_pi", G1 @ G2, np.full((n, n), 1 / n), 1e-12)
    rates = []
    for t in range(1, 5):
        norm = altproj.operator_norm(np.linalg.matrix_power(G1 @ G2, t) - Ginf.matrix, pi.probs)
        rates.append({"t": t, "norm": norm, "c_pow": c ** (2 * t - 1)})
        rep.close(f"two_partition_rate_t{t}", norm, c ** (2 * t - 1), 1e-9)
    rep.put("convergence", rates)
    d = int(params.get("schedule_d") or 4)
    sched = altproj.recursive_exact_schedule(d)
    N = 1 << d
    prod = altproj.product_of_gibbs(sched, Distribution.uniform(N))
    rep.put("schedule", {"d": d, "n": N, "factors": len(sched)})
    rep.close("schedule_product_is_pi", prod, np.full((N, N), 1 / N), 1e-10)
    tn = int(params.get("transpositions") or 10)
    _, Gt = altproj.limiting_projection(altproj.transposition_partitions(tn), Distribution.uniform(tn))
    rep.close("transpositions_limit_is_pi", Gt.matrix, np.full((tn, tn), 1 / tn), 1e-12)
    vm, vk, vb = int(params.get("v_m") or 2), int(params.get("v_k") or 2), float(params.get("v_beta") or 0.8)
    vpi, _, rows, cols = altproj.v_shaped_model(vm, vk, vb)
    T = altproj.overlap_matrix(rows, cols, vpi).t
    rep.put("v_shaped", {"m": vm, "k": vk, "beta": vb, "overlap": T})
    rep.close("v_shaped_overlap_entries", T, np.full(T.shape, 1 / vm), 1e-12)
    VP = altproj.product_of_gibbs([rows, cols], vpi)
    rep.close("v_shaped_product_is_pi", VP, stationary_projector(vpi).matrix, 1e-12)


def star_chi_square(d: int, beta: float, kcut: int, start: int, samples: int, rng) -> tuple[float, int]:
    """Chi-square p-value of streamed star moves from ``start`` against the dense kernel row."""
    model = cw.CwModel(d, beta)
    x = cw.state_to_spins(start, d)
    counts = np.zeros(1 << d, dtype=np.int64)
    weights = 1 << np.arange(d)
    for _ in range(samples):
        y = cw.cw_star_step(x, model, kcut, rng)
        counts[int(weights[y > 0].sum())] += 1
    row = cw.cw_star_kernel(d, beta, kcut).matrix[start]
    support = row > 1e-15
    outside = int(counts[~support].sum())
    expected = row[support] * samples
    expected *= counts[support].sum() / expected.sum()
    return float(stats.chisquare(counts[support], expected).pvalue), outside


def run_curie_weiss(rep: Report) -> None:
    params = rep.config.params
    d = int(params.get("d") or 8)
    beta = float(params.get("beta") if params.get("beta") is not None else 2.25)
    eps = float(params.get("eps") or 0.25)
    kc = params.get("kcut") or "auto"
    kcut = cw.choose_kcut(d, beta) if kc == "auto" else int(kc)
    delta = cw.tail_mass(d, beta, kcut) - 0.5
    masses = cw.cw_orbit_masses(d, beta)
    rep.put("model", {"d": d, "beta": beta, "beta_star": cw.beta_star(d), "eps": eps, "kcut": kcut, "delta": delta})
    rep.put("orbit_masses", masses)
    pi = cw.cw_distribution(d, beta)
    agg = cw.cw_orbit_partition(d).masses(pi)
    rep.close("orbit_masses_match_state_space", agg, masses, 1e-12)
    if beta >= cw.beta_star(d):
        rep.check("orbit_masses_monotone", bool(np.all(np.diff(masses) >= -1e-15)))
    star = cw.cw_star_kernel(d, beta, kcut)
    s = sp.spectrum_reversible(star)
    rep.close("star_slem", s.slem, 1 / (0.5 + delta) - 1, 1e-10)
    t_star = cw.mixing_time_exact(star, eps)
    ub = cw.star_mixing_upper_bound(d, beta, delta, eps)
    rep.put("star", {"t_mix": t_star, "upper_bound": ub, "slem": s.slem})
    rep.check("star_mixing_below_bound", t_star <= ub, value=t_star, bound=ub)
    glauber = cw.glauber_kernel(d, beta)
    g = sp.spectrum_reversible(glauber)
    t_gl = cw.mixing_time_exact(glauber, eps)
    lb = cw.glauber_mixing_lower_bound(d, beta, eps)
    rel_lb = (1 / g.abs_gap - 1) * math.log(1 / (2 * eps))
    rep.put("glauber", {"t_mix": t_gl, "lower_bound": lb, "relaxation_time": 1 / g.abs_gap,
                        "relaxation_lower_bound": rel_lb})
    rep.check("glauber_mixing_above_relaxation_bound", t_gl >= rel_lb, value=t_gl, bound=rel_lb)
    rep.check("glauber_mixing_above_exponential_bound", t_gl >= lb, value=t_gl, bound=lb)
    samples = int(params.get("samples") or 0)
    if samples > 0:
        start = int(params.get("start") or 0)
        pval, outside = star_chi_square(d, beta, kcut, start, samples, make_rng(rep.config.seed, 1))
        rep.put("streaming", {"samples": samples, "start": start, "p_value": pval, "outside_support": outside})
        rep.check("streaming_matches_dense_row", pval > 1e-3 and outside == 0, value=pval, bound=1e-3)


def run_tune(rep: Report) -> None:
    params = rep.config.params
    mode = params.get("mode") or "adaptive"
    rng = make_rng(rep.config.seed, 0)
    if mode == "adaptive":
        P, _ = load_model(params)
        cfg = tuning.TuneConfig(
            k=int(params.get("k") or 2),
            block_len=int(params.get("block") or 50),
            total_steps=int(params.get("steps") or 5000),
            seed=rep.config.seed,
            rank_by=params.get("rank_by") or "energy",
        )
        actions, traj = tuning.adaptive_tune(P, None, cfg, rng)
        last = actions[-1] if actions else None
        rep.put("blocks", len(actions))
        rep.put("merged_per_block", [[x + 1 for x in a.merged] for a in actions])
        rep.put("final_visits", last.visit_counts if last else [])
        if last is not None:
            G = gibbs_kernel(last.partition, P.reference)
            GPG = sandwich(G, P, G)
            rep.check("learned_sandwich_stationary", bool(GPG.stationary))
            if P.reversible:
                rep.check("learned_sandwich_slem_le_P", sp.slem(GPG) <= sp.slem(P) + 1e-10)
    elif mode == "explore":
        d = int(params.get("d") or 4)
        F = -cw.cw_log_weights(d, 1.0)
        b_explore = float(params.get("beta_explore") if params.get("beta_explore") is not None else 0.2)
        b_target = float(params.get("beta_target") if params.get("beta_target") is not None else 3.0)
        action, G, GPG = tuning.exploratory_learn(
            F, b_explore, b_target, int(params.get("k") or 2), int(params.get("steps") or 2000), rng,
            base_kernel=lambda b: cw.glauber_kernel(d, b),
        )
        P = cw.glauber_kernel(d, b_target)
        rep.put("merged", [x + 1 for x in action.merged])
        rep.put("slem", {"P": sp.slem(P), "GPG": sp.slem(GPG)})
        rep.check("learned_sandwich_slem_le_P", sp.slem(GPG) <= sp.slem(P) + 1e-10)
    else:
        raise ConfigParse(f"unknown tune mode {mode!r}")


# ---------------------------------------------------------------- golden values

def golden_checks(rep: Report) -> None:
    """Reference values reproduced from the published worked examples."""
    P, part = _two_orbit_three_state()
    G = gibbs_kernel(part, P.reference)
    GPG = sandwich(G, P, G)
    rep.close("three_state_gpg", GPG.matrix, [[0.2, 0.2, 0.6], [0.2, 0.2, 0.6], [0.45, 0.45, 0.1]], 1e-12)
    rc, rg = dc.restriction_chain(P, part, 0), dc.restriction_chain(GPG, part, 0)
    rep.close("three_state_restriction_lambda2", sp.lambda2(rc.matrix, rc.pi_i.probs), 0.2, 1e-12)
    rep.close("three_state_sandwich_restriction_lambda2", sp.lambda2(rg.matrix, rg.pi_i.probs), 0.6, 1e-12)

    P, part = _kl_four_state()
    Q = kl.information_projection(P, part)
    M = build_orbit_kernel("mh", part, P.reference)
    MPM = sandwich(M, P, M)
    P0 = lazify(P)
    M0 = sandwich(M, P0, M)
    rep.close("four_state_D_P_Q", kl.kl_divergence(P, Q), 0.0301, 5e-4)
    rep.close("four_state_mh_sum", kl.kl_divergence(P, MPM) + kl.kl_divergence(MPM, Q), 0.03702, 5e-5)
    rep.close("four_state_lazy_D_P_Q", kl.kl_divergence(P0, Q), 0.29026, 5e-5)
    rep.close("four_state_lazy_mh_sum", kl.kl_divergence(P0, M0) + kl.kl_divergence(M0, Q), 0.21660, 5e-5)

    E, part = _exact_five_state()
    rep.check("five_state_partition", part.orbits == ((0,), (1,), (2, 3, 4)))
    target = np.array([
        [0.05, 0.1, 0, 0.35, 0.50],
        [0.05, 0.1, 0.6, 0.25, 0],
        [0.05, 0.1, 14 / 85, 83 / 340, 15 / 34],
        [0.05, 0.1, 14 / 85, 83 / 340, 15 / 34],
        [0.05, 0.1, 14 / 85, 83 / 340, 15 / 34],
    ])
    rep.close("five_state_exact_sampler", E.matrix, target, 1e-12)
    G = gibbs_kernel(part, E.reference)
    rep.close("five_state_gpg_is_pi", sandwich(G, E, G).matrix, stationary_projector(E.reference).matrix, 1e-12)
    rep.check("five_state_far_from_pi", np.max(np.abs(E.matrix - E.pi[None, :])) > 0.1)
    rep.check("all_singletons_when_k_is_n",
              design.optimal_partition_for_k(E.reference, 5) == OrbitPartition.singletons(5))

    rep.close("uniform_orbit_theta", sp.theta_mh(OrbitPartition.single(11), Distribution.uniform(11)).theta, 0.1, 1e-12)
    for n in (3, 10, 50):
        ev = sp.spectrum_reversible(lazy_walk(n)).eigenvalues
        formula = 0.5 + 0.5 * np.cos(np.arange(n) * np.pi / (n - 1))
        rep.close(f"lazy_walk_spectrum_n{n}", ev, np.sort(formula)[::-1], 1e-10)

    star = design.star_orbit_sampler(Distribution(np.array([0.2, 0.2, 0.6])))
    ev = sp.summary_from_matrix(star.matrix, star.pibar.probs).eigenvalues
    rep.close("star_spectrum", ev, [1.0, 0.0, 1 - 1 / 0.6], 1e-12)
    near = design.star_orbit_sampler(Distribution(np.array([0.0005, 0.0005, 0.999])))
    rep.check("star_kl_vanishes", kl_orbit(near.matrix, near.pibar.probs) < 1e-2)

    a, b = altproj.uniform_grid_partitions(4, 2, 2)
    rep.close("grid_exact_n4", altproj.product_of_gibbs([a, b], Distribution.uniform(4)), np.full((4, 4), 0.25), 1e-12)
    a, b = altproj.uniform_grid_partitions(12, 3, 4)
    rep.check("grid_cosine_bound_n12", altproj.cosine(a, b, Distribution.uniform(12)) <= 9 / 12 + 1e-12)
    _, Gt = altproj.limiting_projection(altproj.transposition_partitions(10), Distribution.uniform(10))
    rep.close("transpositions_limit", Gt.matrix, np.full((10, 10), 0.1), 1e-12)
    vpi, _, rows, cols = altproj.v_shaped_model(2, 2, 0.8)
    rep.close("v_shaped_overlap", altproj.overlap_matrix(rows, cols, vpi).t, np.full((2, 2), 0.5), 1e-12)

    rep.close("beta_star_d4", cw.beta_star(4), 1.25, 0)
    rep.check("cw_tail_mass_grows", cw.tail_mass(8, 20.0, 2) > 0.999)
    z = float(np.exp(cw.cw_orbit_log_weights(8, 2.25)).sum())
    rep.check("cw_partition_function_bound", z <= cw.partition_function_bound(8, 2.25), value=z)
    d, beta, eps = 8, 2.25, 0.25
    kcut = cw.choose_kcut(d, beta)
    delta = cw.tail_mass(d, beta, kcut) - 0.5
    t_star = cw.mixing_time_exact(cw.cw_star_kernel(d, beta, kcut), eps)
    ub = cw.star_mixing_upper_bound(d, beta, delta, eps)
    rep.check("cw_star_mixing_bound", t_star <= ub, value=t_star, bound=ub)
    t_gl = cw.mixing_time_exact(cw.glauber_kernel(d, beta), eps)
    lb = cw.glauber_mixing_lower_bound(d, beta, eps)
    rep.check("cw_glauber_mixing_bound", t_gl >= lb, value=t_gl, bound=lb)


def kl_orbit(matrix: np.ndarray, pibar: np.ndarray) -> float:
    """D(A || Pibar) for an orbit-space chain with stationary law ``pibar``."""
    pibar_k = Distribution(pibar / pibar.sum())
    A = validate_kernel(matrix, pibar_k)
    return kl.kl_divergence(A, stationary_projector(pibar_k))


def run_golden(rep: Report) -> None:
    golden_checks(rep)
    rep.put("total", len(rep.checks))
    rep.put("failed", [c["name"] for c in rep.checks if not c["passed"]])


RUNNERS = {
    "kernel": run_kernel,
    "spectra": run_spectra,
    "kl": run_kl,
    "design": run_design,
    "altproj": run_altproj,
    "curie-weiss": run_curie_weiss,
    "tune": run_tune,
    "golden": run_golden,
}


def run(config: ExperimentConfig) -> Report:
    """Dispatch one experiment; writes the report when ``config.out`` is set."""
    rep = Report(config)
    try:
        RUNNERS[config.kind](rep)
    except (ConfigParse, FileNotFoundError):
        raise
    except OrbitMCError as exc:
        rep.put("error", f"{type(exc).__name__}: {exc}")
        rep.check("completed", False)
    if config.out:
        Path(config.out).write_text(rep.render(), encoding="utf-8", newline="\n")
    return rep
