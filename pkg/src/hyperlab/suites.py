"""Seeded check suites and report writing.

Every instance draws from its own counter-based stream keyed by
``(seed, suite, instance id)``, so results do not depend on the worker
count or on which instances run.  Reports are CSV rows
``suite,id,lhs,rhs,margin,holds,ms`` plus a JSON summary.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import boolean_fourier as bf
from . import design_bias as db
from . import oracles
from . import pauli
from . import sphere_moments as sm
from . import xor_games as xg
from .checks import CheckReport, leq

SUITES = ("boolean", "pauli", "moments", "design", "xor")
CSV_COLUMNS = ("suite", "id", "lhs", "rhs", "margin", "holds", "ms")
NO_DESIGN = "no verified 4-design"


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    count: int | None = None  # cap on every random ensemble
    budget: int = xg.DEFAULT_BUDGET
    tolerance: float | None = None  # overrides every per-check tolerance
    out: Path = Path("reports")
    jobs: int = 1
    timings: bool = False
    povm: str | None = None  # design suite: replaces the bundled icosahedron

    def n(self, default: int) -> int:
        return default if self.count is None else min(default, self.count)


@dataclass(frozen=True)
class CheckRecord:
    suite: str
    id: str
    lhs: float
    rhs: float
    tolerance: float
    holds: bool
    ms: float = 0.0
    status: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def row(self) -> list[str]:
        return [self.suite, self.id, repr(self.lhs), repr(self.rhs), repr(self.margin),
                "1" if self.holds else "0", f"{self.ms:.3f}" if self.ms else "0"]


@dataclass
class SuiteResult:
    name: str
    records: list[CheckRecord]
    statuses: dict[str, str] = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self.records)


def instance_rng(seed: int, suite: str, ident: str) -> np.random.Generator:
    key = [seed & (2**64 - 1), zlib.crc32(suite.encode()), zlib.crc32(ident.encode())]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


# --- instance bodies: (rng, cfg, **params) -> list of (suffix, CheckReport) --------------------------

def _err(value: float, tol: float, **extra) -> CheckReport:
    return leq(float(value), 0.0, tol, **extra)


def b_maj3(rng, cfg):
    f = bf.BooleanFunction.from_callable(3, lambda x: float(np.sign(sum(x))))
    e = bf.fourier_transform(f)
    return [("", _err(np.max(np.abs(e.coefficients - oracles.MAJ3_COEFFS)), 1e-12))]


def b_noise_char(rng, cfg, n, subset, eps):
    chi = bf.character(n, subset)
    got = bf.noise_operator(chi, eps).values
    want = oracles.noise_expectation(oracles.character_values(n, subset), eps)
    scaled = eps ** bin(subset).count("1") * oracles.character_values(n, subset)
    return [("", _err(max(np.max(np.abs(got - want)), np.max(np.abs(want - scaled))), 1e-12))]


def b_bonami(rng, cfg):
    f = bf.random_function(8, rng)
    return [("", bf.check_noise_hyper(f, 2, 4, 1 / math.sqrt(3)))]


def b_low_degree(rng, cfg, d):
    f = bf.random_low_degree(10, d, rng)
    return [(f"q{q}", bf.check_low_degree_hyper(f, q)) for q in (4, 6)]


def _random_hermitian(n, rng):
    a = rng.standard_normal((1 << n, 1 << n)) + 1j * rng.standard_normal((1 << n, 1 << n))
    return pauli.HermitianOperator(n, (a + a.conj().T) / 2)


def p_roundtrip(rng, cfg, n):
    m = _random_hermitian(n, rng)
    e = pauli.pauli_decompose(m)
    back = pauli.pauli_synthesize(e).entries
    parseval = sum(abs(c) ** 2 for c in e.coefficients.values())
    two_sq = float(np.sum(np.abs(m.entries) ** 2)) / m.dim
    return [("roundtrip", _err(np.max(np.abs(back - m.entries)), 1e-9)),
            ("parseval", _err(abs(parseval - two_sq) / max(two_sq, 1.0), 1e-9))]


def p_depolarize(rng, cfg, n):
    m = _random_hermitian(n, rng)
    eps = float(rng.uniform(-1, 1))
    want = oracles.explicit_depolarize(np.array(m.entries), n, eps)
    return [("", _err(np.max(np.abs(pauli.depolarize(m, eps).entries - want)), 1e-9, eps=eps))]


BINOMIAL_N = 20


def _binomial_spectrum():
    levels, mult = oracles.sum_z_squared_levels(BINOMIAL_N)
    scale = math.sqrt(3 * BINOMIAL_N**2 - 2 * BINOMIAL_N)
    return pauli.Spectrum(np.repeat(levels / scale, mult)), scale


def p_binomial(rng, cfg, t):
    sp, scale = _binomial_spectrum()
    if t == "max":
        t = float(np.max(sp.eigenvalues))
    exact = oracles.binomial_tail_fraction(BINOMIAL_N, scale, t)
    frac = pauli.tail_fraction(sp, t)
    return [("bound", pauli.check_tail_bound_spectrum(sp, 2, t)),
            ("fraction", _err(abs(frac - float(exact)), 0.0))]


def p_local3(rng, cfg):
    m = pauli.random_local_hamiltonian(8, 3, 40, rng)
    sp = pauli.spectrum(m)
    return [("q4", pauli.check_q_hyper(m, 4, sp=sp)),
            ("tail", pauli.check_tail_bound(m, (2 * math.e) ** 1.5, sp))]


def p_survival(rng, cfg):
    h = pauli.random_local_hamiltonian(6, 2, 20, rng)
    res = pauli.survival_experiment(h, 0.5, 2 * math.e, 20, rng)
    worst = min(res["reports"], key=lambda r: r.margin)
    return [("", worst)]


def m_anchor(rng, cfg, t):
    d = db.z_half_power(1)
    return [("", _err(abs(sm.haar_moment(d, t) - oracles.qubit_diag_moment(0.5, -0.5, t)), 1e-12))]


def m_closed(rng, cfg, n):
    d = sm.random_state_difference(n, 1, rng)
    return [("", _err(abs(sm.second_moment_closed_form(d) - sm.haar_moment(d, 2)), 1e-12))]


def m_ratio(rng, cfg, n):
    d = sm.random_state_difference(n, 1, rng)
    return [(f"q{q}", sm.moment_ratio_check(d, q)) for q in (4, 6, 8)]


def m_monte_carlo(rng, cfg, dims, t):
    d = sm.random_state_difference(0, 0, rng, dims=dims)
    exact = sm.product_haar_moment(d, t) if len(dims) > 1 else sm.haar_moment(d, t)
    mean, se = sm.monte_carlo_moment(d, t, 100_000, rng)
    return [("", leq(abs(mean - exact), 5 * se, 0.0, exact=exact, se=se))]


def m_product_ratio(rng, cfg, dims):
    d = sm.random_state_difference(0, 0, rng, dims=dims)
    return [("", sm.product_moment_ratio_check(d))]


def _design_povm(cfg):
    if cfg.povm:
        from .io import load
        return load(cfg.povm, "povm")[1]
    return db.icosahedron_povm()


def d_mub(rng, cfg):
    m = db.mub_qubit_povm()
    r4 = db.check_design(m, 4)
    # rejection at t=4 is the expected outcome: deviation must exceed the design tolerance
    return [("t2", db.check_design(m, 2)),
            ("t4_rejected", leq(db.DESIGN_TOL, r4.extra["deviations"][4], 0.0))]


def d_verify(rng, cfg):
    return [("", db.check_design(_design_povm(cfg), 4))]


def d_chain(rng, cfg):
    m = _design_povm(cfg)
    d = sm.random_state_difference(m.dim, 1, rng)
    c = db.fourth_moment_chain(m, d)
    diff = max(abs(a - b) for a, b in zip(c.design_moments, c.haar_moments))
    return [("moments", _err(diff, 1e-9)),
            ("steps", leq(0.0 if c.holds else 1.0, 0.0, 0.0))]


def d_unipartite(rng, cfg):
    m = _design_povm(cfg)
    return [("", db.check_unipartite_bound(m, sm.random_state_difference(m.dim, 1, rng)))]


def d_multipartite(rng, cfg):
    m = _design_povm(cfg)
    return [("", db.check_multipartite_bound(db.product_power(m, 2), sm.random_state_difference(m.dim, 2, rng)))]


def d_decay(rng, cfg):
    m = _design_povm(cfg)
    if m.dim != 2:
        return []
    b = [db.measurement_bias(db.product_power(m, k), db.z_half_power(k)) for k in (1, 2, 3)]
    # strict decrease: a negative tolerance refuses equality
    return [(f"k{k + 1}_lt_k{k}", leq(b[k], b[k - 1], -1e-15)) for k in (1, 2)]


def x_chsh(rng, cfg):
    g = xg.chsh()
    beta, w = xg.bias_exact(g, cfg.budget)
    bh = xg.check_bh(g, cfg.budget)
    return [("bias", _err(abs(beta - 0.5), 0.0)),
            ("witness", _err(abs(xg.evaluate(g, w) - 0.5), 0.0)),
            ("bh_norm", _err(abs(xg.bh_norm(g, 4 / 3) - 1 / math.sqrt(2)), 1e-12)),
            ("check_bh", bh),
            ("bh_equality", _err(abs(bh.margin), 1e-10)),
            ("bias_lower", xg.check_bias_lower(g, cfg.budget))]


def x_constants(rng, cfg):
    return [("C1", _err(abs(xg.bh_constant(1).value - 1), 1e-12)),
            ("C4", _err(abs(xg.bh_constant(4).value - 3 * math.sqrt(2)), 1e-12))]


ENUM_SHAPES = [(2, n) for n in range(1, 9)] + [(3, n) for n in range(1, 6)] + \
    [(4, 2), (4, 3), (4, 4), (5, 2), (5, 3), (6, 2), (7, 2), (8, 2)]


def x_enum(rng, cfg, k, n):
    g = xg.random_game(k, n, rng)
    beta, w = xg.bias_exact(g, cfg.budget)
    return [("", _err(abs(beta - xg.full_enumeration_bias(g)), 1e-12))]


def x_game(rng, cfg, k, n):
    if n is None:
        n = int(rng.integers(1, 9))
    g = xg.random_game(k, n, rng)
    return [("bh", xg.check_bh(g, cfg.budget)), ("lower", xg.check_bias_lower(g, cfg.budget))]


def x_blei(rng, cfg, m):
    r, c = (int(v) for v in rng.integers(1, 17, size=2))
    return [("", xg.blei_check(rng.standard_normal((r, c)), m))]


INFLUENCE_SHAPES = [(2, 2), (2, 5), (2, 7), (3, 3), (3, 4), (4, 2), (4, 3), (7, 2)]


def x_influence(rng, cfg, k, n):
    f = xg.random_game(k, n, rng).form
    e = bf.fourier_transform(xg.induced_function(f))
    diff = max(abs(xg.influence_form(f, j, l) - bf.influence(e, xg.variable_index(f, j, l)))
               for j in range(1, k + 1) for l in range(1, n + 1))
    diff = max(diff, abs(xg.variance_form(f) - bf.variance(e)))
    return [("", _err(diff, 1e-10))]


def x_aa(rng, cfg, k, n):
    f = xg.random_constant_magnitude(k, n, 1.0 / n**k, rng)
    return [("", xg.check_aa_special(f, cfg.budget))]


BODIES = {f.__name__: f for f in (
    b_maj3, b_noise_char, b_bonami, b_low_degree, p_roundtrip, p_depolarize, p_binomial,
    p_local3, p_survival, m_anchor, m_closed, m_ratio, m_monte_carlo, m_product_ratio,
    d_mub, d_verify, d_chain, d_unipartite, d_multipartite, d_decay,
    x_chsh, x_constants, x_enum, x_game, x_blei, x_influence, x_aa)}


# --- task lists ----------------------------------------------------------------------------------

def _tasks_boolean(cfg):
    tasks = [("anchor/maj3", "b_maj3", {})]
    for n in range(1, 7):
        for subset in sorted({0, 1, (1 << n) - 1, (1 << n) // 3}):
            for eps in (0.3, -0.5):
                tasks.append((f"anchor/noise/n{n}/S{subset}/e{eps}", "b_noise_char",
                              {"n": n, "subset": subset, "eps": eps}))
    tasks += [(f"bonami/{i}", "b_bonami", {}) for i in range(cfg.n(1000))]
    for d in (1, 2, 3):
        tasks += [(f"lowdeg/d{d}/{i}", "b_low_degree", {"d": d}) for i in range(cfg.n(1000))]
    return tasks


def _tasks_pauli(cfg):
    tasks = [(f"roundtrip/{i}", "p_roundtrip", {"n": 1 + i % 6}) for i in range(cfg.n(100))]
    tasks += [(f"depolarize/{i}", "p_depolarize", {"n": 1 + i % 4}) for i in range(cfg.n(40))]
    for label, t in (("2e", 2 * math.e), ("6", 6.0), ("8", 8.0), ("10", 10.0), ("max", "max")):
        tasks.append((f"binomial/t{label}", "p_binomial", {"t": t}))
    tasks += [(f"local3/{i}", "p_local3", {}) for i in range(cfg.n(1000))]
    tasks += [(f"survival/{i}", "p_survival", {}) for i in range(cfg.n(10))]
    return tasks


def _tasks_moments(cfg):
    tasks = [(f"anchor/t{t}", "m_anchor", {"t": t}) for t in (2, 4)]
    tasks += [(f"closed/{i}", "m_closed", {"n": 2 + i % 7}) for i in range(cfg.n(500))]
    tasks += [(f"ratio/{i}", "m_ratio", {"n": 2 + i % 7}) for i in range(cfg.n(100))]
    mc = [((2,), 2), ((2,), 4), ((3,), 4), ((4,), 2), ((4,), 4), ((2, 2), 2), ((2, 2), 4)]
    tasks += [(f"mc/{'x'.join(map(str, dims))}/t{t}", "m_monte_carlo", {"dims": dims, "t": t})
              for dims, t in mc[:cfg.n(len(mc))]]
    pr = [(2, 2), (2, 3), (3, 3), (2, 2, 2)]
    tasks += [(f"product_ratio/{i}", "m_product_ratio", {"dims": pr[i % len(pr)]}) for i in range(cfg.n(20))]
    return tasks


def _tasks_design(cfg):
    tasks = [("mub", "d_mub", {})]
    if cfg.povm is None and not db.check_design(db.icosahedron_povm(), 4).holds:
        return tasks
    if cfg.povm is not None:
        from .io import load
        if not db.check_design(load(cfg.povm, "povm")[1], 4).holds:
            return tasks
    tasks += [("design/t4", "d_verify", {})]
    tasks += [(f"chain/{i}", "d_chain", {}) for i in range(cfg.n(200))]
    tasks += [(f"unipartite/{i}", "d_unipartite", {}) for i in range(cfg.n(200))]
    tasks += [(f"multipartite/{i}", "d_multipartite", {}) for i in range(cfg.n(100))]
    tasks += [("decay", "d_decay", {})]
    return tasks


def _tasks_xor(cfg):
    tasks = [("chsh", "x_chsh", {}), ("constants", "x_constants", {})]
    tasks += [(f"enum/{i}", "x_enum", dict(zip("kn", ENUM_SHAPES[i % len(ENUM_SHAPES)])))
              for i in range(cfg.n(200))]
    tasks += [(f"game/k2/{i}", "x_game", {"k": 2, "n": None}) for i in range(cfg.n(500))]
    tasks += [(f"game/k3/{i}", "x_game", {"k": 3, "n": 4}) for i in range(cfg.n(100))]
    tasks += [(f"blei/{i}", "x_blei", {"m": (1, 2, 4)[i % 3]}) for i in range(cfg.n(1000))]
    tasks += [(f"influence/{i}", "x_influence", dict(zip("kn", INFLUENCE_SHAPES[i % len(INFLUENCE_SHAPES)])))
              for i in range(cfg.n(40))]
    aa = [(2, 2), (2, 3), (3, 2), (3, 3)]
    tasks += [(f"aa/{i}", "x_aa", dict(zip("kn", aa[i % len(aa)]))) for i in range(cfg.n(40))]
    return tasks


TASKS = {"boolean": _tasks_boolean, "pauli": _tasks_pauli, "moments": _tasks_moments,
         "design": _tasks_design, "xor": _tasks_xor}


def run_task(task, cfg: SuiteConfig) -> list[CheckRecord]:
    suite, ident, body, params = task
    rng = instance_rng(cfg.seed, suite, ident)
    start = time.perf_counter()
    reports = BODIES[body](rng, cfg, **params)
    ms = (time.perf_counter() - start) * 1000 if cfg.timings else 0.0
    out = []
    for suffix, r in reports:
        tol = r.tolerance if cfg.tolerance is None else cfg.tolerance
        rid = f"{ident}/{suffix}" if suffix else ident
        out.append(CheckRecord(suite, rid, float(r.lhs), float(r.rhs), tol,
                               bool(r.lhs <= r.rhs + tol), ms / max(len(reports), 1)))
    return out


def _run_many(tasks, cfg: SuiteConfig):
    if cfg.jobs <= 1 or len(tasks) < 2:
        return [run_task(t, cfg) for t in tasks]
    chunk = max(1, len(tasks) // (cfg.jobs * 8))
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(run_task, tasks, [cfg] * len(tasks), chunksize=chunk))


def unknown_suite(name: str) -> bool:
    return name not in SUITES and name != "all"


def run_suite(name: str, cfg: SuiteConfig) -> SuiteResult:
    if unknown_suite(name):
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    names = SUITES if name == "all" else (name,)
    tasks = []
    statuses = {}
    for s in names:
        if s == "xor" and xg.exact_visits(2, 2) > cfg.budget:
            raise xg.BudgetExceeded(xg.exact_visits(2, 2), cfg.budget)
        listed = TASKS[s](cfg)
        if s == "design" and not any(t[1] == "d_verify" for t in listed):
            statuses["design"] = NO_DESIGN
        tasks += [(s, ident, body, params) for ident, body, params in listed]
    records = [r for group in _run_many(tasks, cfg) for r in group]
    return SuiteResult(name, records, statuses)


def csv_text(result: SuiteResult) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.records:
        w.writerow(r.row())
    return buf.getvalue()


def summary(result: SuiteResult, cfg: SuiteConfig) -> dict:
    per = {}
    for r in result.records:
        s = per.setdefault(r.suite, {"checks": 0, "failures": 0, "min_margin": math.inf})
        s["checks"] += 1
        s["failures"] += not r.holds
        s["min_margin"] = min(s["min_margin"], r.margin)
    return {
        "suite": result.name,
        "seed": cfg.seed,
        "count_cap": cfg.count,
        "tolerance_override": cfg.tolerance,
        "all_hold": result.all_hold,
        "checks": len(result.records),
        "failures": [r.id for r in result.records if not r.holds],
        "per_suite": per,
        "statuses": result.statuses,
    }


def write_reports(result: SuiteResult, cfg: SuiteConfig) -> tuple[Path, Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.name}.csv"
    json_path = out / f"{result.name}.json"
    csv_path.write_text(csv_text(result))
    json_path.write_text(json.dumps(summary(result, cfg), indent=2, sort_keys=True, default=str) + "\n")
    return csv_path, json_path
