"""Monte Carlo study engine: scenario registry, replication, aggregation.

Each (scenario, sample size, replication) cell simulates one series and
fits it with every requested method on the same draws; cells aggregate to
the empirical mean and RMSE per parameter. Replication k of scenario s at
size n always uses the stream seeded by (seed, crc32(s), n, k), so results
are identical for any degree of parallelism.
"""
from __future__ import annotations

import csv
import io
import zlib
from dataclasses import dataclass

import numpy as np

from .estimation import fit_cls, fit_mle
from .process import GeoMgwiModel, simulate
from .regression import RegressionModel, build_design, fit_nonstat, simulate_nonstat

__all__ = [
    "Scenario",
    "McCell",
    "McTable",
    "builtin_scenario",
    "BUILTIN_SCENARIO_IDS",
    "parse_scenario_file",
    "run_study",
]


@dataclass(frozen=True)
class Scenario:
    """One simulation design: true model, sizes, replication count, methods."""

    id: str
    kind: str  # "stationary" | "regression"
    params: dict
    sample_sizes: tuple[int, ...]
    replications: int
    methods: tuple[str, ...]
    seed: int

    def __post_init__(self) -> None:
        if self.kind not in ("stationary", "regression"):
            raise ValueError(f"kind must be 'stationary' or 'regression', got {self.kind!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if any(n < 10 for n in self.sample_sizes):
            raise ValueError("sample sizes must be >= 10")
        bad = set(m.lower() for m in self.methods) - {"cls", "mle"}
        if bad:
            raise ValueError(f"unknown methods: {sorted(bad)}")

    def true_values(self) -> dict[str, float]:
        if self.kind == "stationary":
            return {"mu": self.params["mu"], "alpha": self.params["alpha"]}
        beta = self.params["beta"]
        gamma = self.params["gamma"]
        out = {f"beta{i}": float(b) for i, b in enumerate(beta)}
        out.update({f"gamma{i}": float(g) for i, g in enumerate(gamma)})
        return out


_STATIONARY = {
    "I": (2.0, 1.0),
    "II": (1.2, 0.5),
    "III": (0.5, 1.5),
    "IV": (0.3, 0.5),
}

_REGRESSION = {
    "V": ((2.0, 1.0, 0.7), (2.0, 1.0)),
    "VI": ((3.0, 1.0, 0.5), (3.0, 2.0)),
}

BUILTIN_SCENARIO_IDS = tuple(_STATIONARY) + tuple(_REGRESSION)

_REG_MU_TERMS = ("intercept", "t-over-n", "cos-12")
_REG_ALPHA_TERMS = ("intercept", "t-over-n")


def builtin_scenario(scenario_id: str, paper_scale: bool = False, seed: int = 0) -> Scenario:
    """Registry of the six built-in designs.

    Desk scale keeps runtimes CI-friendly (200 replications at sizes 100
    and 500 for the stationary designs, 100 for the regression ones);
    ``paper_scale`` switches to the published replication counts and the
    full size ladder.
    """
    sid = scenario_id.upper()
    sizes = (100, 200, 500, 1000) if paper_scale else (100, 500)
    if sid in _STATIONARY:
        mu, alpha = _STATIONARY[sid]
        return Scenario(
            id=sid,
            kind="stationary",
            params={"mu": mu, "alpha": alpha},
            sample_sizes=sizes,
            replications=1000 if paper_scale else 200,
            methods=("cls", "mle"),
            seed=seed,
        )
    if sid in _REGRESSION:
        beta, gamma = _REGRESSION[sid]
        return Scenario(
            id=sid,
            kind="regression",
            params={
                "beta": list(beta),
                "gamma": list(gamma),
                "mu_terms": list(_REG_MU_TERMS),
                "alpha_terms": list(_REG_ALPHA_TERMS),
            },
            sample_sizes=sizes,
            replications=500 if paper_scale else 100,
            methods=("cls", "mle"),
            seed=seed,
        )
    raise ValueError(
        f"unknown scenario {scenario_id!r}; built-ins: {', '.join(BUILTIN_SCENARIO_IDS)}"
    )


def parse_scenario_file(path: str) -> Scenario:
    """Read a scenario from a ``key = value`` text file.

    Required keys: id, kind, sizes, replications, methods, seed, plus
    either (mu, alpha) for stationary or (beta, gamma, mu_terms,
    alpha_terms) for regression designs. Lists are whitespace-separated;
    '#' starts a comment.
    """
    fields: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected 'key = value', got {line!r}")
            key, value = line.split("=", 1)
            fields[key.strip()] = value.strip()
    missing = {"id", "kind", "sizes", "replications", "methods", "seed"} - fields.keys()
    if missing:
        raise ValueError(f"scenario file is missing keys: {sorted(missing)}")
    kind = fields["kind"]
    if kind == "stationary":
        params = {"mu": float(fields["mu"]), "alpha": float(fields["alpha"])}
    else:
        params = {
            "beta": [float(v) for v in fields["beta"].split()],
            "gamma": [float(v) for v in fields["gamma"].split()],
            "mu_terms": fields["mu_terms"].split(),
            "alpha_terms": fields["alpha_terms"].split(),
        }
    return Scenario(
        id=fields["id"],
        kind=kind,
        params=params,
        sample_sizes=tuple(int(v) for v in fields["sizes"].split()),
        replications=int(fields["replications"]),
        methods=tuple(m.lower() for m in fields["methods"].split()),
        seed=int(fields["seed"]),
    )


@dataclass(frozen=True)
class McCell:
    scenario: str
    n: int
    method: str
    parameter: str
    mean: float
    rmse: float
    n_converged: int
    n_failed: int


@dataclass
class McTable:
    cells: list[McCell]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["scenario", "n", "method", "parameter", "mean", "rmse", "n_converged", "n_failed"]
        )
        for c in self.cells:
            writer.writerow(
                [c.scenario, c.n, c.method, c.parameter, repr(c.mean), repr(c.rmse),
                 c.n_converged, c.n_failed]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "McTable":
        reader = csv.DictReader(io.StringIO(text))
        cells = [
            McCell(
                scenario=row["scenario"],
                n=int(row["n"]),
                method=row["method"],
                parameter=row["parameter"],
                mean=float(row["mean"]),
                rmse=float(row["rmse"]),
                n_converged=int(row["n_converged"]),
                n_failed=int(row["n_failed"]),
            )
            for row in reader
        ]
        return cls(cells)

    def to_markdown(self) -> str:
        """One row per (scenario, n, method), cells formatted 'mean (rmse)'."""
        groups: dict[tuple[str, int, str], dict[str, McCell]] = {}
        for c in self.cells:
            groups.setdefault((c.scenario, c.n, c.method), {})[c.parameter] = c
        lines = []
        current_params: tuple[str, ...] | None = None
        for (scenario, n, method), by_param in groups.items():
            params = tuple(by_param)
            if params != current_params:
                lines.append("| scenario | n | method | " + " | ".join(params) + " |")
                lines.append("|" + "---|" * (3 + len(params)))
                current_params = params
            cells = [
                f"{by_param[p].mean:.3f} ({by_param[p].rmse:.3f})" for p in params
            ]
            failed = max(c.n_failed for c in by_param.values())
            row = f"| {scenario} | {n} | {method.upper()} | " + " | ".join(cells) + " |"
            if failed:
                row += f"  <!-- {failed} failed replications -->"
            lines.append(row)
        return "\n".join(lines) + "\n"


def _replication_rng(scenario: Scenario, n: int, k: int) -> np.random.Generator:
    key = zlib.crc32(scenario.id.encode("utf-8"))
    return np.random.default_rng([scenario.seed, key, n, k])


def _build_regression_model(scenario: Scenario, n: int) -> RegressionModel:
    p = scenario.params
    return RegressionModel(
        kind="mgwi",
        beta=np.asarray(p["beta"], dtype=float),
        gamma=np.asarray(p["gamma"], dtype=float),
        W=build_design(n, p["mu_terms"]),
        V=build_design(n, p["alpha_terms"]),
    )


def _run_replication(scenario: Scenario, n: int, k: int) -> dict[str, tuple | None]:
    """Simulate once and fit with every requested method."""
    rng = _replication_rng(scenario, n, k)
    out: dict[str, tuple | None] = {}
    if scenario.kind == "stationary":
        model = GeoMgwiModel(scenario.params["mu"], scenario.params["alpha"])
        sim = simulate(model, n, rng)
        for method in scenario.methods:
            fitter = fit_cls if method == "cls" else fit_mle
            try:
                res = fitter(sim)
            except (ValueError, FloatingPointError):
                out[method] = None
                continue
            out[method] = tuple(res.estimates.values()) if res.converged else None
    else:
        model = _build_regression_model(scenario, n)
        sim = simulate_nonstat(model, rng)
        for method in scenario.methods:
            try:
                res = fit_nonstat(sim, model, method=method)
            except (ValueError, FloatingPointError):
                out[method] = None
                continue
            out[method] = tuple(res.estimates.values()) if res.converged else None
    return out


def run_study(scenarios, n_jobs: int = 1) -> McTable:
    """Run every (scenario, n) cell and aggregate means and RMSEs.

    Failed replications are excluded from the aggregates and reported in
    the table, never silently dropped.
    """
    if isinstance(scenarios, Scenario):
        scenarios = [scenarios]
    cells: list[McCell] = []
    for scenario in scenarios:
        truth = scenario.true_values()
        names = list(truth)
        for n in scenario.sample_sizes:
            reps = range(scenario.replications)
            if n_jobs != 1:
                from joblib import Parallel, delayed

                results = Parallel(n_jobs=n_jobs)(
                    delayed(_run_replication)(scenario, n, k) for k in reps
                )
            else:
                results = [_run_replication(scenario, n, k) for k in reps]
            for method in scenario.methods:
                rows = [r[method] for r in results]
                good = np.array([r for r in rows if r is not None], dtype=float)
                failed = sum(1 for r in rows if r is None)
                for j, name in enumerate(names):
                    if good.size:
                        est = good[:, j]
                        mean = float(est.mean())
                        rmse = float(np.sqrt(np.mean((est - truth[name]) ** 2)))
                    else:
                        mean = float("nan")
                        rmse = float("nan")
                    cells.append(
                        McCell(
                            scenario=scenario.id,
                            n=n,
                            method=method,
                            parameter=name,
                            mean=mean,
                            rmse=rmse,
                            n_converged=len(rows) - failed,
                            n_failed=failed,
                        )
                    )
    return McTable(cells)
