"""Scenario harness: config ingestion, experiment runs, CSV and report files.

A scenario is a TOML config naming the system matrices, initial data, time
grid and quadrature.  Five kinds are supported: ``validate`` (condition
report only), ``decay`` (entropy series of a mixture with envelope
regression), ``subspace`` (coefficient-state decay at an elevated rate),
``hyper`` (waiting-time verification) and ``fisher`` (Fisher-information
series with envelope regression).  Runs are deterministic for a fixed
config and seed; series files are byte-identical across repeats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import linalg
from .entropy import e2_mixture, ep_quadrature, fisher_info, power_generator
from .exceptions import ConfigError, InsufficientDataError
from .hyper import verify_hypercontractivity
from .propagation import GaussianMixture, decay_envelope, evolve_mixture
from .quadrature import QuadratureSpec
from .spectral import HermiteState, evolve_hermite, multi_indices
from .system import NormalizedSystem, make_system, normalize, validate

CSV_HEADER = "t,e2,ep,fisher,envelope,ratio"

KINDS = ("validate", "decay", "subspace", "hyper", "fisher")


_MISSING = object()


def _get(table: dict, path: str, default=_MISSING):
    node = table
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is not _MISSING:
                return default
            raise ConfigError(f"{path}: missing required key")
        node = node[part]
    return node


def _matrix(table: dict, path: str) -> np.ndarray:
    raw = _get(table, path)
    try:
        M = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric matrix ({exc})") from None
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"{path}: must be a square row-major array of arrays")
    return M


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed and validated scenario description."""

    kind: str
    D: np.ndarray
    C: np.ndarray
    components: tuple[dict, ...] = ()
    hermite_level: int | None = None
    hermite_coeffs: tuple[float, ...] = ()
    p: float = 2.0
    t_max: float = 15.0
    t_steps: int = 151
    quad_order: int | None = None
    seed: int = 0
    fisher_p_matrix: str | np.ndarray = "D"
    csv_name: str = "series.csv"
    report_name: str = "report.json"

    @staticmethod
    def from_toml(path, kind: str | None = None, seed: int | None = None) -> "ScenarioConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"config file: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file: invalid TOML ({exc})") from None
        return ScenarioConfig.from_dict(raw, kind=kind, seed=seed)

    @staticmethod
    def from_dict(raw: dict, kind: str | None = None, seed: int | None = None) -> "ScenarioConfig":
        kind = kind or _get(raw, "kind", "decay")
        if kind not in KINDS:
            raise ConfigError(f"kind: must be one of {KINDS}, got {kind!r}")
        D = _matrix(raw, "system.D")
        C = _matrix(raw, "system.C")
        if D.shape != C.shape:
            raise ConfigError("system.C: dimension differs from system.D")

        components = tuple(_get(raw, "initial.components", []))
        for i, comp in enumerate(components):
            for key in ("weight", "mean", "cov"):
                if key not in comp:
                    raise ConfigError(f"initial.components[{i}].{key}: missing")

        hermite_level = None
        hermite_coeffs: tuple[float, ...] = ()
        if _get(raw, "initial.hermite", None) is not None:
            hermite_level = int(_get(raw, "initial.hermite.level"))
            hermite_coeffs = tuple(
                float(v) for v in _get(raw, "initial.hermite.coeffs")
            )
            if hermite_level < 1:
                raise ConfigError("initial.hermite.level: must be >= 1")

        p = float(_get(raw, "run.p", 2.0))
        if not 1.0 < p <= 2.0:
            raise ConfigError(f"run.p: must lie in (1, 2], got {p}")
        t_max = float(_get(raw, "run.t_max", 15.0))
        if t_max <= 0.0:
            raise ConfigError(f"run.t_max: must be positive, got {t_max}")
        t_steps = int(_get(raw, "run.t_steps", 151))
        if t_steps < 2:
            raise ConfigError(f"run.t_steps: must be >= 2, got {t_steps}")

        quad_order = _get(raw, "quad.order", None)
        if quad_order is not None:
            quad_order = int(quad_order)
            if quad_order < 1:
                raise ConfigError("quad.order: must be >= 1")

        fisher_p = _get(raw, "fisher.P", "D")
        if isinstance(fisher_p, str):
            if fisher_p not in ("D", "I"):
                raise ConfigError('fisher.P: must be "D", "I" or a matrix')
        else:
            fisher_p = _matrix({"fisher": {"P": fisher_p}}, "fisher.P")

        return ScenarioConfig(
            kind=kind,
            D=D,
            C=C,
            components=components,
            hermite_level=hermite_level,
            hermite_coeffs=hermite_coeffs,
            p=p,
            t_max=t_max,
            t_steps=t_steps,
            quad_order=quad_order,
            seed=int(seed if seed is not None else _get(raw, "seed", 0)),
            fisher_p_matrix=fisher_p,
            csv_name=str(_get(raw, "output.csv", "series.csv")),
            report_name=str(_get(raw, "output.report", "report.json")),
        )

    def quad_spec(self, d: int) -> QuadratureSpec:
        spec = QuadratureSpec.for_dim(d, seed=self.seed)
        if self.quad_order is not None and spec.rule == "gauss-hermite":
            spec = QuadratureSpec(rule="gauss-hermite", order=self.quad_order, seed=self.seed)
        return spec

    def mixture(self, nsys: NormalizedSystem) -> GaussianMixture:
        """Initial mixture mapped into normalized coordinates."""
        if not self.components:
            raise ConfigError("initial.components: required for this scenario kind")
        try:
            weights = np.array([float(c["weight"]) for c in self.components])
            means = np.array([np.asarray(c["mean"], dtype=float) for c in self.components])
            covs = np.array([np.asarray(c["cov"], dtype=float) for c in self.components])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"initial.components: bad numeric data ({exc})") from None
        A = nsys.A
        try:
            return GaussianMixture(
                weights=weights,
                means=means @ A.T,
                covs=np.array([A @ S @ A.T for S in covs]),
            )
        except Exception as exc:
            raise ConfigError(f"initial.components: {exc}") from None

    def hermite_state(self, nsys: NormalizedSystem) -> HermiteState:
        if self.hermite_level is None:
            raise ConfigError("initial.hermite: required for subspace scenarios")
        basis = multi_indices(nsys.d, self.hermite_level)
        if len(self.hermite_coeffs) != len(basis):
            raise ConfigError(
                f"initial.hermite.coeffs: level {self.hermite_level} in dimension "
                f"{nsys.d} needs {len(basis)} coefficients, got {len(self.hermite_coeffs)}"
            )
        coeffs = {(0,) * nsys.d: 1.0}
        coeffs.update(
            {alpha: float(a) for alpha, a in zip(basis, self.hermite_coeffs)}
        )
        return HermiteState(coeffs=coeffs, dim=nsys.d, m_max=self.hermite_level)


@dataclass(frozen=True)
class FitResult:
    """Tail regression of a decaying series against c (1 + t^b) e^(-r t)."""

    rate_hat: float
    rate_ci: float
    poly_order_hat: float
    poly_ci: float
    n_points: int
    window: tuple[float, float]


def fit_decay(ts, values, mu: float, t_min: float | None = None) -> FitResult:
    """Estimate the exponential rate and polynomial order of a decay series.

    The polynomial order comes from regressing log(value) + 2 mu t on
    log t over the tail window (the exponential rate pinned at 2 mu); the
    rate estimate comes from a free fit of log(value) on (t, log t).  The
    default window is the upper half of the grid, starting no earlier than
    5 / mu.  Values at or below 1e-300 are trimmed; fewer than 10 usable
    points raise InsufficientDataError.  Confidence radii are 1.96 ordinary
    least-squares standard errors.
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(values, dtype=float)
    if ts.shape != vals.shape:
        raise InsufficientDataError("time and value arrays differ in length")
    if t_min is None:
        t_min = max(float(np.median(ts)), 5.0 / mu)
    keep = (ts >= t_min) & (ts > 0.0) & (vals > 1e-300) & np.isfinite(vals)
    t = ts[keep]
    v = vals[keep]
    if t.size < 10:
        raise InsufficientDataError(
            f"only {t.size} usable points in the tail window (need >= 10)"
        )
    logv = np.log(v)
    logt = np.log(t)

    # Pinned-rate fit for the polynomial order.
    y = logv + 2.0 * mu * t
    X = np.column_stack([np.ones_like(t), logt])
    poly, poly_se = _ols(X, y, 1)

    # Free-rate fit.
    Xf = np.column_stack([np.ones_like(t), t, logt])
    coef, se = _ols_full(Xf, logv)
    rate = -coef[1]
    rate_se = se[1]

    return FitResult(
        rate_hat=float(rate),
        rate_ci=float(1.96 * rate_se),
        poly_order_hat=float(poly),
        poly_ci=float(1.96 * poly_se),
        n_points=int(t.size),
        window=(float(t[0]), float(t[-1])),
    )


def _ols_full(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(X.shape[0] - X.shape[1], 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    return coef, np.sqrt(np.diag(cov))


def _ols(X: np.ndarray, y: np.ndarray, idx: int) -> tuple[float, float]:
    coef, se = _ols_full(X, y)
    return float(coef[idx]), float(se[idx])


@dataclass(frozen=True)
class DecayReport:
    """Full result of a scenario run.

    ``series`` columns are (t, e2, ep, fisher, envelope, ratio); the
    envelope column carries unit constant, so the maximum of the ratio
    column equals the empirical envelope constant reported under
    ``constants``.  ``flags`` drive the process exit status.
    """

    kind: str
    system: dict
    series: np.ndarray
    fit: FitResult | None
    constants: dict
    flags: dict
    seed: int

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "system": self.system,
            "constants": {k: _jsonify(v) for k, v in self.constants.items()},
            "constants_note": "envelope constants are empirical grid maxima, "
            "not certified bounds",
            "fit": None,
            "flags": dict(self.flags),
            "passed": self.passed,
            "seed": self.seed,
            "n_rows": int(self.series.shape[0]) if self.series.size else 0,
        }
        if self.fit is not None:
            out["fit"] = {
                "rate_hat": self.fit.rate_hat,
                "rate_ci": self.fit.rate_ci,
                "poly_order_hat": self.fit.poly_order_hat,
                "poly_ci": self.fit.poly_ci,
                "n_points": self.fit.n_points,
                "window": list(self.fit.window),
            }
        return out


def _jsonify(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_series_csv(path, series: np.ndarray) -> None:
    lines = [CSV_HEADER]
    for row in series:
        lines.append(",".join(_fmt(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_report_json(path, report: DecayReport) -> None:
    Path(path).write_text(
        json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8", newline="\n"
    )


def _system_block(nsys: NormalizedSystem, mu: float, n: int) -> dict:
    rep = nsys.base.report
    return {
        "d": nsys.d,
        "r": nsys.r,
        "mu": mu,
        "n": n,
        "kappa": rep.kappa,
        "normalization": nsys.A.tolist(),
    }


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> DecayReport:
    """Execute one scenario; optionally write series.csv and report.json."""
    if cfg.kind == "validate":
        report = _run_validate(cfg)
    else:
        nsys = normalize(make_system(cfg.D, cfg.C))
        runner = {
            "decay": _run_decay,
            "subspace": _run_subspace,
            "hyper": _run_hyper,
            "fisher": _run_fisher,
        }[cfg.kind]
        report = runner(cfg, nsys)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if report.series.size:
            write_series_csv(out / cfg.csv_name, report.series)
        write_report_json(out / cfg.report_name, report)
    return report


def _run_validate(cfg: ScenarioConfig) -> DecayReport:
    rep = validate(cfg.D, cfg.C)
    system: dict = {"d": int(cfg.D.shape[0])}
    system.update(rep.as_dict())
    if rep.overall:
        mu, n = linalg.mu_and_defect(cfg.C)
        system["mu"] = mu
        system["n"] = n
    return DecayReport(
        kind="validate",
        system=system,
        series=np.empty((0, 6)),
        fit=None,
        constants={},
        flags={"conditions": rep.overall},
        seed=cfg.seed,
    )


def _time_grid(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.t_max, cfg.t_steps)


def _series_report(
    cfg: ScenarioConfig,
    nsys: NormalizedSystem,
    ts: np.ndarray,
    e2s: np.ndarray,
    eps: np.ndarray,
    fishers: np.ndarray,
    fit_values: np.ndarray,
    rate_over_2: float,
    poly_n: int,
    monotone_expected: bool = True,
) -> DecayReport:
    mu, n = nsys.mu_defect()
    env = np.asarray(decay_envelope(rate_over_2, poly_n, 1.0, ts))
    ratio = np.where(env > 0.0, fit_values / env, np.inf)
    series = np.column_stack([ts, e2s, eps, fishers, env, ratio])
    c_fit = float(np.max(ratio[np.isfinite(ratio)]))
    try:
        fit = fit_decay(ts, fit_values, mu=rate_over_2)
    except InsufficientDataError:
        # legitimately possible: equilibrium data gives an all-zero series
        fit = None
    flags = {"ratio_bounded": bool(np.isfinite(ratio).all())}
    if monotone_expected:
        # entropies are Lyapunov functionals; Fisher information is not
        flags["series_monotone"] = bool(np.all(np.diff(fit_values) <= 1e-8))
    if fit is not None:
        flags["fit_rate_positive"] = fit.rate_hat > 0.0
    return DecayReport(
        kind=cfg.kind,
        system=_system_block(nsys, mu, n),
        series=series,
        fit=fit,
        constants={"c_fit": c_fit, "envelope_rate": 2.0 * rate_over_2,
                   "envelope_poly_order": 2 * poly_n},
        flags=flags,
        seed=cfg.seed,
    )


def _fisher_weight_matrix(cfg: ScenarioConfig, nsys: NormalizedSystem) -> np.ndarray:
    if isinstance(cfg.fisher_p_matrix, str):
        return nsys.D if cfg.fisher_p_matrix == "D" else np.eye(nsys.d)
    return cfg.fisher_p_matrix


def _run_decay(cfg: ScenarioConfig, nsys: NormalizedSystem) -> DecayReport:
    mix = cfg.mixture(nsys)
    quad = cfg.quad_spec(nsys.d)
    gen = power_generator(cfg.p)
    mu, n = nsys.mu_defect()
    ts = _time_grid(cfg)
    e2s, eps, fishers = [], [], []
    P = _fisher_weight_matrix(cfg, nsys)
    for t in ts:
        ft = evolve_mixture(nsys, mix, t)
        e2s.append(e2_mixture(nsys, ft))
        eps.append(ep_quadrature(nsys, ft, gen, quad))
        fishers.append(fisher_info(nsys, ft, gen, P, quad))
    e2s = np.array(e2s)
    return _series_report(cfg, nsys, ts, e2s, np.array(eps), np.array(fishers),
                          e2s, mu, n)


def _run_subspace(cfg: ScenarioConfig, nsys: NormalizedSystem) -> DecayReport:
    from .spectral import subspace_decay_exponent

    state = cfg.hermite_state(nsys)
    quad = cfg.quad_spec(nsys.d)
    gen2 = power_generator(2.0)
    k = state.min_level()
    rate, n_k = subspace_decay_exponent(nsys.C, k)
    mu, _ = nsys.mu_defect()
    ts = _time_grid(cfg)
    e2s, eps, fishers = [], [], []
    for t in ts:
        st = evolve_hermite(state, nsys.C, t)
        e2s.append(st.e2())
        eps.append(ep_quadrature(nsys, st, gen2, quad))
        fishers.append(fisher_info(nsys, st, gen2, nsys.D, quad))
    e2s = np.array(e2s)
    report = _series_report(cfg, nsys, ts, e2s, np.array(eps), np.array(fishers),
                            e2s, k * mu, n_k)
    report.constants.update({"level": k, "n_k": n_k})
    return report


def _run_hyper(cfg: ScenarioConfig, nsys: NormalizedSystem) -> DecayReport:
    if not 1.0 < cfg.p < 2.0:
        raise ConfigError("run.p: hyper scenarios need p strictly inside (1, 2)")
    mix = cfg.mixture(nsys)
    quad = cfg.quad_spec(nsys.d)
    ts = _time_grid(cfg)
    rep = verify_hypercontractivity(nsys, mix, cfg.p, ts, quad)
    gen = power_generator(cfg.p)
    eps = np.array(
        [ep_quadrature(nsys, evolve_mixture(nsys, mix, t), gen, quad) for t in ts]
    )
    env = np.full_like(ts, rep.bound)
    ratio = rep.e2_series / rep.bound
    series = np.column_stack(
        [ts, rep.e2_series, eps, np.full_like(ts, np.nan), env, ratio]
    )
    mu, n = nsys.mu_defect()
    constants = {
        "c_fit": rep.params.c,
        "c2_fit": rep.params.c2,
        "T0": rep.T0,
        "ep0": rep.ep0,
        "bound": rep.bound,
        "first_finite_time": rep.first_finite_time,
    }
    flags = {"hypercontractive_bound": rep.passed}
    return DecayReport(
        kind="hyper",
        system=_system_block(nsys, mu, n),
        series=series,
        fit=None,
        constants=constants,
        flags=flags,
        seed=cfg.seed,
    )


def _run_fisher(cfg: ScenarioConfig, nsys: NormalizedSystem) -> DecayReport:
    mix = cfg.mixture(nsys)
    quad = cfg.quad_spec(nsys.d)
    gen = power_generator(cfg.p)
    mu, n = nsys.mu_defect()
    P = _fisher_weight_matrix(cfg, nsys)
    ts = _time_grid(cfg)
    e2s, eps, fishers = [], [], []
    for t in ts:
        ft = evolve_mixture(nsys, mix, t)
        e2s.append(e2_mixture(nsys, ft))
        eps.append(ep_quadrature(nsys, ft, gen, quad))
        fishers.append(fisher_info(nsys, ft, gen, P, quad))
    fishers = np.array(fishers)
    return _series_report(cfg, nsys, ts, np.array(e2s), np.array(eps), fishers,
                          fishers, mu, n, monotone_expected=False)
