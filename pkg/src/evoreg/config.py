"""Scenario configuration: TOML parsing, exponent gates, object builders.

A scenario file describes one experiment: the operator truncation, the
exponent set, the initial state, optional forcing and noise selections,
the time mesh, and Monte Carlo controls.  Every inequality the solvers
rely on is enforced here, before any computation starts, and violations
are reported with the inequality text so a config can be fixed without
reading source.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

from .deterministic import ForcingSpec, validate_H3
from .holder import MEMBER_SHAPES, make_member
from .mesh import GradedMesh
from .spectral import SpectralOperator, build_cable_operator
from .stochastic import (
    NOISE_PRESETS,
    NoiseSpec,
    feasible_alpha_interval,
    make_noise,
    validate_H4,
)

INITIAL_PRESETS = ("zero", "unit-mode", "decay")


class ConfigError(ValueError):
    """Config parse failure or exponent-gate violation."""


@dataclass(frozen=True)
class Exponents:
    beta: float
    sigma: float
    alpha: Optional[float] = None
    alpha1: Optional[float] = None
    gamma: Optional[float] = None
    nu: float = 0.45
    epsilon: Optional[float] = None


@dataclass(frozen=True)
class InitialConfig:
    preset: str = "zero"
    mode: int = 0
    scale: float = 1.0
    coeffs: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class ForcingConfig:
    shape: str
    mode: Optional[int] = None
    direction: Optional[tuple[float, ...]] = None
    decay: Optional[float] = None
    scale: float = 1.0


@dataclass(frozen=True)
class NoiseConfig:
    preset: str
    scale: float = 1.0


@dataclass(frozen=True)
class PathsConfig:
    count: int = 64
    nodes: int = 512


@dataclass(frozen=True)
class OutputsConfig:
    paths: Optional[str] = None
    report: Optional[str] = None


@dataclass(frozen=True)
class ScenarioConfig:
    title: str
    operator_L: float
    operator_N: int
    horizon: float
    exponents: Exponents
    initial: InitialConfig
    forcing: Optional[ForcingConfig]
    noise: Optional[NoiseConfig]
    mesh_K: int
    mesh_r: float
    replicas: int
    master_seed: int
    paths_cfg: PathsConfig
    outputs: OutputsConfig

    def digest(self) -> dict[str, Any]:
        """Flat scalar summary embedded in reports."""
        d: dict[str, Any] = {
            "title": self.title,
            "L": self.operator_L,
            "N": self.operator_N,
            "T": self.horizon,
            "K": self.mesh_K,
            "r": self.mesh_r,
            "replicas": self.replicas,
            "master_seed": self.master_seed,
            "beta": self.exponents.beta,
            "sigma": self.exponents.sigma,
            "nu": self.exponents.nu,
            "initial": self.initial.preset,
        }
        for name in ("alpha", "alpha1", "gamma", "epsilon"):
            val = getattr(self.exponents, name)
            if val is not None:
                d[name] = val
        if self.forcing is not None:
            d["forcing"] = self.forcing.shape
        if self.noise is not None:
            d["noise"] = self.noise.preset
        return d


def _section(doc: dict, name: str, allowed: tuple[str, ...], errors: list[str]) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        errors.append(f"[{name}] must be a table")
        return {}
    for key in sec:
        if key not in allowed:
            errors.append(f"unknown key {key!r} in [{name}] (allowed: {', '.join(allowed)})")
    return sec


def _number(sec: dict, key: str, errors: list[str], default=None, where: str = ""):
    if key not in sec:
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.append(f"{where}{key} must be a number, got {val!r}")
        return default
    return float(val)


def _integer(sec: dict, key: str, errors: list[str], default=None, where: str = ""):
    if key not in sec:
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, int):
        errors.append(f"{where}{key} must be an integer, got {val!r}")
        return default
    return int(val)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and fully gate a scenario document.

    Raises ConfigError carrying every violated inequality, not just the
    first, so one edit pass can fix a config.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    errors: list[str] = []
    top_allowed = ("title", "horizon", "operator", "exponents", "initial",
                   "forcing", "noise", "mesh", "mc", "paths", "outputs")
    for key in doc:
        if key not in top_allowed:
            errors.append(f"unknown top-level key {key!r}")

    title = doc.get("title", "")
    if not isinstance(title, str):
        errors.append("title must be a string")
        title = ""

    op_sec = _section(doc, "operator", ("L", "N"), errors)
    L = _number(op_sec, "L", errors, default=float(np.pi), where="operator.")
    N = _integer(op_sec, "N", errors, default=64, where="operator.")
    if L is not None and not L > 0:
        errors.append(f"need operator.L > 0, got {L}")
    if N is not None and not N >= 1:
        errors.append(f"need operator.N >= 1, got {N}")

    horizon = _number(doc, "horizon", errors, default=1.0)
    if horizon is not None and not horizon > 0:
        errors.append(f"need horizon > 0, got {horizon}")

    exp_sec = _section(doc, "exponents",
                       ("beta", "sigma", "alpha", "alpha1", "gamma", "nu", "epsilon"),
                       errors)
    beta = _number(exp_sec, "beta", errors, where="exponents.")
    sigma = _number(exp_sec, "sigma", errors, where="exponents.")
    if beta is None or sigma is None:
        errors.append("exponents.beta and exponents.sigma are required")
        beta = beta if beta is not None else 1.0
        sigma = sigma if sigma is not None else 0.1
    alpha = _number(exp_sec, "alpha", errors, where="exponents.")
    alpha1 = _number(exp_sec, "alpha1", errors, where="exponents.")
    gamma = _number(exp_sec, "gamma", errors, where="exponents.")
    nu = _number(exp_sec, "nu", errors, default=0.45, where="exponents.")
    epsilon = _number(exp_sec, "epsilon", errors, where="exponents.")
    if epsilon is None and horizon is not None:
        epsilon = 0.1 * horizon

    init_sec = _section(doc, "initial", ("preset", "mode", "scale", "coeffs"), errors)
    preset = init_sec.get("preset", "zero" if "coeffs" not in init_sec else "coeffs")
    coeffs = init_sec.get("coeffs")
    if coeffs is not None:
        if not (isinstance(coeffs, list) and all(isinstance(v, (int, float)) for v in coeffs)):
            errors.append("initial.coeffs must be a list of numbers")
            coeffs = None
        else:
            coeffs = tuple(float(v) for v in coeffs)
            if N is not None and len(coeffs) != N:
                errors.append(f"initial.coeffs must have length N={N}, got {len(coeffs)}")
    elif preset not in INITIAL_PRESETS:
        errors.append(f"unknown initial.preset {preset!r} (allowed: {', '.join(INITIAL_PRESETS)})")
    mode0 = _integer(init_sec, "mode", errors, default=0, where="initial.")
    if mode0 is not None and N is not None and not (0 <= mode0 < N):
        errors.append(f"initial.mode must lie in [0, N), got {mode0}")
    init_scale = _number(init_sec, "scale", errors, default=1.0, where="initial.")
    initial = InitialConfig(
        preset=str(preset), mode=0 if mode0 is None else mode0,
        scale=1.0 if init_scale is None else init_scale, coeffs=coeffs,
    )

    forcing = None
    if "forcing" in doc:
        f_sec = _section(doc, "forcing", ("shape", "mode", "direction", "decay", "scale"), errors)
        shape = f_sec.get("shape")
        if shape not in MEMBER_SHAPES:
            errors.append(f"forcing.shape must be one of {MEMBER_SHAPES}, got {shape!r}")
            shape = "power"
        direction = f_sec.get("direction")
        if direction is not None:
            if not (isinstance(direction, list) and all(isinstance(v, (int, float)) for v in direction)):
                errors.append("forcing.direction must be a list of numbers")
                direction = None
            else:
                direction = tuple(float(v) for v in direction)
                if N is not None and len(direction) != N:
                    errors.append(f"forcing.direction must have length N={N}, got {len(direction)}")
        f_mode = _integer(f_sec, "mode", errors, where="forcing.")
        f_decay = _number(f_sec, "decay", errors, where="forcing.")
        given = sum(x is not None for x in (direction, f_mode, f_decay))
        if given != 1:
            errors.append("forcing needs exactly one of mode, direction, or decay")
        if f_mode is not None and N is not None and not (0 <= f_mode < N):
            errors.append(f"forcing.mode must lie in [0, N), got {f_mode}")
        f_scale = _number(f_sec, "scale", errors, default=1.0, where="forcing.")
        forcing = ForcingConfig(
            shape=str(shape), mode=f_mode, direction=direction, decay=f_decay,
            scale=1.0 if f_scale is None else f_scale,
        )
        if alpha is None:
            errors.append("exponents.alpha is required when [forcing] is present")

    noise = None
    if "noise" in doc:
        n_sec = _section(doc, "noise", ("preset", "scale"), errors)
        n_preset = n_sec.get("preset")
        if n_preset not in NOISE_PRESETS:
            errors.append(f"noise.preset must be one of {NOISE_PRESETS}, got {n_preset!r}")
            n_preset = "constant"
        n_scale = _number(n_sec, "scale", errors, default=1.0, where="noise.")
        noise = NoiseConfig(
            preset=str(n_preset), scale=1.0 if n_scale is None else n_scale,
        )

    mesh_sec = _section(doc, "mesh", ("K", "r"), errors)
    K = _integer(mesh_sec, "K", errors, default=256, where="mesh.")
    if K is not None and not K >= 16:
        errors.append(f"need mesh.K >= 16, got {K}")
    default_r = max(2.0, 1.0 / beta) if forcing is not None else 1.0
    r = _number(mesh_sec, "r", errors, default=default_r, where="mesh.")
    if r is not None and not r >= 1.0:
        errors.append(f"need mesh.r >= 1, got {r}")

    mc_sec = _section(doc, "mc", ("replicas", "master_seed"), errors)
    replicas = _integer(mc_sec, "replicas", errors, where="mc.")
    master_seed = _integer(mc_sec, "master_seed", errors, default=0, where="mc.")
    if noise is not None and replicas is None:
        errors.append("mc.replicas is required when [noise] is present")
    if replicas is not None and noise is not None and replicas < 2:
        errors.append(f"need mc.replicas >= 2 with noise present, got {replicas}")
    if replicas is None:
        replicas = 0
    if master_seed is not None and master_seed < 0:
        errors.append(f"need mc.master_seed >= 0, got {master_seed}")

    p_sec = _section(doc, "paths", ("count", "nodes"), errors)
    p_count = _integer(p_sec, "count", errors, default=64, where="paths.")
    p_nodes = _integer(p_sec, "nodes", errors, default=512, where="paths.")
    if p_count is not None and p_count < 1:
        errors.append(f"need paths.count >= 1, got {p_count}")
    if p_nodes is not None and p_nodes < 16:
        errors.append(f"need paths.nodes >= 16, got {p_nodes}")

    o_sec = _section(doc, "outputs", ("paths", "report"), errors)
    outputs = OutputsConfig(paths=o_sec.get("paths"), report=o_sec.get("report"))
    for key in ("paths", "report"):
        val = getattr(outputs, key)
        if val is not None and not isinstance(val, str):
            errors.append(f"outputs.{key} must be a string path")

    cylindrical = noise is not None and noise.preset == "cylindrical-white"

    # exponent gates, collected so that every violation is reported at once
    if forcing is not None and alpha is not None:
        gate = validate_H3(alpha, beta, sigma)
        errors.extend(gate.violations)
    if noise is not None and not cylindrical:
        gate = validate_H4(beta, sigma)
        errors.extend(gate.violations)
        if alpha1 is not None and not (0 <= alpha1 <= 0.5 - sigma + 1e-12):
            errors.append(
                f"need 0 <= alpha1 <= 1/2 - sigma = {0.5 - sigma}, got {alpha1}"
            )
    if forcing is not None and noise is not None and not cylindrical and alpha is not None:
        lo, hi = feasible_alpha_interval(beta, sigma)
        if not lo < hi:
            errors.append(
                f"no alpha satisfies (1+sigma)/4 < alpha <= min(beta/2, 1/2-sigma): "
                f"interval ({lo}, {hi}] is empty for beta={beta}, sigma={sigma}"
            )
        elif alpha > 0.5 - sigma + 1e-12:
            errors.append(
                f"need alpha <= 1/2 - sigma = {0.5 - sigma} for the combined run, "
                f"got {alpha}; feasible interval ({lo}, {hi}]"
            )
    if gamma is not None and not (0 < gamma < sigma):
        errors.append(f"need 0 < gamma < sigma = {sigma}, got {gamma}")
    if nu is not None and not (0 < nu < 0.5):
        errors.append(f"need 0 < nu < 1/2, got {nu}")
    if epsilon is not None and horizon is not None and not (0 < epsilon <= horizon):
        errors.append(f"need 0 < epsilon <= T = {horizon}, got {epsilon}")

    if errors:
        raise ConfigError("; ".join(errors))

    return ScenarioConfig(
        title=title, operator_L=L, operator_N=N, horizon=horizon,
        exponents=Exponents(beta=beta, sigma=sigma, alpha=alpha, alpha1=alpha1,
                            gamma=gamma, nu=nu, epsilon=epsilon),
        initial=initial, forcing=forcing, noise=noise,
        mesh_K=K, mesh_r=r, replicas=replicas, master_seed=master_seed,
        paths_cfg=PathsConfig(count=p_count, nodes=p_nodes), outputs=outputs,
    )


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def build_operator(cfg: ScenarioConfig) -> SpectralOperator:
    return build_cable_operator(L=cfg.operator_L, N=cfg.operator_N)


def build_mesh(cfg: ScenarioConfig) -> GradedMesh:
    return GradedMesh(T=cfg.horizon, K=cfg.mesh_K, r=cfg.mesh_r)


def build_initial(cfg: ScenarioConfig, op: SpectralOperator) -> np.ndarray:
    init = cfg.initial
    if init.coeffs is not None:
        return np.asarray(init.coeffs, dtype=float) * init.scale
    if init.preset == "zero":
        return np.zeros(op.dim)
    if init.preset == "unit-mode":
        xi = np.zeros(op.dim)
        xi[init.mode] = init.scale
        return xi
    if init.preset == "decay":
        v = 1.0 / op.eigenvalues
        return init.scale * v / np.linalg.norm(v)
    raise ConfigError(f"unknown initial preset {init.preset!r}")


def _forcing_direction(fc: ForcingConfig, op: SpectralOperator) -> np.ndarray:
    if fc.direction is not None:
        return np.asarray(fc.direction, dtype=float) * fc.scale
    if fc.mode is not None:
        v = np.zeros(op.dim)
        v[fc.mode] = fc.scale
        return v
    v = op.eigenvalues ** (-float(fc.decay))
    return fc.scale * v / np.linalg.norm(v)


def build_forcing(cfg: ScenarioConfig, op: SpectralOperator) -> Optional[ForcingSpec]:
    if cfg.forcing is None:
        return None
    exps = cfg.exponents
    member = make_member(exps.beta, exps.sigma, cfg.forcing.shape,
                         _forcing_direction(cfg.forcing, op), cfg.horizon)
    return ForcingSpec(handle=member, alpha=exps.alpha, beta=exps.beta,
                       sigma=exps.sigma, description=cfg.forcing.shape)


def build_noise(cfg: ScenarioConfig, op: SpectralOperator) -> Optional[NoiseSpec]:
    if cfg.noise is None:
        return None
    return make_noise(cfg.noise.preset, op, cfg.exponents.beta,
                      cfg.exponents.sigma, cfg.noise.scale)
