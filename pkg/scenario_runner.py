"""
Scenario runner for the complex-action lab
Registry of scenario kinds, builders that turn parameter blocks into domain
objects, and runners that produce summaries, in-run checks and tables
"""

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from action_core import ComplexPotential, LatticeConfig, action, is_integer, normalized_weights
from classical import find_classical_solutions, select_realized
from config import SCENARIO_DEFAULTS, SWEEPABLE, Config, ScenarioConfig
from errors import ConfigurationError
from parallel import make_rng, trial_seed
from propagator import (
    ENGINE_ACTION,
    ENGINE_SPLIT_STEP,
    brute_force_amplitude,
    count_enumerated_paths,
    propagator_matrix,
    total_probability,
)
from scenarios import (
    DoubleSlitSetup,
    HiggsBranch,
    HiggsToySetup,
    higgs_suppression,
    point_branch_visibility,
    slit_amplitudes,
    visibility,
)
from selection import (
    NOISE_GUMBEL,
    NOISE_KINDS,
    NOISE_NONE,
    Branch,
    NoiseModel,
    born_probabilities,
    dominance_ratio,
    outcome_distribution,
    win_probability,
)
from tape import (
    SubstitutionSystem,
    census,
    census_history,
    count_substructures,
    dominant_eigenvalue,
    expand,
    fit_complex_exponential,
    random_seed_word,
    substitution_matrix,
)

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-10
UNITARITY_TOLERANCE = 1e-10
SUPPRESSION_TOLERANCE = 1e-8
POINT_BRANCH_TOLERANCE = 1e-6
EIGENVALUE_TOLERANCE = 1e-6
EIGENVALUE_GAP = 1e-3
FREQUENCY_SIGMAS = 4.0


@dataclass
class Check:
    """An invariant verified during a run."""

    name: str
    passed: bool
    detail: str = ""


@dataclass
class Table:
    """Rows destined for one CSV file."""

    name: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)


@dataclass
class ScenarioResult:
    kind: str
    summary: Dict[str, Any] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)
    tables: List[Table] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class ScenarioSpec:
    """Registry entry of one scenario kind."""

    kind: str
    description: str
    build: Callable[[Dict[str, Any], int, Config], Dict[str, Any]]
    run: Callable[[Dict[str, Any], ScenarioConfig, Config], ScenarioResult]
    tables: Dict[str, str]
    sweep_columns: Tuple[str, ...]

    @property
    def sweepable(self) -> Tuple[str, ...]:
        return SWEEPABLE[self.kind]

    @property
    def defaults(self) -> Dict[str, Any]:
        return SCENARIO_DEFAULTS[self.kind]


def _lattice(params: Dict[str, Any]) -> LatticeConfig:
    return LatticeConfig(
        n_t=params["n_t"],
        dt=params["dt"],
        x_min=params["x_min"],
        dx=params["dx"],
        n_x=params["n_x"],
        mass=params["mass"],
        hbar=params["hbar"],
    )


def _require(condition: bool, message: str, name: str) -> None:
    if not condition:
        raise ConfigurationError(message, field=name)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _number(value: Any, name: str) -> float:
    _require(_is_number(value), f"expected a finite number, got {value!r}", name)
    return float(value)


def _pair(value: Any, name: str) -> Tuple[float, float]:
    ok = isinstance(value, (list, tuple)) and len(value) == 2
    ok = ok and all(_is_number(v) for v in value)
    _require(ok, f"expected two finite numbers, got {value!r}", name)
    return float(value[0]), float(value[1])


# propagator-check


def _build_propagator_check(params: Dict[str, Any], seed: int, settings: Config) -> Dict[str, Any]:
    lattice = _lattice(params)
    _require(lattice.n_x <= settings.max_transfer_sites, f"at most {settings.max_transfer_sites} sites", "n_x")
    degree = params["degree"]
    _require(is_integer(degree) and 0 <= degree <= 6, f"must be an integer in [0, 6], got {degree!r}", "degree")
    scale = params["coefficient_scale"]
    _require(math.isfinite(scale) and scale >= 0, f"must be a finite number >= 0, got {scale!r}", "coefficient_scale")

    rng = make_rng(trial_seed(seed, 0))
    real = scale * rng.normal(size=degree + 1)
    imag = scale * rng.normal(size=degree + 1)
    pot = ComplexPotential.from_parts(real=real.tolist(), imag=imag.tolist())
    # Im V = -scale*(1 + x^2) <= 0 everywhere
    decaying = ComplexPotential.from_parts(real=real.tolist(), imag=[-scale, 0.0, -scale])
    return {"lattice": lattice, "potential": pot, "decaying": decaying}


def _run_propagator_check(built: Dict[str, Any], cfg: ScenarioConfig, settings: Config) -> ScenarioResult:
    lattice, pot = built["lattice"], built["potential"]
    result = ScenarioResult(cfg.kind)

    transfer = propagator_matrix(lattice, pot, engine=ENGINE_ACTION)
    rows = []
    max_abs = max_rel = 0.0
    for x_i in range(lattice.n_x):
        for x_f in range(lattice.n_x):
            brute = brute_force_amplitude(
                x_i, x_f, lattice, pot, cap=settings.enumeration_cap, workers=settings.workers
            )
            fast = complex(transfer[x_f, x_i])
            diff = abs(brute - fast)
            max_abs = max(max_abs, diff)
            max_rel = max(max_rel, diff / max(1.0, abs(brute)))
            rows.append(
                {
                    "x_i": x_i,
                    "x_f": x_f,
                    "brute_re": brute.real,
                    "brute_im": brute.imag,
                    "transfer_re": fast.real,
                    "transfer_im": fast.imag,
                    "abs_diff": diff,
                }
            )
    result.tables.append(
        Table("amplitudes.csv", ["x_i", "x_f", "brute_re", "brute_im", "transfer_re", "transfer_im", "abs_diff"], rows)
    )

    unitary = total_probability(lattice, pot.real_part(), engine=ENGINE_SPLIT_STEP)
    decaying = total_probability(lattice, built["decaying"], engine=ENGINE_SPLIT_STEP)
    result.tables.append(
        Table(
            "total_probability.csv",
            ["x_i", "real_potential", "decaying_potential"],
            [
                {"x_i": k, "real_potential": float(u), "decaying_potential": float(d)}
                for k, (u, d) in enumerate(zip(unitary, decaying))
            ],
        )
    )

    unitarity_defect = float(np.max(np.abs(unitary - 1.0)))
    max_decaying = float(np.max(decaying))
    result.summary = {
        "n_x": lattice.n_x,
        "n_t": lattice.n_t,
        "paths_per_pair": count_enumerated_paths(0, 0, lattice),
        "max_abs_diff": max_abs,
        "max_rel_diff": max_rel,
        "unitarity_defect": unitarity_defect,
        "max_decaying_probability": max_decaying,
        "real_coefficients": pot.real_coefficients.tolist(),
        "imag_coefficients": pot.imag_coefficients.tolist(),
    }
    result.checks = [
        Check("oracle_equivalence", max_rel <= ORACLE_TOLERANCE, f"max relative difference {max_rel:.3e}"),
        Check(
            "unitary_limit", unitarity_defect <= UNITARITY_TOLERANCE, f"max |sum |K|^2 - 1| = {unitarity_defect:.3e}"
        ),
        Check("norm_decay", max_decaying <= 1.0 + UNITARITY_TOLERANCE, f"max sum |K|^2 = {max_decaying!r}"),
    ]
    return result


# classical-select


def _build_classical_select(params: Dict[str, Any], seed: int, settings: Config) -> Dict[str, Any]:
    lattice = _lattice(params)
    boundary = _pair(params["boundary"], "params.boundary")
    minimum = params["well_minimum"]
    _require(math.isfinite(minimum) and minimum > 0, f"must be positive, got {minimum!r}", "well_minimum")
    n_seeds = params["n_seeds"]
    _require(is_integer(n_seeds) and n_seeds >= 1, f"must be an integer >= 1, got {n_seeds!r}", "n_seeds")

    c = params["imag_scale"]
    # Im V = -c*(x + a)^2/(4a^2): zero in the left well, -c in the right one
    a = minimum
    imag = [-c / 4.0, -c / (2.0 * a), -c / (4.0 * a * a)]
    pot = ComplexPotential.double_well(minimum, params["well_scale"]) + ComplexPotential.from_parts(imag=imag)
    return {"lattice": lattice, "potential": pot, "boundary": boundary, "n_seeds": n_seeds}


def _run_classical_select(built: Dict[str, Any], cfg: ScenarioConfig, settings: Config) -> ScenarioResult:
    lattice, pot = built["lattice"], built["potential"]
    solutions = find_classical_solutions(
        built["boundary"],
        lattice,
        pot,
        built["n_seeds"],
        seed=cfg.seed,
        tolerance=settings.solver_tolerance,
        dedup_tolerance=settings.dedup_tolerance,
        max_iterations=settings.newton_max_iterations,
        max_halvings=settings.newton_max_halvings,
        workers=settings.workers,
    )
    s_i = [s.s_i for s in solutions]
    selected = select_realized(solutions.solutions)
    flipped_pot = pot.flip_imag()
    flipped_s_i = [action(s.path(), lattice, flipped_pot).s_i for s in solutions]
    flipped = select_realized(flipped_s_i)

    result = ScenarioResult(cfg.kind)
    result.summary = {
        "n_solutions": len(solutions),
        "n_failed_seeds": len(solutions.failures),
        "selected_index": selected,
        "selected_s_i": s_i[selected],
        "flipped_selected_index": flipped,
    }

    strict = len(s_i) >= 2 and sorted(s_i)[0] < sorted(s_i)[1]
    result.checks.append(
        Check(
            "residuals_within_tolerance",
            all(s.residual_norm <= settings.solver_tolerance for s in solutions),
            f"max residual {max(s.residual_norm for s in solutions):.3e}",
        )
    )
    result.checks.append(
        Check(
            "rescale_invariance",
            select_realized([3.7 * v + 11.0 for v in s_i]) == selected,
            "argmin unchanged under positive rescaling and shift",
        )
    )
    if strict:
        result.checks.append(
            Check(
                "sign_flip_reverses_selection",
                flipped != selected and flipped == int(np.argmax(s_i)),
                f"selected {selected}, after flipping Im V {flipped}",
            )
        )

    result.tables.append(
        Table(
            "solutions.csv",
            ["index", "seed_index", "s_r", "s_i", "residual_norm", "min_position", "max_position", "selected"],
            [
                {
                    "index": k,
                    "seed_index": s.seed_index,
                    "s_r": s.action.s_r,
                    "s_i": s.s_i,
                    "residual_norm": s.residual_norm,
                    "min_position": min(s.positions),
                    "max_position": max(s.positions),
                    "selected": k == selected,
                }
                for k, s in enumerate(solutions)
            ],
        )
    )
    realized = solutions[selected]
    result.tables.append(
        Table(
            "selected_path.csv",
            ["step", "time", "position"],
            [{"step": j, "time": j * lattice.dt, "position": x} for j, x in enumerate(realized.positions)],
        )
    )
    return result


# measurement


def _noise_model(spec: Dict[str, Any]) -> NoiseModel:
    allowed = ("kind", "location", "scale", "n_stages")
    for key in spec:
        _require(key in allowed, f"unknown noise key, expected one of {allowed}", f"params.noise.{key}")
    kind = spec.get("kind", NOISE_NONE)
    _require(kind in NOISE_KINDS, f"expected one of {NOISE_KINDS}, got {kind!r}", "params.noise.kind")
    n_stages = spec.get("n_stages", 1)
    _require(is_integer(n_stages), f"expected an integer, got {n_stages!r}", "params.noise.n_stages")
    return NoiseModel(
        kind=kind,
        location=_number(spec.get("location", 0.0), "params.noise.location"),
        scale=_number(spec.get("scale", 1.0), "params.noise.scale"),
        n_stages=n_stages,
    )


def _build_measurement(params: Dict[str, Any], seed: int, settings: Config) -> Dict[str, Any]:
    labels, amplitudes, bases = params["labels"], params["amplitudes"], params["base_s_i"]
    _require(len(labels) == len(amplitudes) == len(bases), "labels, amplitudes and base_s_i differ in length", "params")
    noise = _noise_model(params["noise"])
    branches = []
    for k, (label, amp, base) in enumerate(zip(labels, amplitudes, bases)):
        _require(isinstance(label, str) and label, f"expected a non-empty string, got {label!r}", f"params.labels.{k}")
        amplitude = complex(*_pair(amp, f"params.amplitudes.{k}"))
        branches.append(Branch(label, amplitude, _number(base, f"params.base_s_i.{k}"), noise))
    n_trials, hbar = params["n_trials"], params["hbar"]
    _require(is_integer(n_trials) and n_trials >= 1, f"must be an integer >= 1, got {n_trials!r}", "n_trials")
    _require(math.isfinite(hbar) and hbar > 0, f"must be positive, got {hbar!r}", "hbar")
    if not branches:
        raise ConfigurationError("at least one branch is required", field="labels")
    born_probabilities(branches)
    return {"branches": branches, "n_trials": n_trials, "hbar": float(hbar)}


def _predicted_probabilities(branches: Sequence[Branch], hbar: float) -> Optional[List[float]]:
    if len(branches) == 1:
        return [1.0]
    if len(branches) == 2:
        p = win_probability(branches, hbar)
        return [p, 1.0 - p]
    noise = branches[0].noise
    if noise.kind == NOISE_GUMBEL and noise.scale == 1.0:
        return normalized_weights([b.log_weight(hbar) for b in branches]).tolist()
    return None


def _run_measurement(built: Dict[str, Any], cfg: ScenarioConfig, settings: Config) -> ScenarioResult:
    branches, n_trials, hbar = built["branches"], built["n_trials"], built["hbar"]
    frequencies = outcome_distribution(branches, n_trials, cfg.seed, hbar, settings.workers)
    born = born_probabilities(branches)
    predicted = _predicted_probabilities(branches, hbar)

    result = ScenarioResult(cfg.kind)
    result.summary = {
        "n_trials": n_trials,
        "noise": branches[0].noise.kind,
        "most_frequent": max(frequencies, key=lambda label: frequencies[label]),
        "frequencies": frequencies,
        "born_probabilities": born,
    }
    if len(branches) >= 2:
        result.summary["dominance_ratio"] = dominance_ratio(branches, hbar)
    first = branches[0].label
    result.summary["first_frequency"] = frequencies[first]

    total = math.fsum(frequencies.values())
    result.checks.append(Check("frequencies_sum_to_one", abs(total - 1.0) <= 1e-12, f"sum {total!r}"))
    if predicted is not None:
        worst = 0.0
        for b, p in zip(branches, predicted):
            sigma = math.sqrt(max(p * (1.0 - p), 0.0) / n_trials)
            allowed = FREQUENCY_SIGMAS * sigma + 1.0 / n_trials
            worst = max(worst, abs(frequencies[b.label] - p) / allowed)
        result.checks.append(
            Check(
                "frequencies_match_prediction",
                worst <= 1.0,
                f"largest deviation is {worst:.3f} of the {FREQUENCY_SIGMAS:g}-sigma band",
            )
        )

    rows = []
    for k, b in enumerate(branches):
        p = frequencies[b.label]
        rows.append(
            {
                "label": b.label,
                "count": int(round(p * n_trials)),
                "frequency": p,
                "std_error": math.sqrt(p * (1.0 - p) / n_trials),
                "born_probability": born[b.label],
                "predicted_probability": predicted[k] if predicted is not None else None,
            }
        )
    result.tables.append(
        Table(
            "outcomes.csv",
            ["label", "count", "frequency", "std_error", "born_probability", "predicted_probability"],
            rows,
        )
    )
    return result


# double-slit


def _build_double_slit(params: Dict[str, Any], seed: int, settings: Config) -> Dict[str, Any]:
    lattice = _lattice(params)
    _require(lattice.n_x <= settings.max_transfer_sites, f"at most {settings.max_transfer_sites} sites", "n_x")
    _require(lattice.n_x % 2 == 1, "the symmetric double slit needs an odd number of sites", "n_x")
    width, separation = params["width"], params["separation"]
    _require(is_integer(width) and width >= 1, f"must be an integer >= 1, got {width!r}", "width")
    _require(
        is_integer(separation) and separation > width,
        f"must be an integer larger than the width, got {separation!r}",
        "separation",
    )
    half_width = params["screen_half_width"]
    centre = (lattice.n_x - 1) // 2
    _require(
        is_integer(half_width) and 1 <= half_width <= centre,
        f"must be an integer in [1, {centre}], got {half_width!r}",
        "screen_half_width",
    )
    setup = DoubleSlitSetup.symmetric(
        lattice,
        slit_time=params["slit_time"],
        separation=separation,
        width=width,
        duration=params["duration"],
        source_width=float(params["source_width"]),
        engine=params["engine"],
        screen_half_width=half_width,
    ).with_gap(float(params["gap"]))
    return {"setup": setup}


def _run_double_slit(built: Dict[str, Any], cfg: ScenarioConfig, settings: Config) -> ScenarioResult:
    setup: DoubleSlitSetup = built["setup"]
    lattice = setup.lattice
    amp_a, amp_b = slit_amplitudes(setup)
    intensity = np.abs(amp_a + amp_b) ** 2
    vis = visibility(intensity, setup.screen())

    r = setup.suppression
    point = point_branch_visibility(setup.gap, lattice.hbar)

    result = ScenarioResult(cfg.kind)
    result.summary = {
        "gap": setup.gap,
        "depth": setup.depth,
        "duration": setup.duration,
        "suppression": r,
        "visibility": vis.value,
        "flat": vis.flat,
        "fringes_resolved": vis.fringes_resolved,
        "point_branch_visibility": point,
        "screen_window": list(setup.screen()),
    }

    _, amp_b_free = slit_amplitudes(setup.with_depth(0.0)) if setup.depth > 0 else (amp_a, amp_b)
    norm_free = float(np.linalg.norm(amp_b_free))
    measured = float(np.linalg.norm(amp_b)) / norm_free if norm_free > 0 else 0.0
    result.checks.append(
        Check(
            "slit_b_suppression",
            norm_free > 0 and abs(measured - r) <= SUPPRESSION_TOLERANCE * r,
            f"amplitude ratio {measured!r}, expected {r!r}",
        )
    )
    expected_point = 2.0 * r / (1.0 + r * r)
    result.checks.append(
        Check(
            "point_branch_formula",
            abs(point - expected_point) <= POINT_BRANCH_TOLERANCE,
            f"{point!r} vs 2r/(1+r^2) = {expected_point!r}",
        )
    )
    result.checks.append(Check("visibility_in_range", 0.0 <= vis.value <= 1.0, f"visibility {vis.value!r}"))

    grid = lattice.grid()
    result.tables.append(
        Table(
            "pattern.csv",
            ["site", "x", "intensity", "intensity_a", "intensity_b"],
            [
                {
                    "site": k,
                    "x": float(grid[k]),
                    "intensity": float(intensity[k]),
                    "intensity_a": float(abs(amp_a[k]) ** 2),
                    "intensity_b": float(abs(amp_b[k]) ** 2),
                }
                for k in range(lattice.n_x)
            ],
        )
    )
    return result


# higgs-toy


def _build_higgs_toy(params: Dict[str, Any], seed: int, settings: Config) -> Dict[str, Any]:
    lattice = _lattice(params)
    branches = []
    for k, spec in enumerate(params["branches"]):
        path = f"params.branches.{k}"
        _require(isinstance(spec, dict) and set(spec) == {"label", "boundary"}, "expected label and boundary", path)
        label = spec["label"]
        _require(isinstance(label, str) and label, f"expected a non-empty string, got {label!r}", f"{path}.label")
        branches.append(HiggsBranch(label, _pair(spec["boundary"], f"{path}.boundary")))
    n_seeds = params["n_seeds"]
    _require(is_integer(n_seeds) and n_seeds >= 1, f"must be an integer >= 1, got {n_seeds!r}", "n_seeds")
    setup = HiggsToySetup(lattice, float(params["m2_r"]), float(params["m2_i"]), tuple(branches))
    return {"setup": setup, "n_seeds": n_seeds}


def _run_higgs_toy(built: Dict[str, Any], cfg: ScenarioConfig, settings: Config) -> ScenarioResult:
    setup: HiggsToySetup = built["setup"]
    n_seeds = built["n_seeds"]
    report = higgs_suppression(setup, n_seeds, cfg.seed, settings.workers)

    result = ScenarioResult(cfg.kind)
    result.summary = {
        "m2_r": setup.m2_r,
        "m2_i": setup.m2_i,
        "selected_label": report.selected_label,
        "selected_index": report.selected_index,
        "delta_s_i": report.delta_s_i,
        "weight_ratio": report.weight_ratio,
    }

    rescaled = higgs_suppression(replace(setup, m2_i=2.5 * setup.m2_i), n_seeds, cfg.seed, settings.workers)
    result.checks.append(
        Check(
            "rescale_invariance",
            rescaled.selected_index == report.selected_index,
            f"m2_i x 2.5 selects {rescaled.selected_label}",
        )
    )
    if report.delta_s_i > 0:
        flipped = higgs_suppression(replace(setup, m2_i=-setup.m2_i), n_seeds, cfg.seed, settings.workers)
        result.checks.append(
            Check(
                "sign_flip_reverses_selection",
                flipped.selected_index != report.selected_index,
                f"-m2_i selects {flipped.selected_label}",
            )
        )

    result.tables.append(
        Table(
            "branches.csv",
            ["label", "boundary_start", "boundary_end", "field_norm", "s_i", "selected"],
            [
                {
                    "label": b.label,
                    "boundary_start": b.boundary[0],
                    "boundary_end": b.boundary[1],
                    "field_norm": report.field_norms[k],
                    "s_i": report.branch_actions[k],
                    "selected": k == report.selected_index,
                }
                for k, b in enumerate(setup.branches)
            ],
        )
    )
    return result


# tape


def _build_tape(params: Dict[str, Any], seed: int, settings: Config) -> Dict[str, Any]:
    alphabet = tuple(params["alphabet"])
    seed_word = params["seed_word"]
    if seed_word is None:
        seed_word = random_seed_word(alphabet, params["seed_length"], trial_seed(seed, 0))
    system = SubstitutionSystem(alphabet, params["rules"], seed_word, bool(params["non_expanding"]))
    generations = params["generations"]
    _require(
        is_integer(generations) and generations >= 5,
        f"must be an integer >= 5 so the fit sees 6 generations, got {generations!r}",
        "generations",
    )
    _require(params["fit_symbol"] in alphabet, f"{params['fit_symbol']!r} is not in the alphabet", "fit_symbol")
    patterns = params["patterns"]
    count_substructures("", patterns)
    return {"system": system, "generations": generations, "patterns": patterns, "fit_symbol": params["fit_symbol"]}


def _run_tape(built: Dict[str, Any], cfg: ScenarioConfig, settings: Config) -> ScenarioResult:
    system: SubstitutionSystem = built["system"]
    generations = built["generations"]
    history = census_history(system, generations)
    word = expand(system, generations, settings.expansion_cap)
    counts = count_substructures(word, built["patterns"], workers=settings.workers)

    symbol_index = system.alphabet.index(built["fit_symbol"])
    fit = fit_complex_exponential([row[symbol_index] for row in history])
    eigenvalue = dominant_eigenvalue(system)
    moduli = sorted(np.abs(np.linalg.eigvals(substitution_matrix(system).astype(float))), reverse=True)
    gap = moduli[0] - moduli[1] if len(moduli) > 1 else math.inf

    lengths = [sum(row) for row in history]
    result = ScenarioResult(cfg.kind)
    result.summary = {
        "seed_word": system.seed_word,
        "generations": generations,
        "final_length": len(word),
        "final_growth_ratio": lengths[-1] / lengths[-2],
        "lambda_re": fit.lam.real,
        "lambda_im": fit.lam.imag,
        "lambda_abs": abs(fit.lam),
        "lambda_arg": cmath.phase(fit.lam),
        "coefficient_re": fit.coefficient.real,
        "coefficient_im": fit.coefficient.imag,
        "fit_residual": fit.residual,
        "recurrence_order": fit.order,
        "dominant_eigenvalue_re": eigenvalue.real,
        "dominant_eigenvalue_im": eigenvalue.imag,
        "pattern_counts": counts,
    }

    predicted = history[-1]
    measured = census(word, system.alphabet)
    result.checks.append(
        Check("census_matches_prediction", measured == predicted, f"measured {measured}, predicted {predicted}")
    )
    if gap > EIGENVALUE_GAP:
        distance = abs(fit.lam - eigenvalue)
        result.checks.append(
            Check("fit_matches_eigenvalue", distance <= EIGENVALUE_TOLERANCE, f"|lambda - eigenvalue| = {distance:.3e}")
        )

    columns = ["generation", "length"] + [f"count_{s}" for s in system.alphabet] + ["growth_ratio"]
    rows = []
    for g, row in enumerate(history):
        entry: Dict[str, Any] = {"generation": g, "length": lengths[g]}
        entry.update({f"count_{s}": c for s, c in zip(system.alphabet, row)})
        entry["growth_ratio"] = lengths[g] / lengths[g - 1] if g > 0 else None
        rows.append(entry)
    result.tables.append(Table("counts.csv", columns, rows))
    result.tables.append(
        Table("patterns.csv", ["pattern", "count"], [{"pattern": p, "count": c} for p, c in counts.items()])
    )
    return result


SCENARIOS: Dict[str, ScenarioSpec] = {
    spec.kind: spec
    for spec in (
        ScenarioSpec(
            "propagator-check",
            "Brute-force path sums against transfer matrices on a random complex potential",
            _build_propagator_check,
            _run_propagator_check,
            {
                "amplitudes.csv": "x_i, x_f, brute_re, brute_im, transfer_re, transfer_im, abs_diff",
                "total_probability.csv": "x_i, real_potential, decaying_potential",
            },
            ("max_rel_diff", "unitarity_defect", "max_decaying_probability"),
        ),
        ScenarioSpec(
            "classical-select",
            "Classical solutions of a double well and selection by smallest imaginary action",
            _build_classical_select,
            _run_classical_select,
            {
                "solutions.csv": "index, seed_index, s_r, s_i, residual_norm, min_position, max_position, selected",
                "selected_path.csv": "step, time, position",
            },
            ("n_solutions", "selected_index", "selected_s_i", "flipped_selected_index"),
        ),
        ScenarioSpec(
            "measurement",
            "Outcome statistics of measurement branches under future imaginary-action noise",
            _build_measurement,
            _run_measurement,
            {"outcomes.csv": "label, count, frequency, std_error, born_probability, predicted_probability"},
            ("most_frequent", "first_frequency", "dominance_ratio"),
        ),
        ScenarioSpec(
            "double-slit",
            "Lattice double slit with an imaginary potential behind slit B",
            _build_double_slit,
            _run_double_slit,
            {"pattern.csv": "site, x, intensity, intensity_a, intensity_b"},
            ("gap", "suppression", "visibility", "point_branch_visibility", "flat"),
        ),
        ScenarioSpec(
            "higgs-toy",
            "Single field mode with complex mass squared choosing between driven histories",
            _build_higgs_toy,
            _run_higgs_toy,
            {"branches.csv": "label, boundary_start, boundary_end, field_norm, s_i, selected"},
            ("selected_label", "delta_s_i", "weight_ratio"),
        ),
        ScenarioSpec(
            "tape",
            "Substitution system driven by a seed word, counts against matrix predictions",
            _build_tape,
            _run_tape,
            {
                "counts.csv": "generation, length, count_<symbol> for every symbol, growth_ratio",
                "patterns.csv": "pattern, count",
            },
            ("final_length", "lambda_re", "lambda_im", "fit_residual"),
        ),
    )
}


def get_scenario(kind: str) -> ScenarioSpec:
    if kind not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {kind!r}, expected one of {tuple(SCENARIOS)}", field="scenario")
    return SCENARIOS[kind]


def build_scenario(cfg: ScenarioConfig, settings: Config) -> Dict[str, Any]:
    """Construct the domain objects of a scenario; raises ConfigurationError on bad ranges."""
    return get_scenario(cfg.kind).build(cfg.merged_params(), cfg.seed, settings)


class ScenarioRunner:
    """Runs scenario configs with shared ambient settings."""

    def __init__(self, settings: Optional[Config] = None):
        self.settings = settings or Config()

    def run(self, cfg: ScenarioConfig) -> ScenarioResult:
        """
        Run one scenario.

        Args:
            cfg: Validated scenario config

        Returns:
            ScenarioResult with summary, checks and tables

        Raises:
            ConfigurationError: Bad parameter ranges
            CapExceededError: A size cap would be exceeded
            NumericalError: A numerical procedure failed
        """
        spec = get_scenario(cfg.kind)
        built = spec.build(cfg.merged_params(), cfg.seed, self.settings)
        logger.info("Running scenario %s (seed %d, %d workers)", cfg.kind, cfg.seed, self.settings.workers)
        result = spec.run(built, cfg, self.settings)
        for check in result.checks:
            level = logging.INFO if check.passed else logging.WARNING
            logger.log(level, "Check %s: %s (%s)", check.name, "passed" if check.passed else "FAILED", check.detail)
        return result
