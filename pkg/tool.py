# ============================================================================
# Servicio de cajas no-señalizantes
# Description: Capa de servicio compartida por el CLI (cli.py) y el servidor MCP
#              (server.py). Cada función devuelve un dict con success/data o
#              success/error/message.
# ============================================================================
import logging
import os
from fractions import Fraction
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from bell_games import (
    box_from_quantum,
    chsh_game,
    classical_value,
    float_game_value,
    game_value,
    optimal_chsh_strategy,
)
from box_core import BipartiteBox, check_no_signalling, check_normalized, pr_box
from halting_demo import BoundedHaltingSpec, bounded_halting_function, interpret
from ns_compute import correctness_profile, make_fbox, make_noisy_fbox, noisy_spec
from protocol_harness import (
    amplification_plan,
    amplify,
    choose_k,
    export_transcript,
    hoeffding_k_estimate,
    majority_correctness,
    reconcile,
    run_fbox_protocol,
)
from utilities.general import describe_rational, format_decimal, format_rational, parse_rational
from utilities.storage import (
    load_box,
    load_game,
    load_program,
    load_truth_table,
    save_box,
    save_protocol,
    save_transcript,
)
from vandam_compiler import check_protocol, compile, run_compiled

# ============================================================================
# CONFIGURACIÓN Y LOGGING
# ============================================================================
logger = logging.getLogger(__name__)

# Intentar cargar .env si python-dotenv está instalado
try:
    from dotenv import load_dotenv
    load_dotenv()  # carga variables desde .env al entorno
except Exception:
    pass

LAB_CONFIG = {
    "default_seed": int(os.getenv("NSLAB_DEFAULT_SEED", "20240601")),
    "trials": int(os.getenv("NSLAB_TRIALS", "10000")),
    "denominator_cap": int(os.getenv("NSLAB_DENOMINATOR_CAP", str(10**6))),
}

STRATEGIES = ("classical", "quantum-builtin", "pr")


def _error(e: Exception) -> dict:
    logger.error(f"{type(e).__name__}: {e}")
    return {"success": False, "error": type(e).__name__, "message": str(e)}


def _rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(LAB_CONFIG["default_seed"] if seed is None else seed)


def _rational(value: Fraction) -> dict:
    return {"exact": format_rational(value), "decimal": format_decimal(value)}


# ============================================================================
# VERIFICACIÓN DE CAJAS
# ============================================================================

def verify_box_report(box: BipartiteBox) -> dict:
    normalized = check_normalized(box)
    data = {"normalized": normalized, "no_signalling": None, "violations": []}
    if normalized:
        report = check_no_signalling(box)
        data["no_signalling"] = report.holds
        data["violations"] = [v.describe() for v in report.violations]
    data["holds"] = bool(normalized and data["no_signalling"])
    return data


def verify_box(source: str) -> dict:
    """Normalización y no-señalización de un fichero de caja."""
    logger.info(f"Tool: 'verify_box' called with source={source}")
    try:
        box = load_box(source)
        data = verify_box_report(box)
        logger.info(f"✓ Caja verificada: normalizada={data['normalized']}, no-señalizante={data['no_signalling']}")
        return {"success": True, "data": data}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


# ============================================================================
# JUEGOS DE BELL
# ============================================================================

def evaluate_game(game_source: str, strategy: str) -> dict:
    """
    strategy: classical | quantum-builtin | pr | box:<fichero>
    """
    logger.info(f"Tool: 'evaluate_game' called with game={game_source}, strategy={strategy}")
    try:
        game = load_game(game_source)
        data: dict = {"strategy": strategy}
        if strategy == "classical":
            result = classical_value(game)
            data.update(value=_rational(result.value), g=result.g, h=result.h,
                        strategies_checked=result.strategies_checked)
        elif strategy == "quantum-builtin":
            if game != chsh_game():
                raise ValueError("La estrategia cuántica incluida sólo está definida para CHSH")
            quantum = box_from_quantum(optimal_chsh_strategy(), denominator_cap=LAB_CONFIG["denominator_cap"])
            data.update(
                value=_rational(game_value(game, quantum.box)),
                float_value=f"{float_game_value(game, quantum.float_table):.10f}",
                max_rationalization_error=f"{quantum.max_rationalization_error:.3e}",
            )
        elif strategy == "pr":
            data.update(value=_rational(game_value(game, pr_box())))
        elif strategy.startswith("box:"):
            data.update(value=_rational(game_value(game, load_box(strategy[4:]))))
        else:
            raise ValueError(f"Estrategia desconocida {strategy!r}; use {', '.join(STRATEGIES)} o box:<fichero>")
        logger.info(f"✓ Valor del juego: {data['value']['exact']}")
        return {"success": True, "data": data}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


# ============================================================================
# CAJAS f
# ============================================================================

def build_fbox(function_source: str, p: str | None = None, out: str | None = None) -> dict:
    """Caja f exacta (o ruidosa si se da p), verificada y opcionalmente guardada."""
    logger.info(f"Tool: 'build_fbox' called with function={function_source}, p={p}")
    try:
        f = load_truth_table(function_source)
        box = make_fbox(f) if p is None else make_noisy_fbox(noisy_spec(f, parse_rational(p)))
        data = verify_box_report(box)
        profile = correctness_profile(box, f)
        data.update(
            l=f.l,
            m=f.m,
            noisy=p is not None,
            min_correctness=format_rational(min(profile.values())),
            max_correctness=format_rational(max(profile.values())),
        )
        if out:
            data["path"] = str(save_box(box, out))
        return {"success": True, "data": data}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


# ============================================================================
# COMPILACIÓN CON CAJAS PR
# ============================================================================

def compile_function(function_source: str, side: str = "bob", out: str | None = None,
                     check: bool = False, seed: int | None = None) -> dict:
    logger.info(f"Tool: 'compile_function' called with function={function_source}, side={side}")
    try:
        f = load_truth_table(function_source)
        protocol = compile(f, side)
        data = {"l": f.l, "m": f.m, "side": protocol.side, "box_count": protocol.box_count,
                "terms": len(protocol.form.terms)}
        if out:
            data["path"] = str(save_protocol(protocol, out))
        if check:
            result = check_protocol(protocol, _rng(seed))
            data["check"] = {"ok": result.ok, "passed": result.passed, "total": result.total,
                             "failures": [list(pair) for pair in result.failures]}
        logger.info(f"✓ Protocolo compilado: {protocol.box_count} cajas PR")
        return {"success": True, "data": data}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


def run_function(function_source: str, x: str, y: str, side: str = "bob", seed: int | None = None,
                 transcript_path: str | None = None) -> dict:
    """Compila, ejecuta una vez y reconcilia."""
    logger.info(f"Tool: 'run_function' called with function={function_source}, x={x}, y={y}")
    try:
        f = load_truth_table(function_source)
        protocol = compile(f, side)
        run = run_compiled(protocol, x, y, _rng(seed))
        value = reconcile(run.transcript)
        data = {
            "a": run.a,
            "b": run.b,
            "a_xor_b": value,
            "f": f.evaluate(x, y),
            "box_count": protocol.box_count,
            "transcript": export_transcript(run.transcript),
        }
        if transcript_path:
            data["path"] = str(save_transcript(run.transcript, transcript_path))
        return {"success": True, "data": data}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


# ============================================================================
# AMPLIFICACIÓN
# ============================================================================

def amplify_function(function_source: str, p: str, epsilon: str, trials: int | None = None,
                     seed: int | None = None, csv_path: str | None = None) -> dict:
    """
    Elige el menor k impar con corrección exacta ≥ 1−ε y mide la corrección
    empírica repartiendo los ensayos por turnos entre todos los pares (x, y).
    """
    trials = LAB_CONFIG["trials"] if trials is None else trials
    logger.info(f"Tool: 'amplify_function' called with function={function_source}, p={p}, ε={epsilon}, trials={trials}")
    try:
        if trials < 1:
            raise ValueError("trials debe ser ≥ 1")
        f = load_truth_table(function_source)
        p_value, epsilon_value = parse_rational(p), parse_rational(epsilon)
        spec = noisy_spec(f, p_value)
        k = choose_k(p_value, epsilon_value)
        plan = amplification_plan(spec, k, epsilon_value)
        achieved = majority_correctness(p_value, k)

        pairs = f.input_pairs()
        hits = {pair: 0 for pair in pairs}
        counts = {pair: 0 for pair in pairs}
        for trial, child in enumerate(_rng(seed).spawn(trials)):
            x, y = pairs[trial % len(pairs)]
            counts[(x, y)] += 1
            hits[(x, y)] += amplify(plan, x, y, child).bit == f.evaluate(x, y)
        empirical = sum(hits.values()) / trials

        rows = pd.DataFrame(
            [
                {"x": x, "y": y, "trials": counts[(x, y)],
                 "empirical": hits[(x, y)] / counts[(x, y)] if counts[(x, y)] else float("nan"),
                 "exact": format_rational(achieved)}
                for x, y in pairs
            ]
        )
        data = {
            "p": format_rational(p_value),
            "epsilon": format_rational(epsilon_value),
            "k": k,
            "hoeffding_k": hoeffding_k_estimate(p_value, epsilon_value),
            "achieved_correctness": _rational(achieved),
            "empirical_correctness": f"{empirical:.4f}",
            "trials": trials,
        }
        if csv_path:
            Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
            rows.to_csv(csv_path, index=False)
            data["path"] = csv_path
        logger.info(f"✓ k={k}, corrección exacta {describe_rational(achieved)}, empírica {empirical:.4f}")
        return {"success": True, "data": data}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


# ============================================================================
# PARADA ACOTADA
# ============================================================================

def halting_table(program_bits: int, input_bits: int, steps: int, seed: int | None = None) -> dict:
    """Caja f de H_T y reconciliación de una ejecución por cada par (x, y)."""
    logger.info(f"Tool: 'halting_table' called with program_bits={program_bits}, input_bits={input_bits}, T={steps}")
    try:
        spec = BoundedHaltingSpec(step_bound=steps, program_bits=program_bits, input_bits=input_bits)
        f = bounded_halting_function(spec)
        box = make_fbox(f)
        report = verify_box_report(box)
        rng = _rng(seed)
        mismatches = [
            [x, y] for x, y in f.input_pairs()
            if reconcile(run_fbox_protocol(f, x, y, rng)) != f.evaluate(x, y)
        ]
        pairs = len(f.input_pairs())
        data = {
            "pairs": pairs,
            "halting_pairs": sum(f.truth_table),
            "no_signalling": report["no_signalling"],
            "reconciled": pairs - len(mismatches),
            "mismatches": mismatches,
            "holds": report["holds"] and not mismatches,
        }
        return {"success": True, "data": data}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


def interpret_program(program_source: str, input_bits: str, steps: int) -> dict:
    logger.info(f"Tool: 'interpret_program' called with program={program_source}, input={input_bits}, T={steps}")
    try:
        if any(ch not in "01" for ch in input_bits):
            raise ValueError(f"Entrada no binaria: {input_bits!r}")
        verdict = interpret(load_program(program_source), input_bits, steps)
        return {"success": True, "data": {"status": verdict.status, "steps": verdict.steps}}
    except (ValueError, RuntimeError, OSError) as e:
        return _error(e)


# ============================================================================
# ESCENARIOS
# ============================================================================

ScenarioKind = Literal["verify", "game", "fbox", "compile", "run", "amplify", "halting", "interpret"]

# Campos obligatorios por tipo de escenario
REQUIRED_FIELDS: dict[str, tuple[str, ...]] = {
    "verify": ("box_file",),
    "game": ("game_file", "strategy"),
    "fbox": ("function_file",),
    "compile": ("function_file",),
    "run": ("function_file", "x", "y"),
    "amplify": ("function_file", "p", "epsilon"),
    "halting": ("program_bits", "input_bits", "steps"),
    "interpret": ("program_file", "input", "steps"),
}


class Scenario(BaseModel):
    """Parámetros validados de una invocación del CLI o de una tool MCP."""

    model_config = ConfigDict(frozen=True)

    kind: ScenarioKind
    box_file: str | None = None
    game_file: str | None = None
    function_file: str | None = None
    program_file: str | None = None
    strategy: str | None = None
    side: Literal["bob", "alice", "min"] = "bob"
    x: str | None = None
    y: str | None = None
    input: str | None = None
    p: str | None = None
    epsilon: str | None = None
    seed: int | None = None
    trials: int | None = None
    steps: int | None = None
    program_bits: int | None = None
    input_bits: int | None = None
    check: bool = False
    out: str | None = None
    csv: str | None = None
    transcript: str | None = None

    @model_validator(mode="after")
    def _campos_requeridos(self) -> "Scenario":
        missing = [name for name in REQUIRED_FIELDS[self.kind] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"Faltan parámetros para '{self.kind}': {', '.join(missing)}")
        if self.seed is not None and self.seed < 0:
            raise ValueError("La semilla debe ser ≥ 0")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials debe ser ≥ 1")
        if self.steps is not None and self.steps < 1:
            raise ValueError("La cota de pasos debe ser ≥ 1")
        return self


def run_scenario(scenario: Scenario) -> dict:
    s = scenario
    if s.kind == "verify":
        return verify_box(s.box_file)
    if s.kind == "game":
        return evaluate_game(s.game_file, s.strategy)
    if s.kind == "fbox":
        return build_fbox(s.function_file, s.p, s.out)
    if s.kind == "compile":
        return compile_function(s.function_file, s.side, s.out, s.check, s.seed)
    if s.kind == "run":
        return run_function(s.function_file, s.x, s.y, s.side, s.seed, s.transcript)
    if s.kind == "amplify":
        return amplify_function(s.function_file, s.p, s.epsilon, s.trials, s.seed, s.csv)
    if s.kind == "halting":
        return halting_table(s.program_bits, s.input_bits, s.steps, s.seed)
    return interpret_program(s.program_file, s.input, s.steps)


def scenario_result(**fields) -> dict:
    """Valida los parámetros y ejecuta; un escenario inválido se devuelve como error."""
    try:
        scenario = Scenario(**fields)
    except ValueError as e:
        return _error(e)
    return run_scenario(scenario)
