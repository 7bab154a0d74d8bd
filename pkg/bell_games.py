# ============================================================================
# bell_games.py
# Description: Juegos de Bell (CHSH y generales) y su valor frente a estrategias
#              clásicas, cuánticas, cajas PR y cajas no-señalizantes arbitrarias.
# ============================================================================
import itertools
import logging
import math
from fractions import Fraction
from typing import Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from box_core import (
    Alphabet,
    AlphabetMismatchError,
    BipartiteBox,
    NotNormalizedError,
    check_normalized,
    deterministic_box,
)
from utilities.general import format_rational, parse_rational

logger = logging.getLogger(__name__)

VALIDITY_TOLERANCE = 1e-12
VALUE_TOLERANCE = 1e-9
DENOMINATOR_CAP = 10**6
MAX_DETERMINISTIC_STRATEGIES = 2**24


class GameDefinitionError(ValueError):
    """Documento de juego incoherente: pares repetidos, pesos que no suman 1 o predicado fuera de alfabetos."""


class StrategyError(ValueError):
    """Estrategia cuántica inválida o tabla no racionalizable dentro de la tolerancia."""


class EnumerationLimitError(ValueError):
    """Demasiadas estrategias deterministas para enumerarlas."""


# ============================================================================
# JUEGOS
# ============================================================================

class BellGame(BaseModel):
    """
    Distribución de entradas π(x,y) y predicado ganador V(a,b,x,y).
    El predicado se guarda como el conjunto de tuplas (a, b, x, y) ganadoras.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    inputs_a: Alphabet
    inputs_b: Alphabet
    outputs_a: Alphabet
    outputs_b: Alphabet
    input_dist: dict[tuple[str, str], Fraction]
    predicate: frozenset[tuple[str, str, str, str]]

    @model_validator(mode="after")
    def _distribucion_valida(self) -> "BellGame":
        pairs = set(itertools.product(self.inputs_a, self.inputs_b))
        if set(self.input_dist) != pairs:
            raise ValueError("input_dist debe cubrir exactamente todos los pares (x, y)")
        if any(not isinstance(w, Fraction) or w < 0 for w in self.input_dist.values()):
            raise ValueError("input_dist debe tener pesos racionales no negativos")
        if sum(self.input_dist.values()) != 1:
            raise ValueError(f"input_dist suma {format_rational(sum(self.input_dist.values()))}, no 1")
        for a, b, x, y in self.predicate:
            if a not in self.outputs_a or b not in self.outputs_b or x not in self.inputs_a or y not in self.inputs_b:
                raise ValueError(f"Tupla del predicado fuera de los alfabetos: {(a, b, x, y)}")
        return self

    def wins(self, a: str, b: str, x: str, y: str) -> bool:
        return (a, b, x, y) in self.predicate


def make_game(inputs_a: Alphabet, inputs_b: Alphabet, outputs_a: Alphabet, outputs_b: Alphabet,
              input_dist: Mapping[tuple[str, str], Fraction], rule) -> BellGame:
    """Construye el juego evaluando rule(a, b, x, y) -> bool sobre todas las tuplas."""
    predicate = frozenset(
        (a, b, x, y)
        for x, y, a, b in itertools.product(inputs_a, inputs_b, outputs_a, outputs_b)
        if rule(a, b, x, y)
    )
    return BellGame(inputs_a=inputs_a, inputs_b=inputs_b, outputs_a=outputs_a, outputs_b=outputs_b,
                    input_dist=dict(input_dist), predicate=predicate)


def uniform_input_dist(inputs_a: Alphabet, inputs_b: Alphabet) -> dict[tuple[str, str], Fraction]:
    weight = Fraction(1, len(inputs_a) * len(inputs_b))
    return {(x, y): weight for x, y in itertools.product(inputs_a, inputs_b)}


def chsh_game() -> BellGame:
    """CHSH: alfabetos binarios, π uniforme y predicado a⊕b = x·y."""
    binary = Alphabet.bits(1)
    return make_game(binary, binary, binary, binary, uniform_input_dist(binary, binary),
                     lambda a, b, x, y: int(a) ^ int(b) == int(x) & int(y))


def _check_compatible(game: BellGame, box: BipartiteBox) -> None:
    if (game.inputs_a != box.inputs_a or game.inputs_b != box.inputs_b
            or game.outputs_a != box.outputs_a or game.outputs_b != box.outputs_b):
        raise AlphabetMismatchError("Los alfabetos del juego y de la caja no coinciden")


def game_value(game: BellGame, box: BipartiteBox) -> Fraction:
    """Σ_{x,y} π(x,y) Σ_{a,b} V(a,b,x,y) P[a,b|x,y], exacto."""
    _check_compatible(game, box)
    if not check_normalized(box):
        raise NotNormalizedError("game_value requiere una caja normalizada")
    value = Fraction(0)
    for a, b, x, y in game.predicate:
        value += game.input_dist[(x, y)] * box.p(x, y, a, b)
    return value


def chsh_expression(box: BipartiteBox) -> Fraction:
    """La forma de la desigualdad: ¼ Σ_{x,y} Σ_a P[a, b = x·y ⊕ a | x, y]."""
    binary = Alphabet.bits(1)
    if not (box.inputs_a == box.inputs_b == box.outputs_a == box.outputs_b == binary):
        raise AlphabetMismatchError("La expresión CHSH requiere alfabetos binarios")
    total = Fraction(0)
    for x, y, a in itertools.product("01", repeat=3):
        b = str((int(x) & int(y)) ^ int(a))
        total += box.p(x, y, a, b)
    return total / 4


# ============================================================================
# ESTRATEGIAS CLÁSICAS
# ============================================================================

class ClassicalResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: Fraction
    g: dict[str, str]
    h: dict[str, str]
    strategies_checked: int


def deterministic_strategy_box(game: BellGame, g: Mapping[str, str], h: Mapping[str, str]) -> BipartiteBox:
    return deterministic_box(g, h, game.inputs_a, game.inputs_b, game.outputs_a, game.outputs_b)


def classical_value(game: BellGame) -> ClassicalResult:
    """
    Máximo exacto de game_value sobre estrategias deterministas a = g(x), b = h(y).
    Se recorren todas las g en orden lexicográfico; para cada g el valor se separa
    por y, así que el mejor h se elige columna a columna (primer máximo).
    Empates: gana el (g, h) lexicográficamente menor.
    """
    count = len(game.outputs_a) ** len(game.inputs_a) * len(game.outputs_b) ** len(game.inputs_b)
    if count > MAX_DETERMINISTIC_STRATEGIES:
        raise EnumerationLimitError(f"{count} estrategias deterministas superan el límite de 2^24")

    best_value: Fraction | None = None
    best_g: tuple[str, ...] = ()
    best_h: tuple[str, ...] = ()
    for g in itertools.product(game.outputs_a.labels, repeat=len(game.inputs_a)):
        g_map = dict(zip(game.inputs_a, g))
        value = Fraction(0)
        h: list[str] = []
        for y in game.inputs_b:
            column_best: Fraction | None = None
            column_choice = game.outputs_b.labels[0]
            for b in game.outputs_b:
                score = sum(
                    (game.input_dist[(x, y)] for x in game.inputs_a if game.wins(g_map[x], b, x, y)),
                    Fraction(0),
                )
                if column_best is None or score > column_best:
                    column_best, column_choice = score, b
            value += column_best
            h.append(column_choice)
        if best_value is None or value > best_value:
            best_value, best_g, best_h = value, g, tuple(h)

    logger.info(f"✓ Valor clásico {format_rational(best_value)} ({count} estrategias)")
    return ClassicalResult(
        value=best_value,
        g=dict(zip(game.inputs_a, best_g)),
        h=dict(zip(game.inputs_b, best_h)),
        strategies_checked=count,
    )


# ============================================================================
# ESTRATEGIAS CUÁNTICAS
# ============================================================================

def _strategy_problems(dim_a: int, dim_b: int, state: np.ndarray,
                       meas_a: Mapping[str, tuple[np.ndarray, ...]],
                       meas_b: Mapping[str, tuple[np.ndarray, ...]],
                       tol: float) -> list[str]:
    problems: list[str] = []
    if state.shape != (dim_a * dim_b,):
        problems.append(f"El estado debe tener longitud {dim_a * dim_b}, tiene forma {state.shape}")
    elif abs(np.linalg.norm(state) - 1) > tol:
        problems.append(f"Norma del estado {np.linalg.norm(state):.15f} ≠ 1")

    for party, measurements, dim in (("alice", meas_a, dim_a), ("bob", meas_b, dim_b)):
        if not measurements:
            problems.append(f"{party}: sin medidas")
            continue
        identity = np.eye(dim)
        for label, projectors in measurements.items():
            if not projectors:
                problems.append(f"{party}[{label}]: sin proyectores")
                continue
            for i, proj in enumerate(projectors):
                if proj.shape != (dim, dim):
                    problems.append(f"{party}[{label}][{i}]: forma {proj.shape}, se esperaba {(dim, dim)}")
                    continue
                if not np.allclose(proj, proj.conj().T, atol=tol, rtol=0):
                    problems.append(f"{party}[{label}][{i}]: no es hermítico")
                if not np.allclose(proj @ proj, proj, atol=tol, rtol=0):
                    problems.append(f"{party}[{label}][{i}]: no es idempotente")
            if any(p.shape != (dim, dim) for p in projectors):
                continue
            for i, j in itertools.combinations(range(len(projectors)), 2):
                if not np.allclose(projectors[i] @ projectors[j], 0, atol=tol, rtol=0):
                    problems.append(f"{party}[{label}]: proyectores {i} y {j} no ortogonales")
            if not np.allclose(sum(projectors), identity, atol=tol, rtol=0):
                problems.append(f"{party}[{label}]: los proyectores no suman la identidad")
        sizes = {len(projectors) for projectors in measurements.values()}
        if len(sizes) > 1:
            problems.append(f"{party}: número de resultados distinto entre entradas")
    return problems


class QuantumStrategy(BaseModel):
    """
    Estado bipartito |ψ⟩ (índice i_a·dim_b + i_b) y medidas proyectivas por entrada.
    Las entradas son las claves de meas_a / meas_b; los resultados se etiquetan
    "0", "1", ... en el orden de los proyectores.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim_a: int
    dim_b: int
    state: np.ndarray
    meas_a: dict[str, tuple[np.ndarray, ...]]
    meas_b: dict[str, tuple[np.ndarray, ...]]

    @field_validator("dim_a", "dim_b")
    @classmethod
    def _dim_positiva(cls, value: int) -> int:
        if value < 1:
            raise ValueError("Las dimensiones deben ser positivas")
        return value

    @model_validator(mode="after")
    def _invariantes(self) -> "QuantumStrategy":
        problems = _strategy_problems(self.dim_a, self.dim_b, np.asarray(self.state), self.meas_a, self.meas_b,
                                      VALIDITY_TOLERANCE)
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def alphabets(self) -> tuple[Alphabet, Alphabet, Alphabet, Alphabet]:
        n_a = len(next(iter(self.meas_a.values())))
        n_b = len(next(iter(self.meas_b.values())))
        return (Alphabet.of(self.meas_a), Alphabet.of(self.meas_b),
                Alphabet.of(range(n_a)), Alphabet.of(range(n_b)))


class QuantumBoxResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    box: BipartiteBox
    float_table: dict[tuple[str, str, str, str], float]
    max_rationalization_error: float


def basis_projectors(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Proyectores sobre cos θ|0⟩ + sin θ|1⟩ y su complemento ortogonal."""
    vector = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    projector = np.outer(vector, vector.conj())
    return projector, np.eye(2, dtype=complex) - projector


def maximally_entangled_state(dim: int = 2) -> np.ndarray:
    state = np.zeros(dim * dim, dtype=complex)
    for i in range(dim):
        state[i * dim + i] = 1
    return state / math.sqrt(dim)


def optimal_chsh_strategy() -> QuantumStrategy:
    """(|00⟩+|11⟩)/√2; Alice mide a ángulos {0, π/4}, Bob a {π/8, −π/8}."""
    return QuantumStrategy(
        dim_a=2,
        dim_b=2,
        state=maximally_entangled_state(2),
        meas_a={"0": basis_projectors(0.0), "1": basis_projectors(math.pi / 4)},
        meas_b={"0": basis_projectors(math.pi / 8), "1": basis_projectors(-math.pi / 8)},
    )


def box_from_quantum(strategy: QuantumStrategy, rationalization_tolerance: float = 1e-6,
                     denominator_cap: int = DENOMINATOR_CAP) -> QuantumBoxResult:
    """
    P[a,b|x,y] = ⟨ψ|(A_x^a ⊗ B_y^b)|ψ⟩ en coma flotante, aproximado por racionales
    con denominador acotado y renormalizado exactamente por rebanada (x, y).
    """
    problems = _strategy_problems(strategy.dim_a, strategy.dim_b, np.asarray(strategy.state),
                                  strategy.meas_a, strategy.meas_b, VALIDITY_TOLERANCE)
    if problems:
        raise StrategyError("; ".join(problems))

    inputs_a, inputs_b, outputs_a, outputs_b = strategy.alphabets()
    state = np.asarray(strategy.state, dtype=complex)
    float_table: dict[tuple[str, str, str, str], float] = {}
    table: dict[tuple[str, str, str, str], Fraction] = {}
    max_error = 0.0

    for x, y in itertools.product(inputs_a, inputs_b):
        slice_raw: dict[tuple[str, str], Fraction] = {}
        for (ia, proj_a), (ib, proj_b) in itertools.product(enumerate(strategy.meas_a[x]),
                                                            enumerate(strategy.meas_b[y])):
            prob = float(np.real(state.conj() @ np.kron(proj_a, proj_b) @ state))
            if prob < -rationalization_tolerance:
                raise StrategyError(f"Probabilidad negativa {prob:.3e} en (x={x}, y={y}, a={ia}, b={ib})")
            prob = max(prob, 0.0)
            float_table[(x, y, str(ia), str(ib))] = prob
            slice_raw[(str(ia), str(ib))] = Fraction(prob).limit_denominator(denominator_cap)

        total = sum(slice_raw.values())
        if total == 0:
            raise StrategyError(f"Rebanada (x={x}, y={y}) con masa nula")
        for (a, b), value in slice_raw.items():
            exact = value / total
            error = abs(float(exact) - float_table[(x, y, a, b)])
            if error > rationalization_tolerance:
                raise StrategyError(
                    f"Error de racionalización {error:.3e} > {rationalization_tolerance:.1e} en (x={x}, y={y}, a={a}, b={b})"
                )
            max_error = max(max_error, error)
            table[(x, y, a, b)] = exact

    box = BipartiteBox(inputs_a=inputs_a, inputs_b=inputs_b, outputs_a=outputs_a, outputs_b=outputs_b, table=table)
    logger.info(f"✓ Caja cuántica racionalizada (error máximo {max_error:.3e})")
    return QuantumBoxResult(box=box, float_table=float_table, max_rationalization_error=max_error)


def float_game_value(game: BellGame, float_table: Mapping[tuple[str, str, str, str], float]) -> float:
    """Valor del juego sobre la tabla en coma flotante (antes de racionalizar)."""
    return sum(float(game.input_dist[(x, y)]) * float_table[(x, y, a, b)] for a, b, x, y in game.predicate)


# ============================================================================
# SERIALIZACIÓN
# ============================================================================

class InputWeight(BaseModel):
    x: str
    y: str
    p: str


class GameDocument(BaseModel):
    inputs_a: list[str]
    inputs_b: list[str]
    outputs_a: list[str]
    outputs_b: list[str]
    input_dist: list[InputWeight]
    predicate: list[tuple[str, str, str, str]]


def game_to_document(game: BellGame) -> GameDocument:
    ordered = [
        (a, b, x, y)
        for x, y, a, b in itertools.product(game.inputs_a, game.inputs_b, game.outputs_a, game.outputs_b)
        if game.wins(a, b, x, y)
    ]
    return GameDocument(
        inputs_a=list(game.inputs_a.labels),
        inputs_b=list(game.inputs_b.labels),
        outputs_a=list(game.outputs_a.labels),
        outputs_b=list(game.outputs_b.labels),
        input_dist=[
            InputWeight(x=x, y=y, p=f"{w.numerator}/{w.denominator}")
            for (x, y), w in ((pair, game.input_dist[pair]) for pair in itertools.product(game.inputs_a, game.inputs_b))
        ],
        predicate=ordered,
    )


def game_from_document(document: GameDocument) -> BellGame:
    pairs = [(w.x, w.y) for w in document.input_dist]
    if len(set(pairs)) != len(pairs):
        raise GameDefinitionError("input_dist repite algún par (x, y)")
    try:
        return BellGame(
            inputs_a=Alphabet.of(document.inputs_a),
            inputs_b=Alphabet.of(document.inputs_b),
            outputs_a=Alphabet.of(document.outputs_a),
            outputs_b=Alphabet.of(document.outputs_b),
            input_dist={(w.x, w.y): parse_rational(w.p) for w in document.input_dist},
            predicate=frozenset(document.predicate),
        )
    except ValidationError as e:
        raise GameDefinitionError(e.errors()[0]["msg"]) from e
