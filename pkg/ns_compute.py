# ============================================================================
# ns_compute.py
# Description: Cajas de computación no-señalizante para funciones booleanas
#              arbitrarias: caja f exacta, muestreo en tres pasos y cajas ruidosas.
# ============================================================================
import itertools
import logging
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from box_core import Alphabet, AlphabetMismatchError, BipartiteBox
from utilities.general import all_bitstrings, bits_to_int, format_rational, frequencies, int_to_bits

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


class InputLengthError(ValueError):
    """Las cadenas de entrada no tienen la longitud l / m de la función."""


class NoisyBoxDomainError(ValueError):
    """p fuera de (1/2, 1): la corrección por par (x, y) debe ser estrictamente mayor que 1/2 y menor que 1."""


# ============================================================================
# FUNCIONES BOOLEANAS
# ============================================================================

class BooleanFunction(BaseModel):
    """
    f: {0,1}^l × {0,1}^m → {0,1}. La tabla de verdad se indexa por la cadena
    x‖y leída en big-endian, es decir, en orden lexicográfico de (x, y).
    """

    model_config = ConfigDict(frozen=True)

    l: int
    m: int
    truth_table: tuple[int, ...]

    @field_validator("l", "m")
    @classmethod
    def _ancho_no_negativo(cls, value: int) -> int:
        if value < 0:
            raise ValueError("Las longitudes de entrada no pueden ser negativas")
        return value

    @model_validator(mode="after")
    def _tabla_completa(self) -> "BooleanFunction":
        expected = 2 ** (self.l + self.m)
        if len(self.truth_table) != expected:
            raise ValueError(f"La tabla de verdad debe tener {expected} bits, tiene {len(self.truth_table)}")
        if any(bit not in (0, 1) for bit in self.truth_table):
            raise ValueError("La tabla de verdad sólo admite bits 0/1")
        return self

    @classmethod
    def from_callable(cls, l: int, m: int, fn: Callable[[str, str], int]) -> "BooleanFunction":
        table = tuple(int(fn(x, y)) & 1 for x, y in itertools.product(all_bitstrings(l), all_bitstrings(m)))
        return cls(l=l, m=m, truth_table=table)

    def check_inputs(self, x: str, y: str) -> None:
        if len(x) != self.l or len(y) != self.m or any(ch not in "01" for ch in x + y):
            raise InputLengthError(f"Se esperaban cadenas de {self.l} y {self.m} bits, se recibió x={x!r}, y={y!r}")

    def index(self, x: str, y: str) -> int:
        self.check_inputs(x, y)
        return bits_to_int(x + y)

    def evaluate(self, x: str, y: str) -> int:
        return self.truth_table[self.index(x, y)]

    def __call__(self, x: str, y: str) -> int:
        return self.evaluate(x, y)

    def negate(self) -> "BooleanFunction":
        return BooleanFunction(l=self.l, m=self.m, truth_table=tuple(1 - bit for bit in self.truth_table))

    def transpose(self) -> "BooleanFunction":
        """Intercambia los papeles de Alice y Bob: f'(y, x) = f(x, y)."""
        return BooleanFunction.from_callable(self.m, self.l, lambda y, x: self.evaluate(x, y))

    def alice_inputs(self) -> list[str]:
        return all_bitstrings(self.l)

    def bob_inputs(self) -> list[str]:
        return all_bitstrings(self.m)

    def input_pairs(self) -> list[tuple[str, str]]:
        return list(itertools.product(self.alice_inputs(), self.bob_inputs()))

    def as_string(self) -> str:
        return "".join(str(bit) for bit in self.truth_table)


def and_function() -> BooleanFunction:
    return BooleanFunction(l=1, m=1, truth_table=(0, 0, 0, 1))


def or_function() -> BooleanFunction:
    return BooleanFunction(l=1, m=1, truth_table=(0, 1, 1, 1))


def xor_function() -> BooleanFunction:
    return BooleanFunction(l=1, m=1, truth_table=(0, 1, 1, 0))


def constant_function(l: int, m: int, value: int) -> BooleanFunction:
    return BooleanFunction(l=l, m=m, truth_table=(value & 1,) * 2 ** (l + m))


def equality_function(n: int) -> BooleanFunction:
    return BooleanFunction.from_callable(n, n, lambda x, y: int(x == y))


def majority_function(l: int, m: int) -> BooleanFunction:
    """Mayoría de los l + m bits (empates → 0)."""
    return BooleanFunction.from_callable(l, m, lambda x, y: int((x + y).count("1") * 2 > l + m))


def random_function(l: int, m: int, rng: np.random.Generator) -> BooleanFunction:
    bits = rng.integers(0, 2, size=2 ** (l + m))
    return BooleanFunction(l=l, m=m, truth_table=tuple(int(bit) for bit in bits))


def function_from_index(l: int, m: int, index: int) -> BooleanFunction:
    """La función cuya tabla de verdad, leída en big-endian, vale `index`."""
    return BooleanFunction(l=l, m=m, truth_table=tuple(int(ch) for ch in int_to_bits(index, 2 ** (l + m))))


# ============================================================================
# CAJA f EXACTA
# ============================================================================

def make_fbox(f: BooleanFunction) -> BipartiteBox:
    """P[a,b|x,y] = 1/2 si a⊕b = f(x,y) y 0 en otro caso."""
    bit = Alphabet.bits(1)
    table = {}
    for x, y in f.input_pairs():
        value = f.evaluate(x, y)
        for a, b in itertools.product("01", repeat=2):
            table[(x, y, a, b)] = HALF if int(a) ^ int(b) == value else Fraction(0)
    return BipartiteBox(inputs_a=Alphabet.bits(f.l), inputs_b=Alphabet.bits(f.m),
                        outputs_a=bit, outputs_b=bit, table=table)


def sample_fbox(f: BooleanFunction, x: str, y: str, rng: np.random.Generator) -> tuple[int, int]:
    """
    Procedimiento en tres pasos: r uniforme, se calcula f(x,y),
    a ← r y b ← r ⊕ f(x,y).
    """
    value = f.evaluate(x, y)
    r = int(rng.integers(2))
    return r, r ^ value


# ============================================================================
# CAJAS RUIDOSAS
# ============================================================================

def check_noise_level(p: Fraction) -> Fraction:
    p = Fraction(p)
    if not HALF < p < 1:
        raise NoisyBoxDomainError(
            f"p = {format_rational(p)} fuera de (1/2, 1): la corrección por par (x, y) "
            "debe ser estrictamente mayor que 1/2 y estrictamente menor que 1"
        )
    return p


class NoisyBoxSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    f: BooleanFunction
    p: Fraction

    @field_validator("p", mode="before")
    @classmethod
    def _p_estricto(cls, value) -> Fraction:
        value = Fraction(value)
        if not HALF < value < 1:
            raise ValueError(f"p = {format_rational(value)} debe cumplir 1/2 < p < 1 estrictamente")
        return value


def noisy_spec(f: BooleanFunction, p: Fraction) -> NoisyBoxSpec:
    """Construye la especificación lanzando NoisyBoxDomainError si p no es válido."""
    return NoisyBoxSpec(f=f, p=check_noise_level(p))


def make_noisy_fbox(spec: NoisyBoxSpec) -> BipartiteBox:
    """P[a,b|x,y] = p/2 si a⊕b = f(x,y), (1−p)/2 en otro caso."""
    p = check_noise_level(spec.p)
    right, wrong = p / 2, (1 - p) / 2
    bit = Alphabet.bits(1)
    table = {}
    for x, y in spec.f.input_pairs():
        value = spec.f.evaluate(x, y)
        for a, b in itertools.product("01", repeat=2):
            table[(x, y, a, b)] = right if int(a) ^ int(b) == value else wrong
    return BipartiteBox(inputs_a=Alphabet.bits(spec.f.l), inputs_b=Alphabet.bits(spec.f.m),
                        outputs_a=bit, outputs_b=bit, table=table)


INT64_SAFE_DENOMINATOR = 2**62


def exact_coin(p: Fraction, rng: np.random.Generator) -> bool:
    """
    Verdadero con probabilidad exactamente p, para cualquier denominador.
    Los denominadores que no caben en int64 se resuelven por rechazo sobre
    bit_length() bits aleatorios.
    """
    p = Fraction(p)
    denominator = p.denominator
    if denominator <= INT64_SAFE_DENOMINATOR:
        return int(rng.integers(denominator)) < p.numerator
    width = denominator.bit_length()
    nbytes = (width + 7) // 8
    while True:
        draw = int.from_bytes(rng.bytes(nbytes), "big") >> (nbytes * 8 - width)
        if draw < denominator:
            return draw < p.numerator


def sample_noisy_fbox(spec: NoisyBoxSpec, x: str, y: str, rng: np.random.Generator) -> tuple[int, int]:
    """Con probabilidad exactamente p muestrea la caja de f y si no la de ¬f."""
    p = check_noise_level(spec.p)
    correct = exact_coin(p, rng)
    value = spec.f.evaluate(x, y) ^ (0 if correct else 1)
    r = int(rng.integers(2))
    return r, r ^ value


# ============================================================================
# CORRECCIÓN POR PAR Y DISTRIBUCIONES EMPÍRICAS
# ============================================================================

def correctness_profile(box: BipartiteBox, f: BooleanFunction) -> dict[tuple[str, str], Fraction]:
    """Pr[a⊕b = f(x,y)] para cada par (x, y)."""
    if (box.inputs_a != Alphabet.bits(f.l) or box.inputs_b != Alphabet.bits(f.m)
            or box.outputs_a != Alphabet.bits(1) or box.outputs_b != Alphabet.bits(1)):
        raise AlphabetMismatchError("La caja no tiene los alfabetos de la función")
    profile = {}
    for x, y in f.input_pairs():
        value = f.evaluate(x, y)
        profile[(x, y)] = sum(
            (box.p(x, y, a, b) for a, b in itertools.product("01", repeat=2) if int(a) ^ int(b) == value),
            Fraction(0),
        )
    return profile


def min_correctness(box: BipartiteBox, f: BooleanFunction) -> Fraction:
    return min(correctness_profile(box, f).values())


def empirical_distribution(sampler: Callable[[np.random.Generator], tuple[int, int]], n: int,
                           rng: np.random.Generator) -> dict[tuple[str, str], float]:
    """Frecuencias de (a, b) en n llamadas a sampler(rng)."""
    samples = []
    for _ in range(n):
        a, b = sampler(rng)
        samples.append((str(a), str(b)))
    return frequencies(samples)


def box_slice(box: BipartiteBox, x: str, y: str) -> Mapping[tuple[str, str], float]:
    return {(a, b): float(box.p(x, y, a, b)) for a, b in box.output_pairs()}
