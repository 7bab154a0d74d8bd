# ============================================================================
# box_core.py
# Description: Cajas bipartitas P[a,b|x,y] con probabilidades racionales exactas,
#              verificación de normalización, no-señalización y mezclas convexas.
# ============================================================================
import itertools
import logging
from fractions import Fraction
from typing import Iterable, Iterator, Literal, Mapping, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utilities.general import all_bitstrings, format_rational, parse_rational

logger = logging.getLogger(__name__)

Party = Literal["alice", "bob"]
TableKey = tuple[str, str, str, str]


# ============================================================================
# ERRORES
# ============================================================================

class BoxStructureError(ValueError):
    """Entrada de tabla ausente o símbolo fuera de los alfabetos."""


class NotNormalizedError(ValueError):
    """La caja no cumple la precondición de estar normalizada."""


class AlphabetMismatchError(ValueError):
    """Dos objetos que deberían compartir alfabetos no lo hacen."""


class WeightError(ValueError):
    """Pesos de mezcla negativos o que no suman exactamente 1."""


# ============================================================================
# TIPOS
# ============================================================================

class Alphabet(BaseModel):
    """Conjunto finito y ordenado de símbolos (entradas o salidas de una parte)."""

    model_config = ConfigDict(frozen=True)

    labels: tuple[str, ...]

    @field_validator("labels")
    @classmethod
    def _labels_validos(cls, labels: tuple[str, ...]) -> tuple[str, ...]:
        if not labels:
            raise ValueError("El alfabeto no puede estar vacío")
        if len(set(labels)) != len(labels):
            raise ValueError(f"Símbolos repetidos en el alfabeto: {labels}")
        # cadenas de bits de igual ancho: siempre en orden lexicográfico
        if len({len(label) for label in labels}) == 1 and all(set(label) <= {"0", "1"} for label in labels):
            return tuple(sorted(labels))
        return labels

    @classmethod
    def bits(cls, width: int) -> "Alphabet":
        """Todas las cadenas de `width` bits, en orden lexicográfico."""
        return cls(labels=tuple(all_bitstrings(width)))

    @classmethod
    def of(cls, labels: Iterable) -> "Alphabet":
        return cls(labels=tuple(str(label) for label in labels))

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self.labels

    def index(self, symbol: str) -> int:
        try:
            return self.labels.index(symbol)
        except ValueError:
            raise BoxStructureError(f"Símbolo desconocido {symbol!r}; alfabeto {self.labels}") from None


class BipartiteBox(BaseModel):
    """
    Distribución condicional P[a,b|x,y]. La tabla se indexa por (x, y, a, b).
    La construcción sólo comprueba que los símbolos pertenecen a los alfabetos;
    normalización y no-señalización se verifican con las funciones del módulo.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    inputs_a: Alphabet
    inputs_b: Alphabet
    outputs_a: Alphabet
    outputs_b: Alphabet
    table: dict[TableKey, Fraction]

    @model_validator(mode="after")
    def _simbolos_en_alfabetos(self) -> "BipartiteBox":
        for (x, y, a, b), value in self.table.items():
            if x not in self.inputs_a or y not in self.inputs_b or a not in self.outputs_a or b not in self.outputs_b:
                raise ValueError(f"Entrada ({x}, {y}, {a}, {b}) fuera de los alfabetos")
            if not isinstance(value, Fraction):
                raise ValueError(f"Probabilidad no racional en ({x}, {y}, {a}, {b}): {value!r}")
        return self

    def input_pairs(self) -> Iterator[tuple[str, str]]:
        return itertools.product(self.inputs_a, self.inputs_b)

    def output_pairs(self) -> Iterator[tuple[str, str]]:
        return itertools.product(self.outputs_a, self.outputs_b)

    def keys(self) -> Iterator[TableKey]:
        """Orden de producto lexicográfico (x, y, a, b)."""
        return itertools.product(self.inputs_a, self.inputs_b, self.outputs_a, self.outputs_b)

    def p(self, x: str, y: str, a: str, b: str) -> Fraction:
        try:
            return self.table[(x, y, a, b)]
        except KeyError:
            raise BoxStructureError(f"Falta la entrada de tabla (x={x}, y={y}, a={a}, b={b})") from None

    def same_alphabets(self, other: "BipartiteBox") -> bool:
        return (
            self.inputs_a == other.inputs_a
            and self.inputs_b == other.inputs_b
            and self.outputs_a == other.outputs_a
            and self.outputs_b == other.outputs_b
        )


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    side: Party
    output: str
    fixed_input: str
    input_pair: tuple[str, str]
    lhs_marginal: Fraction
    rhs_marginal: Fraction

    def describe(self) -> str:
        remote = "y" if self.side == "alice" else "x"
        local = "x" if self.side == "alice" else "y"
        symbol = "a" if self.side == "alice" else "b"
        return (
            f"{self.side}: {symbol}={self.output}, {local}={self.fixed_input}, "
            f"{remote}∈({self.input_pair[0]}, {self.input_pair[1]}): "
            f"{format_rational(self.lhs_marginal)} ≠ {format_rational(self.rhs_marginal)}"
        )


class NoSignallingReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    holds: bool
    violations: tuple[Violation, ...] = Field(default_factory=tuple)

    @model_validator(mode="after")
    def _holds_sin_violaciones(self) -> "NoSignallingReport":
        if self.holds != (len(self.violations) == 0):
            raise ValueError("holds debe ser verdadero si y sólo si no hay violaciones")
        return self


# ============================================================================
# OPERACIONES
# ============================================================================

def check_normalized(box: BipartiteBox) -> bool:
    """
    Verdadero si todas las entradas están en [0, 1] y cada rebanada (x, y)
    suma exactamente 1. Una entrada ausente lanza BoxStructureError.
    """
    normalized = True
    for x, y in box.input_pairs():
        total = Fraction(0)
        for a, b in box.output_pairs():
            value = box.p(x, y, a, b)
            if value < 0 or value > 1:
                normalized = False
            total += value
        if total != 1:
            logger.debug(f"Rebanada (x={x}, y={y}) suma {format_rational(total)}")
            normalized = False
    return normalized


def marginal(box: BipartiteBox, side: Party, output: str, x: str, y: str) -> Fraction:
    """Pr[a|x,y] (side="alice") o Pr[b|x,y] (side="bob"), exacto."""
    box.inputs_a.index(x)
    box.inputs_b.index(y)
    if side == "alice":
        box.outputs_a.index(output)
        return sum((box.p(x, y, output, b) for b in box.outputs_b), Fraction(0))
    if side == "bob":
        box.outputs_b.index(output)
        return sum((box.p(x, y, a, output) for a in box.outputs_a), Fraction(0))
    raise BoxStructureError(f"Parte desconocida: {side!r}")


def local_marginals(box: BipartiteBox) -> dict[tuple[Party, str, str, str], Fraction]:
    """Todas las marginales de una parte, indexadas por (side, output, x, y)."""
    result: dict[tuple[Party, str, str, str], Fraction] = {}
    for x, y in box.input_pairs():
        for a in box.outputs_a:
            result[("alice", a, x, y)] = marginal(box, "alice", a, x, y)
        for b in box.outputs_b:
            result[("bob", b, x, y)] = marginal(box, "bob", b, x, y)
    return result


def check_no_signalling(box: BipartiteBox) -> NoSignallingReport:
    """
    Compara exactamente las marginales de cada parte para todos los pares de
    entradas remotas. Devuelve todas las violaciones, no sólo la primera.
    """
    if not check_normalized(box):
        raise NotNormalizedError("check_no_signalling requiere una caja normalizada")

    violations: list[Violation] = []
    for a in box.outputs_a:
        for x in box.inputs_a:
            for y, y2 in itertools.combinations(box.inputs_b, 2):
                lhs = marginal(box, "alice", a, x, y)
                rhs = marginal(box, "alice", a, x, y2)
                if lhs != rhs:
                    violations.append(Violation(side="alice", output=a, fixed_input=x, input_pair=(y, y2),
                                                lhs_marginal=lhs, rhs_marginal=rhs))
    for b in box.outputs_b:
        for y in box.inputs_b:
            for x, x2 in itertools.combinations(box.inputs_a, 2):
                lhs = marginal(box, "bob", b, x, y)
                rhs = marginal(box, "bob", b, x2, y)
                if lhs != rhs:
                    violations.append(Violation(side="bob", output=b, fixed_input=y, input_pair=(x, x2),
                                                lhs_marginal=lhs, rhs_marginal=rhs))

    if violations:
        logger.debug(f"{len(violations)} violaciones de no-señalización")
    return NoSignallingReport(holds=not violations, violations=tuple(violations))


def mix(boxes: Sequence[tuple[BipartiteBox, Fraction]]) -> BipartiteBox:
    """Combinación convexa entrada a entrada; los pesos deben sumar exactamente 1."""
    if not boxes:
        raise WeightError("La mezcla necesita al menos una caja")
    first = boxes[0][0]
    weights = [Fraction(weight) for _, weight in boxes]
    if any(weight < 0 for weight in weights):
        raise WeightError(f"Pesos negativos: {[format_rational(w) for w in weights]}")
    if sum(weights) != 1:
        raise WeightError(f"Los pesos suman {format_rational(sum(weights))}, no 1")
    for box, _ in boxes[1:]:
        if not box.same_alphabets(first):
            raise AlphabetMismatchError("Todas las cajas de la mezcla deben compartir alfabetos")

    table = {
        key: sum((weight * box.p(*key) for (box, _), weight in zip(boxes, weights)), Fraction(0))
        for key in first.keys()
    }
    return first.model_copy(update={"table": table})


# ============================================================================
# CAJAS CON NOMBRE
# ============================================================================

def box_from_rule(inputs_a: Alphabet, inputs_b: Alphabet, outputs_a: Alphabet, outputs_b: Alphabet,
                  rule) -> BipartiteBox:
    """Construye la tabla evaluando rule(x, y, a, b) -> Fraction en orden lexicográfico."""
    table = {
        (x, y, a, b): Fraction(rule(x, y, a, b))
        for x, y, a, b in itertools.product(inputs_a, inputs_b, outputs_a, outputs_b)
    }
    return BipartiteBox(inputs_a=inputs_a, inputs_b=inputs_b, outputs_a=outputs_a, outputs_b=outputs_b, table=table)


def _bit(symbol: str) -> int:
    return int(symbol)


def pr_box() -> BipartiteBox:
    """La caja PR: 1/2 si a⊕b = x·y, 0 en otro caso."""
    binary = Alphabet.bits(1)
    half = Fraction(1, 2)
    return box_from_rule(binary, binary, binary, binary,
                         lambda x, y, a, b: half if _bit(a) ^ _bit(b) == _bit(x) & _bit(y) else 0)


def anti_pr_box() -> BipartiteBox:
    """a⊕b = x·y ⊕ 1."""
    binary = Alphabet.bits(1)
    half = Fraction(1, 2)
    return box_from_rule(binary, binary, binary, binary,
                         lambda x, y, a, b: half if _bit(a) ^ _bit(b) == (_bit(x) & _bit(y)) ^ 1 else 0)


def uniform_box(inputs_a: Alphabet | None = None, inputs_b: Alphabet | None = None,
                outputs_a: Alphabet | None = None, outputs_b: Alphabet | None = None) -> BipartiteBox:
    binary = Alphabet.bits(1)
    inputs_a, inputs_b = inputs_a or binary, inputs_b or binary
    outputs_a, outputs_b = outputs_a or binary, outputs_b or binary
    weight = Fraction(1, len(outputs_a) * len(outputs_b))
    return box_from_rule(inputs_a, inputs_b, outputs_a, outputs_b, lambda x, y, a, b: weight)


def deterministic_box(g: Mapping[str, str], h: Mapping[str, str],
                      inputs_a: Alphabet, inputs_b: Alphabet,
                      outputs_a: Alphabet, outputs_b: Alphabet) -> BipartiteBox:
    """Estrategia local determinista a = g(x), b = h(y)."""
    return box_from_rule(inputs_a, inputs_b, outputs_a, outputs_b,
                         lambda x, y, a, b: 1 if g[x] == a and h[y] == b else 0)


def signalling_box() -> BipartiteBox:
    """Contraejemplo: a = y, b = 0. Alice lee directamente la entrada de Bob."""
    binary = Alphabet.bits(1)
    return box_from_rule(binary, binary, binary, binary,
                         lambda x, y, a, b: 1 if a == y and b == "0" else 0)


# ============================================================================
# SERIALIZACIÓN
# ============================================================================

class TableRecord(BaseModel):
    x: str
    y: str
    a: str
    b: str
    p: str

    @field_validator("p")
    @classmethod
    def _p_racional(cls, value: str) -> str:
        parse_rational(value)
        return value


class BoxDocument(BaseModel):
    """Documento JSON de una caja: alfabetos como listas de cadenas y tabla de registros."""

    inputs_a: list[str]
    inputs_b: list[str]
    outputs_a: list[str]
    outputs_b: list[str]
    table: list[TableRecord]


def box_to_document(box: BipartiteBox) -> BoxDocument:
    return BoxDocument(
        inputs_a=list(box.inputs_a.labels),
        inputs_b=list(box.inputs_b.labels),
        outputs_a=list(box.outputs_a.labels),
        outputs_b=list(box.outputs_b.labels),
        table=[
            TableRecord(x=x, y=y, a=a, b=b, p=f"{value.numerator}/{value.denominator}")
            for (x, y, a, b) in box.keys()
            if (value := box.table.get((x, y, a, b))) is not None
        ],
    )


def box_from_document(document: BoxDocument) -> BipartiteBox:
    table: dict[TableKey, Fraction] = {}
    for record in document.table:
        key = (record.x, record.y, record.a, record.b)
        if key in table:
            raise BoxStructureError(f"Entrada duplicada en la tabla: {key}")
        table[key] = parse_rational(record.p)
    return BipartiteBox(
        inputs_a=Alphabet.of(document.inputs_a),
        inputs_b=Alphabet.of(document.inputs_b),
        outputs_a=Alphabet.of(document.outputs_a),
        outputs_b=Alphabet.of(document.outputs_b),
        table=table,
    )
