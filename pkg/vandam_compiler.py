# ============================================================================
# vandam_compiler.py
# Description: Compila una función booleana arbitraria a un protocolo que consume
#              varias cajas PR (forma normal algebraica sobre GF(2)).
# ============================================================================
import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from box_core import Party
from ns_compute import BooleanFunction, and_function, sample_fbox
from protocol_harness import (
    BoxRequest,
    LocalStep,
    PartyProcess,
    ProtocolTranscript,
    reconcile,
    run_two_party,
)
from utilities.general import bits_to_int, int_to_bits

logger = logging.getLogger(__name__)

Side = Literal["bob", "alice"]
SideOption = Literal["bob", "alice", "min"]
PR_FUNCTION = and_function()


# ============================================================================
# FORMA NORMAL ALGEBRAICA
# ============================================================================

class AnfForm(BaseModel):
    """
    f(x,y) = ⊕_S g_S(x) · y^S  (side="bob")  o  ⊕_S h_S(y) · x^S  (side="alice").
    S es una máscara sobre las variables descompuestas, leída en big-endian
    (el bit más significativo es la primera variable). Sólo se guardan los
    términos con coeficiente no idénticamente nulo; cada coeficiente es la
    tabla de verdad sobre la entrada de la otra parte.
    """

    model_config = ConfigDict(frozen=True)

    side: Side
    l: int
    m: int
    terms: dict[int, tuple[int, ...]]

    @property
    def width(self) -> int:
        """Número de variables descompuestas."""
        return self.m if self.side == "bob" else self.l

    def mixed_terms(self) -> list[int]:
        return sorted(mask for mask in self.terms if mask != 0)


def _moebius(column: list[int], width: int) -> list[int]:
    """Transformada de Möbius sobre GF(2): c_S = ⊕_{z ⊆ S} v_z."""
    coeffs = list(column)
    for i in range(width):
        bit = 1 << i
        for idx in range(len(coeffs)):
            if idx & bit:
                coeffs[idx] ^= coeffs[idx ^ bit]
    return coeffs


def anf_decompose(f: BooleanFunction, side: Side = "bob") -> AnfForm:
    """g_S(x) = ⊕_{z ⊆ S} f(x, z) para cada S sobre las variables de `side`."""
    source = f if side == "bob" else f.transpose()
    width = source.m
    outer = 2**source.l
    coefficients = [[0] * outer for _ in range(2**width)]
    for xi in range(outer):
        column = list(source.truth_table[xi * 2**width:(xi + 1) * 2**width])
        for mask, value in enumerate(_moebius(column, width)):
            coefficients[mask][xi] = value
    terms = {mask: tuple(table) for mask, table in enumerate(coefficients) if any(table)}
    return AnfForm(side=side, l=f.l, m=f.m, terms=terms)


def _monomial(bits: str, mask: int) -> int:
    return int(bits_to_int(bits) & mask == mask)


def evaluate_anf(form: AnfForm, x: str, y: str) -> int:
    decomposed, other = (y, x) if form.side == "bob" else (x, y)
    index = bits_to_int(other)
    value = 0
    for mask, table in form.terms.items():
        value ^= table[index] & _monomial(decomposed, mask)
    return value


# ============================================================================
# PROTOCOLO COMPILADO
# ============================================================================

class Instruction(BaseModel):
    """
    fold_constant: calcula el coeficiente del término vacío y lo acumula.
    coefficient / monomial: calcula el bit local que alimentará la caja `box`.
    box: entrega el registro a la caja `box`. accumulate: acc ^= salida de la caja.
    output: publica el acumulador.
    """

    model_config = ConfigDict(frozen=True)

    op: Literal["fold_constant", "coefficient", "monomial", "box", "accumulate", "output"]
    term: int | None = None
    box: int | None = None


class CompiledProtocol(BaseModel):
    model_config = ConfigDict(frozen=True)

    f: BooleanFunction
    form: AnfForm
    order: tuple[int, ...]
    box_count: int
    alice_plan: tuple[Instruction, ...]
    bob_plan: tuple[Instruction, ...]

    @property
    def side(self) -> Side:
        return self.form.side


def _plans(form: AnfForm, order: tuple[int, ...]) -> tuple[tuple[Instruction, ...], tuple[Instruction, ...]]:
    coefficient_plan: list[Instruction] = []
    monomial_plan: list[Instruction] = []
    if 0 in form.terms:
        coefficient_plan.append(Instruction(op="fold_constant", term=0))
    for box, mask in enumerate(order):
        coefficient_plan += [Instruction(op="coefficient", term=mask, box=box),
                             Instruction(op="box", box=box),
                             Instruction(op="accumulate", box=box)]
        monomial_plan += [Instruction(op="monomial", term=mask, box=box),
                          Instruction(op="box", box=box),
                          Instruction(op="accumulate", box=box)]
    coefficient_plan.append(Instruction(op="output"))
    monomial_plan.append(Instruction(op="output"))
    if form.side == "bob":
        return tuple(coefficient_plan), tuple(monomial_plan)
    return tuple(monomial_plan), tuple(coefficient_plan)


def _protocol_from_form(f: BooleanFunction, form: AnfForm) -> CompiledProtocol:
    order = tuple(form.mixed_terms())
    alice_plan, bob_plan = _plans(form, order)
    return CompiledProtocol(f=f, form=form, order=order, box_count=len(order),
                            alice_plan=alice_plan, bob_plan=bob_plan)


def compile(f: BooleanFunction, side: SideOption = "bob") -> CompiledProtocol:
    """
    Una caja PR por cada monomio no vacío con coeficiente no nulo. Con side="min"
    se elige el lado que consume menos cajas (empate: bob).
    """
    if side == "min":
        bob = _protocol_from_form(f, anf_decompose(f, "bob"))
        alice = _protocol_from_form(f, anf_decompose(f, "alice"))
        protocol = alice if alice.box_count < bob.box_count else bob
    elif side in ("bob", "alice"):
        protocol = _protocol_from_form(f, anf_decompose(f, side))
    else:
        raise ValueError(f"Lado desconocido: {side!r}")
    logger.debug(f"Compilado l={f.l}, m={f.m}, lado={protocol.side}: {protocol.box_count} cajas PR")
    return protocol


def _party_process(protocol: CompiledProtocol, party: Party, own_input: str) -> PartyProcess:
    """Intérprete del plan de una parte. Sólo ve su propia entrada."""
    plan = protocol.alice_plan if party == "alice" else protocol.bob_plan
    form = protocol.form
    own_index = bits_to_int(own_input)
    width = form.width
    accumulator = 0
    register = 0
    last_output = 0
    for instruction in plan:
        if instruction.op == "fold_constant":
            bit = form.terms[0][own_index]
            accumulator ^= bit
            yield LocalStep(payload={"op": "fold_constant", "bit": bit})
        elif instruction.op == "coefficient":
            register = form.terms[instruction.term][own_index]
            yield LocalStep(payload={"op": "coefficient", "term": int_to_bits(instruction.term, width),
                                     "box": instruction.box, "bit": register})
        elif instruction.op == "monomial":
            register = _monomial(own_input, instruction.term)
            yield LocalStep(payload={"op": "monomial", "term": int_to_bits(instruction.term, width),
                                     "box": instruction.box, "bit": register})
        elif instruction.op == "box":
            last_output = yield BoxRequest(box=instruction.box, input=str(register))
        elif instruction.op == "accumulate":
            accumulator ^= last_output
        elif instruction.op == "output":
            return accumulator
    return accumulator


class CompiledRun(BaseModel):
    a: int
    b: int
    transcript: ProtocolTranscript


def run_compiled(protocol: CompiledProtocol, x: str, y: str, rng: np.random.Generator) -> CompiledRun:
    """Ejecuta ambos planes; cada caja PR se muestrea con sample_fbox(AND)."""
    protocol.f.check_inputs(x, y)
    transcript = run_two_party(
        _party_process(protocol, "alice", x),
        _party_process(protocol, "bob", y),
        lambda box, xi, yi: sample_fbox(PR_FUNCTION, xi, yi, rng),
    )
    return CompiledRun(a=transcript.output_of("alice"), b=transcript.output_of("bob"), transcript=transcript)


class ProtocolCheck(BaseModel):
    passed: int
    total: int
    failures: list[tuple[str, str]] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def check_protocol(protocol: CompiledProtocol, rng: np.random.Generator) -> ProtocolCheck:
    """Comprueba a⊕b = f(x,y) en todas las entradas."""
    failures = []
    pairs = protocol.f.input_pairs()
    for x, y in pairs:
        run = run_compiled(protocol, x, y, rng)
        if reconcile(run.transcript) != protocol.f.evaluate(x, y):
            failures.append((x, y))
    if failures:
        logger.warning(f"{len(failures)} entradas fallidas de {len(pairs)}")
    return ProtocolCheck(passed=len(pairs) - len(failures), total=len(pairs), failures=failures)


# ============================================================================
# SERIALIZACIÓN
# ============================================================================

class TermRecord(BaseModel):
    mask: str
    coefficient: str


class ProtocolDocument(BaseModel):
    format_version: int = 1
    side: Side
    l: int
    m: int
    truth_table: str
    box_count: int
    terms: list[TermRecord]
    order: list[str]


def protocol_to_document(protocol: CompiledProtocol) -> ProtocolDocument:
    form = protocol.form
    return ProtocolDocument(
        side=form.side,
        l=form.l,
        m=form.m,
        truth_table=protocol.f.as_string(),
        box_count=protocol.box_count,
        terms=[
            TermRecord(mask=int_to_bits(mask, form.width), coefficient="".join(str(bit) for bit in form.terms[mask]))
            for mask in sorted(form.terms)
        ],
        order=[int_to_bits(mask, form.width) for mask in protocol.order],
    )


def protocol_from_document(document: ProtocolDocument) -> CompiledProtocol:
    f = BooleanFunction(l=document.l, m=document.m, truth_table=tuple(int(ch) for ch in document.truth_table))
    form = AnfForm(
        side=document.side,
        l=document.l,
        m=document.m,
        terms={bits_to_int(t.mask): tuple(int(ch) for ch in t.coefficient) for t in document.terms},
    )
    for x, y in f.input_pairs():
        if evaluate_anf(form, x, y) != f.evaluate(x, y):
            raise ValueError(f"Los términos no reconstruyen f en (x={x}, y={y})")
    order = tuple(bits_to_int(mask) for mask in document.order)
    if order != tuple(form.mixed_terms()):
        raise ValueError("El orden de ejecución no coincide con los términos mixtos")
    alice_plan, bob_plan = _plans(form, order)
    return CompiledProtocol(f=f, form=form, order=order, box_count=len(order),
                            alice_plan=alice_plan, bob_plan=bob_plan)
