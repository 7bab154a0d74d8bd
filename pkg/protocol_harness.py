# ============================================================================
# protocol_harness.py
# Description: Simulación de protocolos de dos partes con transcripción,
#              reconciliación a⊕b "al encontrarse" y amplificación por mayoría.
# ============================================================================
import logging
import math
from fractions import Fraction
from typing import Callable, Generator, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from box_core import Party
from ns_compute import (
    HALF,
    BooleanFunction,
    NoisyBoxSpec,
    check_noise_level,
    sample_fbox,
    sample_noisy_fbox,
)
from utilities.general import format_rational

logger = logging.getLogger(__name__)

EventKind = Literal["local_compute", "box_call", "output"]


class TranscriptStateError(RuntimeError):
    """Transcripción incompleta o ya cerrada, o planes de las partes desalineados."""


class AmplificationPlanError(ValueError):
    """k par o no positivo, o ε fuera de (0, 1/2)."""


# ============================================================================
# TRANSCRIPCIÓN
# ============================================================================

class TranscriptEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    party: Party
    kind: EventKind
    payload: dict[str, str | int]


class Reconciliation(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: int
    b: int
    value: int


class ProtocolTranscript(BaseModel):
    """
    Registro ordenado de una ejecución. No existe un tipo de evento "message":
    durante la fase de cajas las partes no pueden comunicarse.
    """

    events: list[TranscriptEvent] = Field(default_factory=list)
    reconciliation: Reconciliation | None = None

    def record(self, party: Party, kind: EventKind, **payload: str | int) -> None:
        if self.reconciliation is not None:
            raise TranscriptStateError("La transcripción ya está reconciliada")
        self.events.append(TranscriptEvent(party=party, kind=kind, payload=payload))

    def output_of(self, party: Party) -> int | None:
        for event in reversed(self.events):
            if event.party == party and event.kind == "output":
                return int(event.payload["bit"])
        return None

    def events_of(self, party: Party) -> list[TranscriptEvent]:
        return [event for event in self.events if event.party == party]

    def box_calls(self) -> list[TranscriptEvent]:
        return [event for event in self.events if event.kind == "box_call"]


def reconcile(transcript: ProtocolTranscript) -> int:
    """Las partes se encuentran y calculan a⊕b; se añade el registro de reconciliación."""
    a = transcript.output_of("alice")
    b = transcript.output_of("bob")
    if a is None or b is None:
        missing = [party for party, bit in (("alice", a), ("bob", b)) if bit is None]
        raise TranscriptStateError(f"Falta la salida de: {', '.join(missing)}")
    if transcript.reconciliation is not None:
        raise TranscriptStateError("La transcripción ya está reconciliada")
    transcript.reconciliation = Reconciliation(a=a, b=b, value=a ^ b)
    return a ^ b


def export_transcript(transcript: ProtocolTranscript) -> str:
    """Una línea por evento: party<TAB>kind<TAB>payload; la reconciliación al final."""
    lines = []
    for event in transcript.events:
        payload = ",".join(f"{key}={value}" for key, value in event.payload.items())
        lines.append(f"{event.party}\t{event.kind}\t{payload}")
    if transcript.reconciliation is not None:
        rec = transcript.reconciliation
        lines.append(f"both\treconciliation\ta={rec.a},b={rec.b},a_xor_b={rec.value}")
    return "\n".join(lines) + "\n"


# ============================================================================
# EJECUCIÓN DE DOS PARTES
# ============================================================================

class LocalStep(BaseModel):
    """Cálculo local anunciado por una parte (sólo queda en su lado de la transcripción)."""

    model_config = ConfigDict(frozen=True)

    payload: dict[str, str | int]


class BoxRequest(BaseModel):
    """Una parte entrega `input` a la caja `box` y espera su salida."""

    model_config = ConfigDict(frozen=True)

    box: int
    input: str


# Cada parte es un generador que produce LocalStep / BoxRequest, recibe la salida
# de la caja tras cada BoxRequest y devuelve su bit final.
PartyProcess = Generator[LocalStep | BoxRequest, int | None, int]
BoxSampler = Callable[[int, str, str], tuple[int, int]]


def _advance(process: PartyProcess, party: Party, sent: int | None,
             transcript: ProtocolTranscript) -> BoxRequest | int:
    """Avanza una parte hasta su siguiente petición de caja o hasta su salida."""
    while True:
        try:
            step = process.send(sent)
        except StopIteration as stop:
            bit = int(stop.value)
            transcript.record(party, "output", bit=bit)
            return bit
        sent = None
        if isinstance(step, LocalStep):
            transcript.record(party, "local_compute", **step.payload)
        elif isinstance(step, BoxRequest):
            return step
        else:
            raise TranscriptStateError(f"{party} produjo un paso desconocido: {step!r}")


def run_two_party(alice: PartyProcess, bob: PartyProcess, sampler: BoxSampler,
                  transcript: ProtocolTranscript | None = None) -> ProtocolTranscript:
    """
    Ejecuta dos procesos independientes. La única vía entre ellos es `sampler`,
    que recibe las dos entradas de la misma caja y devuelve las dos salidas.
    """
    transcript = transcript if transcript is not None else ProtocolTranscript()
    alice_step = _advance(alice, "alice", None, transcript)
    bob_step = _advance(bob, "bob", None, transcript)
    while isinstance(alice_step, BoxRequest) or isinstance(bob_step, BoxRequest):
        if not (isinstance(alice_step, BoxRequest) and isinstance(bob_step, BoxRequest)):
            raise TranscriptStateError("Una parte pidió una caja que la otra nunca usa")
        if alice_step.box != bob_step.box:
            raise TranscriptStateError(f"Orden de cajas distinto: alice {alice_step.box}, bob {bob_step.box}")
        a, b = sampler(alice_step.box, alice_step.input, bob_step.input)
        transcript.record("alice", "box_call", box=alice_step.box, input=alice_step.input, output=a)
        transcript.record("bob", "box_call", box=bob_step.box, input=bob_step.input, output=b)
        alice_step = _advance(alice, "alice", a, transcript)
        bob_step = _advance(bob, "bob", b, transcript)
    return transcript


def _single_box_party(own_input: str) -> PartyProcess:
    output = yield BoxRequest(box=0, input=own_input)
    return output


def run_fbox_protocol(f: BooleanFunction, x: str, y: str, rng: np.random.Generator) -> ProtocolTranscript:
    """Una caja f compartida: cada parte introduce su cadena y se queda con su bit."""
    f.check_inputs(x, y)
    return run_two_party(_single_box_party(x), _single_box_party(y),
                         lambda box, xi, yi: sample_fbox(f, xi, yi, rng))


def run_noisy_protocol(spec: NoisyBoxSpec, x: str, y: str, rng: np.random.Generator) -> ProtocolTranscript:
    spec.f.check_inputs(x, y)
    return run_two_party(_single_box_party(x), _single_box_party(y),
                         lambda box, xi, yi: sample_noisy_fbox(spec, xi, yi, rng))


# ============================================================================
# AMPLIFICACIÓN POR MAYORÍA
# ============================================================================

def _check_epsilon(epsilon: Fraction) -> Fraction:
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < HALF:
        raise AmplificationPlanError(f"ε = {format_rational(epsilon)} debe estar en (0, 1/2)")
    return epsilon


def _check_k(k: int) -> int:
    if k < 1 or k % 2 == 0:
        raise AmplificationPlanError(f"k = {k} debe ser impar y positivo (sin empates en la mayoría)")
    return k


class AmplificationPlan(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: NoisyBoxSpec
    k: int
    epsilon: Fraction

    @field_validator("k")
    @classmethod
    def _k_impar(cls, k: int) -> int:
        if k < 1 or k % 2 == 0:
            raise ValueError(f"k = {k} debe ser impar y positivo")
        return k

    @field_validator("epsilon", mode="before")
    @classmethod
    def _epsilon_valido(cls, value) -> Fraction:
        value = Fraction(value)
        if not 0 < value < HALF:
            raise ValueError(f"ε = {format_rational(value)} debe estar en (0, 1/2)")
        return value

    @model_validator(mode="after")
    def _p_valido(self) -> "AmplificationPlan":
        check_noise_level(self.spec.p)
        return self


def amplification_plan(spec: NoisyBoxSpec, k: int, epsilon: Fraction) -> AmplificationPlan:
    """Construye el plan lanzando AmplificationPlanError en lugar de un error de validación."""
    return AmplificationPlan(spec=spec, k=_check_k(k), epsilon=_check_epsilon(epsilon))


def plan_for_target(spec: NoisyBoxSpec, epsilon: Fraction) -> AmplificationPlan:
    return amplification_plan(spec, choose_k(spec.p, epsilon), epsilon)


def majority_correctness(p: Fraction, k: int) -> Fraction:
    """Σ_{i > k/2} C(k,i) p^i (1−p)^(k−i), exacto."""
    p = Fraction(p)
    _check_k(k)
    q = 1 - p
    return sum((math.comb(k, i) * p**i * q ** (k - i) for i in range(k // 2 + 1, k + 1)), Fraction(0))


def choose_k(p: Fraction, epsilon: Fraction) -> int:
    """Menor k impar cuya corrección exacta por mayoría es ≥ 1 − ε."""
    p = check_noise_level(p)
    epsilon = _check_epsilon(epsilon)
    k = 1
    while majority_correctness(p, k) < 1 - epsilon:
        k += 2
    logger.debug(f"choose_k(p={format_rational(p)}, ε={format_rational(epsilon)}) = {k}")
    return k


def hoeffding_k_estimate(p: Fraction, epsilon: Fraction) -> int:
    """
    Estimación documentada (no exacta): menor k impar con exp(−2k(p−1/2)²) ≤ ε.
    Siempre es ≥ choose_k(p, ε).
    """
    p = check_noise_level(p)
    epsilon = _check_epsilon(epsilon)
    delta = float(p - HALF)
    k = max(1, math.ceil(math.log(1 / float(epsilon)) / (2 * delta * delta)))
    return k if k % 2 == 1 else k + 1


def amplification_table(p: Fraction, ks: list[int]) -> list[tuple[int, Fraction]]:
    return [(k, majority_correctness(p, k)) for k in ks]


class AmplifyResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bit: int
    achieved_correctness: Fraction
    votes: tuple[int, ...]


def amplify(plan: AmplificationPlan, x: str, y: str, rng: np.random.Generator) -> AmplifyResult:
    """
    k ejecuciones independientes del protocolo ruidoso, cada una con su propio
    generador hijo (rng.spawn), y voto por mayoría de los bits reconciliados.
    """
    votes = []
    for child in rng.spawn(plan.k):
        transcript = run_noisy_protocol(plan.spec, x, y, child)
        votes.append(reconcile(transcript))
    bit = int(sum(votes) * 2 > plan.k)
    return AmplifyResult(bit=bit, achieved_correctness=majority_correctness(plan.spec.p, plan.k), votes=tuple(votes))


def empirical_amplified_correctness(plan: AmplificationPlan, x: str, y: str, trials: int,
                                    rng: np.random.Generator) -> float:
    expected = plan.spec.f.evaluate(x, y)
    hits = sum(amplify(plan, x, y, child).bit == expected for child in rng.spawn(trials))
    return hits / trials
