import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ns_compute import and_function, equality_function, noisy_spec, xor_function
from protocol_harness import (
    AmplificationPlanError,
    BoxRequest,
    LocalStep,
    ProtocolTranscript,
    TranscriptStateError,
    amplification_plan,
    amplification_table,
    amplify,
    choose_k,
    empirical_amplified_correctness,
    export_transcript,
    hoeffding_k_estimate,
    majority_correctness,
    plan_for_target,
    reconcile,
    run_fbox_protocol,
    run_noisy_protocol,
    run_two_party,
)


def brute_force_majority(p: Fraction, k: int) -> Fraction:
    """Suma sobre los 2^k patrones de aciertos con mayoría estricta."""
    total = Fraction(0)
    for pattern in itertools.product((0, 1), repeat=k):
        hits = sum(pattern)
        if hits * 2 > k:
            total += p**hits * (1 - p) ** (k - hits)
    return total


# ------------------------------
# Transcripciones
# ------------------------------
def test_reconciliacion_de_caja_f(rng):
    f = equality_function(1)
    transcript = run_fbox_protocol(f, "1", "1", rng)
    assert reconcile(transcript) == 1
    assert transcript.reconciliation.value == 1
    assert len(transcript.box_calls()) == 2


def test_reconciliar_dos_veces(rng):
    transcript = run_fbox_protocol(and_function(), "0", "1", rng)
    reconcile(transcript)
    with pytest.raises(TranscriptStateError):
        reconcile(transcript)
    with pytest.raises(TranscriptStateError):
        transcript.record("alice", "output", bit=0)


def test_reconciliar_sin_salida():
    transcript = ProtocolTranscript()
    transcript.record("alice", "output", bit=1)
    with pytest.raises(TranscriptStateError, match="bob"):
        reconcile(transcript)


def test_exportar_transcripcion(rng):
    transcript = run_fbox_protocol(xor_function(), "1", "0", rng)
    reconcile(transcript)
    lines = export_transcript(transcript).splitlines()
    assert lines[0].startswith("alice\tbox_call\tbox=0,input=1,output=")
    assert lines[1].startswith("bob\tbox_call\tbox=0,input=0,output=")
    assert lines[-1].startswith("both\treconciliation\t")
    assert lines[-1].endswith("a_xor_b=1")


def test_exportar_es_determinista():
    f = and_function()
    first = run_fbox_protocol(f, "1", "1", np.random.default_rng(3))
    second = run_fbox_protocol(f, "1", "1", np.random.default_rng(3))
    assert export_transcript(first) == export_transcript(second)


def test_partes_desalineadas():
    def alice():
        yield LocalStep(payload={"op": "prepare"})
        yield BoxRequest(box=0, input="1")
        return 0

    def bob():
        return 1
        yield  # generador sin peticiones

    with pytest.raises(TranscriptStateError):
        run_two_party(alice(), bob(), lambda box, x, y: (0, 0))


def test_orden_de_cajas_distinto():
    def party(order):
        for box in order:
            yield BoxRequest(box=box, input="0")
        return 0

    with pytest.raises(TranscriptStateError):
        run_two_party(party([0, 1]), party([1, 0]), lambda box, x, y: (0, 0))


def test_pasos_locales_solo_en_su_lado():
    def alice():
        yield LocalStep(payload={"op": "secret", "bit": 1})
        output = yield BoxRequest(box=0, input="1")
        return output

    def bob():
        output = yield BoxRequest(box=0, input="0")
        return output

    transcript = run_two_party(alice(), bob(), lambda box, x, y: (1, 0))
    assert [event.kind for event in transcript.events_of("bob")] == ["box_call", "output"]
    assert transcript.events_of("alice")[0].payload == {"op": "secret", "bit": 1}


# ------------------------------
# Amplificación exacta
# ------------------------------
@pytest.mark.parametrize("p", [Fraction(3, 5), Fraction(3, 4), Fraction(17, 20)])
@pytest.mark.parametrize("k", [1, 3, 5, 7, 9, 15])
def test_correccion_exacta_coincide_con_patrones(p, k):
    assert majority_correctness(p, k) == brute_force_majority(p, k)


@pytest.mark.parametrize("p", [Fraction(3, 5), Fraction(3, 4), Fraction(17, 20)])
def test_correccion_monotona_en_k(p):
    values = [majority_correctness(p, k) for k in range(1, 42, 2)]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_correccion_k_uno_es_p():
    assert majority_correctness(Fraction(17, 20), 1) == Fraction(17, 20)


def test_correccion_k_tres():
    # 3p²(1−p) + p³
    p = Fraction(3, 4)
    assert majority_correctness(p, 3) == 3 * p**2 * (1 - p) + p**3


def test_choose_k():
    assert choose_k(Fraction(17, 20), Fraction(3, 20)) == 1
    k = choose_k(Fraction(17, 20), Fraction(1, 1000))
    assert majority_correctness(Fraction(17, 20), k) >= Fraction(999, 1000)
    assert majority_correctness(Fraction(17, 20), k - 2) < Fraction(999, 1000)


@pytest.mark.parametrize("p, epsilon", [(Fraction(3, 5), Fraction(1, 10)), (Fraction(17, 20), Fraction(1, 10**6))])
def test_choose_k_es_el_menor_impar(p, epsilon):
    def binomial_tail(k: int) -> Fraction:
        return sum((math.comb(k, j) * p**j * (1 - p) ** (k - j) for j in range(k // 2 + 1, k + 1)), Fraction(0))

    expected = 1
    while binomial_tail(expected) < 1 - epsilon:
        expected += 2
    assert choose_k(p, epsilon) == expected


@given(st.fractions(min_value=Fraction(3, 5), max_value=Fraction(19, 20), max_denominator=100),
       st.fractions(min_value=Fraction(1, 100), max_value=Fraction(49, 100), max_denominator=100))
def test_estimacion_de_hoeffding_acota_a_k(p, epsilon):
    assert hoeffding_k_estimate(p, epsilon) >= choose_k(p, epsilon)
    assert hoeffding_k_estimate(p, epsilon) % 2 == 1


def test_tabla_de_amplificacion():
    table = amplification_table(Fraction(3, 5), [1, 3, 5])
    assert [k for k, _ in table] == [1, 3, 5]
    assert table[0][1] == Fraction(3, 5)


@pytest.mark.parametrize("k", [0, 2, -1])
def test_k_invalido(k):
    spec = noisy_spec(and_function(), Fraction(3, 4))
    with pytest.raises(AmplificationPlanError):
        amplification_plan(spec, k, Fraction(1, 10))


@pytest.mark.parametrize("epsilon", [Fraction(0), Fraction(1, 2), Fraction(3, 4)])
def test_epsilon_invalido(epsilon):
    spec = noisy_spec(and_function(), Fraction(3, 4))
    with pytest.raises(AmplificationPlanError):
        amplification_plan(spec, 3, epsilon)


# ------------------------------
# Amplificación empírica
# ------------------------------
def test_ejecucion_ruidosa_registra_una_caja(rng):
    spec = noisy_spec(and_function(), Fraction(3, 4))
    transcript = run_noisy_protocol(spec, "1", "0", rng)
    assert len(transcript.box_calls()) == 2
    assert reconcile(transcript) in (0, 1)


def test_amplify_devuelve_k_votos(rng):
    spec = noisy_spec(and_function(), Fraction(17, 20))
    plan = plan_for_target(spec, Fraction(1, 100))
    result = amplify(plan, "1", "1", rng)
    assert len(result.votes) == plan.k
    assert result.bit == int(sum(result.votes) * 2 > plan.k)
    assert result.achieved_correctness == majority_correctness(Fraction(17, 20), plan.k)


def test_amplify_es_reproducible():
    spec = noisy_spec(xor_function(), Fraction(3, 5))
    plan = amplification_plan(spec, 5, Fraction(1, 4))
    first = amplify(plan, "0", "1", np.random.default_rng(8))
    second = amplify(plan, "0", "1", np.random.default_rng(8))
    assert first == second


def test_correccion_empirica_cercana_a_la_exacta():
    spec = noisy_spec(and_function(), Fraction(17, 20))
    plan = amplification_plan(spec, 3, Fraction(1, 10))
    exact = float(majority_correctness(Fraction(17, 20), 3))
    empirical = empirical_amplified_correctness(plan, "1", "1", 4_000, np.random.default_rng(20240601))
    assert abs(empirical - exact) < 0.03


@pytest.mark.slow
def test_correccion_empirica_diez_mil_ensayos():
    spec = noisy_spec(and_function(), Fraction(17, 20))
    plan = plan_for_target(spec, Fraction(1, 1000))
    exact = float(majority_correctness(Fraction(17, 20), plan.k))
    empirical = empirical_amplified_correctness(plan, "1", "0", 10_000, np.random.default_rng(20240601))
    assert abs(empirical - exact) < 0.02
