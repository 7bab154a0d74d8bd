import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ns_compute import (
    BooleanFunction,
    and_function,
    constant_function,
    equality_function,
    function_from_index,
    majority_function,
    random_function,
    xor_function,
)
from protocol_harness import reconcile
from utilities.general import all_bitstrings, frequencies, total_variation
from vandam_compiler import (
    anf_decompose,
    check_protocol,
    compile,
    evaluate_anf,
    protocol_from_document,
    protocol_to_document,
    run_compiled,
)


def oracle_anf(f: BooleanFunction) -> dict[int, tuple[int, ...]]:
    """Coeficientes por eliminación triangular: c_z = f(x, z) ⊕ (⊕_{S ⊊ z} c_S)."""
    coefficients: dict[int, list[int]] = {}
    for xi, x in enumerate(all_bitstrings(f.l)):
        solved: dict[int, int] = {}
        for z, y in enumerate(all_bitstrings(f.m)):
            value = f.evaluate(x, y)
            for subset, coeff in solved.items():
                if subset & z == subset:
                    value ^= coeff
            solved[z] = value
        for mask, coeff in solved.items():
            coefficients.setdefault(mask, [0] * 2**f.l)[xi] = coeff
    return {mask: tuple(table) for mask, table in coefficients.items() if any(table)}


# ------------------------------
# Forma normal algebraica
# ------------------------------
def test_anf_de_and():
    form = anf_decompose(and_function())
    assert form.terms == {1: (0, 1)}


def test_anf_de_xor():
    form = anf_decompose(xor_function())
    assert form.terms == {0: (0, 1), 1: (1, 1)}


def test_anf_de_igualdad_reconstruye():
    f = equality_function(2)
    form = anf_decompose(f)
    for x, y in f.input_pairs():
        assert evaluate_anf(form, x, y) == f.evaluate(x, y)
    assert form.terms == oracle_anf(f)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_anf_coincide_con_el_oraculo(l, m, seed):
    f = random_function(l, m, np.random.default_rng(seed))
    form = anf_decompose(f)
    assert form.terms == oracle_anf(f)
    for x, y in f.input_pairs():
        assert evaluate_anf(form, x, y) == f.evaluate(x, y)


def test_anf_lado_alice_reconstruye():
    f = majority_function(2, 1)
    form = anf_decompose(f, "alice")
    assert form.width == 2
    for x, y in f.input_pairs():
        assert evaluate_anf(form, x, y) == f.evaluate(x, y)


# ------------------------------
# Compilación
# ------------------------------
def test_and_usa_una_caja():
    protocol = compile(and_function())
    assert protocol.box_count == 1
    assert protocol.side == "bob"


def test_funcion_cero_no_usa_cajas(rng):
    protocol = compile(constant_function(2, 2, 0))
    assert protocol.box_count == 0
    for x, y in protocol.f.input_pairs():
        run = run_compiled(protocol, x, y, rng)
        assert (run.a, run.b) == (0, 0)
        assert run.transcript.box_calls() == []


def test_mayoria_cuenta_terminos_mixtos_del_oraculo():
    f = majority_function(2, 1)
    expected = sum(1 for mask in oracle_anf(f) if mask != 0)
    assert compile(f).box_count == expected


def test_cota_de_cajas_alcanzada():
    # x · OR(y1, y2) = x·y1 ⊕ x·y2 ⊕ x·y1·y2
    f = BooleanFunction.from_callable(1, 2, lambda x, y: int(x == "1" and "1" in y))
    assert compile(f).box_count == 2**2 - 1


def test_lado_min_elige_el_menor():
    # depende de un solo bit de Alice y de todos los de Bob
    f = BooleanFunction.from_callable(1, 3, lambda x, y: int(x == "1" and "1" in y))
    bob, alice, best = compile(f, "bob"), compile(f, "alice"), compile(f, "min")
    assert (bob.box_count, alice.box_count) == (7, 1)
    assert best.side == "alice"
    assert best.box_count == 1


def test_lado_min_empate_elige_bob():
    assert compile(and_function(), "min").side == "bob"


def test_lado_desconocido():
    with pytest.raises(ValueError):
        compile(and_function(), "carol")


# ------------------------------
# Ejecución
# ------------------------------
def test_and_en_uno_uno(rng):
    run = run_compiled(compile(and_function()), "1", "1", rng)
    assert run.a ^ run.b == 1
    assert reconcile(run.transcript) == 1


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**32 - 1), st.sampled_from(["bob", "alice", "min"]))
@settings(max_examples=40)
def test_protocolo_compilado_reconstruye_f(l, m, seed, side):
    rng = np.random.default_rng(seed)
    f = random_function(l, m, rng)
    protocol = compile(f, side)
    assert protocol.box_count <= 2 ** (f.m if protocol.side == "bob" else f.l) - 1
    result = check_protocol(protocol, rng)
    assert result.ok
    assert result.failures == []


def test_check_exhaustivo_tres_mas_tres():
    f = random_function(3, 3, np.random.default_rng(11))
    result = check_protocol(compile(f), np.random.default_rng(12))
    assert (result.passed, result.total) == (64, 64)


def test_transcripcion_sin_mensajes_y_con_todas_las_cajas(rng):
    f = equality_function(2)
    protocol = compile(f)
    run = run_compiled(protocol, "01", "11", rng)
    kinds = {event.kind for event in run.transcript.events}
    assert kinds <= {"local_compute", "box_call", "output"}
    assert len(run.transcript.box_calls()) == 2 * protocol.box_count


def test_el_lado_de_alice_no_depende_de_y():
    # con la misma semilla la vista de Alice es idéntica para toda y
    f = random_function(2, 2, np.random.default_rng(5))
    protocol = compile(f)
    views = []
    for y in f.bob_inputs():
        run = run_compiled(protocol, "10", y, np.random.default_rng(99))
        views.append(run.transcript.events_of("alice"))
    assert all(view == views[0] for view in views)


def test_longitud_de_entrada_incorrecta(rng):
    with pytest.raises(ValueError):
        run_compiled(compile(and_function()), "10", "1", rng)


# ------------------------------
# Documento
# ------------------------------
def test_documento_de_protocolo():
    f = majority_function(2, 1)
    protocol = compile(f)
    document = protocol_to_document(protocol)
    assert document.truth_table == f.as_string()
    restored = protocol_from_document(document)
    assert restored.form == protocol.form
    assert restored.alice_plan == protocol.alice_plan
    assert restored.bob_plan == protocol.bob_plan


def test_documento_corrupto():
    document = protocol_to_document(compile(and_function()))
    document.terms[0].coefficient = "00"
    with pytest.raises(ValueError):
        protocol_from_document(document)


# ------------------------------
# Barridos de aceptación
# ------------------------------
@pytest.mark.slow
@pytest.mark.parametrize("l, m", [(0, 4), (1, 3), (2, 2), (3, 1), (4, 0)])
def test_todas_las_funciones_de_cuatro_bits(l, m):
    rng = np.random.default_rng(1)
    for index in range(2**16):
        f = function_from_index(l, m, index)
        protocol = compile(f)
        assert protocol.box_count <= 2**m - 1
        assert check_protocol(protocol, rng).ok


@pytest.mark.slow
@pytest.mark.parametrize("l, m", [(2, 3), (3, 3)])
def test_funciones_aleatorias_cinco_y_seis_bits(l, m):
    rng = np.random.default_rng(2024)
    for _ in range(500):
        f = random_function(l, m, rng)
        protocol = compile(f)
        assert protocol.box_count <= 2**m - 1
        assert check_protocol(protocol, rng).ok


@pytest.mark.slow
def test_salida_de_alice_uniforme_para_toda_y():
    rng = np.random.default_rng(20240601)
    for _ in range(20):
        f = random_function(2, 2, rng)
        protocol = compile(f)
        for y in f.bob_inputs():
            samples = [run_compiled(protocol, "01", y, child).a for child in rng.spawn(10_000)]
            assert total_variation(frequencies(samples), {0: 0.5, 1: 0.5}) < 0.02
