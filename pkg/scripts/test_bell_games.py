import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from bell_games import (
    EnumerationLimitError,
    GameDefinitionError,
    QuantumStrategy,
    StrategyError,
    basis_projectors,
    box_from_quantum,
    chsh_expression,
    chsh_game,
    classical_value,
    deterministic_strategy_box,
    float_game_value,
    game_from_document,
    game_to_document,
    game_value,
    make_game,
    maximally_entangled_state,
    optimal_chsh_strategy,
    uniform_input_dist,
)
from box_core import (
    Alphabet,
    AlphabetMismatchError,
    anti_pr_box,
    check_normalized,
    deterministic_box,
    local_marginals,
    mix,
    pr_box,
    signalling_box,
    uniform_box,
)

TSIRELSON = (2 + math.sqrt(2)) / 4
BIT = Alphabet.bits(1)


# ------------------------------
# CHSH
# ------------------------------
def test_chsh_valor_clasico_tres_cuartos():
    result = classical_value(chsh_game())
    assert result.value == Fraction(3, 4)
    assert result.strategies_checked == 16
    # primer maximizador en orden lexicográfico
    assert result.g == {"0": "0", "1": "0"}
    assert result.h == {"0": "0", "1": "0"}


def test_maximizador_clasico_alcanza_el_valor():
    game = chsh_game()
    result = classical_value(game)
    box = deterministic_strategy_box(game, result.g, result.h)
    assert game_value(game, box) == result.value


def test_chsh_pr_vale_uno():
    assert game_value(chsh_game(), pr_box()) == 1
    assert game_value(chsh_game(), anti_pr_box()) == 0
    assert game_value(chsh_game(), uniform_box()) == Fraction(1, 2)


def test_chsh_cuantico_tsirelson():
    game = chsh_game()
    quantum = box_from_quantum(optimal_chsh_strategy())
    assert abs(float_game_value(game, quantum.float_table) - TSIRELSON) < 1e-9
    value = game_value(game, quantum.box)
    assert abs(float(value) - TSIRELSON) < 1e-9
    assert Fraction(3, 4) < value < 1
    assert quantum.max_rationalization_error < 1e-6


def test_caja_cuantica_es_racional_y_localmente_uniforme():
    quantum = box_from_quantum(optimal_chsh_strategy())
    assert check_normalized(quantum.box)
    for value in local_marginals(quantum.box).values():
        assert abs(float(value) - 0.5) < 1e-9


def test_expresion_chsh_coincide_con_el_valor():
    quantum = box_from_quantum(optimal_chsh_strategy()).box
    for box in (pr_box(), anti_pr_box(), uniform_box(), quantum):
        assert chsh_expression(box) == game_value(chsh_game(), box)


def test_juego_con_alfabetos_distintos():
    with pytest.raises(AlphabetMismatchError):
        game_value(chsh_game(), uniform_box(inputs_a=Alphabet.bits(2)))


def test_juego_sobre_caja_que_senaliza_se_evalua_igual():
    # a = y, b = 0: gana salvo en (x, y) = (0, 1)
    assert game_value(chsh_game(), signalling_box()) == Fraction(3, 4)


# ------------------------------
# Estrategias cuánticas
# ------------------------------
def test_estado_producto_da_caja_determinista():
    state = np.array([1, 0, 0, 0], dtype=complex)
    basis = basis_projectors(0.0)
    strategy = QuantumStrategy(dim_a=2, dim_b=2, state=state, meas_a={"0": basis}, meas_b={"0": basis})
    result = box_from_quantum(strategy)
    assert result.box.p("0", "0", "0", "0") == 1
    assert result.box.p("0", "0", "1", "1") == 0
    assert result.max_rationalization_error == 0


def test_estado_maximamente_entrelazado_misma_base():
    basis = basis_projectors(0.3)
    strategy = QuantumStrategy(dim_a=2, dim_b=2, state=maximally_entangled_state(2),
                               meas_a={"0": basis, "1": basis}, meas_b={"0": basis, "1": basis})
    box = box_from_quantum(strategy).box
    for x, y in box.input_pairs():
        assert box.p(x, y, "0", "0") == Fraction(1, 2)
        assert box.p(x, y, "1", "1") == Fraction(1, 2)
        assert box.p(x, y, "0", "1") == 0


def test_proyectores_invalidos():
    bad = (np.array([[1, 1], [0, 0]], dtype=complex), np.eye(2, dtype=complex))
    with pytest.raises(ValidationError):
        QuantumStrategy(dim_a=2, dim_b=2, state=maximally_entangled_state(2),
                        meas_a={"0": bad}, meas_b={"0": basis_projectors(0.0)})


def test_estado_no_normalizado():
    with pytest.raises(ValidationError):
        QuantumStrategy(dim_a=2, dim_b=2, state=np.array([1, 1, 0, 0], dtype=complex),
                        meas_a={"0": basis_projectors(0.0)}, meas_b={"0": basis_projectors(0.0)})


def test_estrategia_modificada_se_rechaza_al_racionalizar():
    strategy = optimal_chsh_strategy()
    broken = strategy.model_copy(update={"state": np.array([1, 1, 0, 0], dtype=complex)})
    with pytest.raises(StrategyError):
        box_from_quantum(broken)


# ------------------------------
# Valor clásico: enumerador independiente
# ------------------------------
def brute_force_value(game):
    best = Fraction(-1)
    for g in itertools.product(game.outputs_a.labels, repeat=len(game.inputs_a)):
        for h in itertools.product(game.outputs_b.labels, repeat=len(game.inputs_b)):
            g_map = dict(zip(game.inputs_a, g))
            h_map = dict(zip(game.inputs_b, h))
            value = sum(
                (game.input_dist[(x, y)] for x, y in game.input_dist if game.wins(g_map[x], h_map[y], x, y)),
                Fraction(0),
            )
            best = max(best, value)
    return best


@st.composite
def small_games(draw):
    inputs_a = Alphabet.of(range(draw(st.integers(1, 3))))
    inputs_b = Alphabet.of(range(draw(st.integers(1, 3))))
    raw = draw(st.lists(st.integers(1, 5), min_size=len(inputs_a) * len(inputs_b),
                        max_size=len(inputs_a) * len(inputs_b)))
    pairs = list(itertools.product(inputs_a, inputs_b))
    dist = {pair: Fraction(w, sum(raw)) for pair, w in zip(pairs, raw)}
    winners = draw(st.sets(st.tuples(st.sampled_from(BIT.labels), st.sampled_from(BIT.labels),
                                     st.sampled_from(inputs_a.labels), st.sampled_from(inputs_b.labels))))
    return make_game(inputs_a, inputs_b, BIT, BIT, dist, lambda a, b, x, y: (a, b, x, y) in winners)


@given(small_games())
@settings(max_examples=30)
def test_valor_clasico_coincide_con_fuerza_bruta(game):
    result = classical_value(game)
    assert result.value == brute_force_value(game)
    assert game_value(game, deterministic_strategy_box(game, result.g, result.h)) == result.value


@given(st.fractions(min_value=0, max_value=1, max_denominator=50))
def test_valor_lineal_en_la_caja(weight):
    game = chsh_game()
    mixed = mix([(pr_box(), weight), (uniform_box(), 1 - weight)])
    assert game_value(game, mixed) == weight * 1 + (1 - weight) * Fraction(1, 2)


def test_limite_de_enumeracion():
    many = Alphabet.of(range(25))
    game = make_game(many, BIT, BIT, BIT, uniform_input_dist(many, BIT), lambda a, b, x, y: a == b)
    with pytest.raises(EnumerationLimitError):
        classical_value(game)


# ------------------------------
# Documentos
# ------------------------------
def test_documento_de_juego():
    game = chsh_game()
    document = game_to_document(game)
    assert document.input_dist[0].p == "1/4"
    assert len(document.predicate) == 8
    assert game_from_document(document) == game


def test_documento_con_pesos_que_no_suman_uno():
    document = game_to_document(chsh_game())
    document.input_dist[0].p = "1/2"
    with pytest.raises(GameDefinitionError):
        game_from_document(document)


def test_documento_con_par_repetido():
    document = game_to_document(chsh_game())
    document.input_dist.append(document.input_dist[0])
    with pytest.raises(GameDefinitionError):
        game_from_document(document)


# ------------------------------
# Valores de referencia
# ------------------------------
def test_predicado_siempre_verdadero_vale_uno():
    game = make_game(BIT, BIT, BIT, BIT, uniform_input_dist(BIT, BIT), lambda a, b, x, y: True)
    assert classical_value(game).value == 1
    assert game_value(game, uniform_box()) == 1


def test_predicado_xor_de_entradas_vale_uno():
    game = make_game(BIT, BIT, BIT, BIT, uniform_input_dist(BIT, BIT),
                     lambda a, b, x, y: int(a) ^ int(b) == int(x) ^ int(y))
    result = classical_value(game)
    assert result.value == 1
    assert dict(result.g) == {"0": "0", "1": "1"}
    assert dict(result.h) == {"0": "0", "1": "1"}


def test_caja_local_a_cero_b_cero_en_chsh():
    box = deterministic_box({"0": "0", "1": "0"}, {"0": "0", "1": "0"}, BIT, BIT, BIT, BIT)
    assert game_value(chsh_game(), box) == Fraction(3, 4)
