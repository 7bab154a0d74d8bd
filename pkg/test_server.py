# test_server.py - Prueba de las herramientas MCP con un cliente en memoria

import asyncio
import json

import pytest
from fastmcp import Client

from server import mcp


def call(name: str, arguments: dict) -> dict:
    async def _call():
        async with Client(mcp) as client:
            result = await client.call_tool(name, arguments)
            return json.loads(result.content[0].text)

    return asyncio.run(_call())


def test_herramientas_registradas():
    async def _names():
        async with Client(mcp) as client:
            return {t.name for t in await client.list_tools()}

    assert asyncio.run(_names()) == {
        "verificar_caja",
        "valor_juego",
        "construir_caja_f",
        "compilar_funcion",
        "ejecutar_protocolo",
        "amplificar",
        "halting_acotado",
        "interpretar_programa",
    }


def test_verificar_caja_pr():
    resultado = call("verificar_caja", {"caja": "pr"})
    assert resultado["success"]
    assert resultado["data"]["no_signalling"] is True


def test_verificar_caja_que_senaliza():
    resultado = call("verificar_caja", {"caja": "signalling"})
    assert resultado["success"]
    assert not resultado["data"]["holds"]
    assert len(resultado["data"]["violations"]) == 4


def test_valor_juego_chsh():
    assert call("valor_juego", {"juego": "chsh"})["data"]["value"]["exact"] == "3/4"
    assert call("valor_juego", {"juego": "chsh", "estrategia": "pr"})["data"]["value"]["exact"] == "1"


def test_estrategia_desconocida_devuelve_error():
    resultado = call("valor_juego", {"juego": "chsh", "estrategia": "telepathy"})
    assert not resultado["success"]
    assert resultado["error"] == "ValueError"


def test_compilar_y_comprobar():
    resultado = call("compilar_funcion", {"funcion": "and", "comprobar": True, "semilla": 1})
    data = resultado["data"]
    assert data["box_count"] == 1
    assert data["check"]["ok"]
    assert data["check"]["passed"] == 4


def test_ejecutar_protocolo():
    data = call("ejecutar_protocolo", {"funcion": "xor", "x": "1", "y": "1", "semilla": 9})["data"]
    assert data["a_xor_b"] == data["f"] == 0


def test_construir_caja_f_ruidosa():
    data = call("construir_caja_f", {"funcion": "or", "p": "3/4"})["data"]
    assert data["noisy"]
    assert data["min_correctness"] == "3/4"


def test_amplificar():
    data = call("amplificar", {"funcion": "and", "p": "17/20", "epsilon": "3/20", "ensayos": 100})["data"]
    assert data["k"] == 1
    assert data["trials"] == 100


@pytest.mark.parametrize("p", ["1/2", "1", "abc"])
def test_amplificar_p_invalido(p):
    assert not call("amplificar", {"funcion": "and", "p": p, "epsilon": "1/10", "ensayos": 10})["success"]


def test_halting_acotado():
    data = call("halting_acotado", {"pasos": 100})["data"]
    assert data["halting_pairs"] == 60
    assert data["reconciled"] == 64


def test_interpretar_programa():
    data = call("interpretar_programa", {"programa": "countdown", "entrada": "10", "pasos": 100})["data"]
    assert data == {"status": "halted", "steps": 8}
