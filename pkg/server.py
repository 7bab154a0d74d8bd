# server.py - Servidor MCP con las herramientas del laboratorio de cajas no-señalizantes

import asyncio
import logging
import os

from fastmcp import FastMCP

import tool

logger = logging.getLogger(__name__)
logging.basicConfig(format="[%(levelname)s]: %(message)s", level=os.getenv("NSLAB_LOG_LEVEL", "INFO").upper())


# Crear servidor MCP
mcp = FastMCP("MCP Server Cajas No-Señalizantes")


# ------------------------------
# 1. TOOL: Verificar una caja
# ------------------------------
@mcp.tool()
def verificar_caja(caja: str) -> dict:
    """Normalización y no-señalización exactas de una caja (ruta, URL o alias)."""
    logger.info(f"Tool: 'verificar_caja' called with caja={caja}")
    resultado = tool.scenario_result(kind="verify", box_file=caja)
    logger.info(f"Resultado: {resultado}")
    return resultado


# ------------------------------
# 2. TOOL: Valor de un juego de Bell
# ------------------------------
@mcp.tool()
def valor_juego(juego: str, estrategia: str = "classical") -> dict:
    """estrategia: classical | quantum-builtin | pr | box:<fichero>"""
    logger.info(f"Tool: 'valor_juego' called with juego={juego}, estrategia={estrategia}")
    return tool.scenario_result(kind="game", game_file=juego, strategy=estrategia)


# ------------------------------
# 3. TOOL: Construir caja f
# ------------------------------
@mcp.tool()
def construir_caja_f(funcion: str, p: str | None = None) -> dict:
    logger.info(f"Tool: 'construir_caja_f' called with funcion={funcion}, p={p}")
    return tool.scenario_result(kind="fbox", function_file=funcion, p=p)


# ------------------------------
# 4. TOOL: Compilar a cajas PR
# ------------------------------
@mcp.tool()
def compilar_funcion(funcion: str, lado: str = "bob", comprobar: bool = False, semilla: int | None = None) -> dict:
    logger.info(f"Tool: 'compilar_funcion' called with funcion={funcion}, lado={lado}")
    return tool.scenario_result(kind="compile", function_file=funcion, side=lado, check=comprobar, seed=semilla)


# ------------------------------
# 5. TOOL: Ejecutar el protocolo una vez
# ------------------------------
@mcp.tool()
def ejecutar_protocolo(funcion: str, x: str, y: str, lado: str = "bob", semilla: int | None = None) -> dict:
    logger.info(f"Tool: 'ejecutar_protocolo' called with funcion={funcion}, x={x}, y={y}")
    return tool.scenario_result(kind="run", function_file=funcion, x=x, y=y, side=lado, seed=semilla)


# ------------------------------
# 6. TOOL: Amplificación por mayoría
# ------------------------------
@mcp.tool()
def amplificar(funcion: str, p: str, epsilon: str, ensayos: int | None = None, semilla: int | None = None) -> dict:
    logger.info(f"Tool: 'amplificar' called with funcion={funcion}, p={p}, epsilon={epsilon}")
    return tool.scenario_result(kind="amplify", function_file=funcion, p=p, epsilon=epsilon,
                                trials=ensayos, seed=semilla)


# ------------------------------
# 7. TOOL: Parada acotada
# ------------------------------
@mcp.tool()
def halting_acotado(pasos: int, bits_programa: int = 4, bits_entrada: int = 2, semilla: int | None = None) -> dict:
    logger.info(f"Tool: 'halting_acotado' called with T={pasos}, bits_programa={bits_programa}, bits_entrada={bits_entrada}")
    return tool.scenario_result(kind="halting", program_bits=bits_programa, input_bits=bits_entrada,
                                steps=pasos, seed=semilla)


@mcp.tool()
def interpretar_programa(programa: str, entrada: str, pasos: int) -> dict:
    logger.info(f"Tool: 'interpretar_programa' called with programa={programa}, entrada={entrada}, T={pasos}")
    return tool.scenario_result(kind="interpret", program_file=programa, input=entrada, steps=pasos)


# ------------------------------
# Ejecución del servidor MCP
# ------------------------------
if __name__ == "__main__":
    port = int(os.getenv("PORT", 8080))
    logger.info(f"MCP server started on port {port}")
    asyncio.run(
        mcp.run_async(
            transport="streamable-http",
            host="0.0.0.0",
            port=port
        )
    )
