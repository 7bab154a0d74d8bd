# ============================================================================
# cli.py - Línea de comandos `nslab`
# Description: Experimentos reproducibles sobre cajas no-señalizantes a partir
#              de ficheros de escenario. La salida principal va a stdout; los
#              logs van a stderr con RichHandler.
#
# Códigos de salida: 0 correcto, 1 propiedad violada, 2 error de uso/lectura.
# ============================================================================
import asyncio
import os
from typing import Annotated, Callable

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

import tool
from utilities.general import configure_logging

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_USAGE = 2

app = typer.Typer(
    name="nslab",
    help="Cajas no-señalizantes, juegos de Bell y protocolos con cajas PR.",
    add_completion=False,
    no_args_is_help=True,
)
console = Console(soft_wrap=True, highlight=False)
err_console = Console(stderr=True, soft_wrap=True, highlight=False)

Seed = Annotated[int | None, typer.Option("--seed", help="Semilla del generador (NSLAB_DEFAULT_SEED por defecto).")]
Side = Annotated[str, typer.Option("--side", help="Variables que se descomponen: alice | bob | min.")]


@app.callback()
def main(
    log_level: Annotated[str | None, typer.Option("--log-level", help="DEBUG, INFO, WARNING...")] = None,
) -> None:
    configure_logging(
        log_level,
        handlers=[RichHandler(console=err_console, show_time=False, show_path=False)],
    )


def _finish(result: dict, render: Callable[[dict], int]) -> None:
    if not result["success"]:
        err_console.print(f"error ({result['error']}): {result['message']}", markup=False)
        raise typer.Exit(code=EXIT_USAGE)
    raise typer.Exit(code=render(result["data"]))


def _value_line(value: dict) -> str:
    return f"value: {value['exact']} (≈ {value['decimal']})"


# ------------------------------
# verify
# ------------------------------
@app.command()
def verify(box_file: Annotated[str, typer.Argument(help="Fichero de caja (JSON) o alias de fixture.")]) -> None:
    """Comprueba normalización y no-señalización exactas."""

    def render(data: dict) -> int:
        typer.echo(f"normalization: {'OK' if data['normalized'] else 'FAILED'}")
        if not data["normalized"]:
            return EXIT_VIOLATED
        if data["no_signalling"]:
            typer.echo("no-signalling: OK")
            return EXIT_OK
        typer.echo(f"no-signalling: VIOLATED ({len(data['violations'])} violations)")
        table = Table("#", "violation")
        for number, text in enumerate(data["violations"], start=1):
            table.add_row(str(number), text)
        console.print(table)
        return EXIT_VIOLATED

    _finish(tool.scenario_result(kind="verify", box_file=box_file), render)


# ------------------------------
# game
# ------------------------------
@app.command()
def game(
    game_file: Annotated[str, typer.Argument(help="Fichero de juego (JSON) o alias, p.ej. 'chsh'.")],
    strategy: Annotated[str, typer.Argument(help="classical | quantum-builtin | pr | box:<fichero>")] = "classical",
) -> None:
    """Valor exacto del juego bajo la estrategia indicada."""

    def render(data: dict) -> int:
        typer.echo(f"strategy: {data['strategy']}")
        typer.echo(_value_line(data["value"]))
        if data["strategy"] == "classical":
            g = ", ".join(f"{x}->{a}" for x, a in data["g"].items())
            h = ", ".join(f"{y}->{b}" for y, b in data["h"].items())
            typer.echo(f"maximizer: g = {{{g}}}, h = {{{h}}}")
            typer.echo(f"strategies checked: {data['strategies_checked']}")
        elif data["strategy"] == "quantum-builtin":
            typer.echo(f"float value: {data['float_value']}")
            typer.echo(f"max rationalization error: {data['max_rationalization_error']}")
        return EXIT_OK

    _finish(tool.scenario_result(kind="game", game_file=game_file, strategy=strategy), render)


# ------------------------------
# fbox
# ------------------------------
@app.command()
def fbox(
    function_file: Annotated[str, typer.Argument(help="Tabla de verdad o alias (and, or, xor).")],
    p: Annotated[str | None, typer.Option("--p", help="Corrección por par para la caja ruidosa, 1/2 < p < 1.")] = None,
    out: Annotated[str | None, typer.Option("--out", help="Guardar la caja en este fichero.")] = None,
) -> None:
    """Construye la caja f (exacta o ruidosa) y la verifica."""

    def render(data: dict) -> int:
        kind = "noisy f-box" if data["noisy"] else "f-box"
        typer.echo(f"{kind}: l={data['l']}, m={data['m']}")
        typer.echo(f"no-signalling: {'OK' if data['holds'] else 'VIOLATED'}")
        typer.echo(f"correctness: min {data['min_correctness']}, max {data['max_correctness']}")
        if "path" in data:
            typer.echo(f"written: {data['path']}")
        return EXIT_OK if data["holds"] else EXIT_VIOLATED

    _finish(tool.scenario_result(kind="fbox", function_file=function_file, p=p, out=out), render)


# ------------------------------
# compile / run
# ------------------------------
@app.command("compile")
def compile_command(
    function_file: Annotated[str, typer.Argument(help="Tabla de verdad o alias.")],
    side: Side = "bob",
    out: Annotated[str | None, typer.Option("--out", help="Guardar el protocolo compilado (JSON).")] = None,
    check: Annotated[bool, typer.Option("--check", help="Validar a⊕b = f sobre todas las entradas.")] = False,
    seed: Seed = None,
) -> None:
    """Compila la función a un protocolo con cajas PR."""

    def render(data: dict) -> int:
        typer.echo(f"side: {data['side']}")
        typer.echo(f"box_count: {data['box_count']}")
        if "path" in data:
            typer.echo(f"written: {data['path']}")
        if "check" in data:
            result = data["check"]
            status = "OK" if result["ok"] else "FAILED"
            typer.echo(f"check: {status} ({result['passed']}/{result['total']} inputs)")
            for x, y in result["failures"]:
                typer.echo(f"  failed: x={x} y={y}")
            return EXIT_OK if result["ok"] else EXIT_VIOLATED
        return EXIT_OK

    _finish(tool.scenario_result(kind="compile", function_file=function_file, side=side, out=out,
                                 check=check, seed=seed), render)


@app.command()
def run(
    function_file: Annotated[str, typer.Argument(help="Tabla de verdad o alias.")],
    x: Annotated[str, typer.Argument(help="Entrada de Alice (bits).")],
    y: Annotated[str, typer.Argument(help="Entrada de Bob (bits).")],
    side: Side = "bob",
    seed: Seed = None,
    transcript: Annotated[str | None, typer.Option("--transcript", help="Guardar la transcripción.")] = None,
) -> None:
    """Una ejecución del protocolo compilado con su transcripción."""

    def render(data: dict) -> int:
        typer.echo(data["transcript"], nl=False)
        typer.echo(f"a⊕b = {data['a_xor_b']}, f(x,y) = {data['f']}")
        return EXIT_OK if data["a_xor_b"] == data["f"] else EXIT_VIOLATED

    _finish(tool.scenario_result(kind="run", function_file=function_file, x=x, y=y, side=side, seed=seed,
                                 transcript=transcript), render)


# ------------------------------
# amplify
# ------------------------------
@app.command()
def amplify(
    function_file: Annotated[str, typer.Argument(help="Tabla de verdad o alias.")],
    p: Annotated[str, typer.Option("--p", help="Corrección de la caja ruidosa, 1/2 < p < 1.")],
    epsilon: Annotated[str, typer.Option("--epsilon", help="Error objetivo, 0 < ε < 1/2.")],
    trials: Annotated[int | None, typer.Option("--trials", help="Ensayos (NSLAB_TRIALS por defecto).")] = None,
    seed: Seed = None,
    csv: Annotated[str | None, typer.Option("--csv", help="Exportar la tabla por par (x, y).")] = None,
) -> None:
    """Amplificación por mayoría de la caja f ruidosa."""

    def render(data: dict) -> int:
        table = Table("p", "ε", "k", "hoeffding k", "exact correctness", "empirical", "trials")
        table.add_row(
            data["p"],
            data["epsilon"],
            str(data["k"]),
            str(data["hoeffding_k"]),
            f"{data['achieved_correctness']['exact']} (≈ {data['achieved_correctness']['decimal']})",
            data["empirical_correctness"],
            str(data["trials"]),
        )
        console.print(table)
        if "path" in data:
            typer.echo(f"written: {data['path']}")
        return EXIT_OK

    _finish(tool.scenario_result(kind="amplify", function_file=function_file, p=p, epsilon=epsilon,
                                 trials=trials, seed=seed, csv=csv), render)


# ------------------------------
# halting
# ------------------------------
@app.command()
def halting(
    steps: Annotated[int, typer.Option("--steps", help="Cota de pasos T.")],
    program_bits: Annotated[int, typer.Option("--program-bits")] = 4,
    input_bits: Annotated[int, typer.Option("--input-bits")] = 2,
    program: Annotated[str | None, typer.Option("--program", help="Programa de texto a interpretar.")] = None,
    input_value: Annotated[str | None, typer.Option("--input", help="Entrada en bits para --program.")] = None,
    seed: Seed = None,
) -> None:
    """Caja f de parada acotada, o interpretación de un programa de texto."""
    if program is not None:

        def render_program(data: dict) -> int:
            typer.echo(f"{data['status']} after {data['steps']} steps")
            return EXIT_OK

        _finish(tool.scenario_result(kind="interpret", program_file=program, input=input_value or "", steps=steps),
                render_program)

    def render(data: dict) -> int:
        typer.echo(f"pairs: {data['pairs']}")
        typer.echo(f"halting pairs: {data['halting_pairs']}")
        typer.echo(f"no-signalling: {'OK' if data['no_signalling'] else 'VIOLATED'}")
        typer.echo(f"reconciled: {data['reconciled']}/{data['pairs']}")
        return EXIT_OK if data["holds"] else EXIT_VIOLATED

    _finish(tool.scenario_result(kind="halting", program_bits=program_bits, input_bits=input_bits, steps=steps,
                                 seed=seed), render)


# ------------------------------
# serve
# ------------------------------
@app.command()
def serve(port: Annotated[int | None, typer.Option("--port")] = None) -> None:
    """Arranca el servidor MCP (streamable-http)."""
    from server import mcp

    port = port or int(os.getenv("PORT", 8080))
    asyncio.run(mcp.run_async(transport="streamable-http", host="0.0.0.0", port=port))


if __name__ == "__main__":
    app()
