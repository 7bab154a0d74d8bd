import json
import logging
import os
from pathlib import Path
from urllib.parse import urlparse

import httpx
from pydantic import BaseModel, ValidationError

from bell_games import BellGame, GameDocument, game_from_document, game_to_document
from box_core import BipartiteBox, BoxDocument, box_from_document, box_to_document
from halting_demo import TinyProgram, parse_program
from ns_compute import BooleanFunction
from protocol_harness import ProtocolTranscript, export_transcript
from vandam_compiler import CompiledProtocol, ProtocolDocument, protocol_from_document, protocol_to_document

logger = logging.getLogger(__name__)

# Carpeta de escenarios incluidos en el repositorio
FIXTURES_DIR = Path(os.getenv("NSLAB_FIXTURES_DIR", Path(__file__).resolve().parent.parent / "fixtures"))

# Nombres cortos aceptados en la línea de comandos
FIXTURE_ALIASES = {
    "pr": "pr_box.json",
    "pr-box": "pr_box.json",
    "chsh": "chsh_game.json",
    "signalling": "signalling_box.json",
    "and": "and.tt",
    "or": "or.tt",
    "xor": "xor.tt",
    "countdown": "countdown.prog",
}


class ParseError(ValueError):
    """Error de lectura con la línea y/o el campo que lo provocó."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"línea {line}")
        if field:
            where.append(f"campo {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


# -----------------------------
# Resolución de orígenes
# -----------------------------
def _download_http_text(url: str) -> str:
    response = httpx.get(url, timeout=30, follow_redirects=True)
    response.raise_for_status()
    return response.text


def read_source(source: str | Path) -> str:
    """
    Lee el contenido de un escenario. Soporta:
      - ruta local existente
      - http/https público
      - alias de fixture ('chsh', 'pr', 'and', ...)
      - nombre de fichero dentro de FIXTURES_DIR
    """
    src = str(source).strip()
    if os.path.exists(src):
        try:
            return Path(src).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ParseError(f"No se pudo leer {src}: {e}") from e

    parsed = urlparse(src)
    if parsed.scheme in ("http", "https"):
        try:
            return _download_http_text(src)
        except httpx.HTTPError as e:
            raise ParseError(f"No se pudo descargar {src}: {e}") from e

    candidate = FIXTURES_DIR / FIXTURE_ALIASES.get(src.lower(), src)
    if candidate.exists():
        logger.debug(f"Usando fixture {candidate}")
        return candidate.read_text(encoding="utf-8")

    raise ParseError(f"No existe el fichero ni el fixture {src!r}")


def _parse_document(text: str, model: type[BaseModel]) -> BaseModel:
    if not text.strip():
        raise ParseError("Fichero vacío", line=1)
    try:
        json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"JSON inválido: {e.msg}", line=e.lineno) from e
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ParseError(first["msg"], field=field) from e


def _write_json(document: BaseModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document.model_dump(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    logger.info(f"✓ Guardado {path}")
    return path


# -----------------------------
# Cajas y juegos
# -----------------------------
def load_box(source: str | Path) -> BipartiteBox:
    document = _parse_document(read_source(source), BoxDocument)
    try:
        return box_from_document(document)
    except ValueError as e:
        raise ParseError(f"Caja inválida: {e}", field="table") from e


def save_box(box: BipartiteBox, path: str | Path) -> Path:
    return _write_json(box_to_document(box), path)


def load_game(source: str | Path) -> BellGame:
    document = _parse_document(read_source(source), GameDocument)
    try:
        return game_from_document(document)
    except ValueError as e:
        raise ParseError(f"Juego inválido: {e}", field="input_dist") from e


def save_game(game: BellGame, path: str | Path) -> Path:
    return _write_json(game_to_document(game), path)


# -----------------------------
# Tablas de verdad
# -----------------------------
def parse_truth_table(text: str) -> BooleanFunction:
    """
    Cabecera `l m` y después 2^(l+m) bits en orden lexicográfico de (x, y),
    separados por espacios o como una cadena 0/1 contigua. '#' inicia comentario.
    """
    lines = [(number, raw.split("#", 1)[0].strip()) for number, raw in enumerate(text.splitlines(), start=1)]
    lines = [(number, content) for number, content in lines if content]
    if not lines:
        raise ParseError("Tabla de verdad vacía", line=1)

    header_line, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or not all(part.isdigit() for part in parts):
        raise ParseError(f"Cabecera inválida {header!r}, se esperaba 'l m'", line=header_line, field="header")
    l, m = int(parts[0]), int(parts[1])

    bits: list[int] = []
    for number, content in lines[1:]:
        for ch in content:
            if ch.isspace():
                continue
            if ch not in "01":
                raise ParseError(f"Carácter {ch!r} no es un bit", line=number, field="truth_table")
            bits.append(int(ch))
    expected = 2 ** (l + m)
    if len(bits) != expected:
        raise ParseError(f"Se esperaban {expected} bits, hay {len(bits)}", line=lines[-1][0], field="truth_table")
    return BooleanFunction(l=l, m=m, truth_table=tuple(bits))


def format_truth_table(f: BooleanFunction) -> str:
    return f"{f.l} {f.m}\n{f.as_string()}\n"


def load_truth_table(source: str | Path) -> BooleanFunction:
    return parse_truth_table(read_source(source))


def save_truth_table(f: BooleanFunction, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_truth_table(f), encoding="utf-8")
    return path


# -----------------------------
# Protocolos, transcripciones y programas
# -----------------------------
def save_protocol(protocol: CompiledProtocol, path: str | Path) -> Path:
    return _write_json(protocol_to_document(protocol), path)


def load_protocol(source: str | Path) -> CompiledProtocol:
    document = _parse_document(read_source(source), ProtocolDocument)
    try:
        return protocol_from_document(document)
    except ValueError as e:
        raise ParseError(f"Protocolo inválido: {e}", field="terms") from e


def save_transcript(transcript: ProtocolTranscript, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(export_transcript(transcript), encoding="utf-8")
    return path


def load_program(source: str | Path) -> TinyProgram:
    return parse_program(read_source(source))
