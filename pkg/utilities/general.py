import itertools
import logging
import os
from collections import Counter
from fractions import Fraction
from typing import Iterable, Mapping

# -----------------------------
# Configuración de entorno
# -----------------------------
# Intentar cargar .env si python-dotenv está instalado
try:
    from dotenv import load_dotenv
    load_dotenv()  # carga variables desde .env al entorno
except Exception:
    pass

LOG_FORMAT = "[%(levelname)s]: %(message)s"


def configure_logging(level: str | None = None, handlers: list[logging.Handler] | None = None) -> None:
    """
    Configura el logging raíz. Si NSLAB_LOG_FILE está definido se añade un
    FileHandler en utf-8 además de los handlers recibidos.
    """
    level = (level or os.getenv("NSLAB_LOG_LEVEL", "INFO")).upper()
    handlers = list(handlers or [logging.StreamHandler()])
    log_file = os.getenv("NSLAB_LOG_FILE")
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


# -----------------------------
# Racionales
# -----------------------------
def format_rational(value: Fraction) -> str:
    """Racional exacto como "num/den" (los enteros sin denominador)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Fraction, digits: int = 10) -> str:
    """Aproximación decimal con `digits` cifras significativas."""
    return f"{float(value):.{digits}g}"


def describe_rational(value: Fraction) -> str:
    return f"{format_rational(value)} (≈ {format_decimal(value)})"


def parse_rational(text: str) -> Fraction:
    """
    Acepta "num/den", enteros y decimales exactos ("0.85" -> 17/20).
    Lanza ValueError si el texto no representa un racional.
    """
    if text is None:
        raise ValueError("Racional vacío")
    text = str(text).strip()
    if not text:
        raise ValueError("Racional vacío")
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise ValueError(f"Denominador cero en {text!r}") from None


# -----------------------------
# Cadenas de bits
# -----------------------------
def all_bitstrings(width: int) -> list[str]:
    """Todas las cadenas de `width` bits en orden lexicográfico (big-endian)."""
    if width < 0:
        raise ValueError(f"Ancho negativo: {width}")
    return ["".join(bits) for bits in itertools.product("01", repeat=width)]


def bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def int_to_bits(value: int, width: int) -> str:
    if width == 0:
        return ""
    return format(value, f"0{width}b")


def total_variation(p: Mapping, q: Mapping) -> float:
    """Distancia de variación total entre dos distribuciones sobre claves hashables."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)


def frequencies(samples: Iterable) -> dict:
    """Frecuencias relativas de una secuencia de muestras."""
    counts = Counter(samples)
    total = counts.total()
    if total == 0:
        return {}
    return {key: count / total for key, count in counts.items()}
