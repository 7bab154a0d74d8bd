# ============================================================================
# halting_demo.py
# Description: Máquina de contadores de 4 registros y predicado de parada
#              acotado H_T(x, y) convertido en caja f.
#
# La función de parada sin cota no es computable y no aparece aquí como dato:
# sólo se construye su truncamiento "¿el programa x para sobre y en ≤ T pasos?".
# ============================================================================
import logging
from typing import Literal

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from box_core import BipartiteBox
from ns_compute import BooleanFunction, make_fbox
from utilities.general import all_bitstrings, bits_to_int

logger = logging.getLogger(__name__)

REGISTERS = 4
WORD_BITS = 4
MAX_TABLE_BITS = 16

Opcode = Literal["INC", "DEC", "JZ", "JMP", "HALT"]


class ProgramError(ValueError):
    """Texto de programa mal formado."""


class WidthGuardError(ValueError):
    """program_bits + input_bits supera el tamaño de tabla admitido."""


# ============================================================================
# PROGRAMAS
# ============================================================================

class TinyInstruction(BaseModel):
    model_config = ConfigDict(frozen=True)

    op: Opcode
    reg: int | None = None
    target: int | None = None

    @model_validator(mode="after")
    def _operandos(self) -> "TinyInstruction":
        needs_register = self.op in ("INC", "DEC", "JZ")
        needs_target = self.op in ("JZ", "JMP")
        if needs_register != (self.reg is not None) or needs_target != (self.target is not None):
            raise ValueError(f"Operandos inválidos para {self.op}")
        if self.reg is not None and not 0 <= self.reg < REGISTERS:
            raise ValueError(f"Registro r{self.reg} fuera de r0..r{REGISTERS - 1}")
        return self

    def text(self) -> str:
        if self.op in ("INC", "DEC"):
            return f"{self.op} r{self.reg}"
        if self.op == "JZ":
            return f"JZ r{self.reg} {self.target}"
        if self.op == "JMP":
            return f"JMP {self.target}"
        return "HALT"


HALT = TinyInstruction(op="HALT")


class TinyProgram(BaseModel):
    """Saltar a len(instructions) equivale a salir del programa (parada implícita)."""

    model_config = ConfigDict(frozen=True)

    instructions: tuple[TinyInstruction, ...]

    @field_validator("instructions")
    @classmethod
    def _saltos_en_rango(cls, instructions: tuple[TinyInstruction, ...]) -> tuple[TinyInstruction, ...]:
        for pc, instruction in enumerate(instructions):
            if instruction.target is not None and not 0 <= instruction.target <= len(instructions):
                raise ValueError(f"Salto fuera de rango en la instrucción {pc}: {instruction.target}")
        return instructions


HALT_PROGRAM = TinyProgram(instructions=(HALT,))


def decode_program(bits: str) -> TinyProgram:
    """
    Palabras de 4 bits "oo rr" seguidas de un HALT final:
      00 rr → INC r      01 rr → DEC r
      10 aa → JMP a      11 rr → JZ r <HALT final>
    Un ancho que no es múltiplo de 4 o un JMP fuera de [0, nº de instrucciones]
    decodifica al programa de una sola instrucción HALT.
    """
    if len(bits) % WORD_BITS != 0 or any(ch not in "01" for ch in bits):
        return HALT_PROGRAM
    words = [bits[i:i + WORD_BITS] for i in range(0, len(bits), WORD_BITS)]
    count = len(words) + 1
    instructions = []
    for word in words:
        opcode, operand = word[:2], int(word[2:], 2)
        if opcode == "00":
            instructions.append(TinyInstruction(op="INC", reg=operand))
        elif opcode == "01":
            instructions.append(TinyInstruction(op="DEC", reg=operand))
        elif opcode == "10":
            if operand > count:
                return HALT_PROGRAM
            instructions.append(TinyInstruction(op="JMP", target=operand))
        else:
            instructions.append(TinyInstruction(op="JZ", reg=operand, target=len(words)))
    instructions.append(HALT)
    return TinyProgram(instructions=tuple(instructions))


def _register(token: str, line_number: int) -> int:
    if len(token) != 2 or token[0] != "r" or not token[1].isdigit():
        raise ProgramError(f"Línea {line_number}: registro inválido {token!r}")
    return int(token[1])


def _target(token: str, line_number: int) -> int:
    if not token.isdigit():
        raise ProgramError(f"Línea {line_number}: dirección inválida {token!r}")
    return int(token)


def parse_program(text: str) -> TinyProgram:
    """Una instrucción por línea; '#' inicia un comentario; las líneas vacías se ignoran."""
    instructions = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        op, args = tokens[0].upper(), tokens[1:]
        expected = {"INC": 1, "DEC": 1, "JZ": 2, "JMP": 1, "HALT": 0}
        if op not in expected:
            raise ProgramError(f"Línea {line_number}: instrucción desconocida {tokens[0]!r}")
        if len(args) != expected[op]:
            raise ProgramError(f"Línea {line_number}: {op} espera {expected[op]} operandos")
        try:
            if op in ("INC", "DEC"):
                instructions.append(TinyInstruction(op=op, reg=_register(args[0], line_number)))
            elif op == "JZ":
                instructions.append(TinyInstruction(op=op, reg=_register(args[0], line_number),
                                                    target=_target(args[1], line_number)))
            elif op == "JMP":
                instructions.append(TinyInstruction(op=op, target=_target(args[0], line_number)))
            else:
                instructions.append(HALT)
        except ValueError as e:
            if isinstance(e, ProgramError):
                raise
            raise ProgramError(f"Línea {line_number}: {e}") from e
    try:
        return TinyProgram(instructions=tuple(instructions))
    except ValueError as e:
        raise ProgramError(str(e)) from e


def format_program(program: TinyProgram) -> str:
    return "\n".join(instruction.text() for instruction in program.instructions) + "\n"


# ============================================================================
# INTÉRPRETE
# ============================================================================

class HaltingVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    halted: bool
    steps: int

    @property
    def status(self) -> str:
        return "halted" if self.halted else "running"


def interpret(program: TinyProgram, input_bits: str, step_bound: int) -> HaltingVerdict:
    """
    Carga el valor binario de la entrada en r0 y ejecuta a lo sumo `step_bound`
    instrucciones. HALT (o salir por el final) cuenta como un paso. DEC satura en 0.
    """
    if step_bound < 1:
        raise ValueError("La cota de pasos debe ser ≥ 1")
    registers = [0] * REGISTERS
    registers[0] = bits_to_int(input_bits)
    pc = 0
    code = program.instructions
    for step in range(1, step_bound + 1):
        if pc >= len(code):
            return HaltingVerdict(halted=True, steps=step)
        instruction = code[pc]
        if instruction.op == "HALT":
            return HaltingVerdict(halted=True, steps=step)
        if instruction.op == "INC":
            registers[instruction.reg] += 1
            pc += 1
        elif instruction.op == "DEC":
            registers[instruction.reg] = max(0, registers[instruction.reg] - 1)
            pc += 1
        elif instruction.op == "JZ":
            pc = instruction.target if registers[instruction.reg] == 0 else pc + 1
        else:
            pc = instruction.target
    return HaltingVerdict(halted=False, steps=step_bound)


# ============================================================================
# CAJA DE PARADA ACOTADA
# ============================================================================

class BoundedHaltingSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    step_bound: int
    program_bits: int
    input_bits: int

    @field_validator("step_bound")
    @classmethod
    def _cota_positiva(cls, value: int) -> int:
        if value < 1:
            raise ValueError("step_bound debe ser ≥ 1")
        return value

    @field_validator("program_bits", "input_bits")
    @classmethod
    def _ancho_no_negativo(cls, value: int) -> int:
        if value < 0:
            raise ValueError("Los anchos no pueden ser negativos")
        return value


def _check_width(spec: BoundedHaltingSpec) -> None:
    if spec.program_bits + spec.input_bits > MAX_TABLE_BITS:
        raise WidthGuardError(
            f"program_bits + input_bits = {spec.program_bits + spec.input_bits} supera {MAX_TABLE_BITS}"
        )


def bounded_halting_function(spec: BoundedHaltingSpec) -> BooleanFunction:
    """f(x, y) = [decode(x) para sobre y en ≤ T pasos]."""
    _check_width(spec)
    table = []
    for x in all_bitstrings(spec.program_bits):
        program = decode_program(x)
        for y in all_bitstrings(spec.input_bits):
            table.append(int(interpret(program, y, spec.step_bound).halted))
    logger.info(f"✓ Tabla H_T construida: {sum(table)}/{len(table)} pares paran (T={spec.step_bound})")
    return BooleanFunction(l=spec.program_bits, m=spec.input_bits, truth_table=tuple(table))


def bounded_halting_fbox(spec: BoundedHaltingSpec) -> BipartiteBox:
    return make_fbox(bounded_halting_function(spec))
