"""A tiny space-bounded probabilistic machine with enumerable bit descriptions.

A description is split into 3-bit opcodes (a short final group is zero-padded on
the right), so every bit string decodes to a program and the empty string decodes
to a single HALT. The program counter is the machine state.

Tapes: a two-way read-only input tape over {0, 1, blank}, a two-way read-only
random tape, a work tape of at most ``max_work_cells`` cells, and a one-way
output tape. Several arguments are laid out on the input tape separated by one
blank. Phase opcodes loop over input symbols until a blank, step past the blank
and fall through to the next instruction; running off the end of the program
halts.

  0 HALT    stop
  1 COPY    phase: output each input bit
  2 SEEK    phase: skip input bits
  3 EMIT    one step: output the scanned bit (nothing on blank), move right, next
  4 RAND    phase: output one fresh random bit per input symbol
  5 STORE   phase: write input bits onto the work tape
  6 FLIP    phase: output the complement of each input bit
  7 REWIND  move input and random heads left one cell per step; at cell 0 jump to 0
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

from .core import BitString, DomainError, GuardExceeded, RandomStream, as_bits

HALT, COPY, SEEK, EMIT, RAND, STORE, FLIP, REWIND = range(8)
OPCODE_NAMES = ("HALT", "COPY", "SEEK", "EMIT", "RAND", "STORE", "FLIP", "REWIND")
OPCODE_BITS = 3
BLANK = 2
MAX_ENUM_BITS = 16


@dataclass(frozen=True)
class TruncationBudget:
    max_steps: int
    max_work_cells: int

    def __post_init__(self) -> None:
        if self.max_steps < 0 or self.max_work_cells < 0:
            raise DomainError("budget fields must be non-negative")


@dataclass(frozen=True)
class MachineDescription:
    bits: BitString

    @property
    def num_states(self) -> int:
        return max(1, -(-len(self.bits) // OPCODE_BITS))

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class Machine:
    program: tuple[int, ...]
    description: MachineDescription

    @property
    def num_states(self) -> int:
        return len(self.program)

    def canonical(self) -> tuple[int, ...]:
        """Program cut at its first HALT: equal canonical forms behave identically."""
        prog = self.program
        return prog[: prog.index(HALT)] if HALT in prog else prog

    def __str__(self) -> str:
        return " ".join(OPCODE_NAMES[op] for op in self.program)


def decode(bits: Union[BitString, str]) -> Machine:
    """Total decoding; never fails."""
    bits = as_bits(bits)
    s = bits.bits
    if not s:
        return Machine((HALT,), MachineDescription(bits))
    program = []
    for i in range(0, len(s), OPCODE_BITS):
        chunk = s[i:i + OPCODE_BITS].ljust(OPCODE_BITS, "0")
        program.append(int(chunk, 2) % len(OPCODE_NAMES))
    return Machine(tuple(program), MachineDescription(bits))


def encode(ops: Sequence[Union[int, str]]) -> BitString:
    """Description bits for a list of opcodes (ints or names)."""
    codes = [OPCODE_NAMES.index(op) if isinstance(op, str) else op for op in ops]
    return BitString("".join(format(c, "03b") for c in codes))


def enumerate_machines(max_bits: int) -> Iterator[Machine]:
    """Decoded machines for every description of length 0..max_bits, length-then-lex."""
    if max_bits > MAX_ENUM_BITS:
        raise GuardExceeded(f"max_bits {max_bits} exceeds enumeration guard {MAX_ENUM_BITS}")
    if max_bits < 0:
        raise DomainError("max_bits must be non-negative")
    for length in range(max_bits + 1):
        for v in range(1 << length):
            yield decode(BitString.from_int(v, length))


def layout(args: Union[BitString, str, Sequence[Union[BitString, str]]]) -> tuple[int, ...]:
    """Input tape symbols for one argument or several blank-separated ones."""
    if isinstance(args, (BitString, str)):
        args = (args,)
    cells: list[int] = []
    for i, a in enumerate(args):
        if i:
            cells.append(BLANK)
        cells.extend(as_bits(a))
    return tuple(cells)


# --- interpreter -------------------------------------------------------------

@dataclass
class Config:
    pc: int = 0
    in_pos: int = 0
    rnd_pos: int = 0
    work_pos: int = 0
    steps: int = 0
    out: list = field(default_factory=list)
    work: list = field(default_factory=list)

    def clone(self) -> Config:
        return Config(self.pc, self.in_pos, self.rnd_pos, self.work_pos, self.steps, list(self.out), list(self.work))


@dataclass(frozen=True)
class Outcome:
    """Halted with ``output`` or stopped by the budget (``truncated`` names why)."""

    output: BitString = BitString()
    truncated: Optional[str] = None
    steps: int = 0

    @property
    def halted(self) -> bool:
        return self.truncated is None


class _NeedRandom(Exception):
    def __init__(self, pos: int) -> None:
        self.pos = pos


def _step_until(program: tuple[int, ...], tape: tuple[int, ...], cfg: Config, budget: TruncationBudget,
                max_output: int, rand: Callable[[int], int], trace: Optional[list] = None) -> Outcome:
    """Run ``cfg`` in place until halt or truncation. ``rand(pos)`` may raise _NeedRandom."""
    n_in = len(tape)
    size = len(program)
    while True:
        if cfg.pc >= size:
            return Outcome(BitString("".join(cfg.out)), None, cfg.steps)
        if cfg.steps >= budget.max_steps:
            return Outcome(BitString(), "steps", cfg.steps)
        op = program[cfg.pc]
        sym = tape[cfg.in_pos] if cfg.in_pos < n_in else BLANK
        if trace is not None:
            trace.append((cfg.steps, cfg.pc, OPCODE_NAMES[op], cfg.in_pos, cfg.rnd_pos, "".join(cfg.work)))
        if op == HALT:
            cfg.steps += 1
            return Outcome(BitString("".join(cfg.out)), None, cfg.steps)
        if op == REWIND:
            if cfg.in_pos == 0 and cfg.rnd_pos == 0:
                cfg.pc = 0
            else:
                cfg.in_pos = max(0, cfg.in_pos - 1)
                cfg.rnd_pos = max(0, cfg.rnd_pos - 1)
            cfg.steps += 1
            continue
        if op == EMIT:
            if sym != BLANK:
                if len(cfg.out) >= max_output:
                    return Outcome(BitString(), "output", cfg.steps)
                cfg.out.append("1" if sym else "0")
            cfg.in_pos += 1
            cfg.pc += 1
            cfg.steps += 1
            continue
        # phase opcodes
        if sym == BLANK:
            cfg.in_pos += 1
            cfg.pc += 1
            cfg.steps += 1
            continue
        if op == SEEK:
            pass
        elif op == STORE:
            if cfg.work_pos >= budget.max_work_cells:
                return Outcome(BitString(), "space", cfg.steps)
            if cfg.work_pos == len(cfg.work):
                cfg.work.append("0")
            cfg.work[cfg.work_pos] = "1" if sym else "0"
            cfg.work_pos += 1
        else:
            if len(cfg.out) >= max_output:
                return Outcome(BitString(), "output", cfg.steps)
            if op == COPY:
                bit = sym
            elif op == FLIP:
                bit = 1 - sym
            else:  # RAND
                bit = rand(cfg.rnd_pos)
                cfg.rnd_pos += 1
            cfg.out.append("1" if bit else "0")
        cfg.in_pos += 1
        cfg.steps += 1


def run_truncated(machine: Machine, inp, random: RandomStream, budget: TruncationBudget,
                  max_output: int, trace: Optional[list] = None) -> Outcome:
    """Deterministic given (machine, input, stream seed, budget). Random tape cell i
    is ``random.bit_at(random.position + i)``; the stream is not advanced."""
    base = random.position
    tape = layout(inp)
    return _step_until(machine.program, tape, Config(), budget, max_output,
                       lambda pos: random.bit_at(base + pos), trace)


def run_with_tape(machine: Machine, inp, random_tape: Union[BitString, str], budget: TruncationBudget,
                  max_output: int) -> Outcome:
    """Run with an explicit finite random tape; reading past its end is an error."""
    rt = as_bits(random_tape)

    def rand(pos: int) -> int:
        if pos >= len(rt):
            raise DomainError(f"random tape of {len(rt)} bits read at {pos}")
        return rt[pos]

    return _step_until(machine.program, layout(inp), Config(), budget, max_output, rand)


@dataclass(frozen=True)
class PathLeaf:
    """One maximal random path: ``depth`` fresh random bits were read along it."""

    outcome: Outcome
    depth: int
    assignment: tuple[tuple[int, int], ...]  # (random position, bit) in read order


def enumerate_paths(machine: Machine, inp, budget: TruncationBudget, max_output: int,
                    max_random_bits: int = 12) -> list[PathLeaf]:
    """Every outcome of the machine as a leaf of its random-read decision tree.

    A leaf at depth k has probability 2^-k. Refuses when some path reads more
    than ``max_random_bits`` distinct random cells.
    """
    tape = layout(inp)
    program = machine.program
    leaves: list[PathLeaf] = []
    stack: list[tuple[Config, dict]] = [(Config(), {})]
    while stack:
        cfg, assign = stack.pop()

        def rand(pos: int, assign=assign) -> int:
            try:
                return assign[pos]
            except KeyError:
                raise _NeedRandom(pos) from None

        try:
            outcome = _step_until(program, tape, cfg, budget, max_output, rand)
        except _NeedRandom as need:
            if len(assign) >= max_random_bits:
                raise GuardExceeded(f"machine reads more than {max_random_bits} random bits") from None
            # the read happens before the step mutates cfg, so both branches resume here
            for bit in (1, 0):
                a = dict(assign)
                a[need.pos] = bit
                stack.append((cfg.clone(), a))
            continue
        leaves.append(PathLeaf(outcome, len(assign), tuple(assign.items())))
    leaves.sort(key=lambda leaf: leaf.assignment)
    return leaves
