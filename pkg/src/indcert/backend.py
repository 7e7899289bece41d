"""Child-process driver for an SMT-LIB v2 solver.

Only textual SMT-LIB crosses the pipe, so any solver that reads commands
from standard input works.  Replies are read one balanced s-expression at a
time with a deadline per query.
"""
from __future__ import annotations

import enum
import logging
import os
import select
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field

from indcert import ast as A
from indcert.errors import ProtocolError, SolverCrashed, SolverTimeout
from indcert.smtlib import SList, Token, read_sexprs

log = logging.getLogger(__name__)

SOLVER_ENV = "INDCERT_SOLVER"

GROUND_LOGIC = "QF_UFLIA"
QUANTIFIED_LOGIC = "LIA"


def default_solver() -> str:
    return os.environ.get(SOLVER_ENV) or shutil.which("z3") or "z3"


def _default_args(executable: str) -> tuple:
    base = os.path.basename(executable)
    if base.startswith("z3"):
        return ("-in",)
    if base.startswith("cvc5") or base.startswith("cvc4"):
        return ("--lang=smt2", "--incremental")
    if base.startswith("yices"):
        return ("--incremental",)
    return ()


@dataclass(frozen=True)
class SolverConfig:
    executable_path: str = field(default_factory=default_solver)
    extra_args: tuple | None = None
    timeout_ms: int = 30_000

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")

    @property
    def command(self) -> list:
        args = self.extra_args if self.extra_args is not None else _default_args(self.executable_path)
        return [self.executable_path, *args]

    def describe(self) -> str:
        return os.path.basename(self.executable_path)


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


class Validity(enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN = "unknown"


@dataclass
class QueryResult:
    status: Status
    model: dict | None = None

    def __getitem__(self, key):
        return self.model[key]


def _value_text(key) -> str:
    if isinstance(key, A.Cell):
        if key.arg is None:
            return A.symbol(key.symbol)
        return f"({A.symbol(key.symbol)} {A.numeral(key.arg)})"
    if isinstance(key, str):
        return A.symbol(key)
    return A.to_smt(key)


def _decode_value(e):
    if isinstance(e, Token):
        if e.text == "true":
            return True
        if e.text == "false":
            return False
        try:
            return int(e.text)
        except ValueError:
            pass
    elif isinstance(e, SList) and len(e) == 2 and isinstance(e[0], Token) and e[0].text == "-":
        inner = _decode_value(e[1])
        if isinstance(inner, int) and not isinstance(inner, bool):
            return -inner
    raise ProtocolError(_sexpr_text(e))


def _sexpr_text(e) -> str:
    if isinstance(e, Token):
        return e.text
    return "(" + " ".join(_sexpr_text(x) for x in e) + ")"


class Session:
    """One live solver process.  Not thread-safe; use one per thread."""

    def __init__(self, config: SolverConfig | None = None, logic: str | None = GROUND_LOGIC):
        self.config = config or SolverConfig()
        self._stderr = tempfile.TemporaryFile()
        try:
            self._proc = subprocess.Popen(
                self.config.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=self._stderr, bufsize=0)
        except OSError as exc:
            raise SolverCrashed(f"cannot start {self.config.command}: {exc}") from exc
        self._buf = b""
        self._levels = [set()]
        self.queries = 0
        self.dead = False
        self._send("(set-option :produce-models true)")
        if logic:
            self._send(f"(set-logic {logic})")

    # -- plumbing
    def _send(self, text: str):
        if self.dead:
            raise SolverCrashed("session already closed")
        log.debug("> %s", text)
        try:
            self._proc.stdin.write(text.encode() + b"\n")
        except (BrokenPipeError, OSError):
            self._crash()

    def _crash(self):
        self.dead = True
        try:
            self._proc.kill()
            self._proc.wait(timeout=1)
        except Exception:
            pass
        self._stderr.seek(0)
        raise SolverCrashed(self._stderr.read().decode(errors="replace"))

    def _read_sexpr(self, deadline: float):
        """Block until one complete top-level s-expression is available."""
        while True:
            end = _complete_prefix(self._buf)
            if end is not None:
                chunk, self._buf = self._buf[:end], self._buf[end:]
                parsed = read_sexprs(chunk.decode())
                if parsed:
                    log.debug("< %s", chunk.decode().strip())
                    return parsed[0]
                continue
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.close(kill=True)
                raise SolverTimeout(self.config.timeout_ms)
            ready, _, _ = select.select([self._proc.stdout], [], [], remaining)
            if not ready:
                continue
            data = os.read(self._proc.stdout.fileno(), 65536)
            if not data:
                self._crash()
            self._buf += data

    def _read_reply(self, deadline):
        e = self._read_sexpr(deadline)
        if isinstance(e, SList) and e and isinstance(e[0], Token) and e[0].text == "error":
            raise ProtocolError(_sexpr_text(e))
        return e

    # -- declarations and assertions
    def _declared(self) -> set:
        return set().union(*self._levels)

    def declare_for(self, node):
        declared = self._declared()
        for c in A.constants(node):
            if ("c", c) not in declared:
                self._send(f"(declare-const {A.symbol(c)} Int)")
                self._levels[-1].add(("c", c))
        for app in A.apps(node):
            if ("f", app.fsym) not in declared:
                self._send(f"(declare-fun {A.symbol(app.fsym)} (Int) Int)")
                self._levels[-1].add(("f", app.fsym))
                declared.add(("f", app.fsym))
        for n in A.walk(node):
            if isinstance(n, A.BoolVar) and ("b", n.name) not in declared:
                self._send(f"(declare-const {A.symbol(n.name)} Bool)")
                self._levels[-1].add(("b", n.name))
                declared.add(("b", n.name))

    def declare_cell(self, cell: A.Cell):
        key = ("c", cell.symbol) if cell.arg is None else ("f", cell.symbol)
        if key not in self._declared():
            if cell.arg is None:
                self._send(f"(declare-const {A.symbol(cell.symbol)} Int)")
            else:
                self._send(f"(declare-fun {A.symbol(cell.symbol)} (Int) Int)")
            self._levels[-1].add(key)

    def add(self, phi: A.Formula):
        self.declare_for(phi)
        self._send(f"(assert {A.to_smt(phi)})")

    def push(self):
        self._send("(push 1)")
        self._levels.append(set())

    def pop(self):
        if len(self._levels) == 1:
            raise ValueError("pop without matching push")
        self._send("(pop 1)")
        self._levels.pop()

    # -- queries
    def check_sat(self) -> Status:
        self.queries += 1
        self._send("(check-sat)")
        deadline = time.monotonic() + self.config.timeout_ms / 1000
        reply = self._read_reply(deadline)
        if isinstance(reply, Token) and reply.text in ("sat", "unsat", "unknown"):
            return Status(reply.text)
        raise ProtocolError(_sexpr_text(reply))

    def get_values(self, keys) -> dict:
        keys = list(keys)
        if not keys:
            return {}
        for k in keys:
            if isinstance(k, A.Cell):
                self.declare_cell(k)
            elif isinstance(k, (A.Term, A.Formula)):
                self.declare_for(k)
        self._send("(get-value (" + " ".join(_value_text(k) for k in keys) + "))")
        deadline = time.monotonic() + self.config.timeout_ms / 1000
        reply = self._read_reply(deadline)
        if not isinstance(reply, SList) or len(reply) != len(keys):
            raise ProtocolError(_sexpr_text(reply))
        out = {}
        for k, pair in zip(keys, reply):
            if not isinstance(pair, SList) or len(pair) != 2:
                raise ProtocolError(_sexpr_text(pair))
            out[k] = _decode_value(pair[1])
        return out

    def check(self, assertions=(), values=()) -> QueryResult:
        """Check the current assertions plus ``assertions`` in a scoped frame."""
        scoped = bool(assertions)
        if scoped:
            self.push()
        try:
            for phi in assertions:
                self.add(phi)
            status = self.check_sat()
            model = None
            if status is Status.SAT and values:
                model = self.get_values(values)
            return QueryResult(status, model)
        finally:
            if scoped and not self.dead:
                self.pop()

    def close(self, kill=False):
        if self.dead:
            return
        self.dead = True
        try:
            if not kill:
                self._proc.stdin.write(b"(exit)\n")
                self._proc.stdin.close()
                self._proc.wait(timeout=2)
        except Exception:
            pass
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        for stream in (self._proc.stdout, self._stderr):
            try:
                stream.close()
            except Exception:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close(kill=True)
        except Exception:
            pass


def _complete_prefix(buf: bytes):
    """Index just past the first complete s-expression in ``buf``, if any."""
    i, n = 0, len(buf)
    while i < n and buf[i:i + 1].isspace():
        i += 1
    if i == n:
        return None
    depth = 0
    in_string = in_quote = False
    j = i
    while j < n:
        ch = buf[j:j + 1]
        if in_string:
            if ch == b'"':
                if buf[j + 1:j + 2] == b'"':
                    j += 1
                else:
                    in_string = False
        elif in_quote:
            if ch == b"|":
                in_quote = False
        elif ch == b'"':
            in_string = True
        elif ch == b"|":
            in_quote = True
        elif ch == b"(":
            depth += 1
        elif ch == b")":
            depth -= 1
            if depth == 0:
                return j + 1
        elif depth == 0 and ch.isspace():
            return j
        j += 1
    return None


def check(session: Session, assertions, values=()) -> QueryResult:
    return session.check(assertions, values)


def check_validity(config: SolverConfig, phi: A.Formula) -> Validity:
    """Decide a closed formula by refuting its negation in a fresh session."""
    if A.free_vars(phi) or A.constants(phi):
        raise ValueError(f"validity check needs a closed formula: {phi}")
    try:
        # no push: z3 drops its quantifier-elimination tactic once a session
        # is incremental, and answers unknown on simple alternations
        with Session(config, logic=QUANTIFIED_LOGIC) as s:
            s.add(A.Not(phi))
            status = s.check_sat()
    except SolverTimeout:
        return Validity.UNKNOWN
    return {Status.UNSAT: Validity.VALID, Status.SAT: Validity.INVALID}.get(status, Validity.UNKNOWN)
