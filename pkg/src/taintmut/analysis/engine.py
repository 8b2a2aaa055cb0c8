"""Abstract interpreter behind the built-in analyzers.

Taint values are frozensets of source names.  The same walker covers every
configuration:

* flow-insensitive: one environment per function, every assignment is a weak
  update, iterated to a fixpoint so statement order is irrelevant;
* flow-sensitive, path-insensitive: strong updates, may-join at merges;
* path-sensitive: states fork at each ``if`` and carry a branch trace.

Closure bodies, loop bodies, switch arms and catch blocks are evaluated for
sinks on a copy of the state; their effects are dropped and they never fork.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..app_model.model import SINK_FUNCTIONS, AppModel, sink_payload
from ..app_model.nodes import (
    Assign, Attribute, BinOp, Block, Call, Closure, Elvis, Expr, ExprStmt, FunctionDef, If, Index,
    ListLit, Literal, Loop, MapLit, Name, New, Node, Opaque, OpaqueExpr, Paren, Return, StringLit,
    Switch, Ternary, Try, UnaryOp, VarDecl,
)
from ..errors import PathBudgetExceeded
from .config import AnalyzerConfig
from .report import SinkEvent

EMPTY: frozenset[str] = frozenset()
STATE_ROOTS = ("state", "atomicState")


@dataclass
class State:
    env: dict[str, frozenset[str]]
    trace: tuple = ()
    events: list[SinkEvent] = field(default_factory=list)
    done: bool = False
    ret: frozenset[str] = EMPTY

    def copy(self) -> "State":
        return State(dict(self.env), self.trace, list(self.events), self.done, self.ret)


def join(states: list[State]) -> State:
    env: dict[str, frozenset[str]] = {}
    events: list[SinkEvent] = []
    ret = EMPTY
    for s in states:
        for k, v in s.env.items():
            env[k] = env.get(k, EMPTY) | v
        events.extend(s.events)
        ret |= s.ret
    return State(env, (), events, all(s.done for s in states), ret)


class Engine:
    """Analyze one model under one configuration."""

    def __init__(self, model: AppModel, config: AnalyzerConfig):
        self.model = model
        self.config = config
        self.inputs = model.input_names()
        self.weak = config.flow == "insensitive"
        self.fork = config.path == "sensitive"
        self.summary = config.context == "name-summary"
        self.depth = 0
        self.function = ""
        self.budget_fn = ""
        # name-summary tables: per-name positional parameter taint, all-argument taint, return taint
        self.sum_params: dict[str, list[frozenset[str]]] = {}
        self.sum_args: dict[str, frozenset[str]] = {}
        self.sum_ret: dict[str, frozenset[str]] = {}
        self._collect: dict[str, list[frozenset[str]]] | None = None
        self._collect_all: dict[str, frozenset[str]] | None = None

    # -- entry points ---------------------------------------------------------

    def run_entry(self, fn: FunctionDef, fork: bool | None = None) -> list[State]:
        """Run *fn* as an analysis entry point; return its final states."""
        params = self._entry_params(fn)
        return self._run_function(fn, params, self.fork if fork is None else fork)

    def _entry_params(self, fn: FunctionDef) -> list[frozenset[str]]:
        if self.summary:
            table = self.sum_params.get(fn.name, [])
            return [table[i] if i < len(table) else EMPTY for i in range(fn.arity)]
        return [EMPTY] * fn.arity

    def solve_summaries(self) -> None:
        """Fixpoint for name-summary mode over all functions."""
        if not self.summary:
            return
        for _ in range(64):
            self._collect, self._collect_all = {}, {}
            rets: dict[str, frozenset[str]] = {}
            for fn in self.model.functions:
                states = self._run_function(fn, self._entry_params(fn), False)
                rets[fn.name] = rets.get(fn.name, EMPTY).union(*(s.ret for s in states))
            params = {k: list(v) for k, v in self._collect.items()}
            args = dict(self._collect_all)
            ret = {k: rets.get(k, EMPTY) | args.get(k, EMPTY) for k in set(rets) | set(args)}
            self._collect = self._collect_all = None
            if params == self.sum_params and args == self.sum_args and ret == self.sum_ret:
                return
            self.sum_params, self.sum_args, self.sum_ret = params, args, ret

    # -- functions ------------------------------------------------------------

    def _run_function(self, fn: FunctionDef, params: list[frozenset[str]], fork: bool) -> list[State]:
        saved = self.function, self.budget_fn
        self.function = fn.name
        if self.depth == 0:
            self.budget_fn = fn.name
        env = {p.name: params[i] if i < len(params) else EMPTY for i, p in enumerate(fn.params)}
        try:
            if self.weak:
                return [self._run_weak(fn.body, env)]
            finished: list[State] = []
            alive = self._block(fn.body, [State(env)], fork, finished)
            return finished + alive
        finally:
            self.function, self.budget_fn = saved

    def _run_weak(self, body: Block, env: dict[str, frozenset[str]]) -> State:
        st = State(env)
        for _ in range(256):
            before = dict(st.env)
            st.events = []
            self._block(body, [st], False, [])
            st.done = False
            if st.env == before:
                break
        return st

    # -- statements -----------------------------------------------------------

    def _block(self, block: Block, states: list[State], fork: bool, finished: list[State]) -> list[State]:
        for stmt in block.stmts:
            nxt: list[State] = []
            for st in states:
                nxt.extend(self._stmt(stmt, st, fork, finished))
            states = nxt
            if not states:
                break
            if fork and len(states) > self.config.path_budget:
                raise PathBudgetExceeded(self.budget_fn or self.function, self.config.path_budget)
        return states

    def _assign_var(self, st: State, name: str, taint: frozenset[str], strong: bool) -> None:
        if strong and not self.weak:
            st.env[name] = taint
        else:
            st.env[name] = st.env.get(name, EMPTY) | taint

    def _stmt(self, stmt: Node, st: State, fork: bool, finished: list[State]) -> list[State]:
        if isinstance(stmt, VarDecl):
            t = self.eval(stmt.value, st) if stmt.value is not None else EMPTY
            self._assign_var(st, stmt.name, t, True)
        elif isinstance(stmt, Assign):
            t = self.eval(stmt.value, st)
            target = stmt.target
            if isinstance(target, Name):
                self._assign_var(st, target.name, t, stmt.op == "=")
            else:
                root = _root_name(target)
                self.eval(target, st)
                if root is not None and root in st.env:
                    self._assign_var(st, root, t, False)
        elif isinstance(stmt, ExprStmt):
            self.eval(stmt.expr, st)
        elif isinstance(stmt, Return):
            t = self.eval(stmt.value, st) if stmt.value is not None else EMPTY
            st.ret = st.ret | t
            if not self.weak:
                st.done = True
                finished.append(st)
                return []
        elif isinstance(stmt, If):
            return self._if(stmt, st, fork, finished)
        elif isinstance(stmt, Try):
            pre = st.copy() if not self.weak else st
            states = self._block(stmt.body, [st], fork, finished)
            for c in stmt.catches:
                self._side(c.body, pre, {})
            if not self.weak:
                for s in states:
                    _merge_events(s, [pre])
            if stmt.final is not None:
                states = [s for x in states for s in self._block(stmt.final, [x], fork, finished)]
            return states
        elif isinstance(stmt, Loop):
            if stmt.header is not None:
                self.eval(stmt.header, st)
            self._side(stmt.body, st, {})
        elif isinstance(stmt, Switch):
            self.eval(stmt.subject, st)
            for arm in stmt.arms:
                self._side(arm, st, {})
        elif isinstance(stmt, FunctionDef):
            pass
        elif isinstance(stmt, Opaque):
            pass
        elif isinstance(stmt, Block):
            return self._block(stmt, [st], fork, finished)
        return [st]

    def _if(self, stmt: If, st: State, fork: bool, finished: list[State]) -> list[State]:
        self.eval(stmt.cond, st)
        if self.weak:
            self._block(stmt.then, [st], False, finished)
            if stmt.orelse is not None:
                self._stmt(stmt.orelse, st, False, finished)
            return [st]
        line = self.model.line_of(stmt.start)
        then_st = st.copy()
        else_st = st
        if fork:
            then_st.trace = st.trace + ((line, "T"),)
            else_st.trace = st.trace + ((line, "F"),)
        then_out = self._block(stmt.then, [then_st], fork, finished)
        if stmt.orelse is not None:
            else_out = self._stmt(stmt.orelse, else_st, fork, finished)
        else:
            else_out = [else_st]
        out = then_out + else_out
        if fork or len(out) <= 1:
            return out
        return [join(out)]

    def _side(self, body: Block, st: State, bindings: dict[str, frozenset[str]]) -> None:
        """Evaluate *body* for sinks on a copy of *st*; keep only its events."""
        if self.weak:
            for k, v in bindings.items():
                self._assign_var(st, k, v, True)
            self._block(body, [st], False, [])
            st.done = False
            return
        tmp = st.copy()
        for k, v in bindings.items():
            tmp.env[k] = v
        finished: list[State] = []
        out = self._block(body, [tmp], False, finished)
        _merge_events(st, [tmp] + out + finished)

    # -- expressions ----------------------------------------------------------

    def lookup(self, name: str, st: State) -> frozenset[str]:
        if name in st.env:
            return st.env[name]
        if name in self.inputs:
            return frozenset({name})
        if name.startswith("$") and name[1:] in self.inputs:
            return frozenset({name[1:]})
        return EMPTY

    def eval(self, expr: Expr | None, st: State) -> frozenset[str]:
        if expr is None or isinstance(expr, Literal):
            return EMPTY
        if isinstance(expr, Name):
            return self.lookup(expr.name, st)
        if isinstance(expr, StringLit):
            return EMPTY.union(*(self.eval(p, st) for p in expr.parts))
        if isinstance(expr, Attribute):
            obj = expr.obj
            if isinstance(obj, Name):
                if obj.name == "settings" and obj.name not in st.env and expr.attr in self.inputs:
                    return frozenset({expr.attr})
                if obj.name in STATE_ROOTS and obj.name not in st.env:
                    return frozenset({"state"}) if self.config.state_sources else EMPTY
            return self.eval(obj, st)
        if isinstance(expr, Call):
            return self._call(expr, st)
        if isinstance(expr, Index):
            return self.eval(expr.obj, st) | self.eval(expr.index, st)
        if isinstance(expr, MapLit):
            return EMPTY.union(*(self.eval(e.key_expr, st) | self.eval(e.value, st) for e in expr.entries))
        if isinstance(expr, ListLit):
            return EMPTY.union(*(self.eval(e, st) for e in expr.items))
        if isinstance(expr, BinOp):
            right = EMPTY if expr.op in ("as", "instanceof") else self.eval(expr.right, st)
            return self.eval(expr.left, st) | right
        if isinstance(expr, UnaryOp):
            return self.eval(expr.operand, st)
        if isinstance(expr, Paren):
            return self.eval(expr.inner, st)
        if isinstance(expr, Ternary):
            self.eval(expr.cond, st)
            return self.eval(expr.then, st) | self.eval(expr.orelse, st)
        if isinstance(expr, Elvis):
            return self.eval(expr.value, st) | self.eval(expr.fallback, st)
        if isinstance(expr, New):
            return EMPTY.union(*(self.eval(a.value, st) for a in expr.args))
        if isinstance(expr, Closure):
            self._side(expr.body, st, {p: EMPTY for p in expr.params})
            return EMPTY
        if isinstance(expr, OpaqueExpr):
            return EMPTY.union(*(self.lookup(n, st) for n in expr.names))
        return EMPTY

    def _call(self, call: Call, st: State) -> frozenset[str]:
        name = call.callee if call.is_bare else None
        recv = self.eval(call.func.obj, st) if isinstance(call.func, Attribute) else EMPTY
        arg_taints = [self.eval(a.value, st) for a in call.args]
        if name in SINK_FUNCTIONS:
            kind = SINK_FUNCTIONS[name]
            payload = sink_payload(kind, call)
            sources = self.eval(payload, st) if payload is not None else EMPTY
            ev = SinkEvent(kind.value, self.model.line_of(call.start), self.function, sources)
            st.events.append(ev)
            if call.closure is not None:
                self._side(call.closure.body, st, {p: EMPTY for p in call.closure.params})
            return EMPTY
        all_args = EMPTY.union(*arg_taints)
        if name is not None and self.model.definitions(name):
            result = self._user_call(name, arg_taints, st)
        else:
            result = recv | all_args
        if call.closure is not None:
            flow_in = recv | all_args
            self._side(call.closure.body, st, {p: flow_in for p in call.closure.params})
        return result

    def _user_call(self, name: str, args: list[frozenset[str]], st: State) -> frozenset[str]:
        all_args = EMPTY.union(*args)
        if self.summary:
            if self._collect is not None:
                slots = self._collect.setdefault(name, [])
                for i, t in enumerate(args):
                    if i < len(slots):
                        slots[i] = slots[i] | t
                    else:
                        slots.append(t)
                self._collect_all[name] = self._collect_all.get(name, EMPTY) | all_args
            return self.sum_ret.get(name, EMPTY) | all_args
        if self.depth >= self.config.inline_depth:
            return all_args
        callee = self.model.function_named(name, len(args))
        if callee is None:
            return all_args
        self.depth += 1
        try:
            states = self._run_function(callee, args, False)
        finally:
            self.depth -= 1
        _merge_events(st, states)
        return EMPTY.union(*(s.ret for s in states))


def _root_name(expr: Expr) -> str | None:
    while isinstance(expr, (Attribute, Index)):
        expr = expr.obj
    return expr.name if isinstance(expr, Name) else None


def _merge_events(dst: State, sources: list[State]) -> None:
    seen = set(dst.events)
    for s in sources:
        for ev in s.events:
            if ev not in seen:
                dst.events.append(ev)
                seen.add(ev)
