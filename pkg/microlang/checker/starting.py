"""Starting operations: receives that may be the first communication of a process"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from ..lang import ast


@dataclass
class EntryInfo:
    """
    What can happen at the entry of a behavior before its first receive

    `ops` lists the first receivable operations in traversal order;
    `may_pass` is true when the behavior can complete without receiving;
    `sends_first` is true when a send is reachable before any receive.
    """
    ops: List[str] = field(default_factory=list)
    may_pass: bool = True
    sends_first: bool = False

    def add_ops(self, ops) -> None:
        for op in ops:
            if op not in self.ops:
                self.ops.append(op)


def _branch_ops(branches: Tuple[ast.InputBranch, ...]) -> List[str]:
    return [branch.operation for branch in branches]


class _EntryWalker:
    def __init__(self, procedures: Mapping[str, ast.Procedure]):
        self.procedures = procedures
        self.calling: List[str] = []

    def first(self, node: ast.Behavior) -> EntryInfo:
        if isinstance(node, (ast.Nil, ast.Assign, ast.Undef, ast.Rebind, ast.Sleep)):
            return EntryInfo()

        if isinstance(node, (ast.Notify, ast.SolicitResponse)):
            return EntryInfo(sends_first=True)

        if isinstance(node, (ast.InputChoice, ast.ProvideUntil)):
            if isinstance(node, ast.InputChoice):
                ops = _branch_ops(node.branches)
            else:
                ops = _branch_ops(node.provide) + _branch_ops(node.until)
            info = EntryInfo(may_pass=False)
            info.add_ops(ops)
            return info

        if isinstance(node, ast.Sequence):
            head = self.first(node.first)
            if not head.may_pass:
                return head
            tail = self.first(node.second)
            info = EntryInfo(may_pass=tail.may_pass, sends_first=head.sends_first or tail.sends_first)
            info.add_ops(head.ops)
            info.add_ops(tail.ops)
            return info

        if isinstance(node, ast.Parallel):
            left, right = self.first(node.left), self.first(node.right)
            info = EntryInfo(
                may_pass=left.may_pass and right.may_pass,
                sends_first=left.sends_first or right.sends_first,
            )
            info.add_ops(left.ops)
            info.add_ops(right.ops)
            return info

        if isinstance(node, ast.If):
            then = self.first(node.then)
            otherwise = self.first(node.otherwise) if node.otherwise is not None else EntryInfo()
            info = EntryInfo(
                may_pass=then.may_pass or otherwise.may_pass,
                sends_first=then.sends_first or otherwise.sends_first,
            )
            info.add_ops(then.ops)
            info.add_ops(otherwise.ops)
            return info

        if isinstance(node, ast.While):
            # the loop may run zero times, so the continuation is reachable too
            body = self.first(node.body)
            info = EntryInfo(may_pass=True, sends_first=body.sends_first)
            info.add_ops(body.ops)
            return info

        if isinstance(node, ast.CallProcedure):
            proc = self.procedures.get(node.name)
            if proc is None or node.name in self.calling:
                return EntryInfo()
            self.calling.append(node.name)
            try:
                return self.first(proc.body)
            finally:
                self.calling.pop()

        raise TypeError(f"not a behavior: {node!r}")


def analyze_entry(
    main: ast.Behavior,
    procedures: Optional[Mapping[str, ast.Procedure]] = None
) -> EntryInfo:
    """Entry analysis of `main` with procedure calls inlined"""
    return _EntryWalker(procedures or {}).first(main)


def starting_operations(
    main: ast.Behavior,
    procedures: Optional[Mapping[str, ast.Procedure]] = None
) -> FrozenSet[str]:
    """
    Operations whose arrival may spawn a fresh process

    These are the receives reachable from the entry of `main` through
    assignments, conditionals, loops, sequences, parallel branches and
    procedure calls without crossing an earlier receive.
    """
    return frozenset(analyze_entry(main, procedures).ops)


def procedure_table(program: ast.Program) -> Dict[str, ast.Procedure]:
    return {proc.name: proc for proc in program.procedures}
