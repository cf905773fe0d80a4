"""Fixture helpers shared across the test suite."""

from __future__ import annotations

from conquer.paths import (
    AttrAtom,
    Concat,
    RoleEntry,
    concat,
    infer_typing,
    role_exit,
    translate,
)
from conquer.relalg import evaluate


def chain_schema(num_facts: int = 2) -> dict:
    """One value type V and ``num_facts`` binary fact types over it.

    Fact type ``F1`` has roles ``f1a`` and ``f1b``, and so on.  Handy for
    building paths whose evaluation is an arbitrary table of pairs.
    """
    doc = {
        "types": {"V": "value"},
        "player": {},
        "roles_of": {},
        "idf": {},
        "naming": {"tnm": {"V": "Val"}},
    }
    for i in range(1, num_facts + 1):
        f = f"F{i}"
        doc["types"][f] = "relationship"
        doc["roles_of"][f] = [f"f{i}a", f"f{i}b"]
        doc["player"][f"f{i}a"] = "V"
        doc["player"][f"f{i}b"] = "V"
        doc["idf"][f] = [f"f{i}a", f"f{i}b"]
        doc["naming"]["tnm"][f] = f
    return doc


def pairs_pop(**fact_pairs) -> dict:
    """Population document; maps fact name ("F1", ...) to (head, tail) lists."""
    out: dict = {}
    for fname, pairs in fact_pairs.items():
        i = fname[1:]
        out[fname] = [{f"f{i}a": h, f"f{i}b": t} for h, t in pairs]
    return out


def pair_path(i: int):
    """The path through fact ``Fi``: its rows are the stored pairs."""
    return Concat(RoleEntry(f"f{i}a"), role_exit(f"f{i}b"))


def triple_path(i: int, var: str, j: int):
    """A path over two facts with a named middle variable; its rows are
    (head, var, tail) triples."""
    return concat(pair_path(i), AttrAtom(var), pair_path(j))


def run_path(schema, pop, path, bound=(), extra_typing=()):
    typing = infer_typing(schema, path, extra_typing)
    expr = translate(schema, path, typing, bound)
    return evaluate(expr, pop)


def fig6_doc(stage: str = "mixfix") -> dict:
    """The president/election naming example, at increasing naming stages:
    "bare" has only type and role names, "prepost" adds articles and
    connecting words, "mixfix" adds the connection readings."""
    doc = {
        "types": {
            "A": "entity",
            "B": "entity",
            "C": "entity",
            "F": "relationship",
            "Name": "value",
            "AN": "relationship",
            "BN": "relationship",
            "CN": "relationship",
        },
        "roles_of": {
            "F": ["p", "q", "r"],
            "AN": ["an1", "an2"],
            "BN": ["bn1", "bn2"],
            "CN": ["cn1", "cn2"],
        },
        "player": {
            "p": "A",
            "q": "B",
            "r": "C",
            "an1": "A",
            "an2": "Name",
            "bn1": "B",
            "bn2": "Name",
            "cn1": "C",
            "cn2": "Name",
        },
        "idf": {
            "A": [["an1", "an2"]],
            "B": [["bn1", "bn2"]],
            "C": [["cn1", "cn2"]],
            "F": ["p", "q", "r"],
            "AN": ["an1", "an2"],
            "BN": ["bn1", "bn2"],
            "CN": ["cn1", "cn2"],
        },
        "naming": {
            "tnm": {"A": "President", "B": "Result", "C": "Election", "F": "Election-result"},
            "pnm": {"p": "has", "q": "are in"},
            "rnm": {"p": "are of", "q": "has as", "r": "is for"},
        },
    }
    if stage in ("prepost", "mixfix"):
        doc["naming"]["pre"] = {
            t: {"undetermined": "some", "determined": "the"} for t in ("A", "B", "C", "F")
        }
        doc["naming"]["post"] = {"A": "who", "B": "which", "C": "that", "F": "that"}
    if stage == "mixfix":
        doc["naming"]["mfix"] = [
            ["F", ["has participated in an election leading in"], ["p", "q"]],
            ["F", ["has participated in"], ["p", "r"]],
            ["F", ["of the participation in"], ["q", "r"]],
        ]
    return doc


def salary_doc() -> dict:
    """People earning salaries and working for companies, with the mix-fix
    readings "earns", "of" and "works for"."""
    return {
        "types": {
            "x": "entity",
            "y": "entity",
            "z": "entity",
            "F": "relationship",
            "G": "relationship",
            "PName": "value",
            "SAmt": "value",
            "CName": "value",
            "PN": "relationship",
            "SN": "relationship",
            "CNF": "relationship",
        },
        "roles_of": {
            "F": ["p1", "p2"],
            "G": ["q1", "q2"],
            "PN": ["pn1", "pn2"],
            "SN": ["sn1", "sn2"],
            "CNF": ["cn1", "cn2"],
        },
        "player": {
            "p1": "x",
            "p2": "y",
            "q1": "x",
            "q2": "z",
            "pn1": "x",
            "pn2": "PName",
            "sn1": "y",
            "sn2": "SAmt",
            "cn1": "z",
            "cn2": "CName",
        },
        "idf": {
            "x": [["pn1", "pn2"]],
            "y": [["sn1", "sn2"]],
            "z": [["cn1", "cn2"]],
            "F": ["p1", "p2"],
            "G": ["q1", "q2"],
            "PN": ["pn1", "pn2"],
            "SN": ["sn1", "sn2"],
            "CNF": ["cn1", "cn2"],
        },
        "naming": {
            "tnm": {"x": "Person", "y": "Salary", "z": "Company"},
            "pre": {
                "x": {"undetermined": "a", "determined": "the"},
                "y": {"undetermined": "a", "determined": "the"},
                "z": {"undetermined": "a", "determined": "the"},
            },
            "post": {"x": "who"},
            "mfix": [
                ["F", ["earns"], ["p1", "p2"]],
                ["F", ["of"], ["p2", "p1"]],
                ["G", ["works for"], ["q1", "q2"]],
            ],
        },
    }


SALARY_QUERY = (
    "Person who earns a Salary x AND ALSO works for a Company c "
    "WHERE x > THE AVERAGE Salary of a Person who works for c"
)

SALARY_DUMP = """\
00 SELECTION({{01,08}}, NULL)
01 BINARY_OP_APPLIC("AND ALSO", 02, 06)
02 BINARY_OP_APPLIC("", 03, 04)
03 TYPE_SPEC(NULL, "Person", x, NULL, NULL)
04 MFIX("who", p1, {"earns", p2, 05})
05 TYPE_SPEC("a", "Salary", y, "x", NULL)
06 MFIX(NULL, q1, {"works for", q2, 07})
07 TYPE_SPEC("a", "Company", z, "c", NULL)
08 SCALE_EXPR_COMP(09, 10, ">")
09 VAR_NAME("x", NULL)
10 COERCE_FUNCTION("THE AVERAGE", {11})
11 BINARY_OP_APPLIC("", 12, 13)
12 TYPE_SPEC(NULL, "Salary", y, NULL, NULL)
13 MFIX(NULL, p2, {"of", p1, 14})
14 BINARY_OP_APPLIC("", 15, 16)
15 TYPE_SPEC("a", "Person", x, NULL, NULL)
16 MFIX("who", q1, {"works for", q2, 17})
17 VAR_NAME("c", NULL)"""
