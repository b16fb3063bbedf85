"""Puzzle families: definitions, exact solvers, and generators."""

from ._kernels import active_backend
from .knights import (
    KnightsKnavesPuzzle,
    TruthAssignment,
    assignment_as_dict,
    assignment_from_mask,
    check_assignment,
    generate_kk,
    solve_kk,
)
from .serialize import (
    Puzzle,
    puzzle_from_json,
    puzzle_from_obj,
    puzzle_to_json,
    puzzle_to_obj,
)
from .statements import (
    KNAVE,
    KNIGHT,
    And,
    Atom,
    BinaryOp,
    Iff,
    Implies,
    Not,
    Or,
    Statement,
    character_label,
    evaluate_statement,
    render_statement,
)
from .zebra import (
    AT_POSITION,
    ATTRIBUTE_POOLS,
    CLUE_KINDS,
    DIRECTLY_LEFT_OF,
    LEFT_OF,
    NEXT_TO,
    NOT_SAME_HOUSE,
    SAME_HOUSE,
    Attribute,
    Clue,
    ZebraGrid,
    ZebraPuzzle,
    clue_holds,
    generate_zebra,
    render_clue,
    solve_zebra,
    zebra_difficulty,
)

__all__ = [
    "active_backend",
    "KnightsKnavesPuzzle",
    "TruthAssignment",
    "assignment_as_dict",
    "assignment_from_mask",
    "check_assignment",
    "generate_kk",
    "solve_kk",
    "Puzzle",
    "puzzle_from_json",
    "puzzle_from_obj",
    "puzzle_to_json",
    "puzzle_to_obj",
    "KNAVE",
    "KNIGHT",
    "And",
    "Atom",
    "BinaryOp",
    "Iff",
    "Implies",
    "Not",
    "Or",
    "Statement",
    "character_label",
    "evaluate_statement",
    "render_statement",
    "AT_POSITION",
    "ATTRIBUTE_POOLS",
    "CLUE_KINDS",
    "DIRECTLY_LEFT_OF",
    "LEFT_OF",
    "NEXT_TO",
    "NOT_SAME_HOUSE",
    "SAME_HOUSE",
    "Attribute",
    "Clue",
    "ZebraGrid",
    "ZebraPuzzle",
    "clue_holds",
    "generate_zebra",
    "render_clue",
    "solve_zebra",
    "zebra_difficulty",
]
