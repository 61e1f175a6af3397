"""Model language: lexer, parser, pretty-printer and semantic analysis."""

from radar.language.lexer import Token, tokenize
from radar.language.nodes import (
    BinaryOp,
    DecisionBlock,
    DistributionCall,
    ModelAst,
    Number,
    ObjectiveDecl,
    Option,
    UnaryNeg,
    VarDef,
    VarRef,
    count_nodes,
    walk,
)
from radar.language.parser import parse
from radar.language.printer import pretty_print
from radar.language.semantics import (
    Decision,
    DistributionSpec,
    Objective,
    SemanticModel,
    analyze,
)


def load_source(source: str) -> SemanticModel:
    """tokenize -> parse -> analyze."""
    return analyze(parse(tokenize(source)))


__all__ = [
    "BinaryOp",
    "Decision",
    "DecisionBlock",
    "DistributionCall",
    "DistributionSpec",
    "ModelAst",
    "Number",
    "Objective",
    "ObjectiveDecl",
    "Option",
    "SemanticModel",
    "Token",
    "UnaryNeg",
    "VarDef",
    "VarRef",
    "analyze",
    "count_nodes",
    "load_source",
    "parse",
    "pretty_print",
    "tokenize",
    "walk",
]
