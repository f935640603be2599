"""Trusted logical core: terms, propositions, theorems, inference."""

from .terms import (
    BOOL,
    App,
    Const,
    ConstSig,
    KernelError,
    Sort,
    Term,
    Var,
    sort_of,
    subst_term,
    term_consts,
    term_vars,
)
from .props import (
    FALSE,
    TRUE,
    And,
    Atom,
    Eq,
    Exists,
    FalseP,
    Forall,
    Iff,
    Implies,
    Not,
    Or,
    Prop,
    TrueP,
    alpha_key,
    forall_close,
    free_vars,
    implies_chain,
    prop_consts,
    strip_forall,
    strip_implies,
    subst_prop,
)
from .theory import (
    Constructor,
    Datatype,
    FactInfo,
    RuleSpec,
    Theory,
    TheoryError,
    rule_schema_prop,
)
from .matching import NoMatch, apply_subst_prop, apply_subst_term, match_rule_conclusion
from .thm import Kernel, Thm
from .rewrite import (
    RewriteRule,
    Rewriter,
    RuleFormatError,
    RwStep,
    conv_from_trace,
    kernel_rewrite,
    rule_from_fact,
    simp_rules_of,
)

__all__ = [
    "App", "Atom", "And", "BOOL", "Const", "ConstSig", "Constructor",
    "Datatype", "Eq", "Exists", "FALSE", "FactInfo", "FalseP", "Forall",
    "Iff", "Implies", "Kernel", "KernelError", "NoMatch", "Not", "Or",
    "Prop", "RewriteRule", "Rewriter", "RuleFormatError", "RuleSpec",
    "RwStep", "Sort", "TRUE", "Term", "Theory", "TheoryError", "Thm",
    "TrueP", "Var", "alpha_key", "apply_subst_prop", "apply_subst_term",
    "conv_from_trace", "forall_close", "free_vars", "implies_chain",
    "kernel_rewrite", "match_rule_conclusion", "prop_consts",
    "rule_from_fact", "rule_schema_prop", "simp_rules_of", "sort_of",
    "strip_forall", "strip_implies", "subst_prop", "subst_term",
    "term_consts", "term_vars",
]
