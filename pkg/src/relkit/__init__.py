"""Finite algebras, reflexive admissible relations and commutator operators."""

from .algebra import (
    CongruencePartition,
    FiniteAlgebra,
    Homomorphism,
    Operation,
    enumerate_homomorphisms,
    power,
    product,
    quotient,
    subalgebra,
    subuniverse_generate,
    validate_algebra,
)
from .binrel import BinaryRelation, compose, converse, diagonal, full, meet, transitive_closure
from .closures import (
    adm_reflexive_closure,
    all_reflexive_admissible,
    bar_join,
    congruence_closure,
    image,
    plus_join,
    preimage,
    tolerance_closure,
)
from .commutator import k3, k4, matrix_set
from .free import build_free, canonical_relations, hom_from_free
from .oplang import Evaluator, evaluate, parse, to_text
from .opchecks import check_hom_property, check_monotone, check_regular
from .verification import (
    Caps,
    check_thm1,
    check_thm2,
    check_thm3,
    equivalence_report,
    find_malcev_term,
)

__version__ = "0.1.0"
