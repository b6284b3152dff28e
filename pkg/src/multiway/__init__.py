"""Double-pushout hypergraph rewriting and labelled lambda-calculus engines."""

from . import dpo, fulllambda, hypergraph, lam

__all__ = ["dpo", "fulllambda", "hypergraph", "lam"]
