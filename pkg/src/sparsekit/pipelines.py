"""Composed group-testing schemes.

Each pipeline pairs the identification design with sparse filter matrices:
list decoding keeps candidates that pass point queries on a list-disjunct
filter, exact decoding adds a disjunct filter, and the for-each scheme uses
two cheap random filters instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import combinatorial as comb
from . import design as dsg
from .hashing import split_seed


@dataclass
class ListPipeline:
    ident: dsg.IdentificationDesign
    filt: comb.SparseDesign

    @property
    def rows(self) -> int:
        return self.ident.rows + self.filt.m


@dataclass
class ExactPipeline:
    lst: ListPipeline
    disjunct: comb.SparseDesign

    @property
    def rows(self) -> int:
        return self.lst.rows + self.disjunct.m


@dataclass
class ForEachDesign:
    ident: dsg.IdentificationDesign
    mprime: comb.SparseDesign
    mdouble: comb.SparseDesign

    @property
    def rows(self) -> int:
        return self.ident.rows + self.mprime.m + self.mdouble.m


def build_list_pipeline(k: int, n: int, seed: int = 0, C: int = dsg.DEFAULT_C,
                        c1: int = 12) -> ListPipeline:
    ident = dsg.build_identification(k, n, C, split_seed(seed, "ident"))
    filt = comb.random_list_disjunct(k, n, split_seed(seed, "filter"), c1)
    return ListPipeline(ident, filt)


def build_exact_pipeline(k: int, n: int, seed: int = 0, C: int = dsg.DEFAULT_C,
                         c1: int = 12, c2: int = 4, c3: int = 4) -> ExactPipeline:
    """List pipeline plus a disjunct filter; picks Kautz-Singleton when its
    q^2 rows beat the random code, mirroring the min{log n, (log_k n)^2}
    trade-off."""
    lst = build_list_pipeline(k, n, seed, C, c1)
    dseed = split_seed(seed, "disjunct")
    code_rows = c2 * c3 * k * k * max(1, (n - 1).bit_length())
    try:
        ks = comb.kautz_singleton(k, n)
    except comb.PrimeTableError:
        ks = None
    if ks is not None and ks.m < code_rows:
        disjunct = ks
    else:
        disjunct = comb.random_code_disjunct(k, n, dseed, c2, c3)
    return ExactPipeline(lst, disjunct)


def build_foreach(k: int, n: int, seed: int = 0, C: int = dsg.DEFAULT_C,
                  c: int = 4, cprime: int = 2, cdouble: int = 4) -> ForEachDesign:
    """Identification design plus M' (one band of c*k*log2(n/k) rows) and
    M'' (cprime*log2(n) bands of cdouble*k rows), one random 1 per column
    per band."""
    ident = dsg.build_identification(k, n, C, split_seed(seed, "ident"))
    logr = max(1, (n // k).bit_length() - 1)
    mprime = comb.banded_design(n, 1, c * k * logr, split_seed(seed, "mprime"),
                                "foreach-single", {"k": k, "c": c})
    mdouble = comb.banded_design(n, cprime * max(1, (n - 1).bit_length()),
                                 cdouble * k, split_seed(seed, "mdouble"),
                                 "foreach-bands", {"k": k})
    return ForEachDesign(ident, mprime, mdouble)


def measure_list(p: ListPipeline, support):
    return dsg.measure(p.ident, support), comb.measure_sparse(p.filt, support)


def measure_exact(p: ExactPipeline, support):
    oi, of = measure_list(p.lst, support)
    return oi, of, comb.measure_sparse(p.disjunct, support)


def measure_foreach(p: ForEachDesign, support):
    return (dsg.measure(p.ident, support),
            comb.measure_sparse(p.mprime, support),
            comb.measure_sparse(p.mdouble, support))


def decode_list(p: ListPipeline, out_ident: dsg.Outcome, out_filter,
                stats: dsg.DecodeStats | None = None) -> np.ndarray:
    """identify(), then keep candidates covered by the filter outcome."""
    cands = dsg.identify(p.ident, out_ident, stats)
    return comb.covered_filter(p.filt, out_filter, cands)


def decode_exact(p: ExactPipeline, out_ident, out_filter, out_disjunct,
                 stats: dsg.DecodeStats | None = None) -> np.ndarray:
    """decode_list(), then keep candidates covered on the disjunct design;
    equals the support whenever that design is k-disjunct for the instance."""
    cands = decode_list(p.lst, out_ident, out_filter, stats)
    return comb.covered_filter(p.disjunct, out_disjunct, cands)


def decode_foreach(d: ForEachDesign, out_ident, out_prime, out_double,
                   stats: dsg.DecodeStats | None = None) -> np.ndarray:
    cands = dsg.identify(d.ident, out_ident, stats)
    cands = comb.covered_filter(d.mprime, out_prime, cands)
    return comb.covered_filter(d.mdouble, out_double, cands)
