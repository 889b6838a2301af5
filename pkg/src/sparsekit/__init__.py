"""sparsekit: sparse-recovery toolkit.

Group-testing designs with sublinear prefix-tree decoding, classical
disjunct/list-disjunct constructions with brute-force verification oracles,
noise-tolerant decoders, a strict-turnstile heavy-hitters sketch, an l2/l2
weak identification system, and a seeded experiment CLI.
"""

from ._kernels import BACKEND
from .design import (DecodeStats, IdentificationDesign, NoisePolicy, Outcome,
                     bprefix, build_identification, identify, inject_noise,
                     locate_batch, measure, round_up_pow2)
from .combinatorial import (SparseDesign, kautz_singleton, load_design,
                            measure_sparse, naive_decode, noisy_point_query,
                            point_query, random_code_disjunct,
                            random_list_disjunct, save_design,
                            verify_disjunct, verify_list_disjunct)
from .hashing import KWiseHash, LevelHash, new_kwise, seed_stream, split_seed
from .heavy_hitters import HHConfig, HHSketch, hh_new
from .l2 import (CountSketchState, GaussianDesign, build_weak, cs_build,
                 cs_estimate_and_prune, cs_measure, weak_identify,
                 weak_measure)
from .noise import (NoisyDesign, SplitDesign, VotingReduction, build_noisy,
                    build_voting_reduction, decode_race, decode_voting,
                    identify_under_errors, measure_noisy, measure_voting,
                    split_e0)
from .pipelines import (ExactPipeline, ForEachDesign, ListPipeline,
                        build_exact_pipeline, build_foreach,
                        build_list_pipeline, decode_exact, decode_foreach,
                        decode_list, measure_exact, measure_foreach,
                        measure_list)

__version__ = "0.1.0"
