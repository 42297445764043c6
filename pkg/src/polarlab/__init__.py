"""polarlab: polar code constructions, successive-cancellation family
decoders, and a reproducible Monte Carlo FER/complexity simulator."""

from .channel import ChannelParams, awgn_llrs, modulate
from .codes import (
    CodeSpec,
    RateProfileSource,
    attach_crc,
    build_code_spec,
    build_information_set,
    check_crc,
    pac_convolve,
)
from .decode_list import (
    Counters,
    DecodeOutput,
    SortCounter,
    extend_metric,
    finalize,
    pscl_decode,
    scl_decode,
)
from .decode_sc import FlopCounter, f_llr, g_llr, psc_decode, sc_decode
from .encode import EncodedFrame, encode, polar_transform
from .ga import (
    GaMeans,
    ThresholdTable,
    ga_construct,
    ga_node_means,
    norm_inv_cdf,
    phi_fun,
    phi_inv,
    pruning_thresholds,
)
from .lc_pscl import DiscardedMass, LcConfig, lc_pscl_decode, log_phi_hat, r_metric, select_min_list
from .polar_tree import (
    SubLeaf,
    SubPolarTree,
    TreeNode,
    build_sub_polar_tree,
    leaf_candidate_set,
    leaf_candidate_set_pac,
    residual_log_kappa,
)
from .sim import SimConfig, SimRecord, calibrate_eps_tol, ler_analysis, run_point, run_sweep

__version__ = "0.1.0"
