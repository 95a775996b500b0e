"""Dynamics of open and closed quantum systems.

Quantum objects are sparse matrices with tensor-product dims; solvers cover
the Lindblad master equation, Monte-Carlo wave functions, Bloch-Redfield and
Floquet-Markov master equations.
"""
from .analysis import (
    ChiMatrix,
    chi_to_superoperator,
    concurrence,
    correlation,
    correlation_ss,
    entropy_conditional,
    entropy_mutual,
    entropy_vn,
    expect,
    fidelity,
    qpt,
    qpt_export,
    wigner,
)
from .errors import (
    DataFormatError,
    DataLossError,
    DegenerateInputError,
    ExpressionEvaluationError,
    ExpressionSyntaxError,
    IncompatibleFileError,
    NumericalConsistencyError,
    QdynError,
    SolverConvergenceError,
    StructuralError,
    UnsupportedModeError,
)
from .expr import TimeDependentOperator, build_td_operator, clear_cache, eval_coeff, parse_expression
from .fileio import TextDataFormat, file_data_read, file_data_store, qload, qsave
from .floquet import (
    FloquetBasis,
    FloquetModeTable,
    floquet_decompose,
    floquet_mode_lookup,
    floquet_mode_table,
    floquet_modes,
    floquet_modes_t,
    floquet_wavefunction,
    fmmesolve,
)
from .ode import IntegratorOptions, integrate
from .operators import (
    basis,
    coherent,
    create,
    destroy,
    displace,
    iswap,
    num,
    qeye,
    rand_dm,
    rand_herm,
    rand_ket,
    rand_unitary,
    sigmam,
    sigmap,
    sigmax,
    sigmay,
    sigmaz,
    sqrtiswap,
    thermal_dm,
)
from .qobj import (
    QuantumObject,
    eigensolve,
    expm,
    groundstate,
    ket2dm,
    matrix_element,
    norm,
    ptrace,
    tensor,
    transform,
)
from .solvers import Odedata, RedfieldTensor, bloch_redfield_tensor, brmesolve, mcsolve, mesolve
from .superop import liouvillian, lindblad_dissipator, propagator, spost, spre, steadystate

Qobj = QuantumObject

__version__ = "0.1.0"

__all__ = [
    "basis", "bloch_redfield_tensor", "brmesolve", "build_td_operator", "chi_to_superoperator",
    "ChiMatrix", "clear_cache", "coherent", "concurrence", "correlation", "correlation_ss",
    "create", "DataFormatError", "DataLossError", "DegenerateInputError", "destroy", "displace",
    "eigensolve", "entropy_conditional", "entropy_mutual", "entropy_vn", "eval_coeff", "expect",
    "expm", "ExpressionEvaluationError", "ExpressionSyntaxError", "fidelity", "file_data_read",
    "file_data_store", "floquet_decompose", "floquet_mode_lookup", "floquet_mode_table",
    "floquet_modes", "floquet_modes_t", "floquet_wavefunction", "FloquetBasis", "FloquetModeTable",
    "fmmesolve", "groundstate", "IncompatibleFileError", "integrate", "IntegratorOptions", "iswap",
    "ket2dm", "lindblad_dissipator", "liouvillian", "matrix_element", "mcsolve", "mesolve", "norm",
    "num", "NumericalConsistencyError", "Odedata", "parse_expression", "propagator", "ptrace",
    "QdynError", "Qobj", "qeye", "qload", "qpt", "qpt_export", "qsave", "QuantumObject", "rand_dm",
    "rand_herm", "rand_ket", "rand_unitary", "RedfieldTensor", "sigmam", "sigmap", "sigmax",
    "sigmay", "sigmaz", "SolverConvergenceError", "spost", "spre", "sqrtiswap", "steadystate",
    "StructuralError", "tensor", "TextDataFormat", "thermal_dm", "TimeDependentOperator",
    "transform", "UnsupportedModeError", "wigner",
]
