#!/usr/bin/env python3
"""Algebraic (LMI-free) certificate for a standard two-mode pair.

For mode pairs (R1, R2) with R2 R1^{-1} strictly proper and strictly
positive real, a storage-function argument produces the multiple Lyapunov
function in closed form; the same model is then re-certified by the generic
LMI route as a cross-check, and the positive-real completion recovers a
matrix M with M R2 R1^{-1} strictly positive real.
"""

import numpy as np

from sldstab import (
    build_standard_slds,
    find_mlf,
    is_strictly_positive_real,
    mlf_from_positive_real,
    positive_real_completion,
    spectral_factorize,
)
from sldstab.fixtures import standard_scalar_pair
from sldstab.posreal import check_completion, para_hermitian_boundary

R1, R2 = standard_scalar_pair()
ok, witness = is_strictly_positive_real(R2, R1)
print(f"R2 R1^-1 strictly positive real: {ok}")

P = para_hermitian_boundary(R2, R1)
Q = spectral_factorize(P, R1=R1)
print(f"boundary polynomial {P.coeffs.ravel()}  ->  spectral factor "
      f"Q = {Q.Q.coeffs.ravel()}")

std = build_standard_slds(R1, R2)
cert = mlf_from_positive_real(std)
print("storage-function kernels:")
print("  K1 =", np.asarray(cert.kernels[0]).tolist())
print("  K2 =", np.asarray(cert.kernels[1]).tolist())

lmi_cert = find_mlf(std.model)
print(f"generic LMI route on the same model: feasible={lmi_cert.feasible}")

M = positive_real_completion(std, cert)
print(f"completion M = {M.coeffs.ravel()}  "
      f"(M R2 R1^-1 SPR: {check_completion(M, R2, R1)})")
