"""The Riesz potential of a constant on the disk.

(-Delta)^(s-1) is a smoothing convolution with kernel c |x - y|^(-2s).  Its
Gram matrix S is the expensive, dense part of the solver.  Applied to the
constant field 1 it should reproduce, at the origin,

    c_{2,s-1} * 2 pi / (2 - 2s) = 2^(2s-2) Gamma(s) / Gamma(2-s),

which is the whole check here: assemble S on three meshes and watch the
discrete potential approach that number.
"""
import math

import numpy as np

from fracldg import assemble_riesz_gram, disk_mesh, reference_basis
from fracldg.ldg import assemble_mass
from fracldg.riesz import apply_negative_laplacian, riesz_potential_disk
from fracldg.timestep import project_l2

s = 0.5
basis = reference_basis(1)
exact = riesz_potential_disk(0.0, s)
print(f"s = {s}: exact potential at the origin {exact:.6f}")

for N in (4, 8, 18):
    mesh = disk_mesh(N)
    M = assemble_mass(mesh, basis)
    S = assemble_riesz_gram(mesh, basis, s)
    one = project_l2(lambda X: np.ones(X.shape[:-1]), mesh, basis, M)
    q = apply_negative_laplacian(S, M, np.stack([one, 0 * one]))[0].reshape(-1, basis.n)
    k = mesh.locate([0.0, 0.0])
    j = np.flatnonzero(np.all(mesh.vertices[mesh.triangles[k]] == 0.0, axis=1))[0]
    print(f"  h = {mesh.h:.3f}  K = {mesh.n_triangles:4d}  q(0) = {q[k, j]:.6f}  "
          f"error = {abs(q[k, j] - exact):.1e}")

# the Gram matrix is symmetric and positive definite up to quadrature noise
lam = np.linalg.eigvalsh(S.matrix)
print(f"smallest eigenvalue of S on the finest mesh: {lam[0]:.3e} (largest {lam[-1]:.3e})")
print(f"1'S1 = {S.matrix.sum():.5f}; on the exact disk this is 8/3 = {8 / 3:.5f}")
print(f"check of the closed form: {2 ** (2 * s - 2) * math.gamma(s) / math.gamma(2 - s):.6f}")
