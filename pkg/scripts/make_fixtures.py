"""Regenerate the committed FCIDUMP fixtures and their reference values.

Requires pyscf, which is *not* a runtime dependency of the package. Run from the
repository root::

    python scripts/make_fixtures.py

Every system uses STO-3G, symmetry-adapted canonical RHF orbitals and no frozen
core. For BeH2 the RHF is converged for each candidate irrep occupation and
the lowest-energy solution is kept (the default guess lands on an excited RHF
solution near y = 1.75 A). Reference values (RHF, MP2 correlation, FCI roots) are written to
``fixtures/reference.json`` and are only used by the test-suite.
"""

import json
from pathlib import Path

import numpy as np
from pyscf import ao2mo, fci, gto, mp, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def hchain(n, r):
    return "; ".join(f"H 0 0 {i * r:.6f}" for i in range(n))


def beh2(y):
    return f"Be 0 {y:.6f} 0; H 1 0 0; H -1 0 0"


SYSTEMS = [("h2_0.7414", hchain(2, 0.7414), 0.7414)]
SYSTEMS += [("h4_1.00", hchain(4, 1.0), 1.0)]
SYSTEMS += [(f"h6_{r:.2f}", hchain(6, r), r) for r in (0.6, 0.8, 1.2, 1.6, 2.0, 2.4)]
SYSTEMS += [(f"h8_{r:.2f}", hchain(8, r), r) for r in (0.8, 1.6, 2.4)]
SYSTEMS += [("h10_1.00", hchain(10, 1.0), 1.0)]
SYSTEMS += [(f"beh2_{y:.2f}", beh2(y), y) for y in (0.0, 1.0, 1.75, 2.4)]


BEH2_OCCUPATIONS = [None, {"A1": 4, "B2": 2}, {"A1": 6}]


def lowest_rhf(mol, occupations):
    best = None
    for irrep_nelec in occupations:
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.conv_tol_grad = 1e-10
        if irrep_nelec is not None:
            if any(k not in mol.irrep_name for k in irrep_nelec):
                continue
            mf.irrep_nelec = irrep_nelec
        mf.kernel()
        if mf.converged and (best is None or mf.e_tot < best.e_tot - 1e-9):
            best = mf
    return best


def main():
    OUT.mkdir(exist_ok=True)
    reference = {}
    for label, atoms, param in SYSTEMS:
        mol = gto.M(atom=atoms, basis="sto-3g", symmetry=True, verbose=0)
        mf = lowest_rhf(mol, BEH2_OCCUPATIONS if label.startswith("beh2") else [None])
        assert mf.converged, label
        occ = mf.mo_occ > 0
        # aufbau check: the reference determinant is "lowest orbitals occupied"
        assert np.all(occ[: occ.sum()]), label
        c = mf.mo_coeff
        h1 = c.T @ mf.get_hcore() @ c
        eri = ao2mo.restore(8, ao2mo.kernel(mol, c), mol.nao)
        fcidump.from_integrals(
            str(OUT / f"{label}.fcidump"), h1, eri, mol.nao, mol.nelectron,
            nuc=mol.energy_nuc(), ms=0, tol=1e-15,
        )
        e_mp2 = mp.MP2(mf).kernel()[0]
        nroots = 4 if label.startswith("beh2") else 1
        solver = fci.direct_spin1.FCI()
        solver.conv_tol = 1e-12
        e_fci, civecs = solver.kernel(
            h1, eri, mol.nao, mol.nelectron, nroots=nroots, ecore=mol.energy_nuc()
        )
        e_fci = np.atleast_1d(e_fci)
        civecs = civecs if nroots > 1 else [civecs]
        reference[label] = {
            "geometry": param,
            "n_spatial": int(mol.nao),
            "n_electrons": int(mol.nelectron),
            "nuclear_repulsion": float(mol.energy_nuc()),
            "e_hf": float(mf.e_tot),
            "mo_energy": [float(x) for x in mf.mo_energy],
            "e_mp2_corr": float(e_mp2),
            "e_fci": [float(x) for x in e_fci],
            "hf_overlap": [float(abs(v[0, 0])) for v in civecs],
        }
        print(label, mf.e_tot, e_fci[0])
    (OUT / "reference.json").write_text(json.dumps(reference, indent=1) + "\n")


if __name__ == "__main__":
    main()
