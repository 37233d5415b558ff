"""Regenerates the molecular FCIDUMP fixtures (STO-3G, canonical RHF orbitals).

Writes <name>.fcidump plus <name>.orbe (canonical orbital energies, one per
line) and prints the full-CI energy of each system for reference.
"""
import os

import numpy as np
from pyscf import ao2mo, fci, gto, scf
from pyscf.tools import fcidump

HERE = os.path.dirname(os.path.abspath(__file__))

SYSTEMS = {
    "h2_2.0A": "H 0 0 0; H 0 0 2.0",
    "h2_3.0A": "H 0 0 0; H 0 0 3.0",
    "lih_2.0A": "Li 0 0 0; H 0 0 2.0",
}


def main():
    for name, atom in SYSTEMS.items():
        mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom", verbose=0)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.conv_tol_grad = 1e-8
        mf.kernel()
        path = os.path.join(HERE, name + ".fcidump")
        fcidump.from_scf(mf, path, tol=1e-15)
        np.savetxt(os.path.join(HERE, name + ".orbe"), mf.mo_energy, fmt="%.15f")
        h1 = mf.mo_coeff.T @ mf.get_hcore() @ mf.mo_coeff
        eri = ao2mo.restore(1, ao2mo.kernel(mol, mf.mo_coeff), mol.nao)
        e_fci, _ = fci.direct_spin1.kernel(h1, eri, mol.nao, mol.nelectron,
                                           ecore=mol.energy_nuc())
        print(f"{name}: E_HF={mf.e_tot:.12f} E_FCI={e_fci:.12f} "
              f"orbe={np.array2string(mf.mo_energy, precision=6)}")


if __name__ == "__main__":
    main()
