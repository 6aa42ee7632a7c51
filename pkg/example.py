from covasym import (DensityMatrix, GroupKind, SpaceSpec, apply_channel, asymmetry_sup, branch_channels,
                     branch_output, embed_C, embed_L, monotonicity_check, negativity, uniform_covariant_channel)


def show_branches(channel, psi:DensityMatrix):
    ''' Prints the outcome probability and L-negativity of every irreducible branch

        Parameters
        ----------
            :param channel: CovariantChannel - channel to split into branches
            :param psi: DensityMatrix - input state
    '''
    for i, branch in enumerate(branch_channels(channel)):
        probability, out = branch_output(branch, psi)
        if out is None:
            print(f'  branch {i}: never fires')
            continue
        print(f'  branch {i}: p = {probability:.4f}, negativity(L(out)) = {negativity(embed_L(out)):.4f}')


if __name__ == '__main__':
    # spins 0, 1/2 and 1, written as doubled labels
    space = SpaceSpec.from_irreps(GroupKind.SU2, (0, 1, 2))
    psi = DensityMatrix.basis_state(space, (1, 0), 1)
    channel = uniform_covariant_channel(space, 1)
    out = apply_channel(channel, psi)

    print(f'Space: {space.describe()} (dim {space.dim})')
    print('Input |1/2, 1/2>')
    print(f'  negativity(L(psi))      = {negativity(embed_L(psi)):.4f}')
    print(f'  negativity(C(psi))      = {negativity(embed_C(psi)):.4f}')
    print(f'  sup over S of A_N(psi)  = {asymmetry_sup("negativity", psi):.4f}')

    print('After the rank-1/2 covariant channel')
    print(f'  negativity(L(E(psi)))   = {negativity(embed_L(out)):.4f}')
    print(f'  negativity(C(E(psi)))   = {negativity(embed_C(out)):.4f}')
    print(f'  sup over S of A_N(E(psi)) = {asymmetry_sup("negativity", out):.4f}')
    show_branches(channel, psi)

    # the C_g monotones never increase, while the L value above did
    report = monotonicity_check(psi, channel)
    for row in report.rows:
        print(f'  {row.monotone:>15} [{row.frame}] {row.before:.4f} -> {row.after:.4f}')
    print('C_g monotones pass:', report.passed)
