"""
Kernels Numba - laços críticos de energia, enumeração e Monte Carlo

Configurações são inteiros empacotados: bit i = 1 -> σ_i = +1, bit i = 0 -> σ_i = -1.
Todas as energias são inteiras (unidades de J).
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def spin_value(bits, i):
    return 1 if (bits >> i) & 1 else -1


@njit(cache=True, nogil=True)
def config_energy(couplings, n, bits):
    """H = -Σ_{i<j} J_ij σ_i σ_j"""
    e = 0
    for i in range(n):
        si = spin_value(bits, i)
        for j in range(i + 1, n):
            e -= couplings[i, j] * si * spin_value(bits, j)
    return e


@njit(cache=True, nogil=True)
def flip_delta(couplings, n, bits, i):
    """ΔE = 2 σ_i Σ_{j≠i} J_ij σ_j, em O(N)"""
    h = 0
    for j in range(n):
        if j != i:
            h += couplings[i, j] * spin_value(bits, j)
    return 2 * spin_value(bits, i) * h


@njit(cache=True, nogil=True)
def _gray(k):
    return k ^ (k >> 1)


@njit(cache=True, nogil=True)
def _lowest_bit(k):
    b = 0
    while not (k >> b) & 1:
        b += 1
    return b


# --- Enumeração em código de Gray (spin 0 fixo para cima, simetria Z2)

@njit(cache=True, nogil=True)
def gray_min(couplings, n, start, stop, max_reps):
    """Mínimo, contagem e representantes no trecho [start, stop) da metade Z2"""
    reps = np.empty(max_reps, dtype=np.int64)
    bits = 1 | (_gray(start) << 1)
    e = config_energy(couplings, n, bits)
    emin = e
    count = 1
    reps[0] = bits
    nreps = 1
    for k in range(start + 1, stop):
        i = _lowest_bit(k) + 1
        e += flip_delta(couplings, n, bits, i)
        bits ^= 1 << i
        if e < emin:
            emin = e
            count = 1
            reps[0] = bits
            nreps = 1
        elif e == emin:
            count += 1
            if nreps < max_reps:
                reps[nreps] = bits
                nreps += 1
    return emin, count, reps, nreps


@njit(cache=True, nogil=True)
def gray_histogram(couplings, n, start, stop, shift, hist):
    """Acumula hist[E + C] no trecho [start, stop) da metade Z2"""
    bits = 1 | (_gray(start) << 1)
    e = config_energy(couplings, n, bits)
    hist[e + shift] += 1
    for k in range(start + 1, stop):
        i = _lowest_bit(k) + 1
        e += flip_delta(couplings, n, bits, i)
        bits ^= 1 << i
        hist[e + shift] += 1


@njit(cache=True, nogil=True)
def all_energies(couplings, n):
    """Energia de todas as 2^N configurações, indexadas pelos bits"""
    size = 1 << n
    out = np.empty(size, dtype=np.int64)
    bits = 0
    e = config_energy(couplings, n, bits)
    out[bits] = e
    for k in range(1, size):
        i = _lowest_bit(k)
        e += flip_delta(couplings, n, bits, i)
        bits ^= 1 << i
        out[bits] = e
    return out


@njit(cache=True, nogil=True)
def local_minimum_energies(energies, n):
    """Energias das configurações onde nenhum flip único diminui a energia"""
    size = energies.shape[0]
    keep = np.zeros(size, dtype=np.bool_)
    for k in range(size):
        ok = True
        for i in range(n):
            if energies[k ^ (1 << i)] < energies[k]:
                ok = False
                break
        keep[k] = ok
    return energies[keep]


# --- Ação implícita de W = C·I - H_tot

@njit(cache=True, nogil=True)
def row_action(diagonal, n, omega, vec, out):
    for k in range(diagonal.shape[0]):
        acc = 0.0
        for i in range(n):
            acc += vec[k ^ (1 << i)]
        out[k] = diagonal[k] * vec[k] + omega * acc
    return out


# --- Descida gulosa

@njit(cache=True, nogil=True)
def greedy_walk(couplings, n, bits, flips, trace_moves, trace_energies):
    """Aceita apenas flips que diminuem estritamente a energia"""
    e = config_energy(couplings, n, bits)
    trace_moves[0] = 0
    trace_energies[0] = e
    ntrace = 1
    for t in range(flips.shape[0]):
        i = flips[t]
        d = flip_delta(couplings, n, bits, i)
        if d < 0:
            bits ^= 1 << i
            e += d
            trace_moves[ntrace] = t + 1
            trace_energies[ntrace] = e
            ntrace += 1
    return bits, e, ntrace


@njit(cache=True, nogil=True)
def is_local_minimum(couplings, n, bits):
    for i in range(n):
        if flip_delta(couplings, n, bits, i) < 0:
            return False
    return True


# --- Cadeia de plackets

@njit(cache=True, nogil=True)
def _bond(x, y, diagonal, omega):
    # só chamado com distância de Hamming 0 ou 1
    return diagonal if x == y else omega


@njit(cache=True, nogil=True)
def run_steps(couplings, n, shift, plackets, energies, omegas,
              visit_plackets, visit_spins, visit_uniforms,
              step_energy, step_accepted, counts, states):
    """
    Executa len(omegas) passos de Monte Carlo de L visitas cada.

    Cada visita sorteia (λ, i, u); movimentos proibidos contam como rejeição.
    A aceitação é min(1, razão das duas ligações que tocam λ). Com peso antigo
    nulo (fim do annealing em Ω = 0) aceita-se sse o peso novo for positivo.
    `counts` acumula [propostos, permitidos, aceitos]; `states` (opcional)
    recebe o estado empacotado da cadeia inteira ao fim de cada passo.
    """
    L = plackets.shape[0]
    total = 0
    for lam in range(L):
        total += energies[lam]
    record = states.shape[0] > 0
    v = 0
    for t in range(omegas.shape[0]):
        omega = omegas[t]
        allowed = 0
        accepted = 0
        for _ in range(L):
            lam = visit_plackets[v]
            i = visit_spins[v]
            r = visit_uniforms[v]
            v += 1
            mask = 1 << i
            m = plackets[lam]
            a = plackets[lam - 1 if lam > 0 else L - 1]
            b = plackets[lam + 1 if lam < L - 1 else 0]
            da = a ^ m
            db = b ^ m
            if (da != 0 and da != mask) or (db != 0 and db != mask):
                continue
            allowed += 1
            em = energies[lam]
            delta = flip_delta(couplings, n, m, i)
            ep = em + delta
            mp = m ^ mask
            old = _bond(a, m, shift - em, omega) * _bond(m, b, shift - em, omega)
            new = _bond(a, mp, shift - ep, omega) * _bond(mp, b, shift - ep, omega)
            if old > 0.0:
                ratio = new / old
                accept = ratio >= 1.0 or r < ratio
            else:
                accept = new > 0.0
            if accept:
                plackets[lam] = mp
                energies[lam] = ep
                total += delta
                accepted += 1
        step_energy[t] = total / L
        step_accepted[t] = accepted
        counts[0] += L
        counts[1] += allowed
        counts[2] += accepted
        if record:
            code = 0
            for lam in range(L):
                code |= plackets[lam] << (n * lam)
            states[t] = code
