from core.settings import envFloat, envInt

# ---------- Gallery ----------
GALLERY_NAMES = ["random_stochastic", "permutation_cycle", "lazy_permutation", "rank_one_random", "alternating_pair"]
GALLERY_DIMENSION = envInt("GALLERY_DIMENSION", 3)

# Expected verdicts per family, in the order the gallery table prints them
EXPECTED_VERDICTS: dict[str, dict[str, str]] = {
    "permutation_cycle": {"uniform": "fail", "weak": "fail", "l_weak": "fail", "l_strong": "inconclusive"},
    "random_stochastic": {"uniform": "pass", "weak": "pass", "l_weak": "pass", "l_strong": "pass"},
    "lazy_permutation": {"uniform": "pass", "weak": "pass", "l_weak": "pass", "l_strong": "pass"},
    "rank_one_random": {"uniform": "pass", "weak": "pass", "l_weak": "pass", "l_strong": "pass"},
    "alternating_pair": {"weak": "pass", "l_weak": "pass", "l_strong": "inconclusive"},
    "grid_multiplication": {"l_weak": "pass", "l_strong": "discretization-sensitive"},
    "kernel_lorentz": {"l_weak": "pass", "doeblin_check": "pass"},
}

FAMILY_NOTES: dict[str, str] = {
    "permutation_cycle": "isometry on the null space; delta = 1 for every power",
    "random_stochastic": "Dirichlet columns, strictly positive",
    "lazy_permutation": "(I + P)/2; some power is strictly positive",
    "rank_one_random": "T = T_y, delta = 0",
    "alternating_pair": "T_k alternates between two lazy rank-one mixtures with different fixed points",
    "grid_multiplication": "(T_k x)(t) = t^k x(t) on a grid of [0,1]",
    "kernel_lorentz": "T_k(a, x) = (a, a g_k + int H_k(s, .) x(s) ds) on R + L_p",
}

# ---------- Grid multiplication chain ----------
GRID_SIZE = envInt("GRID_SIZE", 9)
GRID_CONSTANT_C = envFloat("GRID_CONSTANT_C", 0.25)
GRID_SWEEP_SIZES = [9, 17, 33]

# ---------- Kernel chain ----------
KERNEL_P = envFloat("KERNEL_P", 2.0)
KERNEL_CHECK_UNTIL = envInt("KERNEL_CHECK_UNTIL", 50)
# Discrete validity conditions may exceed their bound by this much
KERNEL_TOLERANCE = envFloat("KERNEL_TOLERANCE", 1e-12)
