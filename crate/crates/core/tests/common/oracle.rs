//! Brute-force Born-rule reference computations on the bare two-qubit state.
//! Nothing here calls into the library under test.

use num_complex::Complex64 as C;

pub type Qubit = [C; 2];

fn norm(v: Qubit) -> Qubit {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

/// `[|00⟩, |01⟩, |10⟩, |11⟩]` amplitudes, left qubit first.
pub fn state(a: C, b: C, c: C) -> [C; 4] {
    [a, b, c, C::new(0.0, 0.0)]
}

/// Unit vector orthogonal to `v`, by Gram–Schmidt on whichever standard
/// basis vector overlaps `v` least.
pub fn orthogonal(v: Qubit) -> Qubit {
    let v = norm(v);
    let e = if v[0].norm() < v[1].norm() { 0 } else { 1 };
    let mut w = [C::new(0.0, 0.0); 2];
    w[e] = C::new(1.0, 0.0);
    let overlap = v[e].conj();
    norm([w[0] - overlap * v[0], w[1] - overlap * v[1]])
}

pub fn z_plus() -> Qubit {
    [C::new(1.0, 0.0), C::new(0.0, 0.0)]
}

pub fn z_minus() -> Qubit {
    [C::new(0.0, 0.0), C::new(1.0, 0.0)]
}

/// Hardy's settings rebuilt from the zero constraints.
pub struct Settings {
    pub ml1: [Qubit; 2],
    pub ml2: [Qubit; 2],
    pub mr1: [Qubit; 2],
    pub mr2: [Qubit; 2],
}

pub fn settings(a: C, b: C, c: C) -> Settings {
    let ml2_plus = orthogonal([a, c]);
    let mr2_minus = orthogonal([a, b]);
    Settings {
        ml1: [z_plus(), z_minus()],
        ml2: [ml2_plus, orthogonal(ml2_plus)],
        mr1: [z_minus(), z_plus()],
        mr2: [orthogonal(mr2_minus), mr2_minus],
    }
}

/// `|(⟨l| ⊗ ⟨r|) ψ|²`.
pub fn joint(psi: &[C; 4], l: Qubit, r: Qubit) -> f64 {
    let mut amp = C::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            amp += l[i].conj() * r[j].conj() * psi[2 * i + j];
        }
    }
    amp.norm_sqr()
}

/// Probability of `r` on the right after `l` was found on the left.
pub fn conditional_right(psi: &[C; 4], l: Qubit, r: Qubit) -> f64 {
    let total: f64 = [z_plus(), z_minus()].iter().map(|&e| joint(psi, l, e)).sum();
    joint(psi, l, r) / total
}

/// Off-diagonal decoherence entry of the x/z/x pair on a qubit in `|0⟩`,
/// from explicit 2×2 products.
pub fn xzx_offdiagonal() -> f64 {
    type M = [[C; 2]; 2];
    let mul = |p: M, q: M| -> M {
        let mut r = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    r[i][j] += p[i][k] * q[k][j];
                }
            }
        }
        r
    };
    let h = C::new(0.5, 0.0);
    let o = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let x: M = [[h, h], [h, h]];
    let z0: M = [[one, o], [o, o]];
    let z1: M = [[o, o], [o, one]];
    let chain0 = mul(x, mul(z0, x));
    let chain1 = mul(x, mul(z1, x));
    // Tr(K1 ρ K0†) with ρ = |0⟩⟨0|: (K1)_{i0} conj((K0)_{i0}) summed over i.
    let entry: C = (0..2).map(|i| chain1[i][0] * chain0[i][0].conj()).sum();
    entry.norm()
}

/// S4 on the real `b = c = t` family via the Born rule.
pub fn s4_b_equals_c(t: f64) -> f64 {
    let a = C::new((1.0 - 2.0 * t * t).sqrt(), 0.0);
    let t = C::new(t, 0.0);
    let psi = state(a, t, t);
    let s = settings(a, t, t);
    joint(&psi, s.ml2[0], s.mr2[1])
}
