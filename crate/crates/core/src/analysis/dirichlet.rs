use super::kernel::TorusKernel;

/// Bilinear Dirichlet form `⟨f, (I - Q) g⟩_π`.
pub fn dirichlet_form(k: &TorusKernel, f: &[f64], g: &[f64]) -> f64 {
    let qg = k.apply(g);
    k.pi()
        .iter()
        .zip(f)
        .zip(g.iter().zip(&qg))
        .map(|((p, fx), (gx, qgx))| p * fx * (gx - qgx))
        .sum()
}

/// `½ Σ_{x,y} (f(y) - f(x))² π(x) Q(x, y)`; equals `dirichlet_form(k, f, f)`
/// whenever `π` is invariant.
pub fn dirichlet_energy(k: &TorusKernel, f: &[f64]) -> f64 {
    let pi = k.pi();
    let mut e = 0.0;
    for x in 0..k.num_sites() {
        let (c, v) = k.row(x);
        for (&y, &q) in c.iter().zip(v) {
            let d = f[y] - f[x];
            e += d * d * pi[x] * q;
        }
    }
    0.5 * e
}

/// `⟨f, (I - Q) f⟩_π` for a sparse `f` given as `(site, value)` pairs.
pub(crate) fn sparse_energy(k: &TorusKernel, f: &[(usize, f64)], dense: &mut [f64]) -> f64 {
    for &(x, v) in f {
        dense[x] = v;
    }
    let pi = k.pi();
    let mut e = 0.0;
    for &(x, v) in f {
        let (c, q) = k.row(x);
        let qf: f64 = c.iter().zip(q).map(|(&y, &w)| w * dense[y]).sum();
        e += pi[x] * v * (v - qf);
    }
    for &(x, _) in f {
        dense[x] = 0.0;
    }
    e
}
