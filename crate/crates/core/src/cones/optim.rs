//! Steepest descent with Armijo backtracking on a retraction-based manifold.

pub(crate) struct Outcome<P> {
    pub point: P,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

pub(crate) const GRAD_TOL: f64 = 1e-9;

/// `eval` returns the value and a gradient; `retract(p, g, s)` moves from `p`
/// by `−s·g`; `norm_sq(g)` is the squared gradient norm (predicted decrease).
pub(crate) fn descend<P, G>(
    start: P,
    iterations: usize,
    eval: impl Fn(&P) -> (f64, G),
    value: impl Fn(&P) -> f64,
    retract: impl Fn(&P, &G, f64) -> P,
    norm_sq: impl Fn(&G) -> f64,
) -> Outcome<P> {
    let mut p = start;
    let (mut f, mut g) = eval(&p);
    let mut step: f64 = 1.0;
    let mut it = 0;
    let mut gn2 = norm_sq(&g);
    while it < iterations {
        if gn2.sqrt() < GRAD_TOL {
            return Outcome { point: p, value: f, iterations: it, converged: true, grad_norm: gn2.sqrt() };
        }
        it += 1;
        let mut s = (step * 2.0).min(1e3);
        let mut accepted = None;
        for _ in 0..60 {
            let trial = retract(&p, &g, s);
            let ft = value(&trial);
            if ft <= f - 1e-4 * s * gn2 {
                accepted = Some((trial, ft));
                break;
            }
            s *= 0.5;
        }
        // an accepted step may overshoot a quadratic well; try the minimizer
        // of the interpolating parabola along the same ray
        if let Some((_, ft)) = &accepted {
            let curv = ft - f + s * gn2;
            if curv > 0.0 {
                let sq = gn2 * s * s / (2.0 * curv);
                if sq < s {
                    let trial = retract(&p, &g, sq);
                    let fq = value(&trial);
                    if fq < *ft {
                        accepted = Some((trial, fq));
                        s = sq;
                    }
                }
            }
        }
        match accepted {
            Some((trial, _)) => {
                step = s;
                p = trial;
                let (nf, ng) = eval(&p);
                let stalled = (f - nf).abs() <= 1e-16 * (1.0 + f.abs());
                f = nf;
                g = ng;
                gn2 = norm_sq(&g);
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }
    let grad_norm = gn2.sqrt();
    Outcome { point: p, value: f, iterations: it, converged: grad_norm < GRAD_TOL * 1e3, grad_norm }
}
