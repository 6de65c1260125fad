/// Gauss–Legendre nodes and weights on `[−1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule on `[0, 1]`: `panels` equal panels of `per_panel`-point Gauss–Legendre.
pub fn composite_gauss_legendre(panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(per_panel);
    let width = 1.0 / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let left = p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(left + 0.5 * width * (xi + 1.0));
            weights.push(0.5 * width * wi);
        }
    }
    (nodes, weights)
}
