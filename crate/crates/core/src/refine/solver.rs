//! Jacobi-preconditioned conjugate gradients on the normal equations AᵀA x = Aᵀb.

/// Sparse least-squares system stored by rows.
#[derive(Debug, Clone, Default)]
pub struct SparseRows {
    pub cols: usize,
    entries: Vec<(u32, f64)>,
    row_start: Vec<usize>,
    rhs: Vec<f64>,
}

impl SparseRows {
    pub fn new(cols: usize) -> Self {
        Self { cols, entries: Vec::new(), row_start: vec![0], rhs: Vec::new() }
    }

    pub fn push(&mut self, coeffs: &[(usize, f64)], b: f64) {
        self.entries.extend(coeffs.iter().map(|&(c, v)| (c as u32, v)));
        self.row_start.push(self.entries.len());
        self.rhs.push(b);
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    fn row(&self, r: usize) -> &[(u32, f64)] {
        &self.entries[self.row_start[r]..self.row_start[r + 1]]
    }

    /// b − A x
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|r| self.rhs[r] - self.row(r).iter().map(|&(c, v)| v * x[c as usize]).sum::<f64>()).collect()
    }

    /// ‖b − A x‖²
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.residual(x).iter().map(|r| r * r).sum()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|r| self.row(r).iter().map(|&(c, v)| v * x[c as usize]).sum()).collect()
    }

    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for &(c, v) in self.row(r) {
                out[c as usize] += v * yr;
            }
        }
        out
    }

    fn diag_ata(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.cols];
        for &(c, v) in &self.entries {
            d[c as usize] += v * v;
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// ‖Aᵀ(b − Ax)‖ / ‖Aᵀb‖ at the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves min ‖Ax − b‖² from the warm start `x`, in place.
pub fn pcg_normal(sys: &SparseRows, x: &mut [f64], tol: f64, max_iters: usize) -> SolveStats {
    let diag = sys.diag_ata();
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    let atb_norm = dot(&sys.apply_t(&sys.rhs), &sys.apply_t(&sys.rhs)).sqrt();
    let scale = if atb_norm > 0.0 { atb_norm } else { 1.0 };

    let mut r = sys.apply_t(&sys.residual(x));
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / scale;
    let mut it = 0;
    while rel > tol && it < max_iters {
        let ap = sys.apply(&p);
        let pap = dot(&ap, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        let atap = sys.apply_t(&ap);
        for (ri, v) in r.iter_mut().zip(&atap) {
            *ri -= alpha * v;
        }
        z = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        it += 1;
        rel = dot(&r, &r).sqrt() / scale;
    }
    SolveStats { iterations: it, relative_residual: rel, converged: rel <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overdetermined_line_fit() {
        // x0 + t·x1 through (0,1), (1,3), (2,5.2): closed form by hand
        let mut s = SparseRows::new(2);
        let pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.2)];
        for &(t, y) in &pts {
            s.push(&[(0, 1.0), (1, t)], y);
        }
        let mut x = vec![0.0, 0.0];
        let st = pcg_normal(&s, &mut x, 1e-14, 100);
        assert!(st.converged);
        // slope = Σ(t−t̄)(y−ȳ)/Σ(t−t̄)² = 4.2/2, intercept = ȳ − slope·t̄
        let slope = 2.1;
        let intercept = (1.0 + 3.0 + 5.2) / 3.0 - slope;
        assert!((x[1] - slope).abs() < 1e-10 && (x[0] - intercept).abs() < 1e-10);
    }
}
