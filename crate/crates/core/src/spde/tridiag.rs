/// Crank–Nicolson step for `u_t = ½ u_xx` on a uniform grid with Dirichlet
/// values held at the two end nodes.
///
/// The matrix is constant for a fixed `(n, dx, dt)`, so the Thomas forward
/// sweep coefficients are computed once.
#[derive(Debug, Clone)]
pub(crate) struct CrankNicolson {
    dt: f64,
    kappa: f64,
    cprime: Vec<f64>,
    inv_den: Vec<f64>,
    rhs: Vec<f64>,
}

impl CrankNicolson {
    pub(crate) fn new(n: usize, dx: f64, dt: f64) -> Self {
        assert!(n >= 3, "grid needs at least 3 nodes");
        let m = n - 2;
        // ½ · dt/2 / dx²
        let kappa = 0.25 * dt / (dx * dx);
        let (a, b, c) = (-kappa, 1.0 + 2.0 * kappa, -kappa);
        let mut cprime = vec![0.0; m];
        let mut inv_den = vec![0.0; m];
        inv_den[0] = 1.0 / b;
        cprime[0] = c * inv_den[0];
        for i in 1..m {
            inv_den[i] = 1.0 / (b - a * cprime[i - 1]);
            cprime[i] = c * inv_den[i];
        }
        Self {
            dt,
            kappa,
            cprime,
            inv_den,
            rhs: vec![0.0; m],
        }
    }

    pub(crate) fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance `u` by one step of size `dt` in place.
    ///
    /// Solves for the increment `Δ` in `(I - κD)Δ = 2κ D u`, where `D` is the
    /// second difference; constants and linear profiles are fixed exactly.
    pub(crate) fn step(&mut self, u: &mut [f64]) {
        let n = u.len();
        let m = n - 2;
        debug_assert_eq!(m, self.rhs.len());
        let k = self.kappa;
        for i in 0..m {
            let j = i + 1;
            self.rhs[i] = 2.0 * k * ((u[j - 1] - u[j]) + (u[j + 1] - u[j]));
        }
        let a = -k;
        self.rhs[0] *= self.inv_den[0];
        for i in 1..m {
            self.rhs[i] = (self.rhs[i] - a * self.rhs[i - 1]) * self.inv_den[i];
        }
        for i in (0..m - 1).rev() {
            self.rhs[i] -= self.cprime[i] * self.rhs[i + 1];
        }
        for i in 0..m {
            u[i + 1] = (u[i + 1] + self.rhs[i]).clamp(0.0, 1.0);
        }
    }
}
