//! Derivative-free minimization via the Nelder-Mead simplex.
//!
//! The quasi-likelihood surfaces fitted in this crate are smooth,
//! low-dimensional (2-3 parameters after reparameterization) and evaluated
//! in an unconstrained space, which is exactly the regime where the plain
//! simplex method is reliable. The implementation is fully deterministic:
//! identical inputs produce identical iterates.

/// Outcome of a simplex minimization.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead settings. Iteration stops when the spread of function
/// values across the simplex falls below `f_tol * (1 + |f_best|)` and the
/// simplex diameter below `x_tol`.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            f_tol: 1e-8,
            x_tol: 1e-4,
            max_iter: 2000,
            initial_step: 0.5,
        }
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, start: &[f64], mut f: F) -> MinimizeResult {
        let n = start.len();
        assert!(n >= 1);

        // Initial simplex: start point plus one perturbed vertex per axis.
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(start.to_vec());
        for i in 0..n {
            let mut v = start.to_vec();
            v[i] += if v[i].abs() > 1.0 {
                self.initial_step * v[i].abs()
            } else {
                self.initial_step
            };
            simplex.push(v);
        }
        let mut fx: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;

        while iterations < self.max_iter {
            iterations += 1;

            // Order vertices by function value; NaN sorts worst.
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| fx[a].total_cmp(&fx[b]));
            let best = order[0];
            let worst = order[n];
            let second_worst = order[n - 1];

            let spread = fx[worst] - fx[best];
            let diam = simplex
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&simplex[best])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread.abs() <= self.f_tol * (1.0 + fx[best].abs()) && diam <= self.x_tol.max(1e-12)
            {
                converged = true;
                break;
            }

            // Centroid of all vertices except the worst.
            let mut centroid = vec![0.0; n];
            for (i, v) in simplex.iter().enumerate() {
                if i == worst {
                    continue;
                }
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }

            let reflect: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + alpha * (c - w))
                .collect();
            let f_reflect = f(&reflect);

            if f_reflect < fx[best] {
                let expand: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + gamma * (c - w))
                    .collect();
                let f_expand = f(&expand);
                if f_expand < f_reflect {
                    simplex[worst] = expand;
                    fx[worst] = f_expand;
                } else {
                    simplex[worst] = reflect;
                    fx[worst] = f_reflect;
                }
                continue;
            }

            if f_reflect < fx[second_worst] {
                simplex[worst] = reflect;
                fx[worst] = f_reflect;
                continue;
            }

            // Contraction (outside if the reflected point improved on the
            // worst vertex, inside otherwise).
            let (towards, f_towards) = if f_reflect < fx[worst] {
                (reflect.clone(), f_reflect)
            } else {
                (simplex[worst].clone(), fx[worst])
            };
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&towards)
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            let f_contract = f(&contract);
            if f_contract < f_towards {
                simplex[worst] = contract;
                fx[worst] = f_contract;
                continue;
            }

            // Shrink towards the best vertex.
            let best_vertex = simplex[best].clone();
            for i in 0..=n {
                if i == best {
                    continue;
                }
                for (x, b) in simplex[i].iter_mut().zip(&best_vertex) {
                    *x = b + sigma * (*x - b);
                }
                fx[i] = f(&simplex[i]);
            }
        }

        let mut best = 0;
        for i in 1..=n {
            if fx[i].total_cmp(&fx[best]).is_lt() {
                best = i;
            }
        }
        MinimizeResult {
            x: simplex[best].clone(),
            f: fx[best],
            iterations,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimizes_quadratic_bowl() {
        let nm = NelderMead::default();
        let res = nm.minimize(&[3.0, -2.0], |x| {
            (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2)
        });
        assert!(res.converged);
        assert_abs_diff_eq!(res.x[0], 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(res.x[1], -0.5, epsilon = 1e-3);
        assert!(res.f < 1e-6);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let nm = NelderMead {
            max_iter: 5000,
            ..NelderMead::default()
        };
        let res = nm.minimize(&[-1.2, 1.0], |x| {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        });
        assert!(res.f < 1e-8);
        assert_abs_diff_eq!(res.x[0], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn deterministic_across_runs() {
        let nm = NelderMead::default();
        let f = |x: &[f64]| x[0].sin() + (x[1] - 2.0).powi(2) + x[0] * x[0] * 0.1;
        let a = nm.minimize(&[0.3, 0.0], f);
        let b = nm.minimize(&[0.3, 0.0], f);
        assert_eq!(a.x, b.x);
        assert_eq!(a.f, b.f);
    }
}
