//! Quadrature rules on the reference triangle {(xi, eta) : xi, eta >= 0, xi + eta <= 1}.
//!
//! Points are stored in barycentric form `(l0, l1, l2)` with `xi = l1`, `eta = l2`.
//! Weights sum to 1/2, the area of the reference triangle.

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub order: usize,
}

impl QuadratureRule {
    /// Default rule for degree-`k` elements: exact to degree 2k+2.
    pub fn for_degree(k: usize) -> Self {
        Self::with_order(2 * k + 2)
    }

    /// Smallest available rule exact to at least `order`. Symmetric rules are used
    /// up to order 8, collapsed Gauss rules beyond.
    pub fn with_order(order: usize) -> Self {
        match order {
            0 | 1 => Self::symmetric(&[(1.0, Orbit::Centroid)], 1),
            2 => Self::symmetric(&[(1.0 / 3.0, Orbit::Edge(1.0 / 6.0))], 2),
            3 | 4 => Self::symmetric(
                &[
                    (0.223_381_589_678_011, Orbit::Edge(0.445_948_490_915_965)),
                    (0.109_951_743_655_322, Orbit::Edge(0.091_576_213_509_771)),
                ],
                4,
            ),
            5 | 6 => Self::symmetric(
                &[
                    (0.116_786_275_726_379, Orbit::Edge(0.249_286_745_170_910)),
                    (0.050_844_906_370_207, Orbit::Edge(0.063_089_014_491_502)),
                    (
                        0.082_851_075_618_374,
                        Orbit::General(0.053_145_049_844_817, 0.310_352_451_033_784),
                    ),
                ],
                6,
            ),
            7 | 8 => Self::symmetric(
                &[
                    (0.144_315_607_677_787, Orbit::Centroid),
                    (0.095_091_634_267_285, Orbit::Edge(0.459_292_588_292_723)),
                    (0.103_217_370_534_718, Orbit::Edge(0.170_569_307_751_760)),
                    (0.032_458_497_623_198, Orbit::Edge(0.050_547_228_317_031)),
                    (
                        0.027_230_314_174_435,
                        Orbit::General(0.008_394_777_409_958, 0.263_112_829_634_638),
                    ),
                ],
                8,
            ),
            _ => Self::collapsed_gauss(order),
        }
    }

    /// Conical product rule: Gauss-Legendre in both directions of the collapsed square,
    /// exact to `order` for any order.
    pub fn collapsed_gauss(order: usize) -> Self {
        let n = (order + 3) / 2;
        let (x, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&s, &ws) in x.iter().zip(&w) {
            for (&r, &wr) in x.iter().zip(&w) {
                let xi = s;
                let eta = r * (1.0 - s);
                points.push([1.0 - xi - eta, xi, eta]);
                weights.push(ws * wr * (1.0 - s));
            }
        }
        Self {
            points,
            weights,
            order: 2 * n - 2,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integrate a function of the reference coordinates `(xi, eta)`.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum()
    }

    fn symmetric(orbits: &[(f64, Orbit)], order: usize) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(w, orbit) in orbits {
            let pts: Vec<[f64; 3]> = match orbit {
                Orbit::Centroid => vec![[1.0 / 3.0; 3]],
                Orbit::Edge(a) => {
                    let b = 1.0 - 2.0 * a;
                    vec![[b, a, a], [a, b, a], [a, a, b]]
                }
                Orbit::General(a, b) => {
                    let c = 1.0 - a - b;
                    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
                }
            };
            for p in pts {
                points.push(p);
                weights.push(0.5 * w);
            }
        }
        Self {
            points,
            weights,
            order,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Orbit {
    Centroid,
    /// (1 - 2a, a, a) and permutations.
    Edge(f64),
    /// (a, b, 1 - a - b) and permutations.
    General(f64, f64),
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Exact integral of xi^a eta^b over the reference triangle: a! b! / (a + b + 2)!.
pub fn monomial_integral(a: u32, b: u32) -> f64 {
    let fact = |n: u32| (1..=n).fold(1.0_f64, |acc, i| acc * i as f64);
    fact(a) * fact(b) / fact(a + b + 2)
}
