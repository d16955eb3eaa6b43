//! Concrete polynomial dynamics on the sphere: escape-time potentials, the
//! level coordinate `tau`, preimage trees, neutral sections and the levels of
//! critical orbits. Ground truth for the combinatorial engine.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    /// `z -> z^d`, `d >= 2`.
    Power(u32),
    /// `z -> z^2 + c` with an escaping critical orbit.
    QuadraticPlusC(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoloMap {
    pub kind: MapKind,
    pub escape_radius: f64,
    pub green_tol: f64,
    pub max_iter: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HoloError {
    NonEscaping { point: Complex64 },
    BadMap(String),
    TooDeep(String),
}

impl std::fmt::Display for HoloError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HoloError::NonEscaping { point } => {
                write!(f, "orbit of {point} stays bounded within the iteration budget")
            }
            HoloError::BadMap(m) => write!(f, "bad map: {m}"),
            HoloError::TooDeep(m) => write!(f, "too deep: {m}"),
        }
    }
}

impl std::error::Error for HoloError {}

impl HoloMap {
    pub fn power(d: u32) -> Result<Self, HoloError> {
        if d < 2 {
            return Err(HoloError::BadMap(format!(
                "power map needs degree >= 2 for an escape potential, got {d}"
            )));
        }
        Ok(HoloMap { kind: MapKind::Power(d), ..HoloMap::defaults(MapKind::Power(d)) })
    }

    pub fn quadratic(c: Complex64) -> Result<Self, HoloError> {
        let map = HoloMap::defaults(MapKind::QuadraticPlusC(c));
        // The single finite critical point must lie in the wandering
        // component, i.e. its orbit escapes.
        map.tau(Complex64::new(0.0, 0.0))
            .map_err(|_| HoloError::BadMap(format!("critical orbit of z^2 + ({c}) stays bounded")))?;
        Ok(map)
    }

    fn defaults(kind: MapKind) -> Self {
        HoloMap { kind, escape_radius: 1e6, green_tol: 1e-10, max_iter: 200 }
    }

    pub fn degree(&self) -> u32 {
        match self.kind {
            MapKind::Power(d) => d,
            MapKind::QuadraticPlusC(_) => 2,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        match self.kind {
            MapKind::Power(d) => z.powu(d),
            MapKind::QuadraticPlusC(c) => z * z + c,
        }
    }

    /// Escape potential: `G(f(z)) = d * G(z)`, positive on escaping points.
    /// Estimated as `ln|z_k| / d^k` after escape and refined until successive
    /// estimates agree within `green_tol`.
    pub fn green(&self, z: Complex64) -> Result<f64, HoloError> {
        let d = self.degree() as f64;
        let mut w = z;
        let mut scale = 1.0f64;
        let mut k = 0u32;
        while w.norm_sqr() <= self.escape_radius * self.escape_radius {
            if k >= self.max_iter {
                return Err(HoloError::NonEscaping { point: z });
            }
            w = self.apply(w);
            scale /= d;
            k += 1;
        }
        let mut estimate = w.norm().ln() * scale;
        loop {
            if w.norm() > 1e120 {
                break;
            }
            w = self.apply(w);
            scale /= d;
            let next = w.norm().ln() * scale;
            let done = (next - estimate).abs() < self.green_tol;
            estimate = next;
            if done {
                break;
            }
        }
        Ok(estimate)
    }

    /// Level coordinate `tau = -log_d G`; satisfies `tau(f(z)) = tau(z) - 1`
    /// and tends to minus infinity at the attractor.
    pub fn tau(&self, z: Complex64) -> Result<f64, HoloError> {
        let d = self.degree() as f64;
        let g = self.green(z)?;
        Ok(-(g.ln() / d.ln()))
    }

    /// The `d` solutions of `f(z) = w`, with multiplicity.
    pub fn preimages(&self, w: Complex64) -> Vec<Complex64> {
        match self.kind {
            MapKind::Power(d) => {
                let r = w.norm().powf(1.0 / d as f64);
                let theta = w.arg() / d as f64;
                let step = core::f64::consts::TAU / d as f64;
                (0..d)
                    .map(|j| Complex64::from_polar(r, theta + j as f64 * step))
                    .collect()
            }
            MapKind::QuadraticPlusC(c) => {
                let s = (w - c).sqrt();
                vec![s, -s]
            }
        }
    }

    /// `f^{-n}(f^n(z))`: the neutral section of `z` at depth `n`.
    pub fn neutral_section(&self, z: Complex64, n: u32) -> Result<NeutralSection, HoloError> {
        let tau_base = self.tau(z)?;
        let d = self.degree() as u64;
        let count = d.checked_pow(n).filter(|&c| c <= 1 << 22).ok_or_else(|| {
            HoloError::TooDeep(format!("neutral section of depth {n} has too many points"))
        })?;
        let points: Vec<Complex64> = match self.kind {
            // For the pure power map the section is the exact root lattice
            // z * exp(2 pi i j / d^n).
            MapKind::Power(_) => {
                let (r, theta) = (z.norm(), z.arg());
                let step = core::f64::consts::TAU / count as f64;
                (0..count)
                    .map(|j| Complex64::from_polar(r, theta + j as f64 * step))
                    .collect()
            }
            MapKind::QuadraticPlusC(_) => {
                let mut w = z;
                for _ in 0..n {
                    w = self.apply(w);
                }
                let mut layer = vec![w];
                for _ in 0..n {
                    layer = layer.into_iter().flat_map(|p| self.preimages(p)).collect();
                }
                layer
            }
        };
        let mut tau_min = f64::INFINITY;
        let mut tau_max = f64::NEG_INFINITY;
        for p in &points {
            let t = self.tau(*p)?;
            tau_min = tau_min.min(t);
            tau_max = tau_max.max(t);
        }
        let mut args: Vec<f64> = points.iter().map(|p| p.arg()).collect();
        args.sort_by(|a, b| a.partial_cmp(b).expect("finite args"));
        let mut max_gap: f64 = 0.0;
        for i in 0..args.len() {
            let next = if i + 1 == args.len() {
                args[0] + core::f64::consts::TAU
            } else {
                args[i + 1]
            };
            max_gap = max_gap.max(next - args[i]);
        }
        Ok(NeutralSection {
            base_tau: tau_base,
            tau_spread: tau_max - tau_min,
            max_angular_gap: max_gap,
            points,
        })
    }

    /// `tau` values of the forward orbit of each finite critical point; the
    /// levels a base constant must avoid. Empty for power maps.
    pub fn critical_levels(&self) -> Result<Vec<f64>, HoloError> {
        match self.kind {
            MapKind::Power(_) => Ok(Vec::new()),
            MapKind::QuadraticPlusC(_) => {
                let mut out = Vec::new();
                let mut z = Complex64::new(0.0, 0.0);
                for _ in 0..24 {
                    out.push(self.tau(z)?);
                    if z.norm() > self.escape_radius {
                        break;
                    }
                    z = self.apply(z);
                }
                Ok(out)
            }
        }
    }

    /// Finite critical points lying in the wandering component.
    pub fn critical_points(&self) -> Vec<(Complex64, u32)> {
        match self.kind {
            MapKind::Power(_) => Vec::new(),
            MapKind::QuadraticPlusC(_) => vec![(Complex64::new(0.0, 0.0), 2)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct NeutralSection {
    pub base_tau: f64,
    /// Spread of `tau` across the section; zero in exact arithmetic.
    pub tau_spread: f64,
    /// Largest angular gap between consecutive points. A density diagnostic:
    /// exact for power maps, a heuristic for other kinds.
    pub max_angular_gap: f64,
    pub points: Vec<Complex64>,
}
