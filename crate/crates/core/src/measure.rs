//! The selection-intensity measure `R = r0·δ₀ + Σ wᵢ·δ_{yᵢ}` on `[0, 1]` and the
//! closed-form rates, speeds and bounds derived from it.
//!
//! The atom at zero carries the continuous (logistic) selection rate; every
//! atom at `y > 0` fires jumps of impact `y` at rate `w / y`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, KppError, Result};
use crate::output;

/// One atom of impact `y ∈ (0, 1]` with mass `w > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub y: f64,
    pub w: f64,
}

impl Atom {
    /// Rate `w / y` at which this atom produces jumps.
    pub fn jump_rate(&self) -> f64 {
        self.w / self.y
    }
}

/// `log(1 + y) / y`, extended by continuity to `1` at `y = 0`.
pub fn log1p_over_y(y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else {
        y.ln_1p() / y
    }
}

/// Finite measure on `[0, 1]` made of an atom at zero plus finitely many
/// atoms in `(0, 1]`, sorted by location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureLiteral", into = "MeasureLiteral")]
pub struct ReproductionMeasure {
    atom_at_zero: f64,
    atoms: Vec<Atom>,
}

/// Wire form: `{"r0": float, "atoms": [[y, w], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeasureLiteral {
    #[serde(default)]
    r0: f64,
    #[serde(default)]
    atoms: Vec<[f64; 2]>,
}

impl TryFrom<MeasureLiteral> for ReproductionMeasure {
    type Error = KppError;

    fn try_from(lit: MeasureLiteral) -> Result<Self> {
        Self::new(lit.r0, lit.atoms.iter().map(|&[y, w]| (y, w)))
    }
}

impl From<ReproductionMeasure> for MeasureLiteral {
    fn from(m: ReproductionMeasure) -> Self {
        MeasureLiteral {
            r0: m.atom_at_zero,
            atoms: m.atoms.iter().map(|a| [a.y, a.w]).collect(),
        }
    }
}

impl ReproductionMeasure {
    /// Build a measure. Atoms must be strictly increasing in `y ∈ (0, 1]`
    /// with finite positive weights.
    pub fn new(atom_at_zero: f64, atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        if !(atom_at_zero.is_finite() && atom_at_zero >= 0.0) {
            return Err(KppError::InvalidMeasure(format!(
                "atom at zero must be finite and nonnegative, got {atom_at_zero}"
            )));
        }
        let atoms: Vec<Atom> = atoms.into_iter().map(|(y, w)| Atom { y, w }).collect();
        for (i, a) in atoms.iter().enumerate() {
            if !(a.y > 0.0 && a.y <= 1.0) {
                return Err(KppError::InvalidMeasure(format!(
                    "atom location {} outside (0, 1]",
                    a.y
                )));
            }
            if !(a.w.is_finite() && a.w > 0.0) {
                return Err(KppError::InvalidMeasure(format!(
                    "atom weight {} at y = {} must be finite and positive",
                    a.w, a.y
                )));
            }
            if i > 0 && atoms[i - 1].y >= a.y {
                return Err(KppError::InvalidMeasure(format!(
                    "atom locations must be strictly increasing ({} then {})",
                    atoms[i - 1].y,
                    a.y
                )));
            }
        }
        Ok(Self {
            atom_at_zero,
            atoms,
        })
    }

    /// Pure continuous selection `r0·δ₀` (classical FKPP).
    pub fn continuous(r0: f64) -> Result<Self> {
        Self::new(r0, [])
    }

    /// The zero measure: no selection at all.
    pub fn zero() -> Self {
        Self {
            atom_at_zero: 0.0,
            atoms: Vec::new(),
        }
    }

    /// Discretize `r0·δ₀ + density(y) dy` on `(0, 1]` into `bins` atoms.
    ///
    /// Each bin `((k-1)/bins, k/bins]` becomes one atom carrying the bin's mass
    /// (composite Simpson rule), placed at the bin's mass centroid. Empty bins
    /// are dropped.
    pub fn from_density(r0: f64, density: impl Fn(f64) -> f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(invalid("bins", "need at least one bin"));
        }
        const SUB: usize = 16;
        let width = 1.0 / bins as f64;
        let mut atoms = Vec::with_capacity(bins);
        for k in 0..bins {
            let lo = k as f64 * width;
            let h = width / SUB as f64;
            let (mut mass, mut moment) = (0.0, 0.0);
            for j in 0..=SUB {
                let y = lo + j as f64 * h;
                let c = if j == 0 || j == SUB {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let f = density(y);
                if !(f.is_finite() && f >= 0.0) {
                    return Err(KppError::InvalidMeasure(format!(
                        "density must be finite and nonnegative, got {f} at y = {y}"
                    )));
                }
                mass += c * f;
                moment += c * f * y;
            }
            mass *= h / 3.0;
            moment *= h / 3.0;
            if mass > 0.0 {
                let y = (moment / mass).clamp(lo + f64::EPSILON, lo + width);
                atoms.push((y, mass));
            }
        }
        Self::new(r0, atoms)
    }

    /// Weight `r0 = R({0})` of the continuous-selection atom.
    pub fn atom_at_zero(&self) -> f64 {
        self.atom_at_zero
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `R([0, 1])`.
    pub fn total_mass(&self) -> f64 {
        self.atom_at_zero + self.atoms.iter().map(|a| a.w).sum::<f64>()
    }

    /// Total rate `Σ w/y` of visible jumps (the atom at zero produces none).
    pub fn jump_rate(&self) -> f64 {
        self.atoms.iter().map(Atom::jump_rate).sum()
    }

    /// Split into the part supported on `[0, δ]` and the atoms in `(δ, 1]`.
    pub fn split(&self, delta: f64) -> Result<SplitMeasure> {
        check_delta(delta)?;
        let cut = self.atoms.partition_point(|a| a.y <= delta);
        Ok(SplitMeasure {
            minus: Self {
                atom_at_zero: self.atom_at_zero,
                atoms: self.atoms[..cut].to_vec(),
            },
            plus: self.atoms[cut..].to_vec(),
            delta,
        })
    }

    /// `∫ log(1+y)/y R(dy)`, i.e. `𝔰²/2`: the quenched growth rate of the dual
    /// and half the squared wave speed.
    pub fn quenched_rate(&self) -> f64 {
        self.atom_at_zero + self.atoms.iter().map(|a| a.w * log1p_over_y(a.y)).sum::<f64>()
    }

    /// Invasion wave speed `𝔰 = sqrt(2 ∫ log(1+y)/y R(dy))`.
    pub fn wave_speed(&self) -> Result<f64> {
        if self.total_mass() <= 0.0 {
            return Err(KppError::ZeroMass);
        }
        Ok((2.0 * self.quenched_rate()).sqrt())
    }

    /// Upper growth constant `c_δ = R([0, δ]) + ∫_{(δ,1]} log(1+y)/y R(dy)`.
    pub fn c_delta(&self, delta: f64) -> Result<f64> {
        let s = self.split(delta)?;
        Ok(s.minus.total_mass() + log_integral(&s.plus, 0.0))
    }

    /// Lower growth constant `r0 + ∫_{(δ,1]} log(1+y)/y R(dy)`.
    pub fn c_delta_lower(&self, delta: f64) -> Result<f64> {
        let s = self.split(delta)?;
        Ok(self.atom_at_zero + log_integral(&s.plus, 0.0))
    }

    /// `𝔡_{δ,ε} = ∫_{(δ,1]} log(1+y+ε)/y R(dy)`.
    pub fn d_delta_eps(&self, delta: f64, eps: f64) -> Result<f64> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid("eps", format!("must be finite and >= 0, got {eps}")));
        }
        let s = self.split(delta)?;
        Ok(log_integral(&s.plus, eps))
    }

    /// Annealed growth rate `𝐫 = R([0, 1])`.
    pub fn annealed_rate(&self) -> f64 {
        self.total_mass()
    }

    /// Moment `Σ_{yᵢ > δ} wᵢ yᵢ^p`. For `δ = 0` the atom at zero contributes
    /// its full weight, so that the first moment over the whole measure counts
    /// the continuous rate `r0`.
    pub fn moment_r(&self, delta: f64, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid("delta", format!("must lie in [0, 1], got {delta}")));
        }
        if !p.is_finite() {
            return Err(invalid("p", "must be finite"));
        }
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.y > delta)
            .map(|a| a.w * a.y.powf(p))
            .sum();
        let zero = if delta == 0.0 { self.atom_at_zero } else { 0.0 };
        Ok(zero + atoms)
    }

    /// Parse the literal `{"r0": float, "atoms": [[y, w], ...]}`.
    pub fn from_literal(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Compact literal with 17-significant-digit floats.
    pub fn to_literal(&self) -> String {
        output::to_json_compact(self).expect("measure literal always serializes")
    }
}

fn log_integral(atoms: &[Atom], eps: f64) -> f64 {
    atoms.iter().map(|a| a.w * (a.y + eps).ln_1p() / a.y).sum()
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid("delta", format!("must lie in (0, 1], got {delta}")))
    }
}

/// `R` split at `δ` into `R_δ⁻` (support `[0, δ]`) and `R_δ⁺` (support `(δ, 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMeasure {
    pub minus: ReproductionMeasure,
    pub plus: Vec<Atom>,
    pub delta: f64,
}

impl SplitMeasure {
    /// Total skeleton rate `Λ = Σ_{y > δ} w/y`.
    pub fn plus_rate(&self) -> f64 {
        self.plus.iter().map(Atom::jump_rate).sum()
    }

    /// Reassemble the original measure.
    pub fn recombine(&self) -> ReproductionMeasure {
        let mut atoms = self.minus.atoms.clone();
        atoms.extend_from_slice(&self.plus);
        ReproductionMeasure {
            atom_at_zero: self.minus.atom_at_zero,
            atoms,
        }
    }
}

/// Bernoulli relative entropy `ε log(ε/p) + (1-ε) log((1-ε)/(1-p))`.
pub fn bernoulli_rate(eps: f64, p: f64) -> Result<f64> {
    for (name, v) in [("eps", eps), ("p", p)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(invalid(name, format!("must lie in (0, 1), got {v}")));
        }
    }
    Ok(eps * (eps / p).ln() + (1.0 - eps) * ((1.0 - eps) / (1.0 - p)).ln())
}

/// Principal Dirichlet eigenvalue of `½Δ + λ∂ₓ` on `(-R, R)`:
/// `-λ²/2 - π²/(8R²)`.
pub fn dirichlet_drift_eigenvalue(lambda: f64, half_width: f64) -> Result<f64> {
    if !(half_width > 0.0) {
        return Err(invalid("half_width", format!("must be positive, got {half_width}")));
    }
    Ok(-0.5 * lambda * lambda - PI * PI / (8.0 * half_width * half_width))
}

/// Smallest half-width `R` with `dirichlet_drift_eigenvalue(λ, R) ≥ -c_lower + ε`.
pub fn box_size(lambda: f64, c_lower: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let half_lambda_sq = 0.5 * lambda * lambda;
    let budget = c_lower - eps;
    let gap = budget - half_lambda_sq;
    if !(gap > 0.0) {
        return Err(KppError::InfeasibleBox {
            half_lambda_sq,
            budget,
        });
    }
    Ok(PI / (8.0 * gap).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r0: f64, atoms: &[(f64, f64)]) -> ReproductionMeasure {
        ReproductionMeasure::new(r0, atoms.iter().copied()).unwrap()
    }

    #[test]
    fn split_examples() {
        let s = m(0.2, &[(0.3, 0.2), (0.7, 0.5)]).split(0.5).unwrap();
        assert_eq!(s.minus, m(0.2, &[(0.3, 0.2)]));
        assert_eq!(s.plus, vec![Atom { y: 0.7, w: 0.5 }]);

        let s = m(1.0, &[]).split(0.5).unwrap();
        assert_eq!(s.minus, m(1.0, &[]));
        assert!(s.plus.is_empty());

        // y = δ belongs to the closed lower part
        let s = m(0.0, &[(0.5, 1.0)]).split(0.5).unwrap();
        assert_eq!(s.minus, m(0.0, &[(0.5, 1.0)]));
        assert!(s.plus.is_empty());
    }

    #[test]
    fn split_rejects_bad_delta() {
        let r = m(1.0, &[]);
        for d in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(r.split(d).is_err(), "delta {d}");
        }
        assert!(r.split(1.0).is_ok());
    }

    #[test]
    fn constructor_validation() {
        assert!(ReproductionMeasure::new(-1.0, []).is_err());
        assert!(ReproductionMeasure::new(0.0, [(0.0, 1.0)]).is_err());
        assert!(ReproductionMeasure::new(0.0, [(1.1, 1.0)]).is_err());
        assert!(ReproductionMeasure::new(0.0, [(0.5, 0.0)]).is_err());
        assert!(ReproductionMeasure::new(0.0, [(0.5, 1.0), (0.5, 1.0)]).is_err());
        assert!(ReproductionMeasure::new(0.0, [(0.6, 1.0), (0.5, 1.0)]).is_err());
        assert!(ReproductionMeasure::new(0.0, [(0.5, f64::INFINITY)]).is_err());
    }

    #[test]
    fn zero_mass_has_no_speed() {
        assert!(matches!(ReproductionMeasure::zero().wave_speed(), Err(KppError::ZeroMass)));
    }

    #[test]
    fn d_delta_eps_rejects_negative_eps() {
        assert!(m(0.0, &[(0.5, 1.0)]).d_delta_eps(0.25, -0.1).is_err());
        assert_eq!(m(0.3, &[(0.5, 1.0)]).d_delta_eps(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_rate_boundaries() {
        for (e, p) in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)] {
            assert!(bernoulli_rate(e, p).is_err());
        }
        assert_eq!(bernoulli_rate(0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn eigenvalue_rejects_nonpositive_box() {
        assert!(dirichlet_drift_eigenvalue(1.0, 0.0).is_err());
        assert!(dirichlet_drift_eigenvalue(1.0, -2.0).is_err());
    }

    #[test]
    fn box_size_infeasible_and_monotone() {
        assert!(matches!(box_size(1.3, 0.81, 0.01), Err(KppError::InfeasibleBox { .. })));
        let mut last = 0.0;
        for i in 0..12 {
            let r = box_size(0.1 * i as f64, 1.0, 0.1).unwrap();
            assert!(r > last);
            last = r;
        }
        // blows up as λ approaches sqrt(2(c - ε))
        let edge = (2.0f64 * 0.9).sqrt();
        assert!(box_size(edge - 1e-9, 1.0, 0.1).unwrap() > 1e3);
    }

    #[test]
    fn literal_round_trip_is_bit_stable() {
        let r = m(0.1, &[(1.0 / 3.0, 0.2), (0.7, std::f64::consts::E)]);
        let s = r.to_literal();
        assert!(s.starts_with(r#"{"r0":1.0000000000000001e-1,"atoms":[[3.3333333333333331e-1,"#));
        let back = ReproductionMeasure::from_literal(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_literal(), s);
    }

    #[test]
    fn literal_rejects_unsorted() {
        assert!(ReproductionMeasure::from_literal(r#"{"r0":0,"atoms":[[0.7,1],[0.3,1]]}"#).is_err());
        let r = ReproductionMeasure::from_literal(r#"{"r0":2.0}"#).unwrap();
        assert_eq!(r.atom_at_zero(), 2.0);
    }

    #[test]
    fn density_discretization_preserves_mass() {
        // uniform density 2 on (0,1]: mass 2, mean location 1/2
        let r = ReproductionMeasure::from_density(0.5, |_| 2.0, 10).unwrap();
        assert_eq!(r.atoms().len(), 10);
        assert!((r.total_mass() - 2.5).abs() < 1e-12);
        let first = r.atoms()[0];
        assert!((first.y - 0.05).abs() < 1e-12);
        // density 6y(1-y): exact mass 1 per Simpson on each bin (cubic exactness)
        let r = ReproductionMeasure::from_density(0.0, |y| 6.0 * y * (1.0 - y), 8).unwrap();
        assert!((r.total_mass() - 1.0).abs() < 1e-12);
    }
}
