//! Exact quantum predictions for two-photon polarization experiments.
//!
//! Everything lives in 2×2 (one photon) or 4×4 (photon pair) complex
//! matrices. Polarization observables have period π: the correlation of the
//! singlet is `-cos 2(a - b)`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hv::event::{Event, Outcome, SettingPair};
use crate::sampling::{par_blocks, RngStream, NORMALIZATION_TOL};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_dim(m: &CMatrix) -> Result<usize> {
    let d = m.nrows();
    if m.ncols() != d || (d != 2 && d != 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: d,
        });
    }
    Ok(d)
}

fn is_hermitian(m: &CMatrix) -> bool {
    (m - m.adjoint()).iter().all(|z| z.norm() <= HERMITIAN_TOL)
}

fn spectrum(m: &CMatrix) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// A quantum state of one (2×2) or two (4×4) polarization qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_dim(&m)?;
        if !is_hermitian(&m) {
            return Err(Error::InvalidSpec("density matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > NORMALIZATION_TOL || tr.im.abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidSpec(format!("trace {tr} is not 1")));
        }
        let min = spectrum(&m).into_iter().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::InvalidSpec(format!(
                "density matrix has negative eigenvalue {min}"
            )));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint())
    }

    /// Linear polarization at `angle` (radians from horizontal).
    pub fn linear_polarization(angle: f64) -> Self {
        Self::pure(&[c(angle.cos()), c(angle.sin())]).expect("unit vector")
    }

    pub fn horizontal() -> Self {
        Self::linear_polarization(0.0)
    }

    pub fn vertical() -> Self {
        Self::linear_polarization(std::f64::consts::FRAC_PI_2)
    }

    /// `(|HV⟩ - |VH⟩)/√2`, the polarization singlet.
    pub fn singlet() -> Self {
        let s = FRAC_1_SQRT_2;
        Self::pure(&[c(0.0), c(s), c(-s), c(0.0)]).expect("unit vector")
    }

    /// `ρ₁ ⊗ ρ₂` of two single-photon states.
    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if a.dim() != 2 || b.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: a.dim().max(b.dim()),
            });
        }
        Ok(Self(a.0.kronecker(&b.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// A Hermitian observable with spectrum in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(CMatrix);

impl Observable {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_dim(&m)?;
        if !is_hermitian(&m) {
            return Err(Error::InvalidSpec("observable is not Hermitian".into()));
        }
        if spectrum(&m).iter().any(|e| e.abs() > 1.0 + PSD_TOL) {
            return Err(Error::InvalidSpec("spectrum outside [-1, 1]".into()));
        }
        Ok(Self(m))
    }

    /// `Â ⊗ I` acting on Alice's photon.
    pub fn on_alice(local: &Observable) -> Self {
        Self(local.0.kronecker(&CMatrix::identity(2, 2)))
    }

    /// `I ⊗ B̂` acting on Bob's photon.
    pub fn on_bob(local: &Observable) -> Self {
        Self(CMatrix::identity(2, 2).kronecker(&local.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// Recover `Â` when this observable is `Â ⊗ I`.
    pub fn alice_factor(&self) -> Result<Observable> {
        self.split(true)
    }

    /// Recover `B̂` when this observable is `I ⊗ B̂`.
    pub fn bob_factor(&self) -> Result<Observable> {
        self.split(false)
    }

    fn split(&self, alice: bool) -> Result<Observable> {
        if self.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: self.dim(),
            });
        }
        let m = &self.0;
        let local = CMatrix::from_fn(2, 2, |r, s| {
            (0..2)
                .map(|k| {
                    if alice {
                        m[(2 * r + k, 2 * s + k)]
                    } else {
                        m[(2 * k + r, 2 * k + s)]
                    }
                })
                .sum::<Complex64>()
                * 0.5
        });
        let rebuilt = if alice {
            local.kronecker(&CMatrix::identity(2, 2))
        } else {
            CMatrix::identity(2, 2).kronecker(&local)
        };
        if (m - rebuilt).iter().any(|z| z.norm() > HERMITIAN_TOL) {
            let side = if alice { "A ⊗ I" } else { "I ⊗ B" };
            return Err(Error::NotTensorSplit(format!("expected {side} form")));
        }
        Ok(Observable(local))
    }
}

/// Dichotomic ±1 polarization measurement along `angle`; `+1` eigenvector is
/// linear polarization at `angle`.
pub fn polarization_observable(angle: f64) -> Observable {
    let (s, co) = (2.0 * angle).sin_cos();
    Observable(CMatrix::from_row_slice(2, 2, &[c(co), c(s), c(s), c(-co)]))
}

/// Probability that a photon in `rho` passes a polarizer at `angle`.
pub fn pass_probability(rho: &DensityMatrix, angle: f64) -> Result<f64> {
    Ok(0.5 * (1.0 + expectation(rho, &polarization_observable(angle))?))
}

/// `Tr(ρ·O)`.
pub fn expectation(rho: &DensityMatrix, obs: &Observable) -> Result<f64> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: obs.dim(),
        });
    }
    let t = (&rho.0 * &obs.0).trace();
    debug_assert!(t.im.abs() < IMAG_TOL, "imaginary expectation {t}");
    Ok(t.re)
}

/// `E(AB|ρ) − E(A|ρ)E(B|ρ)` for `A = Â⊗I`, `B = I⊗B̂`.
pub fn covariance(rho: &DensityMatrix, a: &Observable, b: &Observable) -> Result<f64> {
    a.alice_factor()?;
    b.bob_factor()?;
    let ab = Observable(&a.0 * &b.0);
    Ok(expectation(rho, &ab)? - expectation(rho, a)? * expectation(rho, b)?)
}

/// Correlation `E(AB)` of polarization measurements at `(a, b)`.
pub fn pair_correlation(rho: &DensityMatrix, a: f64, b: f64) -> Result<f64> {
    let obs = Observable(
        polarization_observable(a)
            .0
            .kronecker(&polarization_observable(b).0),
    );
    expectation(rho, &obs)
}

/// Joint probabilities `P(a, b)` of PBS outcomes at `(alpha, beta)`, indexed
/// `[ia][ib]` with index 0 for `+1` and 1 for `-1`.
pub fn joint_outcome_probabilities(
    rho: &DensityMatrix,
    alpha: f64,
    beta: f64,
) -> Result<[[f64; 2]; 2]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let projector = |angle: f64, sign: f64| {
        (CMatrix::identity(2, 2) + polarization_observable(angle).0 * c(sign)) * c(0.5)
    };
    let mut p = [[0.0; 2]; 2];
    for (ia, sa) in [1.0, -1.0].into_iter().enumerate() {
        for (ib, sb) in [1.0, -1.0].into_iter().enumerate() {
            let proj = projector(alpha, sa).kronecker(&projector(beta, sb));
            p[ia][ib] = (&rho.0 * proj).trace().re.max(0.0);
        }
    }
    Ok(p)
}

fn draw_cell(p: &[[f64; 2]; 2], u: f64) -> (Outcome, Outcome) {
    let total: f64 = p.iter().flatten().sum();
    let side = |i: usize| {
        if i == 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    };
    let mut acc = 0.0;
    for (k, q) in p.iter().flatten().enumerate() {
        acc += q / total;
        if u < acc {
            return (side(k / 2), side(k % 2));
        }
    }
    let last = (0..4).rev().find(|&k| p[k / 2][k % 2] > 0.0).unwrap_or(3);
    (side(last / 2), side(last % 2))
}

/// Event-by-event sampling of PBS outcomes from the joint law of `rho`.
/// Every emission is detected and time tagged with its trial index. With
/// `smearing > 0` each setting is perturbed per emission by an independent
/// Gaussian of that standard deviation.
pub fn quantum_simulate(
    rho: &DensityMatrix,
    settings: SettingPair<f64>,
    n: u64,
    smearing: f64,
    rng: &RngStream,
) -> Result<(Vec<Event>, Vec<Event>)> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    if !(smearing >= 0.0 && smearing.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "smearing {smearing} must be non-negative"
        )));
    }
    let sharp = joint_outcome_probabilities(rho, settings.a, settings.b)?;
    let noise = Normal::new(0.0, smearing).expect("validated width");
    let pairs = par_blocks(n, rng, |range, s| {
        range
            .map(|t| {
                let p = if smearing > 0.0 {
                    let a = settings.a + noise.sample(s);
                    let b = settings.b + noise.sample(s);
                    joint_outcome_probabilities(rho, a, b).expect("two-photon state")
                } else {
                    sharp
                };
                let (oa, ob) = draw_cell(&p, s.uniform());
                let event = |setting, outcome| Event {
                    trial: t,
                    time_tag: t as f64,
                    setting,
                    outcome,
                };
                (event(settings.label_a, oa), event(settings.label_b, ob))
            })
            .collect()
    });
    Ok(pairs.into_iter().unzip())
}

/// Singlet correlation when both settings carry independent Gaussian noise of
/// width `smearing`: `-cos 2(a - b) · exp(-4σ²)`.
pub fn smeared_singlet_correlation(a: f64, b: f64, smearing: f64) -> f64 {
    -(2.0 * (a - b)).cos() * (-4.0 * smearing * smearing).exp()
}

/// A classical mixture `Σ pᵢ ρᵢ ⊗ ρ̃ᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableState {
    components: Vec<(f64, DensityMatrix, DensityMatrix)>,
}

impl SeparableState {
    /// One to four components, each a product of random single-photon states
    /// partially mixed with the maximally mixed state.
    pub fn random(rng: &mut RngStream) -> Self {
        let k = 1 + rng.index(4);
        let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.uniform()).collect();
        let total: f64 = raw.iter().sum();
        let mixed = |rng: &mut RngStream| {
            let t = rng.uniform() * std::f64::consts::PI;
            let phase = rng.uniform() * 2.0 * std::f64::consts::PI;
            let lam = rng.uniform();
            let psi = [c(t.cos()), Complex64::from_polar(t.sin(), phase)];
            let pure = DensityMatrix::pure(&psi).expect("unit vector");
            DensityMatrix::new(pure.0 * c(lam) + CMatrix::identity(2, 2) * c(0.5 * (1.0 - lam)))
                .expect("convex combination of states")
        };
        let mut comps: Vec<_> = raw
            .iter()
            .map(|w| (w / total, mixed(rng), mixed(rng)))
            .collect();
        let head: f64 = comps[..k - 1].iter().map(|(p, _, _)| p).sum();
        comps[k - 1].0 = 1.0 - head;
        Self::new(comps).expect("normalized weights")
    }

    pub fn new(components: Vec<(f64, DensityMatrix, DensityMatrix)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidSpec("no components".into()));
        }
        if components
            .iter()
            .any(|(p, a, b)| !(*p > 0.0) || a.dim() != 2 || b.dim() != 2)
        {
            return Err(Error::InvalidSpec(
                "weights must be positive and components single-photon".into(),
            ));
        }
        let total: f64 = components.iter().map(|(p, _, _)| p).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidSpec(format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, DensityMatrix, DensityMatrix)] {
        &self.components
    }

    /// The 4×4 density matrix of the mixture.
    pub fn assemble(&self) -> DensityMatrix {
        let m = self
            .components
            .iter()
            .map(|(p, a, b)| a.0.kronecker(&b.0) * c(*p))
            .fold(CMatrix::zeros(4, 4), |acc, x| acc + x);
        DensityMatrix(m)
    }
}

/// `Σ pᵢ E(A|ρᵢ) E(B|ρ̃ᵢ)`, computed component by component.
pub fn separable_expectation(state: &SeparableState, a: f64, b: f64) -> f64 {
    let (oa, ob) = (polarization_observable(a), polarization_observable(b));
    state
        .components
        .iter()
        .map(|(p, ra, rb)| {
            p * expectation(ra, &oa).expect("2×2") * expectation(rb, &ob).expect("2×2")
        })
        .sum()
}

/// Anything that predicts `E(AB)` for a pair of polarizer angles.
pub trait CorrelationModel {
    fn correlation(&self, a: f64, b: f64) -> Result<f64>;
}

impl CorrelationModel for DensityMatrix {
    fn correlation(&self, a: f64, b: f64) -> Result<f64> {
        pair_correlation(self, a, b)
    }
}

impl CorrelationModel for SeparableState {
    fn correlation(&self, a: f64, b: f64) -> Result<f64> {
        Ok(separable_expectation(self, a, b))
    }
}

/// Alice's settings `(a, a′)` and Bob's `(b, b′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshAngles {
    pub a: f64,
    pub a2: f64,
    pub b: f64,
    pub b2: f64,
}

impl ChshAngles {
    pub fn new(a: f64, a2: f64, b: f64, b2: f64) -> Self {
        Self { a, a2, b, b2 }
    }

    /// `(0, π/4, π/8, 3π/8)`, where the singlet reaches `2√2`.
    pub fn tsirelson() -> Self {
        use std::f64::consts::PI;
        Self::new(0.0, PI / 4.0, PI / 8.0, 3.0 * PI / 8.0)
    }

    /// Setting pairs in CHSH role order: `(a,b), (a,b′), (a′,b), (a′,b′)`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.a, self.b),
            (self.a, self.b2),
            (self.a2, self.b),
            (self.a2, self.b2),
        ]
    }
}

/// `|E(AB) − E(AB′)| + |E(A′B) + E(A′B′)|`.
pub fn chsh_value(model: &impl CorrelationModel, angles: ChshAngles) -> Result<f64> {
    let [e11, e12, e21, e22] = angles.pairs().map(|(a, b)| model.correlation(a, b));
    Ok((e11? - e12?).abs() + (e21? + e22?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::derive_stream;
    use std::f64::consts::PI;

    fn hh() -> DensityMatrix {
        DensityMatrix::product(&DensityMatrix::horizontal(), &DensityMatrix::horizontal()).unwrap()
    }

    /// Independent route: expand `⟨ψ|A⊗B|ψ⟩` by hand over basis indices.
    fn singlet_by_components(a: f64, b: f64) -> f64 {
        let s = FRAC_1_SQRT_2;
        let psi = [0.0, s, -s, 0.0];
        let oa = [
            [(2.0 * a).cos(), (2.0 * a).sin()],
            [(2.0 * a).sin(), -(2.0 * a).cos()],
        ];
        let ob = [
            [(2.0 * b).cos(), (2.0 * b).sin()],
            [(2.0 * b).sin(), -(2.0 * b).cos()],
        ];
        let mut acc = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        acc += psi[2 * i + k] * oa[i][j] * ob[k][l] * psi[2 * j + l];
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn malus_law() {
        let h = DensityMatrix::horizontal();
        assert!((pass_probability(&h, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(pass_probability(&h, PI / 2.0).unwrap().abs() < 1e-12);
        assert!((pass_probability(&h, PI / 3.0).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn polarization_observable_is_dichotomic() {
        for k in 0..10 {
            let o = polarization_observable(0.3 * k as f64);
            let mut ev = spectrum(o.matrix());
            ev.sort_by(f64::total_cmp);
            assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singlet_marginals_vanish_and_product_eigenstate() {
        let s = DensityMatrix::singlet();
        for k in 0..10 {
            let a = Observable::on_alice(&polarization_observable(0.37 * k as f64));
            assert!(expectation(&s, &a).unwrap().abs() < 1e-12);
        }
        let a0 = Observable::on_alice(&polarization_observable(0.0));
        assert!((expectation(&hh(), &a0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singlet_correlation_matches_component_oracle() {
        let s = DensityMatrix::singlet();
        for i in 0..10 {
            for j in 0..10 {
                let (a, b) = (0.31 * i as f64, 0.17 * j as f64);
                let e = pair_correlation(&s, a, b).unwrap();
                assert!((e - singlet_by_components(a, b)).abs() < 1e-12);
                assert!((e + (2.0 * (a - b)).cos()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn covariance_cases() {
        let s = DensityMatrix::singlet();
        let a = Observable::on_alice(&polarization_observable(0.4));
        let b = Observable::on_bob(&polarization_observable(0.4));
        assert!((covariance(&s, &a, &b).unwrap() + 1.0).abs() < 1e-12);
        let b45 = Observable::on_bob(&polarization_observable(0.4 + PI / 4.0));
        assert!(covariance(&s, &a, &b45).unwrap().abs() < 1e-12);
        let prod = DensityMatrix::product(
            &DensityMatrix::linear_polarization(0.2),
            &DensityMatrix::linear_polarization(1.1),
        )
        .unwrap();
        assert!(covariance(&prod, &a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn covariance_rejects_non_local_observables() {
        let s = DensityMatrix::singlet();
        let a = Observable::on_alice(&polarization_observable(0.0));
        let b = Observable::on_bob(&polarization_observable(0.0));
        assert!(matches!(
            covariance(&s, &b, &b),
            Err(Error::NotTensorSplit(_))
        ));
        assert!(matches!(
            covariance(&s, &a, &a),
            Err(Error::NotTensorSplit(_))
        ));
        let local = polarization_observable(0.0);
        assert!(matches!(
            expectation(&s, &local),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn separable_examples() {
        let h = DensityMatrix::horizontal();
        let v = DensityMatrix::vertical();
        let single = SeparableState::new(vec![(1.0, h.clone(), h.clone())]).unwrap();
        assert!((separable_expectation(&single, 0.0, 0.0) - 1.0).abs() < 1e-12);
        let mix = SeparableState::new(vec![(0.5, h.clone(), h), (0.5, v.clone(), v)]).unwrap();
        assert!((separable_expectation(&mix, 0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!(separable_expectation(&mix, 0.0, PI / 4.0).abs() < 1e-12);
    }

    fn random_separable(rng: &mut RngStream) -> SeparableState {
        SeparableState::random(rng)
    }

    #[test]
    fn separable_sum_equals_trace_of_mixture() {
        let mut rng = derive_stream(9, "separable");
        for _ in 0..100 {
            let st = random_separable(&mut rng);
            let rho = st.assemble();
            let (a, b) = (rng.uniform() * PI, rng.uniform() * PI);
            let lhs = separable_expectation(&st, a, b);
            assert!((lhs - pair_correlation(&rho, a, b).unwrap()).abs() < 1e-10);
            let angles = ChshAngles::new(a, rng.uniform() * PI, b, rng.uniform() * PI);
            assert!(chsh_value(&st, angles).unwrap() <= 2.0 + 1e-10);
        }
    }

    #[test]
    fn marginal_independent_of_remote_setting() {
        let rho =
            DensityMatrix::new(DensityMatrix::singlet().0 * c(0.7) + hh().0 * c(0.3)).unwrap();
        for a in [0.0, 0.4, 1.3] {
            let pa: Vec<f64> = [0.0, 0.5, 1.0, 2.0]
                .iter()
                .map(|&b| {
                    let p = joint_outcome_probabilities(&rho, a, b).unwrap();
                    p[0][0] + p[0][1]
                })
                .collect();
            assert!(pa.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        }
    }

    #[test]
    fn chsh_examples() {
        let s = DensityMatrix::singlet();
        let v = chsh_value(&s, ChshAngles::tsirelson()).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        let v = chsh_value(&s, ChshAngles::new(0.3, 0.3, 1.0, 1.0)).unwrap();
        let e = pair_correlation(&s, 0.3, 1.0).unwrap();
        assert!((v - 2.0 * e.abs()).abs() < 1e-12 && v <= 2.0);
    }

    #[test]
    fn invalid_states_rejected() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(DensityMatrix::new(bad).is_err());
        let non_herm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.3), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(3, 3) * c(1.0 / 3.0)).is_err());
        assert!(Observable::new(CMatrix::identity(2, 2) * c(2.0)).is_err());
    }

    #[test]
    fn sampled_singlet_matches_closed_form() {
        let rng = derive_stream(9, "oracle-sample");
        let rho = DensityMatrix::singlet();
        for (a, b, sigma) in [(0.0, PI / 8.0, 0.0), (0.2, 1.0, 0.0), (0.0, PI / 8.0, 0.2)] {
            let n = 200_000;
            let (ea, eb) = quantum_simulate(&rho, SettingPair::new(a, b), n, sigma, &rng).unwrap();
            let mean = ea
                .iter()
                .zip(&eb)
                .map(|(x, y)| x.outcome.as_f64() * y.outcome.as_f64())
                .sum::<f64>()
                / n as f64;
            let expected = smeared_singlet_correlation(a, b, sigma);
            let se = ((1.0 - expected * expected) / n as f64).sqrt();
            assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
            assert!(ea.iter().all(|e| e.outcome.is_click()));
        }
        assert!(quantum_simulate(&rho, SettingPair::new(0.0, 0.0), 10, -1.0, &rng).is_err());
        let exact = pair_correlation(&rho, 0.3, 0.1).unwrap();
        assert!((smeared_singlet_correlation(0.3, 0.1, 0.0) - exact).abs() < 1e-12);
    }
}
