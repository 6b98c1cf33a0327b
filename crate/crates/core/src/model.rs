//! Closed-form phase-space model of the conditioned two-mode state.
//!
//! Quadrature convention: `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, so the
//! vacuum has variance 1/2 and Wigner function `exp(−x² − p²)/π`. In these
//! units the Gaussian width parameters `a`, `b` equal 1 for the vacuum.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average OPA excess-noise efficiency over the experimental runs.
pub const AVERAGE_GAMMA: f64 = 0.22;
/// Average probability that a herald click is a true subtraction.
pub const AVERAGE_XI: f64 = 0.78;
/// Homodyne detection efficiency.
pub const HOMODYNE_ETA: f64 = 0.70;
/// Homodyne excess noise, as a fraction of shot noise.
pub const HOMODYNE_EXCESS_NOISE: f64 = 0.01;
/// Overall efficiency of the APD channel. Only affects count rates.
pub const APD_EFFICIENCY: f64 = 0.05;

/// Squeezing in dB for a factor-of-two noise reduction (`s = 1/2`).
pub fn nominal_3db() -> f64 {
    10.0 * 2f64.log10()
}

/// Two-mode squeezing variance for a squeezing level in dB.
pub fn s_from_db(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

pub fn db_from_s(s: f64) -> f64 {
    -10.0 * s.log10()
}

/// Full imperfection model of the source and the detection chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Two-mode squeezing variance `e^{−2r}` relative to shot noise.
    pub s: f64,
    /// Pick-off beamsplitter reflectivity.
    pub reflectivity: f64,
    /// Probability that a click heralds a genuine subtraction.
    pub xi: f64,
    /// Relative efficiency of the phase-insensitive excess amplification.
    pub gamma: f64,
    /// Homodyne efficiency.
    pub eta: f64,
    /// Homodyne excess noise (fraction of shot noise).
    pub excess_noise: f64,
    /// APD channel efficiency. Carried for completeness, never used in state math.
    #[serde(default = "default_mu")]
    pub apd_efficiency: f64,
}

fn default_mu() -> f64 {
    APD_EFFICIENCY
}

impl ExperimentParams {
    /// Perfect source and detection at squeezing variance `s`.
    pub fn ideal(s: f64) -> Self {
        Self {
            s,
            reflectivity: 0.0,
            xi: 1.0,
            gamma: 0.0,
            eta: 1.0,
            excess_noise: 0.0,
            apd_efficiency: APD_EFFICIENCY,
        }
    }

    /// Average experimental source imperfections, loss-corrected detection.
    pub fn average_corrected(s: f64, reflectivity: f64) -> Self {
        Self {
            reflectivity,
            xi: AVERAGE_XI,
            gamma: AVERAGE_GAMMA,
            ..Self::ideal(s)
        }
    }

    /// Average experimental imperfections including the measured homodyne losses.
    pub fn average_measured(s: f64, reflectivity: f64) -> Self {
        Self {
            eta: HOMODYNE_ETA,
            excess_noise: HOMODYNE_EXCESS_NOISE,
            ..Self::average_corrected(s, reflectivity)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.s > 0.0 && self.s <= 1.0, "s must lie in (0, 1]"),
            (
                (0.0..1.0).contains(&self.reflectivity),
                "reflectivity must lie in [0, 1)",
            ),
            ((0.0..=1.0).contains(&self.xi), "xi must lie in [0, 1]"),
            (self.gamma >= 0.0 && self.gamma.is_finite(), "gamma must be >= 0"),
            (self.eta > 0.0 && self.eta <= 1.0, "eta must lie in (0, 1]"),
            (
                self.excess_noise >= 0.0 && self.excess_noise.is_finite(),
                "excess noise must be >= 0",
            ),
            (
                (0.0..=1.0).contains(&self.apd_efficiency),
                "APD efficiency must lie in [0, 1]",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::ParamDomain(format!("{msg} ({self:?})")));
            }
        }
        Ok(())
    }

    /// Squeezing parameter `r = −ln(s)/2`.
    pub fn r(&self) -> f64 {
        -0.5 * self.s.ln()
    }

    /// Excess amplifier gain `h = cosh²(γ r)`.
    pub fn gain(&self) -> f64 {
        (self.gamma * self.r()).cosh().powi(2)
    }

    pub fn squeezing_db(&self) -> f64 {
        db_from_s(self.s)
    }

    /// Same state seen through an ideal detector (`η = 1`, `e = 0`).
    pub fn corrected(&self) -> Self {
        Self {
            eta: 1.0,
            excess_noise: 0.0,
            ..*self
        }
    }

    /// The Gaussian state before the pick-off beamsplitter.
    pub fn before_pickoff(&self) -> Self {
        Self {
            reflectivity: 0.0,
            ..*self
        }
    }
}

/// Coefficients of the factorized Wigner function.
///
/// `a`, `b` are the Gaussian widths along x and p; `sub_a`, `sub_b` weight the
/// quadratic photon-subtraction correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub sub_a: f64,
    pub sub_b: f64,
}

impl QuadCoeffs {
    pub const VACUUM: QuadCoeffs = QuadCoeffs {
        a: 1.0,
        b: 1.0,
        sub_a: 0.0,
        sub_b: 0.0,
    };

    /// Exchange the roles of x and p (a quarter-turn phase rotation).
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
            sub_a: self.sub_b,
            sub_b: self.sub_a,
        }
    }

    /// Drop the subtraction weights, leaving the Gaussian part.
    pub fn gaussian(&self) -> Self {
        Self {
            sub_a: 0.0,
            sub_b: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0
            && self.b > 0.0
            && self.sub_a >= 0.0
            && self.sub_b >= 0.0
            && [self.a, self.b, self.sub_a, self.sub_b]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::ParamDomain(format!("invalid coefficients {self:?}")))
        }
    }

    /// Value of the polynomial factor of `W_c` at the origin.
    pub fn origin_factor(&self) -> f64 {
        1.0 - self.sub_a / self.a - self.sub_b / self.b
    }
}

/// Computes `a = a(s)`, `b = a(1/s)`, `A = A(s)`, `B = A(1/s)`.
///
/// The expressions are evaluated in a factored form that stays finite at
/// `s = 1`, where `A` and `B` tend to `η ξ (1−R)/(1+γ²)`.
pub fn coeffs_from_params(params: &ExperimentParams) -> Result<QuadCoeffs> {
    params.validate()?;
    let r = params.r();
    let gr = params.gamma * r;
    let (sinh_r, cosh_r) = (r.sinh(), r.cosh());
    let u = params.eta * (1.0 - params.reflectivity);

    // h·σ + h − 2 for σ = s and σ = 1/s, written with h − 1 = sinh²(γr).
    let g = gr.sinh().powi(2);
    let lin_s = 2.0 * (-r).exp() * (g * cosh_r - sinh_r);
    let lin_inv = 2.0 * r.exp() * (g * cosh_r + sinh_r);

    // (hσ+h−2)² / (h(σ+1/σ)+2h−4) with numerator and denominator divided by 4 sinh²r.
    let (g_over_sinh, ratio) = if r == 0.0 {
        (0.0, params.gamma)
    } else {
        (g / sinh_r, gr.sinh() / sinh_r)
    };
    let den = 1.0 + (ratio * cosh_r).powi(2);
    let sub_s = (-2.0 * r).exp() * (g_over_sinh * cosh_r - 1.0).powi(2) / den;
    let sub_inv = (2.0 * r).exp() * (g_over_sinh * cosh_r + 1.0).powi(2) / den;

    let base = 1.0 + params.excess_noise;
    let coeffs = QuadCoeffs {
        a: base + u * lin_s,
        b: base + u * lin_inv,
        sub_a: u * params.xi * sub_s,
        sub_b: u * params.xi * sub_inv,
    };
    coeffs.validate()?;
    Ok(coeffs)
}

/// A point in single-mode phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }
}

/// Gaussian factor `exp(−x²/a − p²/b)/(π√(ab))`.
pub fn wigner_s(coeffs: &QuadCoeffs, pt: PhasePoint) -> f64 {
    (-pt.x * pt.x / coeffs.a - pt.p * pt.p / coeffs.b).exp() / (PI * (coeffs.a * coeffs.b).sqrt())
}

/// Photon-subtracted factor: Gaussian times an even quadratic polynomial.
pub fn wigner_c(coeffs: &QuadCoeffs, pt: PhasePoint) -> f64 {
    let QuadCoeffs { a, b, sub_a, sub_b } = *coeffs;
    let poly = 2.0 * sub_a / (a * a) * pt.x * pt.x + 2.0 * sub_b / (b * b) * pt.p * pt.p
        + coeffs.origin_factor();
    wigner_s(coeffs, pt) * poly
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Gaussian squeezed factor `W_s`.
    #[serde(rename = "s")]
    Squeezed,
    /// Photon-subtracted factor `W_c`.
    #[serde(rename = "c")]
    Subtracted,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Squeezed => "s",
            Branch::Subtracted => "c",
        }
    }
}

pub fn wigner_branch(coeffs: &QuadCoeffs, branch: Branch, pt: PhasePoint) -> f64 {
    match branch {
        Branch::Squeezed => wigner_s(coeffs, pt),
        Branch::Subtracted => wigner_c(coeffs, pt),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Coordinates `(x₊, p₊, x₋, p₋)`.
    PlusMinus,
    /// Coordinates of the physical modes `(x₁, p₁, x₂, p₂)`.
    OneTwo,
}

/// The conditioned two-mode state `W_s(x₊,p₊)·W_c(x₋,p₋)`.
///
/// The two factors are squeezed along conjugate quadratures: the subtracted
/// mode `−` uses `coeffs` as given (x₋ squeezed when `s < 1`), the Gaussian
/// mode `+` uses the swapped widths. Using the same orientation for both
/// factors would describe a product of identical squeezed states, which
/// carries no entanglement between modes 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTwoModeState {
    pub params: Option<ExperimentParams>,
    pub coeffs: QuadCoeffs,
    pub basis: Basis,
}

impl AnalyticTwoModeState {
    /// Photon-subtracted state for the given parameters.
    pub fn conditioned(params: &ExperimentParams) -> Result<Self> {
        Ok(Self {
            params: Some(*params),
            coeffs: coeffs_from_params(params)?,
            basis: Basis::OneTwo,
        })
    }

    /// Gaussian state before the pick-off beamsplitter (no subtraction, no
    /// pick-off loss, same source and detection parameters).
    pub fn initial(params: &ExperimentParams) -> Result<Self> {
        let before = params.before_pickoff();
        Ok(Self {
            params: Some(before),
            coeffs: coeffs_from_params(&before)?.gaussian(),
            basis: Basis::OneTwo,
        })
    }

    pub fn from_coeffs(coeffs: QuadCoeffs) -> Result<Self> {
        coeffs.validate()?;
        Ok(Self {
            params: None,
            coeffs,
            basis: Basis::OneTwo,
        })
    }

    pub fn with_basis(self, basis: Basis) -> Self {
        Self { basis, ..self }
    }

    /// Coefficients of one factor, oriented as it appears in the two-mode state.
    pub fn factor_coeffs(&self, branch: Branch) -> QuadCoeffs {
        match branch {
            Branch::Squeezed => self.coeffs.swapped().gaussian(),
            Branch::Subtracted => self.coeffs,
        }
    }

    /// Evaluates the Wigner function in the ± coordinates.
    pub fn wigner_pm(&self, plus: PhasePoint, minus: PhasePoint) -> f64 {
        wigner_s(&self.factor_coeffs(Branch::Squeezed), plus)
            * wigner_c(&self.factor_coeffs(Branch::Subtracted), minus)
    }
}

/// Evaluates the two-mode Wigner function in the coordinates of `state.basis`.
pub fn wigner_two_mode(state: &AnalyticTwoModeState, pt1: PhasePoint, pt2: PhasePoint) -> f64 {
    match state.basis {
        Basis::PlusMinus => state.wigner_pm(pt1, pt2),
        Basis::OneTwo => {
            let (plus, minus) = to_plus_minus(pt1, pt2);
            state.wigner_pm(plus, minus)
        }
    }
}

/// `x± = (x₁ ± x₂)/√2`, same for p.
pub fn to_plus_minus(pt1: PhasePoint, pt2: PhasePoint) -> (PhasePoint, PhasePoint) {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    (
        PhasePoint::new(k * (pt1.x + pt2.x), k * (pt1.p + pt2.p)),
        PhasePoint::new(k * (pt1.x - pt2.x), k * (pt1.p - pt2.p)),
    )
}

/// Density of a rotated quadrature `x_θ = x cosθ + p sinθ`.
///
/// Every marginal of the model is `N(0, σ²)·[1 + κ(x²/σ² − 1)]`; κ = 0 for
/// the Gaussian factor and `0 ≤ κ ≤ 1` for physical subtracted states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution1D {
    pub variance: f64,
    pub kappa: f64,
}

impl Distribution1D {
    pub fn pdf(&self, x: f64) -> f64 {
        let z = x * x / self.variance;
        (-0.5 * z).exp() / (2.0 * PI * self.variance).sqrt() * (1.0 + self.kappa * (z - 1.0))
    }

    /// `⟨x²⟩ = σ²(1 + 2κ)`.
    pub fn second_moment(&self) -> f64 {
        self.variance * (1.0 + 2.0 * self.kappa)
    }

    /// `⟨x⁴⟩ = 3σ⁴(1 + 4κ)`.
    pub fn fourth_moment(&self) -> f64 {
        3.0 * self.variance * self.variance * (1.0 + 4.0 * self.kappa)
    }

    /// Exact draw: the density is a mixture of a Gaussian (weight 1−κ) and a
    /// symmetric Maxwell law of scale σ (weight κ).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sigma = self.variance.sqrt();
        let weight = self.kappa.clamp(0.0, 1.0);
        if weight > 0.0 && rng.random::<f64>() < weight {
            let chi2: f64 = (0..3)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * z
                })
                .sum();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * sigma * chi2.sqrt()
        } else {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        }
    }
}

/// Closed-form quadrature distribution of one factor at phase `theta`.
pub fn marginal(coeffs: &QuadCoeffs, which: Branch, theta: f64) -> Distribution1D {
    let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
    let width = coeffs.a * c2 + coeffs.b * s2;
    let kappa = match which {
        Branch::Squeezed => 0.0,
        Branch::Subtracted => (coeffs.sub_a * c2 + coeffs.sub_b * s2) / width,
    };
    Distribution1D {
        variance: 0.5 * width,
        kappa,
    }
}

/// Negativity of the conditioned state in the limit of vanishing squeezing:
/// `(√(C² + (1−C)²) − (1−C))/2` with `C = ξ(1−R)/(1+γ²)`.
pub fn negativity_zero_squeezing_limit(params: &ExperimentParams) -> f64 {
    let c = params.xi * (1.0 - params.reflectivity) / (1.0 + params.gamma * params.gamma);
    ((c * c + (1.0 - c) * (1.0 - c)).sqrt() - (1.0 - c)) / 2.0
}
