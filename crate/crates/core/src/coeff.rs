//! System specifications: variant, coefficient set, hypothesis checks and the
//! line-oriented spec file format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::expr::{parse_constant, PeriodicExpr};

/// Grid used for the pointwise sign checks.
pub const HYPOTHESIS_GRID: usize = 4096;

/// Threshold above which a period integral counts as "not identically zero".
pub const NONZERO_INTEGRAL: f64 = 1e-9;

/// Shape of the functional response `p(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemVariant {
    /// Leslie–Gower, `p(x) = μx`.
    S1,
    /// Holling–Tanner, `p(x) = μx/(α+x)`.
    S2,
    /// Type-3 response, `p(x) = μx²/((α+x)(β+x))`.
    S3,
}

impl SystemVariant {
    pub fn coefficients(self) -> &'static [Coefficient] {
        use Coefficient::*;
        match self {
            SystemVariant::S1 => &[Rho, Kappa, Mu, Sigma, Eta],
            SystemVariant::S2 => &[Rho, Kappa, Mu, Alpha, Sigma, Eta],
            SystemVariant::S3 => &[Rho, Kappa, Mu, Alpha, Beta, Sigma, Eta],
        }
    }
}

impl fmt::Display for SystemVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemVariant::S1 => "S1",
            SystemVariant::S2 => "S2",
            SystemVariant::S3 => "S3",
        })
    }
}

impl FromStr for SystemVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "S1" | "s1" => Ok(SystemVariant::S1),
            "S2" | "s2" => Ok(SystemVariant::S2),
            "S3" | "s3" => Ok(SystemVariant::S3),
            other => Err(Error::InvalidSystem(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coefficient {
    Rho,
    Kappa,
    Mu,
    Alpha,
    Beta,
    Sigma,
    Eta,
}

impl Coefficient {
    pub const ALL: [Coefficient; 7] = [
        Coefficient::Rho,
        Coefficient::Kappa,
        Coefficient::Mu,
        Coefficient::Alpha,
        Coefficient::Beta,
        Coefficient::Sigma,
        Coefficient::Eta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::Rho => "rho",
            Coefficient::Kappa => "kappa",
            Coefficient::Mu => "mu",
            Coefficient::Alpha => "alpha",
            Coefficient::Beta => "beta",
            Coefficient::Sigma => "sigma",
            Coefficient::Eta => "eta",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Coefficient::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Constant delays `(τx, τy)` of the delayed Holling–Tanner system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delays {
    pub tau_x: f64,
    pub tau_y: f64,
}

impl Delays {
    pub fn new(tau_x: f64, tau_y: f64) -> Result<Self> {
        if !(tau_x.is_finite() && tau_y.is_finite() && tau_x >= 0.0 && tau_y >= 0.0) {
            return Err(Error::InvalidSystem(format!("delays must be finite and nonnegative, got ({tau_x}, {tau_y})")));
        }
        Ok(Delays { tau_x, tau_y })
    }
}

/// The coefficients of one system variant, all sharing the period `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    variant: SystemVariant,
    omega: f64,
    exprs: BTreeMap<Coefficient, PeriodicExpr>,
    delays: Option<Delays>,
}

impl CoefficientSet {
    /// Assembles a set, checking that exactly the variant's coefficients are
    /// present and all of them carry period `omega`.
    pub fn new(
        variant: SystemVariant,
        omega: f64,
        exprs: BTreeMap<Coefficient, PeriodicExpr>,
        delays: Option<Delays>,
    ) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidPeriod(omega));
        }
        let wanted = variant.coefficients();
        for c in wanted {
            match exprs.get(c) {
                None => return Err(Error::InvalidSystem(format!("missing coefficient {c}"))),
                Some(e) if e.period() != omega => {
                    return Err(Error::InvalidSystem(format!(
                        "coefficient {c} has period {} but the system period is {omega}",
                        e.period()
                    )))
                }
                _ => {}
            }
        }
        if let Some(extra) = exprs.keys().find(|c| !wanted.contains(c)) {
            return Err(Error::InvalidSystem(format!("coefficient {extra} is not used by variant {variant}")));
        }
        if delays.is_some() && variant != SystemVariant::S2 {
            return Err(Error::InvalidSystem(format!("delays are only supported for S2, not {variant}")));
        }
        Ok(CoefficientSet { variant, omega, exprs, delays })
    }

    /// Parses `(name, text)` pairs, e.g. `("rho", "1+sin(5*t)")`.
    pub fn parse(variant: SystemVariant, omega: f64, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut exprs = BTreeMap::new();
        for (name, text) in pairs {
            let c = Coefficient::from_name(name)
                .ok_or_else(|| Error::InvalidSystem(format!("unknown coefficient '{name}'")))?;
            if exprs.insert(c, PeriodicExpr::parse(text, omega)?).is_some() {
                return Err(Error::InvalidSystem(format!("duplicate coefficient {c}")));
            }
        }
        CoefficientSet::new(variant, omega, exprs, None)
    }

    /// Every coefficient of `variant` set to the constant `value`.
    pub fn constant(variant: SystemVariant, omega: f64, value: f64) -> Result<Self> {
        let mut exprs = BTreeMap::new();
        for &c in variant.coefficients() {
            exprs.insert(c, PeriodicExpr::constant(value, omega)?);
        }
        CoefficientSet::new(variant, omega, exprs, None)
    }

    /// Replaces one coefficient.
    pub fn with(mut self, name: &str, text: &str) -> Result<Self> {
        let c = Coefficient::from_name(name)
            .ok_or_else(|| Error::InvalidSystem(format!("unknown coefficient '{name}'")))?;
        self.exprs.insert(c, PeriodicExpr::parse(text, self.omega)?);
        CoefficientSet::new(self.variant, self.omega, self.exprs, self.delays)
    }

    pub fn with_delays(self, tau_x: f64, tau_y: f64) -> Result<Self> {
        let delays = Some(Delays::new(tau_x, tau_y)?);
        CoefficientSet::new(self.variant, self.omega, self.exprs, delays)
    }

    pub fn without_delays(mut self) -> Self {
        self.delays = None;
        self
    }

    pub fn variant(&self) -> SystemVariant {
        self.variant
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn delays(&self) -> Option<Delays> {
        self.delays
    }

    pub fn get(&self, c: Coefficient) -> Option<&PeriodicExpr> {
        self.exprs.get(&c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coefficient, &PeriodicExpr)> {
        self.exprs.iter().map(|(c, e)| (*c, e))
    }

    pub fn rho(&self) -> &PeriodicExpr {
        &self.exprs[&Coefficient::Rho]
    }

    pub fn kappa(&self) -> &PeriodicExpr {
        &self.exprs[&Coefficient::Kappa]
    }

    pub fn mu(&self) -> &PeriodicExpr {
        &self.exprs[&Coefficient::Mu]
    }

    pub fn alpha(&self) -> Option<&PeriodicExpr> {
        self.exprs.get(&Coefficient::Alpha)
    }

    pub fn beta(&self) -> Option<&PeriodicExpr> {
        self.exprs.get(&Coefficient::Beta)
    }

    pub fn sigma(&self) -> &PeriodicExpr {
        &self.exprs[&Coefficient::Sigma]
    }

    pub fn eta(&self) -> &PeriodicExpr {
        &self.exprs[&Coefficient::Eta]
    }

    /// All coefficients evaluated at `t`. Missing ones read as zero.
    #[inline]
    pub fn values(&self, t: f64) -> CoefficientValues {
        let v = |c| self.exprs.get(&c).map_or(0.0, |e: &PeriodicExpr| e.value(t));
        CoefficientValues {
            rho: v(Coefficient::Rho),
            kappa: v(Coefficient::Kappa),
            mu: v(Coefficient::Mu),
            alpha: v(Coefficient::Alpha),
            beta: v(Coefficient::Beta),
            sigma: v(Coefficient::Sigma),
            eta: v(Coefficient::Eta),
        }
    }

    /// Parses the line-oriented spec file format.
    ///
    /// ```text
    /// # Holling-Tanner
    /// variant = S2
    /// omega = 2*pi
    /// rho = 1+sin(5*t)
    /// ...
    /// tau_x = 0.5
    /// ```
    pub fn from_spec_str(text: &str) -> Result<Self> {
        let mut variant = None;
        let mut omega = None;
        let mut taus: [Option<f64>; 2] = [None, None];
        let mut raw: Vec<(usize, Coefficient, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::SpecFile { line: line_no, msg };
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| err("expected 'key = value'".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("missing value for '{key}'")));
            }
            let dup = || err(format!("duplicate key '{key}'"));
            match key {
                "variant" => {
                    if variant.replace(value.parse::<SystemVariant>().map_err(|e| err(e.to_string()))?).is_some() {
                        return Err(dup());
                    }
                }
                "omega" => {
                    let w = parse_constant(value).map_err(|e| err(e.to_string()))?;
                    if omega.replace(w).is_some() {
                        return Err(dup());
                    }
                }
                "tau_x" | "tau_y" => {
                    let v = parse_constant(value).map_err(|e| err(e.to_string()))?;
                    let slot = &mut taus[usize::from(key == "tau_y")];
                    if slot.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                _ => match Coefficient::from_name(key) {
                    Some(c) => {
                        if raw.iter().any(|(_, k, _)| *k == c) {
                            return Err(dup());
                        }
                        raw.push((line_no, c, value.to_string()));
                    }
                    None => return Err(err(format!("unknown key '{key}'"))),
                },
            }
        }
        let variant = variant.ok_or(Error::SpecFile { line: 0, msg: "missing 'variant'".into() })?;
        let omega = omega.ok_or(Error::SpecFile { line: 0, msg: "missing 'omega'".into() })?;
        let mut exprs = BTreeMap::new();
        for (line, c, text) in raw {
            let e =
                PeriodicExpr::parse(&text, omega).map_err(|e| Error::SpecFile { line, msg: format!("{c}: {e}") })?;
            exprs.insert(c, e);
        }
        let delays = match taus {
            [None, None] => None,
            [x, y] => Some(Delays::new(x.unwrap_or(0.0), y.unwrap_or(0.0))?),
        };
        CoefficientSet::new(variant, omega, exprs, delays)
    }

    /// Writes the set back in spec file form.
    pub fn to_spec_string(&self) -> String {
        let mut out = format!("variant = {}\nomega = {}\n", self.variant, self.omega);
        for (c, e) in self.iter() {
            out.push_str(&format!("{c} = {e}\n"));
        }
        if let Some(d) = self.delays {
            out.push_str(&format!("tau_x = {}\ntau_y = {}\n", d.tau_x, d.tau_y));
        }
        out
    }

    /// Checks the sign and non-degeneracy hypotheses of the existence theorems.
    pub fn verify_hypotheses(&self) -> Result<HypothesisReport> {
        let n = HYPOTHESIS_GRID;
        let ts: Vec<f64> = (0..n).map(|j| j as f64 * self.omega / n as f64).collect();
        let mut coefficients = Vec::new();
        let mut failures = Vec::new();
        for (c, e) in self.iter() {
            let samples = e.sample(n)?;
            let (jmin, vmin) = argmin(&samples);
            let nonnegative = vmin >= -SIGN_SLACK;
            let integral = e.mean_integral()?;
            let nonzero = integral > NONZERO_INTEGRAL;
            if !nonnegative {
                failures.push(Diagnosis::new(format!("{c} is negative somewhere"), ts[jmin], vmin));
            }
            if !nonzero {
                failures.push(Diagnosis::new(format!("{c} is identically zero"), 0.0, integral));
            }
            coefficients.push(CoefficientCheck {
                coefficient: c,
                nonnegative,
                not_identically_zero: nonzero,
                min: vmin,
            });
        }

        let product: Vec<&PeriodicExpr> = match self.variant {
            SystemVariant::S1 => vec![self.kappa()],
            SystemVariant::S2 => vec![self.alpha().unwrap(), self.kappa()],
            SystemVariant::S3 => vec![self.alpha().unwrap(), self.beta().unwrap(), self.kappa()],
        };
        let product_label = match self.variant {
            SystemVariant::S1 => "kappa",
            SystemVariant::S2 => "alpha*kappa",
            SystemVariant::S3 => "alpha*beta*kappa",
        };
        let mut prod_min = f64::INFINITY;
        let mut prod_at = 0.0;
        for &t in &ts {
            let mut v = 1.0;
            for e in &product {
                v *= e.eval(t)?;
            }
            if v < prod_min {
                prod_min = v;
                prod_at = t;
            }
        }
        let product_positive = prod_min > 0.0;
        if !product_positive {
            failures.push(Diagnosis::new(format!("{product_label} > 0 fails"), prod_at, prod_min));
        }

        let sigma_eta = {
            let (s, e) = (self.sigma().clone(), self.eta().clone());
            let rule = crate::quadrature::GaussLegendre::new(8);
            let panels = 1024;
            let h = self.omega / panels as f64;
            let mut total = 0.0;
            for p in 0..panels {
                let a = p as f64 * h;
                for (x, w) in rule.mapped(a, a + h) {
                    total += w * s.eval(x)? * e.eval(x)?;
                }
            }
            total
        };
        let sigma_eta_nonzero = sigma_eta > NONZERO_INTEGRAL;
        if !sigma_eta_nonzero {
            failures.push(Diagnosis::new("sigma*eta is identically zero".into(), 0.0, sigma_eta));
        }

        let pass = failures.is_empty();
        Ok(HypothesisReport {
            variant: self.variant,
            coefficients,
            product_label,
            product_min: prod_min,
            product_positive,
            sigma_eta_integral: sigma_eta,
            sigma_eta_nonzero,
            pass,
            failures,
        })
    }
}

// Samples this far below zero are treated as rounding noise in the sign check.
const SIGN_SLACK: f64 = 1e-14;

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (j, x)| if x < acc.1 { (j, x) } else { acc })
}

/// Coefficient values at a single instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoefficientValues {
    pub rho: f64,
    pub kappa: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCheck {
    pub coefficient: Coefficient,
    pub nonnegative: bool,
    pub not_identically_zero: bool,
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub check: String,
    pub t: f64,
    pub value: f64,
}

impl Diagnosis {
    fn new(check: String, t: f64, value: f64) -> Self {
        Diagnosis { check, t, value }
    }
}

/// Outcome of [`CoefficientSet::verify_hypotheses`].
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub variant: SystemVariant,
    pub coefficients: Vec<CoefficientCheck>,
    pub product_label: &'static str,
    /// Grid minimum of the product condition (κ, ακ or αβκ).
    pub product_min: f64,
    pub product_positive: bool,
    pub sigma_eta_integral: f64,
    pub sigma_eta_nonzero: bool,
    /// Conjunction of every individual flag.
    pub pass: bool,
    pub failures: Vec<Diagnosis>,
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variant {}", self.variant)?;
        for c in &self.coefficients {
            writeln!(
                f,
                "  {:<6} nonnegative={:<5} not_identically_zero={:<5} min={:.16e}",
                c.coefficient.name(),
                c.nonnegative,
                c.not_identically_zero,
                c.min
            )?;
        }
        writeln!(f, "  {} > 0: {} (min {:.16e})", self.product_label, self.product_positive, self.product_min)?;
        writeln!(
            f,
            "  sigma*eta not identically zero: {} (integral {:.16e})",
            self.sigma_eta_nonzero, self.sigma_eta_integral
        )?;
        for d in &self.failures {
            writeln!(f, "  FAILED: {} (t = {:.6}, value = {:.6e})", d.check, d.t, d.value)?;
        }
        write!(f, "hypotheses {}", if self.pass { "PASS" } else { "FAIL" })
    }
}
