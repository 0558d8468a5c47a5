use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnexpr::Expr;

/// Whether a family is read at arbitrary nonnegative times or only at
/// nonnegative integers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeDomain {
    #[default]
    Continuous,
    Discrete,
}

impl TimeDomain {
    pub fn admits(self, t: f64) -> bool {
        match self {
            TimeDomain::Continuous => t.is_finite(),
            TimeDomain::Discrete => t >= 0.0 && t.fract() == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamBody {
    Expr(Expr),
    /// `exp(-rate * t)`
    ExpDecay(f64),
    /// `base^(-t)`
    PowDecay(f64),
    Constant(f64),
}

/// A real function of time used as a family parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFn {
    body: ParamBody,
    domain: TimeDomain,
}

impl ParamFn {
    pub fn new(body: ParamBody, domain: TimeDomain) -> Self {
        Self { body, domain }
    }

    pub fn expr(text: &str) -> Result<Self> {
        Ok(Self::new(ParamBody::Expr(Expr::parse(text)?), TimeDomain::Continuous))
    }

    pub fn exp_decay(rate: f64) -> Self {
        Self::new(ParamBody::ExpDecay(rate), TimeDomain::Continuous)
    }

    pub fn pow_decay(base: f64) -> Self {
        Self::new(ParamBody::PowDecay(base), TimeDomain::Continuous)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(ParamBody::Constant(c), TimeDomain::Continuous)
    }

    pub fn discrete(mut self) -> Self {
        self.domain = TimeDomain::Discrete;
        self
    }

    pub fn with_domain(mut self, domain: TimeDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn body(&self) -> &ParamBody {
        &self.body
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.domain.admits(t) {
            return Err(Error::Parameter(format!(
                "{self} is defined on nonnegative integers only, got t = {t}"
            )));
        }
        let value = match &self.body {
            ParamBody::Expr(e) => e.eval(t)?,
            ParamBody::ExpDecay(rate) => (-rate * t).exp(),
            ParamBody::PowDecay(base) => base.powf(-t),
            ParamBody::Constant(c) => *c,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Parameter(format!("{self} is not finite at t = {t}")))
        }
    }
}

impl fmt::Display for ParamFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            ParamBody::Expr(e) => write!(f, "{e}"),
            ParamBody::ExpDecay(rate) => write!(f, "exp(-{rate} * t)"),
            ParamBody::PowDecay(base) => write!(f, "{base}^-t"),
            ParamBody::Constant(c) => write!(f, "{c}"),
        }
    }
}
