use std::collections::HashMap;

use qgeo::geometry::HamiltonianField;
use qgeo::models::{canonical_field, ssh_field, CanonicalField, SshField};
use qgeo::oracle::{FdScheme, FdSpec};
use qgeo::{QgeoError, Result, Vec3};

use crate::error::CliError;
use crate::expr::{self, Expr};

/// X(λ) given as three expressions; partials by central differences.
#[derive(Debug, Clone)]
pub struct CustomField {
    names: Vec<String>,
    comps: [Expr; 3],
    fd: FdSpec,
}

impl CustomField {
    pub fn new(names: Vec<String>, src: [&String; 3], fd: FdSpec) -> std::result::Result<Self, CliError> {
        if names.is_empty() {
            return Err(CliError::Config("custom.params: at least one parameter".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if matches!(n.as_str(), "pi" | "e" | "sin" | "cos" | "sqrt") || names[..i].contains(n) {
                return Err(CliError::Config(format!("custom.params: invalid or repeated name '{n}'")));
            }
            if expr::parse(n).ok() != Some(Expr::Var(n.clone())) {
                return Err(CliError::Config(format!("custom.params: '{n}' is not an identifier")));
            }
        }
        let mut comps = Vec::with_capacity(3);
        for (key, s) in ["custom.x", "custom.y", "custom.z"].iter().zip(src) {
            let e = expr::parse(s).map_err(|e| CliError::Config(format!("{key}: {e}")))?;
            if let Some(v) = e.vars().into_iter().find(|v| !names.contains(v)) {
                return Err(CliError::Config(format!("{key}: unknown name '{v}'")));
            }
            comps.push(e);
        }
        let comps: [Expr; 3] = comps.try_into().expect("three components");
        Ok(Self { names, comps, fd })
    }

    fn at(&self, p: &[f64]) -> Result<Vec3> {
        if p.len() != self.names.len() {
            return Err(QgeoError::Domain(format!("expected {} parameters, got {}", self.names.len(), p.len())));
        }
        let vars: HashMap<String, f64> = self.names.iter().cloned().zip(p.iter().copied()).collect();
        let mut out = [0.0; 3];
        for (o, e) in out.iter_mut().zip(&self.comps) {
            *o = e.eval(&vars).map_err(QgeoError::Domain)?;
        }
        let v = Vec3::new(out[0], out[1], out[2]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QgeoError::Domain(format!("custom field is not finite at {p:?}")))
        }
    }

    fn central(&self, p: &[f64], i: usize, h: f64) -> Result<Vec3> {
        let mut up = p.to_vec();
        let mut dn = p.to_vec();
        up[i] += h;
        dn[i] -= h;
        Ok((self.at(&up)? - self.at(&dn)?) * (0.5 / h))
    }
}

impl HamiltonianField for CustomField {
    fn names(&self) -> &[String] {
        &self.names
    }

    fn eval(&self, p: &[f64]) -> Result<Vec3> {
        self.at(p)
    }

    fn partial(&self, p: &[f64], index: usize) -> Result<Vec3> {
        if index >= self.names.len() {
            return Err(QgeoError::Domain(format!("parameter index {index} out of range")));
        }
        let h = self.fd.step();
        let d = self.central(p, index, h)?;
        Ok(match self.fd.scheme() {
            FdScheme::Central => d,
            FdScheme::Richardson => (self.central(p, index, 0.5 * h)? * 4.0 - d) * (1.0 / 3.0),
        })
    }
}

pub enum AnyField {
    Canonical(CanonicalField),
    Ssh(SshField),
    Custom(CustomField),
}

impl AnyField {
    pub fn canonical(h0: f64) -> Self {
        AnyField::Canonical(canonical_field(h0))
    }

    pub fn ssh() -> Self {
        AnyField::Ssh(ssh_field())
    }

    pub fn param_names(&self) -> Vec<String> {
        self.names().to_vec()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| n == name)
    }

    /// Unit label for a parameter: angles in rad, SSH hoppings in H₀.
    pub fn unit(&self, i: usize) -> &'static str {
        match (self, self.names()[i].as_str()) {
            (AnyField::Custom(_), _) => "1",
            (_, "theta" | "phi" | "k") => "rad",
            (AnyField::Ssh(_), _) => "H0",
            _ => "1",
        }
    }
}

impl HamiltonianField for AnyField {
    fn names(&self) -> &[String] {
        match self {
            AnyField::Canonical(f) => f.names(),
            AnyField::Ssh(f) => f.names(),
            AnyField::Custom(f) => f.names(),
        }
    }

    fn eval(&self, p: &[f64]) -> Result<Vec3> {
        match self {
            AnyField::Canonical(f) => f.eval(p),
            AnyField::Ssh(f) => f.eval(p),
            AnyField::Custom(f) => f.eval(p),
        }
    }

    fn partial(&self, p: &[f64], index: usize) -> Result<Vec3> {
        match self {
            AnyField::Canonical(f) => f.partial(p, index),
            AnyField::Ssh(f) => f.partial(p, index),
            AnyField::Custom(f) => f.partial(p, index),
        }
    }
}
