//! JSON model documents: built-ins by name, or polynomial systems with
//! matrices affine in μ.

use super::{
    builtin_epidemic, DelayParam, Epidemic, LinearPart, Model, ModelError, Param, PredatorPrey,
};
use crate::linalg::{CVec, RMat, C64};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelDoc {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Table(TableModel),
}

/// `base + slope[0] μ1 + slope[1] μ2`, stored flat (matrices row-major).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Affine {
    pub base: Vec<f64>,
    #[serde(default)]
    pub slope: Option<[Vec<f64>; 2]>,
}

impl Affine {
    fn eval(&self, mu: Param) -> Vec<f64> {
        match &self.slope {
            None => self.base.clone(),
            Some([s1, s2]) => self
                .base
                .iter()
                .zip(s1.iter().zip(s2))
                .map(|(b, (x, y))| b + x * mu[0] + y * mu[1])
                .collect(),
        }
    }

    fn derivative(&self, i: usize) -> Vec<f64> {
        match &self.slope {
            None => vec![0.0; self.base.len()],
            Some(s) => s[i].clone(),
        }
    }

    fn check(&self, len: usize, what: &str) -> Result<(), ModelError> {
        let bad = self.base.len() != len
            || self
                .slope
                .as_ref()
                .is_some_and(|s| s[0].len() != len || s[1].len() != len);
        if bad {
            Err(ModelError::Document(format!("{what}: expected {len} entries")))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DelaySpec {
    Param { param: usize },
    Value { value: f64 },
}

/// `coef · Π u_comp(t − r_slot)`, slot 0 meaning the current time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Monomial {
    pub out: usize,
    pub factors: Vec<[usize; 2]>,
    pub coef: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableModel {
    pub name: String,
    pub dim: usize,
    pub scale: f64,
    pub param_names: [String; 2],
    pub delays: Vec<DelaySpec>,
    pub diffusion: Affine,
    pub a: Affine,
    #[serde(default)]
    pub g: Vec<Affine>,
    #[serde(default)]
    pub terms: Vec<Monomial>,
}

impl TableModel {
    pub fn check(&self) -> Result<(), ModelError> {
        let n = self.dim;
        self.diffusion.check(n, "diffusion")?;
        self.a.check(n * n, "a")?;
        if self.g.len() != self.delays.len() {
            return Err(ModelError::Document(
                "one delayed matrix per delay required".into(),
            ));
        }
        for (k, g) in self.g.iter().enumerate() {
            g.check(n * n, &format!("g[{k}]"))?;
        }
        for d in &self.delays {
            if let DelaySpec::Param { param } = d {
                if *param > 1 {
                    return Err(ModelError::Document("delay parameter index > 1".into()));
                }
            }
        }
        for t in &self.terms {
            let deg = t.factors.len();
            if !(2..=3).contains(&deg) {
                return Err(ModelError::Document(format!(
                    "monomial degree {deg} unsupported"
                )));
            }
            if t.out >= n
                || t
                    .factors
                    .iter()
                    .any(|[c, s]| *c >= n || *s > self.delays.len())
            {
                return Err(ModelError::Document("monomial index out of range".into()));
            }
        }
        Ok(())
    }

    fn mat(&self, v: Vec<f64>) -> RMat {
        RMat::from_row_slice(self.dim, self.dim, &v)
    }

    fn degree_terms(&self, deg: usize) -> impl Iterator<Item = &Monomial> {
        self.terms.iter().filter(move |t| t.factors.len() == deg)
    }
}

impl Model for TableModel {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn param_names(&self) -> [String; 2] {
        self.param_names.clone()
    }

    fn delays(&self, mu: Param) -> Vec<f64> {
        self.delays
            .iter()
            .map(|d| match d {
                DelaySpec::Param { param } => mu[*param],
                DelaySpec::Value { value } => *value,
            })
            .collect()
    }

    fn diffusion(&self, mu: Param) -> Vec<f64> {
        self.diffusion.eval(mu)
    }

    fn linear(&self, mu: Param) -> LinearPart {
        LinearPart {
            a: self.mat(self.a.eval(mu)),
            g: self.g.iter().map(|g| self.mat(g.eval(mu))).collect(),
        }
    }

    fn reaction(&self, _mu: Param, hist: &[&[f64]], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for t in &self.terms {
            out[t.out] += t.coef * t.factors.iter().map(|[c, s]| hist[*s][*c]).product::<f64>();
        }
    }

    fn tensor2(&self, _mu: Param, a: &[CVec], b: &[CVec]) -> CVec {
        let mut v = CVec::zeros(self.dim);
        for t in self.degree_terms(2) {
            let [[c0, s0], [c1, s1]] = [t.factors[0], t.factors[1]];
            v[t.out] += t.coef * (a[s0][c0] * b[s1][c1] + a[s1][c1] * b[s0][c0]);
        }
        v
    }

    fn tensor3(&self, _mu: Param, a: &[CVec], b: &[CVec], c: &[CVec]) -> CVec {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let args = [a, b, c];
        let mut v = CVec::zeros(self.dim);
        for t in self.degree_terms(3) {
            let mut s = C64::new(0.0, 0.0);
            for p in PERMS {
                s += (0..3)
                    .map(|j| {
                        let [comp, slot] = t.factors[j];
                        args[p[j]][slot][comp]
                    })
                    .product::<C64>();
            }
            v[t.out] += t.coef * s;
        }
        v
    }

    fn param_derivative(&self, _mu: Param, i: usize) -> Option<(Vec<f64>, LinearPart)> {
        Some((
            self.diffusion.derivative(i),
            LinearPart {
                a: self.mat(self.a.derivative(i)),
                g: self.g.iter().map(|g| self.mat(g.derivative(i))).collect(),
            },
        ))
    }

    fn delay_param(&self) -> Option<DelayParam> {
        let tied: Vec<(usize, usize)> = self
            .delays
            .iter()
            .enumerate()
            .filter_map(|(k, d)| match d {
                DelaySpec::Param { param } => Some((k, *param)),
                _ => None,
            })
            .collect();
        match tied.as_slice() {
            [(k, p)] => {
                let untouched = |a: &Affine| a.slope.as_ref().is_none_or(|s| s[*p].iter().all(|x| *x == 0.0));
                if untouched(&self.diffusion) && untouched(&self.a) && self.g.iter().all(untouched) {
                    Some(DelayParam { param: *p, delay: *k })
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

fn get(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

pub fn model_from_doc(doc: ModelDoc) -> Result<Box<dyn Model>, ModelError> {
    match doc {
        ModelDoc::Builtin { builtin, params } => {
            for key in params.keys() {
                let known: &[&str] = match builtin.as_str() {
                    "epidemic" => &["alpha", "d", "mu", "gamma", "beta", "tau", "d1", "d3", "l"],
                    "predprey" => &["r2", "a11", "a12", "a21", "a22", "d1", "d2", "l"],
                    _ => &[],
                };
                if !known.is_empty() && !known.contains(&key.as_str()) {
                    return Err(ModelError::Document(format!(
                        "unknown parameter `{key}` for {builtin}"
                    )));
                }
            }
            match builtin.as_str() {
                "epidemic" => {
                    let p = &params;
                    let m: Epidemic = builtin_epidemic(
                        get(p, "alpha", 2.1),
                        get(p, "d", 0.5),
                        get(p, "mu", 0.5),
                        get(p, "gamma", 0.1),
                        get(p, "beta", 0.3),
                        get(p, "tau", 1.0),
                        get(p, "d1", 0.05),
                        get(p, "d3", 0.06),
                        get(p, "l", 3.0),
                    )?;
                    Ok(Box::new(m))
                }
                "predprey" => {
                    let s = PredatorPrey::standard();
                    let p = &params;
                    Ok(Box::new(PredatorPrey {
                        r2: get(p, "r2", s.r2),
                        a11: get(p, "a11", s.a11),
                        a12: get(p, "a12", s.a12),
                        a21: get(p, "a21", s.a21),
                        a22: get(p, "a22", s.a22),
                        d1: get(p, "d1", s.d1),
                        d2: get(p, "d2", s.d2),
                        l: get(p, "l", s.l),
                    }))
                }
                other => Err(ModelError::UnknownBuiltin(other.into())),
            }
        }
        ModelDoc::Table(t) => {
            t.check()?;
            Ok(Box::new(t))
        }
    }
}

pub fn model_from_json(text: &str) -> Result<Box<dyn Model>, ModelError> {
    let doc: ModelDoc =
        serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))?;
    model_from_doc(doc)
}

pub fn load_model(path: &Path) -> Result<Box<dyn Model>, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Document(format!("{}: {e}", path.display())))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fd_tensor2, fd_tensor3, validate_model};

    const TOY: &str = r#"{
        "name": "toy",
        "dim": 2,
        "scale": 2.0,
        "param_names": ["tau", "k"],
        "delays": [{"param": 0}, {"value": 0.5}],
        "diffusion": {"base": [0.1, 0.3], "slope": [[0, 0], [0, 1]]},
        "a": {"base": [-1, 2, 0.5, -1]},
        "g": [{"base": [-0.5, 0, 0, 0]}, {"base": [0, 0, 0.2, 0]}],
        "terms": [
            {"out": 0, "factors": [[0, 0], [1, 1]], "coef": -1.5},
            {"out": 1, "factors": [[1, 0], [1, 0]], "coef": 0.7},
            {"out": 1, "factors": [[0, 0], [0, 2], [1, 0]], "coef": 2.0}
        ]
    }"#;

    #[test]
    fn parses_and_validates() {
        let m = model_from_json(TOY).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.delays([3.0, 0.1]), vec![3.0, 0.5]);
        assert_eq!(m.diffusion([3.0, 0.1]), vec![0.1, 0.4]);
        assert_eq!(m.delay_param(), Some(DelayParam { param: 0, delay: 0 }));
        assert!(validate_model(m.as_ref(), [3.0, 0.1]).is_valid());
    }

    #[test]
    fn tensors_match_differences() {
        let m = model_from_json(TOY).unwrap();
        let mu = [3.0, 0.1];
        let h = |s: f64| -> Vec<CVec> {
            (0..3)
                .map(|k| {
                    CVec::from_vec(vec![
                        C64::new((s + k as f64).sin(), 0.3 * s),
                        C64::new(0.2 - k as f64 * s, (s * k as f64).cos()),
                    ])
                })
                .collect()
        };
        let (a, b, c) = (h(0.4), h(1.1), h(-0.7));
        let t2 = m.tensor2(mu, &a, &b);
        assert!((&t2 - fd_tensor2(m.as_ref(), mu, &a, &b)).norm() < 1e-6 * (1.0 + t2.norm()));
        let t3 = m.tensor3(mu, &a, &b, &c);
        assert!((&t3 - fd_tensor3(m.as_ref(), mu, &a, &b, &c)).norm() < 1e-5 * (1.0 + t3.norm()));
    }

    #[test]
    fn builtins_by_name() {
        let m = model_from_json(r#"{"builtin": "predprey", "params": {"l": 2.0}}"#).unwrap();
        assert_eq!(m.scale(), 2.0);
        assert!(model_from_json(r#"{"builtin": "nope"}"#).is_err());
        assert!(model_from_json(r#"{"builtin": "epidemic", "params": {"mu": 0.01}}"#).is_err());
    }

    #[test]
    fn bad_shape_rejected() {
        let bad = TOY.replace(r#""base": [-1, 2, 0.5, -1]"#, r#""base": [-1, 2]"#);
        assert!(model_from_json(&bad).is_err());
    }
}
