//! JSON encoding of forms with a backend tag.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use num::BigRational;
use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::{BumpField, BumpTerm, Field, Form, GridField, GridShape, Phase, TrigPoly};
use crate::error::{Error, Result};
use crate::multiindex::Label;

#[derive(Clone, Debug, PartialEq)]
pub enum AnyForm {
    Trig(Form<TrigPoly>),
    Grid(Form<GridField>),
    Bump(Form<BumpField>),
}

#[derive(Serialize, Deserialize)]
struct TrigTerm {
    freq: Vec<i64>,
    phase: Phase,
    amp: String,
}

#[derive(Serialize, Deserialize)]
struct BumpTermJson {
    center: Vec<f64>,
    width: f64,
    deriv: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Payload {
    Trig { terms: Vec<TrigTerm> },
    Grid { samples: String },
    Bump { bumps: Vec<BumpTermJson> },
}

#[derive(Serialize, Deserialize)]
struct Component {
    label: Label,
    #[serde(flatten)]
    payload: Payload,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    backend: String,
    n: usize,
    #[serde(rename = "N")]
    big_n: usize,
    q: usize,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none", default)]
    p: Option<usize>,
    components: Vec<Component>,
}

fn ser_err(e: impl std::fmt::Display) -> Error {
    Error::Serialization(e.to_string())
}

fn envelope<F: Field>(f: &Form<F>, backend: &str, p: Option<usize>, enc: impl Fn(&F) -> Payload) -> Envelope {
    Envelope {
        backend: backend.into(),
        n: f.source_dim(),
        big_n: f.ambient_dim(),
        q: f.degree(),
        p,
        components: f
            .components()
            .map(|(label, c)| Component {
                label,
                payload: enc(c),
            })
            .collect(),
    }
}

impl AnyForm {
    pub fn to_json(&self) -> serde_json::Value {
        let env = match self {
            AnyForm::Trig(f) => envelope(f, "trig", None, |c| Payload::Trig {
                terms: c
                    .terms()
                    .map(|(freq, phase, a)| TrigTerm {
                        freq: freq.to_vec(),
                        phase,
                        amp: a.to_string(),
                    })
                    .collect(),
            }),
            AnyForm::Grid(f) => envelope(f, "grid", Some(f.field_shape().p), |c| {
                let bytes: Vec<u8> = c.data().iter().flat_map(|v| v.to_le_bytes()).collect();
                Payload::Grid {
                    samples: B64.encode(bytes),
                }
            }),
            AnyForm::Bump(f) => envelope(f, "bump", None, |c| Payload::Bump {
                bumps: c
                    .terms()
                    .map(|(t, coef)| BumpTermJson {
                        center: t.center.iter().map(|v| v.0).collect(),
                        width: t.width.0,
                        deriv: t.deriv.clone(),
                        coef,
                    })
                    .collect(),
            }),
        };
        serde_json::to_value(env).expect("form envelope serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<AnyForm> {
        let env: Envelope = serde_json::from_value(value.clone()).map_err(ser_err)?;
        let (n, big, q) = (env.n, env.big_n, env.q);
        match env.backend.as_str() {
            "trig" => {
                let mut comps = Vec::new();
                for c in env.components {
                    let Payload::Trig { terms } = c.payload else {
                        return Err(ser_err("trig component without `terms`"));
                    };
                    let mut t = TrigPoly::zero(n);
                    for term in terms {
                        if term.freq.len() != n {
                            return Err(ser_err("frequency length differs from n"));
                        }
                        let amp: BigRational = term.amp.parse().map_err(ser_err)?;
                        t.push(term.freq, term.phase, amp);
                    }
                    comps.push((c.label, t));
                }
                Ok(AnyForm::Trig(Form::from_components(n, big, q, n, comps)?))
            }
            "grid" => {
                let p = env.p.ok_or_else(|| ser_err("grid form without `P`"))?;
                let mut comps = Vec::new();
                for c in env.components {
                    let Payload::Grid { samples } = c.payload else {
                        return Err(ser_err("grid component without `samples`"));
                    };
                    let bytes = B64.decode(samples).map_err(ser_err)?;
                    if bytes.len() % 8 != 0 {
                        return Err(ser_err("sample payload is not a whole number of f64"));
                    }
                    let data = bytes
                        .chunks_exact(8)
                        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                        .collect();
                    comps.push((c.label, GridField::from_samples(n, p, data)?));
                }
                Ok(AnyForm::Grid(Form::from_components(n, big, q, GridShape { n, p }, comps)?))
            }
            "bump" => {
                let mut comps = Vec::new();
                for c in env.components {
                    let Payload::Bump { bumps } = c.payload else {
                        return Err(ser_err("bump component without `bumps`"));
                    };
                    let mut f = BumpField::zero(n);
                    for b in bumps {
                        if b.center.len() != n || b.deriv.len() != n {
                            return Err(ser_err("bump term length differs from n"));
                        }
                        f.push(
                            BumpTerm {
                                center: b.center.into_iter().map(OrderedFloat).collect(),
                                width: OrderedFloat(b.width),
                                deriv: b.deriv,
                            },
                            b.coef,
                        );
                    }
                    comps.push((c.label, f));
                }
                Ok(AnyForm::Bump(Form::from_components(n, big, q, n, comps)?))
            }
            other => Err(ser_err(format!("unknown backend `{other}`"))),
        }
    }
}
