//! JSON barrier files: `{"schema": 1, "family": ..., "params": {...}, "horizon": T}`.
//! A time-inverted barrier nests its base as `"params": {"base": {"family": ..., "params": {...}}}`.

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::barriers::{BarrierSpec, Family};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    schema: u32,
    family: String,
    params: Value,
    horizon: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AB {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Abn {
    a: f64,
    b: f64,
    n: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Abc {
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Nested {
    family: String,
    params: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Inverted {
    base: Nested,
}

fn params<T: DeserializeOwned>(family: &str, v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(format!("bad params for {family}: {e}")))
}

/// Builds a barrier from a family name and its JSON parameters.
pub fn spec_from_parts(family: &str, p: Value, horizon: f64) -> Result<BarrierSpec> {
    match family {
        "linear" => params::<AB>(family, p).and_then(|q| BarrierSpec::linear(q.a, q.b, horizon)),
        "sqrt-remaining" => params::<AB>(family, p).and_then(|q| BarrierSpec::sqrt_remaining(q.a, q.b, horizon)),
        "log-remaining" => params::<AB>(family, p).and_then(|q| BarrierSpec::log_remaining(q.a, q.b, horizon)),
        "hermite" => params::<Abn>(family, p).and_then(|q| BarrierSpec::hermite(q.a, q.b, q.n, horizon)),
        "two-sided-constant" => {
            params::<AB>(family, p).and_then(|q| BarrierSpec::two_sided_constant(q.a, q.b, horizon))
        }
        "two-sided-curved" => {
            params::<Abc>(family, p).and_then(|q| BarrierSpec::two_sided_curved(q.a, q.b, q.c, horizon))
        }
        "images-lambert" => params::<AB>(family, p).and_then(|q| BarrierSpec::images_lambert(q.a, q.b, horizon)),
        "time-inverted" => {
            let q = params::<Inverted>(family, p)?;
            if q.base.family == "time-inverted" {
                return Err(Error::Parse("a time-inverted base must not itself be time-inverted".into()));
            }
            BarrierSpec::time_inverted(spec_from_parts(&q.base.family, q.base.params, horizon)?)
        }
        other => Err(Error::Parse(format!("unknown family '{other}'"))),
    }
}

/// Parses a schema-1 barrier file.
pub fn parse_spec_json(text: &str) -> Result<BarrierSpec> {
    let f: SpecFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("bad barrier file: {e}")))?;
    if f.schema != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "unsupported barrier schema {} (this build reads schema {SCHEMA_VERSION})",
            f.schema
        )));
    }
    spec_from_parts(&f.family, f.params, f.horizon)
}

fn params_of(family: &Family) -> Value {
    match family {
        Family::Linear { a, b }
        | Family::SqrtRemaining { a, b }
        | Family::LogRemaining { a, b }
        | Family::TwoSidedConstant { a, b }
        | Family::ImagesLambert { a, b } => json!({ "a": a, "b": b }),
        Family::Hermite { a, b, n } => json!({ "a": a, "b": b, "n": n }),
        Family::TwoSidedCurved { a, b, c } => json!({ "a": a, "b": b, "c": c }),
        Family::TimeInverted { base } => json!({
            "base": { "family": base.family().name(), "params": params_of(base.family()) }
        }),
    }
}

/// The schema-1 JSON form of a barrier; [`parse_spec_json`] inverts it.
pub fn spec_to_json(spec: &BarrierSpec) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "family": spec.family().name(),
        "params": params_of(spec.family()),
        "horizon": spec.horizon(),
    })
}
