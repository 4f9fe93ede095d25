//! Canonical JSON forms. Rationals are `"num/den"` strings in lowest terms
//! with positive denominator; valuations are rationals or `"inf"`. Output
//! uses sorted keys, so identical values serialize to identical bytes.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::galois::{GaloisKernel, KernelTag};
use crate::linalg::KMatrix;
use crate::numfield::{Field, FieldElement, FieldSpec, Valuation, Q};
use crate::pdcosimp::{CosimpConfig, Monomial, PdElement};
use crate::series::TruncSeries;
use crate::stratconn::{LogConnection, Stratification};

pub fn rational_to_string(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn parse_rational(v: &Value, path: &str) -> Result<Q> {
    match v {
        Value::Number(n) => {
            let i = n
                .as_i64()
                .ok_or_else(|| Error::parse(path, "expected an integer or a \"num/den\" string"))?;
            Ok(Q::from_integer(i.into()))
        }
        Value::String(s) => {
            let s = s.trim();
            let (num, den) = match s.split_once('/') {
                Some((n, d)) => (n.trim(), d.trim()),
                None => (s, "1"),
            };
            let num: BigInt = num
                .parse()
                .map_err(|_| Error::parse(path, format!("bad numerator in {s:?}")))?;
            let den: BigInt = den
                .parse()
                .map_err(|_| Error::parse(path, format!("bad denominator in {s:?}")))?;
            if den == BigInt::from(0) {
                return Err(Error::parse(path, "zero denominator"));
            }
            Ok(Q::new(num, den))
        }
        _ => Err(Error::parse(path, "expected a rational")),
    }
}

fn parse_bigint(v: &Value, path: &str) -> Result<BigInt> {
    let q = parse_rational(v, path)?;
    if !q.is_integer() {
        return Err(Error::parse(path, "expected an integer"));
    }
    Ok(q.to_integer())
}

pub fn valuation_to_json(v: &Valuation) -> Value {
    Value::String(v.to_string())
}

pub fn parse_valuation(v: &Value, path: &str) -> Result<Valuation> {
    if v.as_str() == Some("inf") {
        return Ok(Valuation::Infinity);
    }
    parse_rational(v, path).map(Valuation::Finite)
}

fn get<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.as_object()
        .ok_or_else(|| Error::parse(path, "expected an object"))?
        .get(key)
        .ok_or_else(|| Error::parse(path, format!("missing key {key:?}")))
}

fn get_usize(obj: &Value, key: &str, path: &str) -> Result<usize> {
    get(obj, key, path)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::parse(format!("{path}.{key}"), "expected a non-negative integer"))
}

fn get_str<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a str> {
    get(obj, key, path)?
        .as_str()
        .ok_or_else(|| Error::parse(format!("{path}.{key}"), "expected a string"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::parse(path, "expected an array"))
}

/// Parses JSON text, reporting syntax errors by line and column.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string()
                .split(" at line ")
                .next()
                .unwrap_or_default()
                .to_string(),
        )
    })
}

pub fn field_to_json(f: &FieldSpec) -> Value {
    let coeffs: Vec<Value> = f
        .ecoeffs()
        .iter()
        .map(|c| match i64::try_from(c) {
            Ok(i) => json!(i),
            Err(_) => json!(c.to_string()),
        })
        .collect();
    let p = match i64::try_from(f.p()) {
        Ok(i) => json!(i),
        Err(_) => json!(f.p().to_string()),
    };
    json!({ "p": p, "E": coeffs })
}

pub fn field_from_json(v: &Value, path: &str) -> Result<Field> {
    let p = parse_bigint(get(v, "p", path)?, &format!("{path}.p"))?;
    let epath = format!("{path}.E");
    let coeffs = array(get(v, "E", path)?, &epath)?
        .iter()
        .enumerate()
        .map(|(i, c)| parse_bigint(c, &format!("{epath}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    FieldSpec::new(p, coeffs)
}

pub fn element_to_json(x: &FieldElement) -> Value {
    Value::Array(
        x.coords()
            .iter()
            .map(|c| Value::String(rational_to_string(c)))
            .collect(),
    )
}

/// A coordinate array, or a bare rational for elements of `Q`.
pub fn element_from_json(field: &Field, v: &Value, path: &str) -> Result<FieldElement> {
    match v {
        Value::Array(items) => {
            if items.len() != field.e() {
                return Err(Error::parse(
                    path,
                    format!("expected {} coordinates, got {}", field.e(), items.len()),
                ));
            }
            let coords = items
                .iter()
                .enumerate()
                .map(|(i, c)| parse_rational(c, &format!("{path}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            FieldElement::from_coords(field, coords)
        }
        _ => Ok(FieldElement::from_rational(field, parse_rational(v, path)?)),
    }
}

pub fn series_to_json(s: &TruncSeries) -> Value {
    json!({
        "unif": s.unif(),
        "m": s.modulus(),
        "coeffs": s.coeffs().iter().map(element_to_json).collect::<Vec<_>>(),
    })
}

pub fn series_from_json(field: &Field, v: &Value, path: &str) -> Result<TruncSeries> {
    let unif = get_str(v, "unif", path)?;
    let m = get_usize(v, "m", path)?;
    let cpath = format!("{path}.coeffs");
    let items = array(get(v, "coeffs", path)?, &cpath)?;
    if m == 0 || items.len() != m {
        return Err(Error::parse(
            &cpath,
            format!("expected m = {m} coefficients (m >= 1), got {}", items.len()),
        ));
    }
    let coeffs = items
        .iter()
        .enumerate()
        .map(|(i, c)| element_from_json(field, c, &format!("{cpath}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncSeries::new(unif, coeffs))
}

pub fn matrix_to_json(a: &KMatrix) -> Value {
    Value::Array(
        (0..a.rows())
            .map(|i| Value::Array(a.row(i).iter().map(element_to_json).collect()))
            .collect(),
    )
}

pub fn matrix_from_json(field: &Field, v: &Value, n: usize, path: &str) -> Result<KMatrix> {
    let rows = array(v, path)?;
    if rows.len() != n {
        return Err(Error::parse(path, format!("expected {n} rows, got {}", rows.len())));
    }
    let mut out = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let row = array(row, &rpath)?;
        if row.len() != n {
            return Err(Error::parse(&rpath, format!("expected {n} entries, got {}", row.len())));
        }
        out.push(
            row.iter()
                .enumerate()
                .map(|(j, x)| element_from_json(field, x, &format!("{rpath}[{j}]")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    KMatrix::from_rows(field, out)
}

pub fn vector_to_json(v: &[FieldElement]) -> Value {
    Value::Array(v.iter().map(element_to_json).collect())
}

pub fn connection_to_json(c: &LogConnection) -> Value {
    let n: Vec<Value> = c
        .matrix()
        .iter()
        .map(|row| Value::Array(row.iter().map(series_to_json).collect()))
        .collect();
    json!({
        "field": field_to_json(c.field()),
        "unif": c.unif(),
        "m": c.modulus(),
        "l": c.rank(),
        "N": n,
    })
}

/// Reads the embedded `"field"`, or uses `session_field` (which must agree
/// with an embedded one when both are present).
fn resolve_field(v: &Value, session_field: Option<&Field>, path: &str) -> Result<Field> {
    let embedded = match v.get("field") {
        Some(f) => Some(field_from_json(f, &format!("{path}.field"))?),
        None => None,
    };
    match (embedded, session_field) {
        (Some(e), Some(s)) if e != *s => Err(Error::RingMismatch(format!(
            "{path}: object field differs from the session field"
        ))),
        (Some(e), _) => Ok(e),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Err(Error::parse(path, "missing key \"field\"")),
    }
}

pub fn connection_from_json(v: &Value, session_field: Option<&Field>, path: &str) -> Result<LogConnection> {
    let field = resolve_field(v, session_field, path)?;
    let unif = get_str(v, "unif", path)?;
    let m = get_usize(v, "m", path)?;
    let l = get_usize(v, "l", path)?;
    let npath = format!("{path}.N");
    let rows = array(get(v, "N", path)?, &npath)?;
    if l == 0 || rows.len() != l {
        return Err(Error::parse(&npath, format!("expected l = {l} rows (l >= 1)")));
    }
    let mut n = Vec::with_capacity(l);
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{npath}[{i}]");
        let row = array(row, &rpath)?;
        if row.len() != l {
            return Err(Error::parse(&rpath, format!("expected {l} entries")));
        }
        let mut out = Vec::with_capacity(l);
        for (j, s) in row.iter().enumerate() {
            let spath = format!("{rpath}[{j}]");
            let s = series_from_json(&field, s, &spath)?;
            if s.modulus() != m {
                return Err(Error::parse(&spath, format!("series modulus differs from m = {m}")));
            }
            out.push(s);
        }
        n.push(out);
    }
    LogConnection::new(unif, n)
}

pub fn stratification_to_json(s: &Stratification) -> Value {
    json!({
        "field": field_to_json(s.field()),
        "l": s.rank(),
        "m": s.modulus(),
        "D": s.pd_cutoff(),
        "a": element_to_json(s.a()),
        "phi": s.phi().iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

pub fn stratification_from_json(
    v: &Value,
    session_field: Option<&Field>,
    path: &str,
) -> Result<Stratification> {
    let field = resolve_field(v, session_field, path)?;
    let l = get_usize(v, "l", path)?;
    let m = get_usize(v, "m", path)?;
    let d = get_usize(v, "D", path)?;
    let a = element_from_json(&field, get(v, "a", path)?, &format!("{path}.a"))?;
    let ppath = format!("{path}.phi");
    let phi = array(get(v, "phi", path)?, &ppath)?;
    if phi.len() != d + 1 {
        return Err(Error::parse(&ppath, format!("expected D + 1 = {} operators", d + 1)));
    }
    let phi = phi
        .iter()
        .enumerate()
        .map(|(n, x)| matrix_from_json(&field, x, l * m, &format!("{ppath}[{n}]")))
        .collect::<Result<Vec<_>>>()?;
    Stratification::new(l, m, a, phi)
}

pub fn pd_to_json(x: &PdElement) -> Value {
    Value::Array(
        x.terms()
            .map(|(mono, c)| json!({ "k": mono.k, "j": mono.j, "c": element_to_json(c) }))
            .collect(),
    )
}

pub fn pd_from_json(cfg: &CosimpConfig, n: usize, v: &Value, path: &str) -> Result<PdElement> {
    let mut out = cfg.zero(n);
    for (i, term) in array(v, path)?.iter().enumerate() {
        let tpath = format!("{path}[{i}]");
        let k = array(get(term, "k", &tpath)?, &format!("{tpath}.k"))?
            .iter()
            .map(|x| x.as_u64().map(|x| x as u32))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::parse(format!("{tpath}.k"), "expected non-negative integers"))?;
        if k.len() != n {
            return Err(Error::parse(format!("{tpath}.k"), format!("expected {n} exponents")));
        }
        let j = get_usize(term, "j", &tpath)? as u32;
        let c = element_from_json(cfg.field(), get(term, "c", &tpath)?, &format!("{tpath}.c"))?;
        out.add_term(Monomial { k, j }, c);
    }
    Ok(out)
}

pub fn kernel_to_json(k: &GaloisKernel) -> Value {
    let mut obj = Map::new();
    obj.insert("field".into(), field_to_json(k.a.field()));
    obj.insert("l".into(), json!(k.l));
    obj.insert("m".into(), json!(k.m));
    obj.insert("a".into(), element_to_json(&k.a));
    obj.insert("D".into(), json!(k.pd_cutoff()));
    obj.insert("A".into(), Value::Array(k.ops.iter().map(matrix_to_json).collect()));
    obj.insert("tag".into(), json!(k.tag.as_str()));
    if let Some(c) = &k.c {
        obj.insert("c".into(), json!(c.to_string()));
    }
    Value::Object(obj)
}

pub fn kernel_from_json(v: &Value, session_field: Option<&Field>, path: &str) -> Result<GaloisKernel> {
    let field = resolve_field(v, session_field, path)?;
    let l = get_usize(v, "l", path)?;
    let m = get_usize(v, "m", path)?;
    let d = get_usize(v, "D", path)?;
    let a = element_from_json(&field, get(v, "a", path)?, &format!("{path}.a"))?;
    let tag_str = get_str(v, "tag", path)?;
    let tag = KernelTag::parse(tag_str)
        .ok_or_else(|| Error::parse(format!("{path}.tag"), "expected \"prismatic\" or \"log\""))?;
    let apath = format!("{path}.A");
    let ops = array(get(v, "A", path)?, &apath)?;
    if ops.len() != d + 1 {
        return Err(Error::parse(&apath, format!("expected D + 1 = {} operators", d + 1)));
    }
    let ops = ops
        .iter()
        .enumerate()
        .map(|(n, x)| matrix_from_json(&field, x, l * m, &format!("{apath}[{n}]")))
        .collect::<Result<Vec<_>>>()?;
    let c = match v.get("c") {
        Some(c) => Some(parse_bigint(c, &format!("{path}.c"))?),
        None => None,
    };
    Ok(GaloisKernel { l, m, a, ops, tag, c })
}

/// Global numeric settings carried by a session file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    pub d: Option<usize>,
    pub m_cap: Option<usize>,
    pub probe_max: Option<usize>,
}

/// A field with uniquely named connections and stratifications over it.
#[derive(Debug, Clone)]
pub struct Session {
    pub field: Field,
    pub config: SessionConfig,
    pub connections: Vec<(String, LogConnection)>,
    pub stratifications: Vec<(String, Stratification)>,
}

impl Session {
    pub fn connection(&self, name: &str) -> Option<&LogConnection> {
        self.connections.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn stratification(&self, name: &str) -> Option<&Stratification> {
        self.stratifications
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }
}

/// Parses and validates a session. A bare field object is a valid session.
pub fn parse_session(text: &str) -> Result<Session> {
    let v = parse_json(text)?;
    let field_value = v.get("field").unwrap_or(&v);
    let fpath = if v.get("field").is_some() { "$.field" } else { "$" };
    let field = field_from_json(field_value, fpath)?;

    let cfg = v.get("config");
    let opt = |key: &str| -> Result<Option<usize>> {
        match cfg.and_then(|c| c.get(key)) {
            None => Ok(None),
            Some(x) => x
                .as_u64()
                .map(|x| Some(x as usize))
                .ok_or_else(|| Error::parse(format!("$.config.{key}"), "expected a non-negative integer")),
        }
    };
    let config = SessionConfig {
        d: opt("D")?,
        m_cap: opt("m")?,
        probe_max: opt("probe_max")?,
    };

    let mut names = BTreeSet::new();
    let mut claim = |name: &str, path: &str| -> Result<()> {
        if !names.insert(name.to_string()) {
            return Err(Error::parse(path, format!("duplicate name {name:?}")));
        }
        Ok(())
    };
    let mut connections = Vec::new();
    if let Some(list) = v.get("connections") {
        for (i, item) in array(list, "$.connections")?.iter().enumerate() {
            let path = format!("$.connections[{i}]");
            let name = get_str(item, "name", &path)?;
            claim(name, &path)?;
            let c = connection_from_json(item, Some(&field), &path)?;
            if let Some(cap) = config.m_cap {
                if c.modulus() > cap {
                    return Err(Error::parse(&path, format!("m exceeds the session cap {cap}")));
                }
            }
            connections.push((name.to_string(), c));
        }
    }
    let mut stratifications = Vec::new();
    if let Some(list) = v.get("stratifications") {
        for (i, item) in array(list, "$.stratifications")?.iter().enumerate() {
            let path = format!("$.stratifications[{i}]");
            let name = get_str(item, "name", &path)?;
            claim(name, &path)?;
            stratifications.push((name.to_string(), stratification_from_json(item, Some(&field), &path)?));
        }
    }
    Ok(Session {
        field,
        config,
        connections,
        stratifications,
    })
}

/// Compact, key-sorted serialization.
pub fn to_canonical_string(v: &Value) -> String {
    serde_json::to_string(v).expect("values built from strings and numbers serialize")
}
