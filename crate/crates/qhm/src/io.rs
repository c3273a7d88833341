//! Element, form, and connection file formats.
//!
//! An element block is ten ASCII header lines
//! (`format=QHM1`, `c=`, `hbar=`, `mu=`, `nu=`, `alpha=`, `P=`, `N=`, `Nx=`,
//! `layout=p,n,i row-major`) followed by 2*(2P+1)*(2N+1)*Nx little-endian
//! IEEE doubles, re/im interleaved in storage order. Floats print through
//! the shortest round-trip formatting, so a write/read cycle is bit-exact.
//! Forms prepend `form=1|2` and hold three blocks; connections prepend
//! `connection q=... skew=checked` and hold 3*q*q blocks.

use std::io::{Read, Write};

use ndarray::Array3;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::connection::{make_connection, Connection, ModuleSpec};
use crate::element::AlgebraElement;
use crate::error::{QhmError, Result};
use crate::forms::{OneForm, TwoForm};
use crate::matrix::AlgebraMatrix;
use crate::params::{AlgebraParams, Truncation};

const LAYOUT: &str = "layout=p,n,i row-major";

fn read_line(source: &mut impl Read) -> Result<String> {
    let mut buf = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match source.read_exact(&mut byte) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                return Err(QhmError::CorruptHeader("stream ended inside the header".into()));
            }
            Err(e) => return Err(e.into()),
        }
        if byte[0] == b'\n' {
            break;
        }
        if buf.len() >= 256 {
            return Err(QhmError::CorruptHeader("header line exceeds 256 bytes".into()));
        }
        buf.push(byte[0]);
    }
    String::from_utf8(buf).map_err(|_| QhmError::CorruptHeader("header is not UTF-8".into()))
}

fn expect_kv<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    match line.split_once('=') {
        Some((k, v)) if k == key => Ok(v),
        _ => Err(QhmError::CorruptHeader(format!("expected `{key}=...`, got `{line}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse()
        .map_err(|_| QhmError::CorruptHeader(format!("cannot parse `{key}={v}`")))
}

/// Writes one element block (header + payload) without any framing around it.
pub fn write_element(el: &AlgebraElement, sink: &mut impl Write) -> Result<()> {
    let p = el.params();
    let t = el.trunc();
    write!(
        sink,
        "format=QHM1\nc={}\nhbar={}\nmu={}\nnu={}\nalpha={}\nP={}\nN={}\nNx={}\n{}\n",
        p.c, p.hbar, p.mu, p.nu, p.alpha, t.p_max, t.n_max, t.nx, LAYOUT
    )?;
    let mut buf = Vec::with_capacity(el.coeff.len() * 16);
    for z in el.coeff.iter() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(())
}

/// Reads exactly one element block, leaving the stream at the byte after it.
pub fn read_element(source: &mut impl Read, interp_order: usize) -> Result<AlgebraElement> {
    let first = read_line(source)?;
    if first != "format=QHM1" {
        return Err(QhmError::VersionMismatch(format!("unsupported format line `{first}`")));
    }
    let c: i64 = parse_num(expect_kv(&read_line(source)?, "c")?, "c")?;
    let hbar: f64 = parse_num(expect_kv(&read_line(source)?, "hbar")?, "hbar")?;
    let mu: f64 = parse_num(expect_kv(&read_line(source)?, "mu")?, "mu")?;
    let nu: f64 = parse_num(expect_kv(&read_line(source)?, "nu")?, "nu")?;
    let alpha: f64 = parse_num(expect_kv(&read_line(source)?, "alpha")?, "alpha")?;
    let p_max: i64 = parse_num(expect_kv(&read_line(source)?, "P")?, "P")?;
    let n_max: i64 = parse_num(expect_kv(&read_line(source)?, "N")?, "N")?;
    let nx: usize = parse_num(expect_kv(&read_line(source)?, "Nx")?, "Nx")?;
    let layout = read_line(source)?;
    if layout != LAYOUT {
        return Err(QhmError::CorruptHeader(format!("unsupported layout `{layout}`")));
    }
    let params = AlgebraParams::new(c, hbar, mu, nu, alpha)?;
    let trunc = Truncation::new(p_max, n_max, nx, interp_order)?;
    let count = trunc.p_len() * trunc.n_len() * trunc.nx;
    let mut bytes = vec![0u8; count * 16];
    source.read_exact(&mut bytes).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            QhmError::CorruptStream("payload shorter than the declared tensor".into())
        } else {
            QhmError::Io(e)
        }
    })?;
    let mut data = Vec::with_capacity(count);
    for chunk in bytes.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        data.push(Complex64::new(re, im));
    }
    let coeff = Array3::from_shape_vec((trunc.p_len(), trunc.n_len(), trunc.nx), data)
        .expect("shape matches the data length by construction");
    AlgebraElement::from_parts(params, trunc, coeff)
}

fn expect_end(source: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match source.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(QhmError::CorruptStream("trailing data after the payload".into())),
    }
}

pub fn serialize_element(el: &AlgebraElement, sink: &mut impl Write) -> Result<()> {
    write_element(el, sink)
}

pub fn deserialize_element(source: &mut impl Read, interp_order: usize) -> Result<AlgebraElement> {
    let el = read_element(source, interp_order)?;
    expect_end(source)?;
    Ok(el)
}

/// Debug mirror of the element format as structured text.
pub fn element_to_json(el: &AlgebraElement) -> Value {
    let p = el.params();
    let t = el.trunc();
    let mut data = Vec::with_capacity(el.coeff.len() * 2);
    for z in el.coeff.iter() {
        data.push(z.re);
        data.push(z.im);
    }
    json!({
        "format": "QHM1",
        "c": p.c,
        "hbar": p.hbar,
        "mu": p.mu,
        "nu": p.nu,
        "alpha": p.alpha,
        "P": t.p_max,
        "N": t.n_max,
        "Nx": t.nx,
        "layout": "p,n,i row-major",
        "data": data,
    })
}

pub fn element_from_json(value: &Value, interp_order: usize) -> Result<AlgebraElement> {
    let obj = value
        .as_object()
        .ok_or_else(|| QhmError::CorruptHeader("element JSON must be an object".into()))?;
    let get = |k: &str| -> Result<&Value> {
        obj.get(k)
            .ok_or_else(|| QhmError::CorruptHeader(format!("missing field `{k}`")))
    };
    if get("format")?.as_str() != Some("QHM1") {
        return Err(QhmError::VersionMismatch("unsupported format field".into()));
    }
    let as_f = |k: &str| -> Result<f64> {
        get(k)?
            .as_f64()
            .ok_or_else(|| QhmError::CorruptHeader(format!("field `{k}` is not a number")))
    };
    let as_i = |k: &str| -> Result<i64> {
        get(k)?
            .as_i64()
            .ok_or_else(|| QhmError::CorruptHeader(format!("field `{k}` is not an integer")))
    };
    let params = AlgebraParams::new(as_i("c")?, as_f("hbar")?, as_f("mu")?, as_f("nu")?, as_f("alpha")?)?;
    let trunc = Truncation::new(as_i("P")?, as_i("N")?, as_i("Nx")? as usize, interp_order)?;
    let data = get("data")?
        .as_array()
        .ok_or_else(|| QhmError::CorruptHeader("field `data` is not an array".into()))?;
    let count = trunc.p_len() * trunc.n_len() * trunc.nx;
    if data.len() != 2 * count {
        return Err(QhmError::CorruptStream(format!(
            "expected {} numbers, got {}",
            2 * count,
            data.len()
        )));
    }
    let mut tensor = Vec::with_capacity(count);
    for pair in data.chunks_exact(2) {
        let re = pair[0]
            .as_f64()
            .ok_or_else(|| QhmError::CorruptStream("non-numeric entry in `data`".into()))?;
        let im = pair[1]
            .as_f64()
            .ok_or_else(|| QhmError::CorruptStream("non-numeric entry in `data`".into()))?;
        tensor.push(Complex64::new(re, im));
    }
    let coeff = Array3::from_shape_vec((trunc.p_len(), trunc.n_len(), trunc.nx), tensor)
        .expect("length checked above");
    AlgebraElement::from_parts(params, trunc, coeff)
}

fn read_components(source: &mut impl Read, interp_order: usize) -> Result<[AlgebraElement; 3]> {
    let a = read_element(source, interp_order)?;
    let b = read_element(source, interp_order)?;
    let c = read_element(source, interp_order)?;
    if b.params() != a.params()
        || b.trunc() != a.trunc()
        || c.params() != a.params()
        || c.trunc() != a.trunc()
    {
        return Err(QhmError::BandMismatch(
            "form components carry different headers".into(),
        ));
    }
    Ok([a, b, c])
}

pub fn serialize_one_form(form: &OneForm, sink: &mut impl Write) -> Result<()> {
    writeln!(sink, "form=1")?;
    for c in form.components() {
        write_element(c, sink)?;
    }
    Ok(())
}

pub fn deserialize_one_form(source: &mut impl Read, interp_order: usize) -> Result<OneForm> {
    let tag = read_line(source)?;
    if tag != "form=1" {
        return Err(QhmError::VersionMismatch(format!("expected `form=1`, got `{tag}`")));
    }
    let c = read_components(source, interp_order)?;
    expect_end(source)?;
    OneForm::from_components(c)
}

pub fn serialize_two_form(form: &TwoForm, sink: &mut impl Write) -> Result<()> {
    writeln!(sink, "form=2")?;
    for c in form.components() {
        write_element(c, sink)?;
    }
    Ok(())
}

pub fn deserialize_two_form(source: &mut impl Read, interp_order: usize) -> Result<TwoForm> {
    let tag = read_line(source)?;
    if tag != "form=2" {
        return Err(QhmError::VersionMismatch(format!("expected `form=2`, got `{tag}`")));
    }
    let c = read_components(source, interp_order)?;
    expect_end(source)?;
    TwoForm::from_components(c)
}

pub fn serialize_connection(conn: &Connection, sink: &mut impl Write) -> Result<()> {
    writeln!(sink, "connection q={} skew=checked", conn.spec().q)?;
    for j in 1..=3u8 {
        for el in conn.coeff(j).entries() {
            write_element(el, sink)?;
        }
    }
    Ok(())
}

pub fn deserialize_connection(source: &mut impl Read, interp_order: usize) -> Result<Connection> {
    let tag = read_line(source)?;
    let rest = tag
        .strip_prefix("connection q=")
        .ok_or_else(|| QhmError::VersionMismatch(format!("expected a connection header, got `{tag}`")))?;
    let (q_str, suffix) = rest
        .split_once(' ')
        .ok_or_else(|| QhmError::CorruptHeader(format!("malformed connection header `{tag}`")))?;
    if suffix != "skew=checked" {
        return Err(QhmError::CorruptHeader(format!("malformed connection header `{tag}`")));
    }
    let q: usize = parse_num(q_str, "q")?;
    let spec = ModuleSpec::new(q)?;
    let mut mats = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut entries = Vec::with_capacity(q * q);
        for _ in 0..q * q {
            entries.push(read_element(source, interp_order)?);
        }
        mats.push(AlgebraMatrix::from_entries(q, entries).map_err(|_| {
            QhmError::BandMismatch("connection blocks carry different headers".into())
        })?);
    }
    expect_end(source)?;
    let a3 = mats.pop().unwrap();
    let a2 = mats.pop().unwrap();
    let a1 = mats.pop().unwrap();
    make_connection(spec, a1, a2, a3)
}
