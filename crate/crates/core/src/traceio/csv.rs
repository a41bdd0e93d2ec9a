//! Trace CSV reader and canonical writer.
//!
//! Header names may carry a unit annotation in brackets (`rtt_wifi[s]`, `ag[kbps]`,
//! `plr_lte[frac]`); values are converted to the native units on read. The writer never emits
//! annotations, and its output is canonical: `write_trace(parse_trace(x)) == x` for any text it
//! produced.

use std::io::Read;

use super::{AttributeSample, Priority, TraceError};

/// Canonical column order. `label` is optional and appended last when present.
pub const TRACE_COLUMNS: [&str; 20] = [
    "t",
    "rssi_lte",
    "rssi_wifi",
    "sinr_lte",
    "sinr_wifi",
    "rsrp_lte",
    "rsrq_lte",
    "td_wifi",
    "rd_wifi",
    "rtt_lte",
    "rtt_wifi",
    "cwnd_lte",
    "cwnd_wifi",
    "plr_lte",
    "plr_wifi",
    "pdr_lte",
    "pdr_wifi",
    "prio",
    "ag",
    "ad",
];

const LABEL: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Plain,
    Time,
    Delay,
    Rate,
    Loss,
    Tag,
}

fn kind_of(col: usize) -> Kind {
    match TRACE_COLUMNS.get(col).copied().unwrap_or("label") {
        "t" => Kind::Time,
        "rtt_lte" | "rtt_wifi" | "ad" => Kind::Delay,
        "td_wifi" | "rd_wifi" | "pdr_lte" | "pdr_wifi" | "ag" => Kind::Rate,
        "plr_lte" | "plr_wifi" => Kind::Loss,
        "prio" | "label" => Kind::Tag,
        _ => Kind::Plain,
    }
}

/// Multiplier into native units, or `None` for percent-style loss cells.
#[derive(Clone, Copy, Debug)]
enum Unit {
    Scale(f64),
    Percent,
}

fn parse_unit(kind: Kind, unit: Option<&str>, name: &str) -> Result<Unit, TraceError> {
    let bad = || TraceError::Header(format!("unsupported unit `{}` for `{name}`", unit.unwrap_or("")));
    Ok(match (kind, unit) {
        (Kind::Loss, None | Some("%")) => Unit::Percent,
        (Kind::Loss, Some("frac")) => Unit::Scale(1.0),
        (Kind::Loss, Some(_)) => return Err(bad()),
        (_, None) => Unit::Scale(1.0),
        (Kind::Time, Some(u)) => match u {
            "s" => Unit::Scale(1.0),
            "ms" => Unit::Scale(1e-3),
            _ => return Err(bad()),
        },
        (Kind::Delay, Some(u)) => match u {
            "ms" => Unit::Scale(1.0),
            "s" => Unit::Scale(1e3),
            "us" => Unit::Scale(1e-3),
            _ => return Err(bad()),
        },
        (Kind::Rate, Some(u)) => match u {
            "Mbps" => Unit::Scale(1.0),
            "Gbps" => Unit::Scale(1e3),
            "kbps" => Unit::Scale(1e-3),
            "bps" => Unit::Scale(1e-6),
            _ => return Err(bad()),
        },
        (Kind::Plain, Some(u)) => {
            let native = match name {
                "cwnd_lte" | "cwnd_wifi" => "pkts",
                n if n.starts_with("sinr") || n.starts_with("rsrq") => "dB",
                _ => "dBm",
            };
            if u == native {
                Unit::Scale(1.0)
            } else {
                return Err(bad());
            }
        }
        (Kind::Tag, Some(_)) => return Err(bad()),
    })
}

struct Header {
    /// For each canonical column (0..=20), the position in the file and its unit.
    slots: [Option<(usize, Unit)>; 21],
}

fn parse_header(fields: &csv::StringRecord) -> Result<Header, TraceError> {
    let mut slots: [Option<(usize, Unit)>; 21] = [None; 21];
    for (pos, raw) in fields.iter().enumerate() {
        let raw = raw.trim();
        let (name, unit) = match raw.find('[') {
            Some(open) if raw.ends_with(']') => (&raw[..open], Some(&raw[open + 1..raw.len() - 1])),
            Some(_) => return Err(TraceError::Header(format!("malformed column `{raw}`"))),
            None => (raw, None),
        };
        let col = if name == "label" {
            LABEL
        } else {
            TRACE_COLUMNS
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| TraceError::Header(format!("unknown column `{name}`")))?
        };
        if slots[col].is_some() {
            return Err(TraceError::Header(format!("duplicate column `{name}`")));
        }
        slots[col] = Some((pos, parse_unit(kind_of(col), unit, name)?));
    }
    if let Some(missing) = (0..TRACE_COLUMNS.len()).find(|&c| slots[c].is_none()) {
        return Err(TraceError::Header(format!(
            "missing column `{}`",
            TRACE_COLUMNS[missing]
        )));
    }
    Ok(Header { slots })
}

/// Parses a trace CSV (header row required).
pub fn parse_trace<R: Read>(reader: R) -> Result<Vec<AttributeSample>, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = parse_header(rdr.headers()?)?;

    let mut out: Vec<AttributeSample> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let sample = parse_row(&header, &rec, line)?;
        if let Some(prev) = out.last() {
            if sample.t < prev.t {
                return Err(cell_err(line, "t", format!("time {} goes backwards", sample.t)));
            }
        }
        if let Err((column, message)) = sample.check() {
            return Err(cell_err(line, column, message));
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn parse_trace_str(text: &str) -> Result<Vec<AttributeSample>, TraceError> {
    parse_trace(text.as_bytes())
}

fn cell_err(line: usize, column: &str, message: String) -> TraceError {
    TraceError::Cell {
        line,
        column: column.to_string(),
        message,
    }
}

fn parse_row(h: &Header, rec: &csv::StringRecord, line: usize) -> Result<AttributeSample, TraceError> {
    let cell = |col: usize| -> Result<&str, TraceError> {
        let (pos, _) = h.slots[col].expect("required column");
        rec.get(pos)
            .ok_or_else(|| cell_err(line, TRACE_COLUMNS[col], "missing cell".into()))
    };
    let num = |col: usize| -> Result<f64, TraceError> {
        let name = TRACE_COLUMNS[col];
        let text = cell(col)?;
        let (_, unit) = h.slots[col].expect("required column");
        match unit {
            Unit::Percent => parse_percent(text),
            Unit::Scale(k) => text.parse::<f64>().ok().map(|v| v * k),
        }
        .filter(|v| v.is_finite())
        .ok_or_else(|| cell_err(line, name, format!("`{text}` is not a number")))
    };

    let prio_text = cell(17)?;
    let (prio, radio) = parse_prio(prio_text).ok_or_else(|| {
        cell_err(line, "prio", format!("`{prio_text}` is not WF/LF"))
    })?;
    let label = match h.slots[LABEL] {
        Some((pos, _)) => match rec.get(pos).unwrap_or("") {
            "" => None,
            text => Some(
                text.parse::<Priority>()
                    .map_err(|m| cell_err(line, "label", m))?,
            ),
        },
        None => None,
    };

    Ok(AttributeSample {
        t: num(0)?,
        rssi_lte: num(1)?,
        rssi_wifi: num(2)?,
        sinr_lte: num(3)?,
        sinr_wifi: num(4)?,
        rsrp_lte: num(5)?,
        rsrq_lte: num(6)?,
        td_wifi: num(7)?,
        rd_wifi: num(8)?,
        rtt_lte: num(9)?,
        rtt_wifi: num(10)?,
        cwnd_lte: num(11)?,
        cwnd_wifi: num(12)?,
        plr_lte: num(13)?,
        plr_wifi: num(14)?,
        pdr_lte: num(15)?,
        pdr_wifi: num(16)?,
        prio,
        radio,
        ag: num(18)?,
        ad: num(19)?,
        label,
    })
}

/// `WF`, `LF`, or a tagged form such as `LF(4G)`.
fn parse_prio(text: &str) -> Option<(Priority, Option<String>)> {
    let (head, tag) = match text.find('(') {
        Some(open) if text.ends_with(')') && open + 2 < text.len() => {
            (&text[..open], Some(text[open + 1..text.len() - 1].to_string()))
        }
        Some(_) => return None,
        None => (text, None),
    };
    head.parse::<Priority>().ok().map(|p| (p, tag))
}

/// Parses a percentage (with or without `%`) into a fraction by shifting the decimal
/// exponent, so the decimal text maps to the correctly rounded fraction.
fn parse_percent(text: &str) -> Option<f64> {
    let body = text.strip_suffix('%').unwrap_or(text).trim();
    if body.is_empty() || body.contains(['x', 'X', 'n', 'N', 'i', 'I']) {
        return None;
    }
    match body.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = body[pos + 1..].parse().ok()?;
            format!("{}e{}", &body[..pos], exp - 2).parse().ok()
        }
        None => format!("{body}e-2").parse().ok(),
    }
}

/// Renders a fraction as a percentage whose decimal digits are exactly those of the
/// fraction's shortest round-trip representation, shifted two places.
fn format_percent(frac: f64) -> String {
    let repr = format!("{frac}");
    let (sign, digits) = match repr.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", repr.as_str()),
    };
    let (int, dec) = digits.split_once('.').unwrap_or((digits, ""));
    let mut dec = dec.to_string();
    while dec.len() < 2 {
        dec.push('0');
    }
    let mut int = format!("{int}{}", &dec[..2]);
    let mut rest = dec[2..].to_string();
    let trimmed = int.trim_start_matches('0');
    int = if trimmed.is_empty() { "0".into() } else { trimmed.into() };
    while rest.ends_with('0') {
        rest.pop();
    }
    if rest.is_empty() {
        format!("{sign}{int}%")
    } else {
        format!("{sign}{int}.{rest}%")
    }
}

/// Canonical CSV rendering. A `label` column is written when any sample carries a label.
pub fn write_trace(samples: &[AttributeSample]) -> String {
    let with_label = samples.iter().any(|s| s.label.is_some());
    let mut out = TRACE_COLUMNS.join(",");
    if with_label {
        out.push_str(",label");
    }
    out.push('\n');
    for s in samples {
        let prio = match &s.radio {
            Some(tag) => format!("{}({tag})", s.prio),
            None => s.prio.to_string(),
        };
        let row = [
            s.t.to_string(),
            s.rssi_lte.to_string(),
            s.rssi_wifi.to_string(),
            s.sinr_lte.to_string(),
            s.sinr_wifi.to_string(),
            s.rsrp_lte.to_string(),
            s.rsrq_lte.to_string(),
            s.td_wifi.to_string(),
            s.rd_wifi.to_string(),
            s.rtt_lte.to_string(),
            s.rtt_wifi.to_string(),
            s.cwnd_lte.to_string(),
            s.cwnd_wifi.to_string(),
            format_percent(s.plr_lte),
            format_percent(s.plr_wifi),
            s.pdr_lte.to_string(),
            s.pdr_wifi.to_string(),
            prio,
            s.ag.to_string(),
            s.ad.to_string(),
        ];
        out.push_str(&row.join(","));
        if with_label {
            out.push(',');
            if let Some(l) = s.label {
                out.push_str(l.as_str());
            }
        }
        out.push('\n');
    }
    out
}
