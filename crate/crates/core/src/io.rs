//! JSON-lines instance and trace files, and CSV rows for ratio reports.
//!
//! Instance files hold one packet per line,
//! `{"id":0,"release":1,"deadline":3,"value":2.5}`, with `"deadline":null`
//! for an unbounded deadline, optionally preceded by `{"meta":{...}}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::analysis::fmt_alpha;
use crate::error::{Error, Result};
use crate::model::{Instance, InstanceMeta, Packet, TimeBound};
use crate::offline::{OffSchedule, RatioReport};
use crate::policies::{PolicyParams, SimulationTrace};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketLine {
    id: u64,
    release: i64,
    deadline: Option<i64>,
    value: f64,
}

#[derive(Serialize)]
struct MetaLine<'a> {
    meta: &'a InstanceMeta,
}

pub fn write_instance<V: Scalar, W: Write>(inst: &Instance<V>, mut w: W) -> Result<()> {
    if let Some(meta) = &inst.meta {
        serde_json::to_writer(&mut w, &MetaLine { meta }).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    for p in &inst.packets {
        let line = PacketLine {
            id: p.id,
            release: p.release,
            deadline: p.deadline.finite(),
            value: p.value.as_f64(),
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn instance_to_string<V: Scalar>(inst: &Instance<V>) -> String {
    let mut buf = Vec::new();
    write_instance(inst, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn read_instance<V: Scalar, R: BufRead>(r: R) -> Result<Instance<V>> {
    let mut inst = Instance::default();
    let mut first = true;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let json: Json = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
        if let Some(meta) = json.get("meta") {
            if !first {
                return Err(err("meta line must come first".into()));
            }
            inst.meta = Some(serde_json::from_value(meta.clone()).map_err(|e| err(e.to_string()))?);
        } else {
            let pl: PacketLine = serde_json::from_value(json).map_err(|e| err(e.to_string()))?;
            let value = V::from_f64(pl.value)
                .ok_or_else(|| err(format!("value {} not representable", pl.value)))?;
            inst.packets.push(Packet {
                id: pl.id,
                release: pl.release,
                deadline: pl.deadline.map_or(TimeBound::Unbounded, TimeBound::At),
                value,
            });
        }
        first = false;
    }
    Ok(inst)
}

pub fn instance_from_str<V: Scalar>(s: &str) -> Result<Instance<V>> {
    read_instance(s.as_bytes())
}

#[derive(Serialize)]
struct StepLine {
    t: i64,
    sent: Option<u64>,
    sent_value: f64,
    buffer_size: usize,
    schedule_value: f64,
}

#[derive(Serialize)]
struct Summary {
    total_value: f64,
    sent_count: usize,
    dropped_count: usize,
}

#[derive(Serialize)]
struct SummaryLine {
    summary: Summary,
}

/// One line per step, then `{"summary":{...}}`.
pub fn write_trace<V: Scalar, W: Write>(trace: &SimulationTrace<V>, mut w: W) -> Result<()> {
    for s in &trace.steps {
        let line = StepLine {
            t: s.t,
            sent: s.sent,
            sent_value: s.sent_value.as_f64(),
            buffer_size: s.buffer_size,
            schedule_value: s.schedule_value.as_f64(),
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    let summary = SummaryLine {
        summary: Summary {
            total_value: trace.total_value.as_f64(),
            sent_count: trace.sent_count(),
            dropped_count: trace.dropped_expired.len(),
        },
    };
    serde_json::to_writer(&mut w, &summary).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// `slot,id` lines for an offline schedule.
pub fn schedule_csv<V: Scalar>(s: &OffSchedule<V>) -> String {
    let mut out = String::from("slot,id\n");
    for (id, slot) in &s.assignments {
        out.push_str(&format!("{slot},{id}\n"));
    }
    out
}

pub const RATIO_CSV_HEADER: &str =
    "instance_id,variant,policy,alpha,beta,opt_value,alg_value,ratio";

fn csv_field(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c == ',' || c == '\n' || c == '"' {
                '_'
            } else {
                c
            }
        })
        .collect()
}

pub fn ratio_csv_row<V: Scalar>(
    instance_id: &str,
    variant: &str,
    params: &PolicyParams<V>,
    r: &RatioReport<V>,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        csv_field(instance_id),
        csv_field(variant),
        params.kind.tag(),
        fmt_alpha(params.alpha),
        params.beta.as_f64(),
        r.opt_value.as_f64(),
        r.alg_value.as_f64(),
        r.ratio.as_f64()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GenSpec};
    use crate::model::Variant;
    use proptest::prelude::*;

    #[test]
    fn unbounded_is_null() {
        let inst = Instance::new(vec![
            Packet::unbounded(3, 2, 1.5f64),
            Packet::new(4, 1, 2, 0.25),
        ]);
        let text = instance_to_string(&inst);
        assert_eq!(
            text,
            "{\"id\":3,\"release\":2,\"deadline\":null,\"value\":1.5}\n{\"id\":4,\"release\":1,\"deadline\":2,\"value\":0.25}\n"
        );
        assert_eq!(instance_from_str::<f64>(&text).unwrap(), inst);
    }

    #[test]
    fn meta_line_first() {
        let inst: Instance<f64> = generate(&GenSpec::new(Variant::General, 0, 5)).unwrap();
        let text = instance_to_string(&inst);
        assert!(text
            .starts_with("{\"meta\":{\"generator\":\"random\",\"variant\":\"general\",\"seed\":5"));
        assert_eq!(instance_from_str::<f64>(&text).unwrap(), inst);
        let bad = format!(
            "{{\"id\":1,\"release\":1,\"deadline\":1,\"value\":1.0}}\n{}",
            text
        );
        assert!(matches!(
            instance_from_str::<f64>(&bad),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            instance_from_str::<f64>("{\"id\":1}"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(instance_from_str::<f64>("not json").is_err());
        assert!(instance_from_str::<f64>("\n\n").unwrap().is_empty());
    }

    #[test]
    fn trace_summary_line() {
        let inst = Instance::new(vec![Packet::new(0, 1, 1, 4.0f64)]);
        let tr = crate::policies::simulate(&inst, &PolicyParams::greedy()).unwrap();
        let mut buf = Vec::new();
        write_trace(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"t\":1,\"sent\":0,\"sent_value\":4.0,\"buffer_size\":1,\"schedule_value\":4.0}\n\
             {\"summary\":{\"total_value\":4.0,\"sent_count\":1,\"dropped_count\":0}}\n"
        );
    }

    #[test]
    fn ratio_row_format() {
        let r = RatioReport::new(3.0, 2.0);
        let row = ratio_csv_row("a,b", "general", &PolicyParams::<f64>::mg_unbounded(), &r);
        assert_eq!(row, "a_b,general,mg,inf,1,3,2,1.5");
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>(), n in 0usize..30, vi in 0usize..9) {
            let inst: Instance<f64> = generate(&GenSpec::new(Variant::ALL[vi], n, seed)).unwrap();
            let text = instance_to_string(&inst);
            let back: Instance<f64> = instance_from_str(&text).unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(instance_to_string(&back), text);
        }
    }
}
