//! Run reports and their serialization. The JSON writer is hand-rolled so
//! key order is exactly insertion order and every float carries 17
//! significant digits — reports are byte-identical across runs for identical
//! config and seed. Wall-clock timings are deliberately not part of the
//! report; the binary prints them to stdout instead.

use crate::config::{Kind, TaskKind};

pub const REPORT_SCHEMA: &str = "hypconj-report/1";

/// Per-task verdict. `Error` means the task could not deliver a verdict
/// (solver failure, bad preconditions); `Fail` means it ran and a check was
/// violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Error => "ERROR",
        }
    }
}

/// A numeric table (point batches and the like); serialized inline in the
/// report and optionally as a per-task CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Payload values, serialized in insertion order.
#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    NumList(Vec<f64>),
    Table(Table),
}

#[derive(Debug, Clone)]
pub struct TaskReport {
    pub task: TaskKind,
    pub outcome: Outcome,
    pub payload: Vec<(String, Value)>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: Kind,
    pub seed: u64,
    pub tasks: Vec<TaskReport>,
}

impl RunReport {
    /// Aggregate verdict: any ERROR dominates, then any FAIL; an empty task
    /// list is a PASS.
    pub fn overall(&self) -> Outcome {
        let mut overall = Outcome::Pass;
        for t in &self.tasks {
            match t.outcome {
                Outcome::Error => return Outcome::Error,
                Outcome::Fail => overall = Outcome::Fail,
                Outcome::Pass => {}
            }
        }
        overall
    }

    /// Exit-code contract: 0 all-pass, 1 any FAIL, 2 any ERROR.
    pub fn exit_code(&self) -> i32 {
        match self.overall() {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Error => 2,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"schema\": {},\n", json_str(REPORT_SCHEMA)));
        out.push_str(&format!("  \"kind\": {},\n", json_str(self.kind.name())));
        out.push_str(&format!("  \"seed\": {},\n", self.seed));
        out.push_str(&format!("  \"overall\": {},\n", json_str(self.overall().label())));
        out.push_str("  \"tasks\": [");
        for (i, task) in self.tasks.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push('\n');
            write_task(&mut out, task);
        }
        if self.tasks.is_empty() {
            out.push_str("]\n");
        } else {
            out.push_str("\n  ]\n");
        }
        out.push_str("}\n");
        out
    }
}

fn write_task(out: &mut String, task: &TaskReport) {
    out.push_str("    {\n");
    out.push_str(&format!("      \"task\": {},\n", json_str(task.task.name())));
    out.push_str(&format!("      \"outcome\": {},\n", json_str(task.outcome.label())));
    out.push_str("      \"payload\": {");
    for (i, (key, value)) in task.payload.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('\n');
        out.push_str(&format!("        {}: {}", json_str(key), json_value(value, 8)));
    }
    if task.payload.is_empty() {
        out.push_str("}\n");
    } else {
        out.push_str("\n      }\n");
    }
    out.push_str("    }");
}

fn json_value(value: &Value, indent: usize) -> String {
    match value {
        Value::Num(x) => fmt_float(*x),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => json_str(s),
        Value::NumList(xs) => {
            let body: Vec<String> = xs.iter().map(|x| fmt_float(*x)).collect();
            format!("[{}]", body.join(", "))
        }
        Value::Table(t) => {
            let pad = " ".repeat(indent);
            let header: Vec<String> = t.header.iter().map(|h| json_str(h)).collect();
            let mut s = String::from("{\n");
            s.push_str(&format!("{pad}  \"header\": [{}],\n", header.join(", ")));
            s.push_str(&format!("{pad}  \"rows\": ["));
            for (i, row) in t.rows.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let body: Vec<String> = row.iter().map(|x| fmt_float(*x)).collect();
                s.push_str(&format!("\n{pad}    [{}]", body.join(", ")));
            }
            if t.rows.is_empty() {
                s.push_str("]\n");
            } else {
                s.push_str(&format!("\n{pad}  ]\n"));
            }
            s.push_str(&format!("{pad}}}"));
            s
        }
    }
}

/// 17 significant digits; round-trips every finite f64. Non-finite values
/// cannot appear in JSON numbers, so they serialize as tagged strings.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        json_str(&format!("{x}"))
    }
}

/// Minimal JSON string escaping (quotes, backslashes, control characters).
pub fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// CSV rendering of a table, floats at 17 significant digits.
pub fn table_csv(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        let body: Vec<String> = row
            .iter()
            .map(|x| if x.is_finite() { format!("{x:.16e}") } else { format!("{x}") })
            .collect();
        out.push_str(&body.join(","));
        out.push('\n');
    }
    out
}
