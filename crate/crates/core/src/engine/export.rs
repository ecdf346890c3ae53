//! CSV export of traces and event logs.
//!
//! Floats are written in Rust's shortest round-trip form, so identical runs
//! produce identical bytes.

use std::io::{self, Write};

use super::{EventAgent, Trace};

/// `t,x_0..x_{n-1},xhat_0..xhat_{n-1},V`, one row per sample.
pub fn write_trace_csv<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    let n = trace.n();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend((0..n).map(|i| format!("xhat_{i}")));
    header.push("V".into());
    writeln!(out, "{}", header.join(","))?;
    for (k, t) in trace.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(trace.states[k].iter().map(f64::to_string));
        row.extend(trace.xhats[k].iter().map(f64::to_string));
        row.push(trace.lyapunov[k].to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// `t,agent,value`; centralized updates use agent `all` and `;`-separated values.
pub fn write_events_csv<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    writeln!(out, "t,agent,value")?;
    for e in &trace.events {
        let agent = match e.agent {
            EventAgent::Agent(i) => i.to_string(),
            EventAgent::All => "all".into(),
        };
        let values: Vec<String> = e.values.iter().map(f64::to_string).collect();
        writeln!(out, "{},{},{}", e.t, agent, values.join(";"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate_triggered, SimConfig};
    use crate::graph::path_graph;
    use crate::triggers::TriggerLaw;
    use nalgebra::dvector;

    #[test]
    fn csv_shapes() {
        let cfg = SimConfig { dt: 0.1, horizon: 0.5, event_tol: 1e-4, zeno_floor: 0.0, sample_every: 2 };
        let law = TriggerLaw::CentralizedNorm { sigma: 0.5 };
        let trace = simulate_triggered(&path_graph(2, 1.0), &law, &dvector![1.0, -1.0], &cfg).unwrap();

        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_0,x_1,xhat_0,xhat_1,V");
        assert_eq!(lines[1], "0,1,-1,1,-1,1");
        // samples at k = 0, 2, 4 and the final step 5
        assert_eq!(lines.len(), 1 + 4);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 6));

        let mut buf = Vec::new();
        write_events_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,agent,value"));
        assert_eq!(lines.next(), Some("0,all,1;-1"));
    }
}
