//! Generator for large, lint-clean models used by scale tests and benches.
//!
//! Each process is a chain of events split into diagrams of ten events.
//! Neighbouring diagrams reference each other's boundary events as externs,
//! and every fifth event of a process precedes the sixth event of the next
//! process, with the cross edge asserted on both sides.

use std::fmt::Write as _;

use crate::ced::SourceFile;

const PER_DIAGRAM: usize = 10;

fn acronym(p: usize) -> String {
    format!("PR{p:02}")
}

fn id(p: usize, n: usize) -> String {
    format!("{} {n}", acronym(p))
}

/// Sources for a model with `events` events spread over `processes`
/// processes (at least one event each).
pub fn synthetic_model(events: usize, processes: usize) -> Vec<SourceFile> {
    assert!(processes > 0 && events >= processes, "need at least one event per process");
    let counts: Vec<usize> = (0..processes)
        .map(|p| events / processes + usize::from(p < events % processes))
        .collect();
    // Cross edges (source process, source number) -> (target process, number + 1).
    let mut cross: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for p in 0..processes {
        let q = (p + 1) % processes;
        if q == p {
            continue;
        }
        for n in (5..counts[p]).step_by(PER_DIAGRAM) {
            if n < counts[q] {
                cross.push(((p, n), (q, n + 1)));
            }
        }
    }
    let mut files = Vec::new();
    for (p, &n_events) in counts.iter().enumerate() {
        let acr = acronym(p);
        let msg = format!("ITEM{p:02}");
        files.push(SourceFile::new(
            format!("{acr}/messages.msl"),
            format!("{msg} = < Code : g : number + Description : i : text + Quantity : i : number >\n"),
        ));
        for (d, first) in (1..=n_events).step_by(PER_DIAGRAM).enumerate() {
            let last = (first + PER_DIAGRAM - 1).min(n_events);
            let mut externs: Vec<String> = Vec::new();
            let mut edges: Vec<String> = Vec::new();
            let mut chain = Vec::new();
            if first == 1 {
                chain.push("start".to_string());
            } else {
                externs.push(id(p, first - 1));
                chain.push(format!("\"{}\"", id(p, first - 1)));
            }
            chain.extend((first..=last).map(|n| n.to_string()));
            if last == n_events {
                chain.push("end".to_string());
            } else {
                externs.push(id(p, last + 1));
                chain.push(format!("\"{}\"", id(p, last + 1)));
            }
            edges.push(chain.join(" -> "));
            for &((sp, sn), (tp, tn)) in &cross {
                let (s, t) = (id(sp, sn), id(tp, tn));
                let here = |pp: usize, nn: usize| pp == p && (first..=last).contains(&nn);
                if here(sp, sn) {
                    externs.push(t.clone());
                    edges.push(format!("\"{s}\" -> \"{t}\""));
                } else if here(tp, tn) {
                    externs.push(s.clone());
                    edges.push(format!("\"{s}\" -> \"{t}\""));
                }
            }
            let mut text = String::new();
            let _ = writeln!(text, "diagram \"{acr} part {}\" {{", d + 1);
            for x in &externs {
                let _ = writeln!(text, "  extern \"{x}\"");
            }
            let _ = writeln!(text, "  process {acr} \"Process {p}\" {{");
            for n in first..=last {
                let _ = writeln!(
                    text,
                    "    event {n} \"Clerk registers item\" {{ primary Clerk{p:02}; in \"Item{p:02}\" message={msg}; out \"Notice\" to Manager{p:02} }}"
                );
            }
            for e in &edges {
                let _ = writeln!(text, "    {e}");
            }
            text.push_str("  }\n}\n");
            files.push(SourceFile::new(format!("{acr}/part{:03}.ced", d + 1), text));
        }
    }
    files
}
